"""Scope parsing for Java-like source, closest-enclosing-scope lookup
for diff hunks, and line-context builders for function-level records
(surrounding window, whole function, and a light def-use slice).

The parser is a brace matcher, not a grammar: strings and comments
shield braces, a braced block whose header names a known construct
becomes a node, and any other braced block dissolves into its parent.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import FunctionRecord
from .textprep import code_line_mask, tokenize_code

SCOPE_KINDS = (
    "type_decl",
    "method",
    "if_else",
    "switch",
    "loop",
    "try_catch",
    "file_root",
)

CONTEXT_MODES = (
    "vuln_only",
    "nonvuln_random",
    "nonvuln_all",
    "vuln+slice",
    "vuln+surrounding",
    "vuln+function",
)

JAVA_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while var record true false
    null""".split()
)


@dataclass
class ScopeNode:
    kind: str
    start_line: int  # 1-based inclusive
    end_line: int
    children: list["ScopeNode"] = field(default_factory=list)

    def encloses(self, start: int, end: int) -> bool:
        return self.start_line <= start and self.end_line >= end

    def walk(self, depth: int = 0):
        yield self, depth
        for child in self.children:
            yield from child.walk(depth + 1)


@dataclass
class ScopeTree:
    root: ScopeNode
    lines: list[str]
    code_mask: list[bool]

    def size(self, node: ScopeNode) -> int:
        """Non-blank, non-comment line count of the node's span."""
        return sum(self.code_mask[node.start_line - 1 : node.end_line])

    def nodes(self):
        return [node for node, _ in self.root.walk()]


@dataclass(frozen=True)
class ContextConfig:
    surrounding_n: int = 6
    within_function_only: bool = True

    def __post_init__(self):
        if self.surrounding_n < 0:
            raise ValueError("surrounding_n must be non-negative")


_KEYWORD_KINDS = (
    (re.compile(r"\b(class|interface|enum)\b"), "type_decl"),
    (re.compile(r"\b(if|else)\b"), "if_else"),
    (re.compile(r"\bswitch\b"), "switch"),
    (re.compile(r"\b(for|while|do)\b"), "loop"),
    (re.compile(r"\b(try|catch|finally)\b"), "try_catch"),
)
_METHOD_RE = re.compile(
    r"[A-Za-z_$][\w$]*\s*\([^;{}]*\)\s*(throws\s+[\w$.,\s<>\[\]]+)?$"
)
_ASSIGN_EQ_RE = re.compile(r"(?<![=!<>+\-*/%&|^])=(?!=)")


def _classify_header(header: str) -> str | None:
    """Scope kind for the text between the previous boundary and a '{'."""
    text = header.strip()
    for pattern, kind in _KEYWORD_KINDS:
        if pattern.search(text):
            return kind
    if "->" in text or re.search(r"\bnew\b", text):
        return None  # lambda body or anonymous/array construction
    if _ASSIGN_EQ_RE.search(text):
        return None  # array initializer
    if "(" in text and _METHOD_RE.search(text):
        return "method"
    return None


def parse_scopes(source: str) -> ScopeTree:
    """Brace-matching scope parser with comment/string shielding.

    Raises on unbalanced braces, naming the offending line.
    """
    lines = source.split("\n")
    n_lines = len(lines)
    # each frame: [kind, start_line, brace_line, children]
    stack: list[list] = [["file_root", 1, 0, []]]
    header: list[str] = []
    header_line = 0
    paren_depth = 0
    line_no = 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if ch == "\n":
            line_no += 1
            i += 1
            continue
        if ch == "/" and nxt == "/":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch == "/" and nxt == "*":
            i += 2
            while i < n and not (source[i] == "*" and i + 1 < n and source[i + 1] == "/"):
                if source[i] == "\n":
                    line_no += 1
                i += 1
            i += 2
            continue
        if ch in "\"'":
            quote = ch
            i += 1
            while i < n and source[i] not in (quote, "\n"):
                if source[i] == "\\" and i + 1 < n:
                    i += 1
                i += 1
            if i < n and source[i] == quote:
                i += 1
            header.append('""')  # shielded literal; braces inside are gone
            continue
        if ch == "{":
            kind = _classify_header("".join(header))
            start = header_line if header_line else line_no
            stack.append([kind, start, line_no, []])
            header = []
            header_line = 0
            paren_depth = 0
            i += 1
            continue
        if ch == "}":
            if len(stack) == 1:
                raise ValueError(f"unbalanced closing brace at line {line_no}")
            kind, start, _, children = stack.pop()
            if kind is None:
                stack[-1][3].extend(children)  # dissolve into the parent
            else:
                stack[-1][3].append(
                    ScopeNode(kind=kind, start_line=start, end_line=line_no,
                              children=children)
                )
            header = []
            header_line = 0
            paren_depth = 0
            i += 1
            continue
        if ch == ";" and paren_depth == 0:
            # statement boundary; semicolons inside for(...) stay in the header
            header = []
            header_line = 0
            i += 1
            continue
        if not ch.isspace():
            if ch == "(":
                paren_depth += 1
            elif ch == ")":
                paren_depth = max(0, paren_depth - 1)
            if not header:
                header_line = line_no
            header.append(ch)
        elif header and header[-1] != " ":
            header.append(" ")
        i += 1
    if len(stack) > 1:
        raise ValueError(
            f"unclosed brace opened at line {stack[-1][2]}"
        )
    root = ScopeNode(
        kind="file_root", start_line=1, end_line=n_lines, children=stack[0][3]
    )
    return ScopeTree(root=root, lines=lines, code_mask=code_line_mask(lines))


def extract_ces(tree: ScopeTree, hunk_start: int, hunk_end: int) -> ScopeNode:
    """Smallest scope (by code-line count) enclosing [hunk_start, hunk_end].

    Size ties go to the deepest node; the file root always qualifies as
    the last resort.
    """
    best = tree.root
    best_size = tree.size(tree.root)
    best_depth = 0
    for node, depth in tree.root.walk():
        if node.encloses(hunk_start, hunk_end):
            size = tree.size(node)
            if size < best_size or (size == best_size and depth > best_depth):
                best, best_size, best_depth = node, size, depth
    return best


def extract_commit_ces(
    tree: ScopeTree, hunk_ranges: list[tuple[int, int]]
) -> list[ScopeNode]:
    """Per-hunk closest scopes, duplicates (same span) emitted once."""
    out = []
    seen = set()
    for start, end in hunk_ranges:
        node = extract_ces(tree, start, end)
        key = (node.start_line, node.end_line, node.kind)
        if key not in seen:
            seen.add(key)
            out.append(node)
    return out


# ---------------------------------------------------------------------------
# Function-record line contexts.
# ---------------------------------------------------------------------------

def _masks(record: FunctionRecord) -> tuple[list[bool], set[int]]:
    return code_line_mask(list(record.lines)), set(record.vulnerable_line_indices)


def surrounding_context(record: FunctionRecord, config: ContextConfig) -> set[int]:
    """Up to n code lines on each side of every vulnerable line.

    Comment, blank, and other vulnerable lines do not consume the
    budget; the window walks past them to the function's bounds.
    """
    mask, vuln = _masks(record)
    picked: set[int] = set()
    for v in vuln:
        taken = 0
        for i in range(v - 1, -1, -1):
            if taken == config.surrounding_n:
                break
            if i in vuln or not mask[i]:
                continue
            picked.add(i)
            taken += 1
        taken = 0
        for i in range(v + 1, len(record.lines)):
            if taken == config.surrounding_n:
                break
            if i in vuln or not mask[i]:
                continue
            picked.add(i)
            taken += 1
    return picked


def function_context(record: FunctionRecord) -> set[int]:
    """All non-blank, non-comment lines minus the vulnerable ones."""
    mask, vuln = _masks(record)
    return {i for i, is_code in enumerate(mask) if is_code and i not in vuln}


_ASSIGN_OPS = frozenset(
    ["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="]
)


def _line_tokens(line: str) -> list[str]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return tokenize_code(line)


def _is_identifier(token: str) -> bool:
    return bool(re.fullmatch(r"[A-Za-z_$][\w$]*", token)) and token not in JAVA_KEYWORDS


def line_identifiers(line: str) -> set[str]:
    """Data identifiers: skips call names, type positions, and keywords."""
    tokens = _line_tokens(line)
    out = set()
    for i, tok in enumerate(tokens):
        if not _is_identifier(tok):
            continue
        nxt = tokens[i + 1] if i + 1 < len(tokens) else ""
        if nxt == "(":
            continue  # call or declaration name
        if _is_identifier(nxt):
            continue  # type position: `String dir`
        out.add(tok)
    return out


def line_assignments(line: str) -> set[str]:
    """Identifiers written by the line: left-hand sides of assignment
    operators, declared names, and receivers of mutator calls
    (`sb.append(...)` counts as writing sb).
    """
    tokens = _line_tokens(line)
    out = set()
    assign_positions = [i for i, t in enumerate(tokens) if t in _ASSIGN_OPS]
    if assign_positions:
        first = assign_positions[0]
        for tok in tokens[:first]:
            if _is_identifier(tok):
                out.add(tok)
    for i, tok in enumerate(tokens):
        if (
            _is_identifier(tok)
            and i + 3 < len(tokens)
            and tokens[i + 1] == "."
            and _is_identifier(tokens[i + 2])
            and tokens[i + 3] == "("
        ):
            out.add(tok)
    # declaration without initializer: `Type name ;` / `Type name ,`
    for i, tok in enumerate(tokens):
        if not _is_identifier(tok):
            continue
        prev = tokens[i - 1] if i > 0 else ""
        nxt = tokens[i + 1] if i + 1 < len(tokens) else ""
        if (prev == ">" or _is_identifier(prev) or prev in ("int", "long", "short",
            "byte", "char", "float", "double", "boolean", "var", "]")) and nxt in (
            ";", ",", "=", ")"):
            out.add(tok)
    return out


def defuse_slice(record: FunctionRecord) -> tuple[set[int], set[int]]:
    """Backward and forward def-use line sets around the vulnerable lines.

    Backward: earlier lines assigning identifiers the vulnerable lines
    use, plus enclosing control-structure headers.  Forward: later lines
    using identifiers the vulnerable lines write.  Both are widened by a
    single transitive pass.  No identifiers → both sets empty.
    """
    mask, vuln = _masks(record)
    lines = list(record.lines)
    seed_ids: set[str] = set()
    written_ids: set[str] = set()
    for v in sorted(vuln):
        seed_ids |= line_identifiers(lines[v])
        written_ids |= line_assignments(lines[v])
    if not seed_ids and not written_ids:
        return set(), set()
    first_vuln = min(vuln)
    last_vuln = max(vuln)

    def assigns_any(i: int, ids: set[str]) -> bool:
        return bool(line_assignments(lines[i]) & ids)

    def uses_any(i: int, ids: set[str]) -> bool:
        return bool(line_identifiers(lines[i]) & ids)

    backward = {
        i
        for i in range(first_vuln)
        if mask[i] and assigns_any(i, seed_ids)
    }
    forward = {
        i
        for i in range(last_vuln + 1, len(lines))
        if mask[i] and uses_any(i, written_ids)
    }
    # one transitive widening pass
    back_ids = set().union(*(line_identifiers(lines[i]) for i in backward)) if backward else set()
    forward_ids = set().union(*(line_assignments(lines[i]) for i in forward)) if forward else set()
    backward |= {
        i
        for i in range(first_vuln)
        if mask[i] and assigns_any(i, back_ids)
    }
    forward |= {
        i
        for i in range(last_vuln + 1, len(lines))
        if mask[i] and uses_any(i, forward_ids)
    }
    # headers of control scopes enclosing any vulnerable line
    try:
        tree = parse_scopes("\n".join(lines))
    except ValueError:
        tree = None
    if tree is not None:
        for node, _ in tree.root.walk():
            if node.kind in ("if_else", "switch", "loop", "try_catch"):
                for v in vuln:
                    if node.start_line <= v + 1 <= node.end_line:
                        header_idx = node.start_line - 1
                        if header_idx not in vuln and mask[header_idx]:
                            backward.add(header_idx)
                        break
    backward -= vuln
    forward -= vuln
    return backward, forward


def context_indices(
    record: FunctionRecord,
    mode: str,
    config: ContextConfig,
    seed: int = 0,
) -> tuple[list[int], list[int]]:
    """(vulnerable indices, context indices) for a mode, both sorted."""
    if mode not in CONTEXT_MODES:
        raise ValueError(f"unknown context mode {mode!r}")
    mask, vuln = _masks(record)
    vuln_sorted = sorted(vuln)
    if mode == "vuln_only":
        return vuln_sorted, []
    if mode == "nonvuln_all":
        return vuln_sorted, sorted(function_context(record))
    if mode == "nonvuln_random":
        pool = sorted(function_context(record))
        want = len(vuln_sorted)
        if len(pool) < want:
            warnings.warn(
                f"record {record.id}: only {len(pool)} non-vulnerable lines "
                f"for a size-matched sample of {want}; taking all"
            )
            return vuln_sorted, pool
        rng = np.random.default_rng(seed)
        picked = rng.choice(len(pool), size=want, replace=False)
        return vuln_sorted, sorted(pool[i] for i in picked)
    if mode == "vuln+slice":
        backward, forward = defuse_slice(record)
        return vuln_sorted, sorted(backward | forward)
    if mode == "vuln+surrounding":
        return vuln_sorted, sorted(surrounding_context(record, config))
    return vuln_sorted, sorted(function_context(record))  # vuln+function


def build_input(
    record: FunctionRecord,
    mode: str,
    config: ContextConfig,
    seed: int = 0,
    double_input: bool = False,
):
    """Token sequence(s) for a record under a context mode.

    Single-input modes merge vulnerable and context lines in code order;
    with double_input=True the '+' modes return (vulnerable tokens,
    context tokens) separately.  The plain modes ('vuln_only',
    'nonvuln_*') tokenize just their own line set.
    """
    vuln_idx, ctx_idx = context_indices(record, mode, config, seed=seed)

    def tokens_of(indices):
        out = []
        for i in indices:
            out.extend(_line_tokens(record.lines[i]))
        return out

    if mode.startswith("nonvuln"):
        return tokens_of(ctx_idx)
    if mode == "vuln_only":
        return tokens_of(vuln_idx)
    if double_input:
        return tokens_of(vuln_idx), tokens_of(ctx_idx)
    return tokens_of(sorted(set(vuln_idx) | set(ctx_idx)))
