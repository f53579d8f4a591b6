"""Text preprocessing for SV descriptions and code-aware tokenization.

Natural-language side: stopword removal, the followed-by-space punctuation
rule (keeps tokens like "input.c" and "man-in-the-middle" intact),
lowercasing and Porter stemming.  Code side: a small Java-flavoured lexer
that keeps literals whole, splits maximal operators, and knows which lines
are comments or blank.
"""

from __future__ import annotations

import string
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .porter import porter_stem

_PUNCT = frozenset(string.punctuation)


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """Bundled English stopword list (one token per line, UTF-8)."""
    text = resources.files("svassess").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class PrepConfig:
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    lowercase: bool = True
    stem: bool = True
    keep_inner_punct: bool = True


def _stem_fixpoint(word: str) -> str:
    # Stemming is applied until stable so preprocessing is idempotent
    # (a single Porter pass can expose a further strippable suffix).
    while True:
        stemmed = porter_stem(word)
        if stemmed == word:
            return word
        word = stemmed


def preprocess_text(text: str, config: PrepConfig | None = None) -> list[str]:
    """Text -> cleaned token sequence.

    Punctuation is removed only where it trails a whitespace-delimited
    chunk (i.e. is followed by whitespace or ends the text), applied to a
    fixpoint; interior punctuation survives unless keep_inner_punct is
    off.  Stopwords are dropped both before and after stemming (a stem
    can itself be a stopword, e.g. willing -> will).
    """
    if config is None:
        config = PrepConfig()
    out: list[str] = []
    for chunk in text.split():
        while chunk and chunk[-1] in _PUNCT:
            chunk = chunk[:-1]
        if not config.keep_inner_punct:
            chunk = "".join(c for c in chunk if c not in _PUNCT)
        if config.lowercase:
            chunk = chunk.lower()
        if not chunk or chunk in config.stopwords:
            continue
        if config.stem and chunk.isascii() and chunk.isalpha():
            chunk = _stem_fixpoint(chunk)
            if chunk in config.stopwords:
                continue
        out.append(chunk)
    return out


# ---------------------------------------------------------------------------
# Code tokenization.
# ---------------------------------------------------------------------------

# maximal-munch operator table, longest first
_OPERATORS = (
    ">>>=",
    "<<=", ">>=", ">>>", "...",
    "++", "--", "==", "!=", "<=", ">=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>", "->", "::",
)

_IDENT_START = frozenset(string.ascii_letters + "_$")
_IDENT_CONT = frozenset(string.ascii_letters + string.digits + "_$")
_NUM_CONT = frozenset(string.digits + string.ascii_letters + "_.")


def tokenize_code(text: str) -> list[str]:
    """Source text -> identifier / literal / operator tokens, case preserved.

    String and char literals come out as single tokens (quotes included);
    comments vanish entirely.  An unterminated string is tokenized up to
    the end of its line and flagged with a warning.
    """
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            end = text.find("*/", i + 2)
            i = n if end == -1 else end + 2
            continue
        if ch in "\"'":
            quote = ch
            j = i + 1
            while j < n and text[j] != quote and text[j] != "\n":
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                j += 1
            if j < n and text[j] == quote:
                tokens.append(text[i : j + 1])
                i = j + 1
            else:
                warnings.warn(f"unterminated {quote}-literal tokenized to end of line")
                tokens.append(text[i:j])
                i = j
            continue
        if ch in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and text[j] in _NUM_CONT:
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                tokens.append(op)
                i += len(op)
                break
        else:
            tokens.append(ch)
            i += 1
    return tokens


def code_line_mask(lines: list[str]) -> list[bool]:
    """True per line iff the line contains code (not blank/comment-only).

    Tracks /* ... */ state across lines; string literals shield comment
    markers; a // comment runs to end of line.
    """
    mask: list[bool] = []
    in_block = False
    for line in lines:
        has_code = False
        i = 0
        n = len(line)
        in_string: str | None = None
        while i < n:
            ch = line[i]
            if in_block:
                if ch == "*" and i + 1 < n and line[i + 1] == "/":
                    in_block = False
                    i += 2
                    continue
                i += 1
                continue
            if in_string is not None:
                has_code = True
                if ch == "\\" and i + 1 < n:
                    i += 2
                    continue
                if ch == in_string:
                    in_string = None
                i += 1
                continue
            if ch == "/" and i + 1 < n and line[i + 1] == "/":
                break
            if ch == "/" and i + 1 < n and line[i + 1] == "*":
                in_block = True
                i += 2
                continue
            if ch in "\"'":
                in_string = ch
                has_code = True
                i += 1
                continue
            if not ch.isspace():
                has_code = True
            i += 1
        in_string = None  # literals do not span lines
        mask.append(has_code)
    return mask


def strip_noncode_lines(lines: list[str]) -> tuple[list[str], dict[int, int]]:
    """Drop blank and comment-only lines; map kept positions to originals."""
    mask = code_line_mask(lines)
    kept: list[str] = []
    index_map: dict[int, int] = {}
    for orig_idx, (line, is_code) in enumerate(zip(lines, mask)):
        if is_code:
            index_map[len(kept)] = orig_idx
            kept.append(line)
    return kept, index_map
