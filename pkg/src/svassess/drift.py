"""Vocabulary-drift diagnostics: first-appearance term counts per year,
records that map to all-zero feature vectors, and char-model coverage.

A "term" here is a preprocessed word unigram; documents arrive as
(record id, year, tokens) triples or as token lists with separate dates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .features import FeatureModel, transform


@dataclass
class DriftReport:
    new_terms: dict[int, int]  # year -> count of terms first seen that year
    all_zero_ids: list[str]
    coverage_by_year: dict[int, float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "new_terms": {str(y): c for y, c in sorted(self.new_terms.items())},
                "all_zero_ids": list(self.all_zero_ids),
                "coverage_by_year": {
                    str(y): c for y, c in sorted(self.coverage_by_year.items())
                },
            },
            sort_keys=True,
        )

    def new_terms_csv(self) -> str:
        lines = ["year,new_terms"]
        lines.extend(f"{y},{c}" for y, c in sorted(self.new_terms.items()))
        return "\n".join(lines) + "\n"


def new_terms_by_year(dated_docs: list[tuple[int, list[str]]]) -> dict[int, int]:
    """Count distinct terms whose earliest year is y, for each year after
    the corpus's first.  A term re-appearing later is never recounted.
    """
    first_seen: dict[str, int] = {}
    years = set()
    for year, tokens in dated_docs:
        years.add(year)
        for term in tokens:
            if term not in first_seen or year < first_seen[term]:
                first_seen[term] = year
    if not years:
        return {}
    start = min(years)
    counts = {y: 0 for y in sorted(years) if y > start}
    for year in first_seen.values():
        if year > start:
            counts[year] += 1
    return counts


def find_all_zero_cases(
    model: FeatureModel, docs: list[tuple[str, list[str]]]
) -> list[str]:
    """Ids of docs whose transformed vector has empty support."""
    flagged = []
    for rid, tokens in docs:
        if not transform(model, tokens).indices:
            flagged.append(rid)
    return flagged


def char_coverage(model: FeatureModel, docs: list[list[str]]) -> float:
    """Fraction of docs with at least one non-zero feature."""
    if not docs:
        raise ValueError("coverage of an empty doc list is undefined")
    covered = sum(1 for tokens in docs if transform(model, tokens).indices)
    return covered / len(docs)


def drift_report(
    model: FeatureModel, dated_docs: list[tuple[str, int, list[str]]]
) -> DriftReport:
    """Full diagnostic over (id, year, tokens) triples."""
    new_terms = new_terms_by_year([(year, tokens) for _, year, tokens in dated_docs])
    all_zero = find_all_zero_cases(model, [(rid, tokens) for rid, _, tokens in dated_docs])
    by_year: dict[int, list[list[str]]] = {}
    for _, year, tokens in dated_docs:
        by_year.setdefault(year, []).append(tokens)
    coverage = {
        year: char_coverage(model, docs) for year, docs in sorted(by_year.items())
    }
    return DriftReport(
        new_terms=new_terms, all_zero_ids=all_zero, coverage_by_year=coverage
    )
