"""Evaluation metrics: syntax and semantic correctness, plus the rule-usage
quality measures (difference, overfitting, overgeneralization, utility)
reported over solved challenges only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .grammar import Grammar, is_valid, nonterminal_count, production_count
from .recognizer import accepts_or_reject as _accepts, used_rules_for_examples

log = logging.getLogger(__name__)


@dataclass
class ChallengeResult:
    reference: Grammar
    positives: Sequence[str]
    negatives: Sequence[str]
    candidate_text: str = ""
    candidate: Optional[Grammar] = None
    challenge_id: str = ""

    def __post_init__(self):
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValueError(f"positives and negatives overlap: {sorted(overlap)!r}")


@dataclass(frozen=True)
class QualityMetrics:
    diff: int
    overfit: int
    overgen: int
    tu: float
    ref_used: int
    cand_used: int


def syntax_correct(result: ChallengeResult) -> int:
    return int(result.candidate is not None and is_valid(result.candidate))


def semantics_correct(result: ChallengeResult) -> int:
    if not syntax_correct(result):
        return 0
    g = result.candidate
    if not all(_accepts(g, p) for p in result.positives):
        return 0
    return int(not any(_accepts(g, n) for n in result.negatives))


def overfit_indicator(ref_used: int, cand_used: int) -> int:
    # diff > ref/2, kept in integers so odd counts compare exactly
    return int(2 * (ref_used - cand_used) > ref_used)


def overgen_indicator(ref_used: int, cand_used: int) -> int:
    return int(2 * (ref_used - cand_used) < -ref_used)


def quality_metrics(result: ChallengeResult) -> Optional[QualityMetrics]:
    if not semantics_correct(result):
        return None
    ref_used = len(used_rules_for_examples(result.reference, result.positives))
    cand = result.candidate
    cand_used = len(used_rules_for_examples(cand, result.positives))
    total = len(cand.production_set())
    return QualityMetrics(
        diff=ref_used - cand_used,
        overfit=overfit_indicator(ref_used, cand_used),
        overgen=overgen_indicator(ref_used, cand_used),
        tu=cand_used / total,
        ref_used=ref_used,
        cand_used=cand_used,
    )


def nonterminal_bucket(ref: Grammar) -> str:
    k = nonterminal_count(ref)
    if k <= 3:
        return "C1"
    if k <= 6:
        return "C2"
    return "C3"


def production_bucket(ref: Grammar) -> str:
    n = production_count(ref)
    if n <= 6:
        return "P1"
    if n <= 15:
        return "P2"
    return "P3"


@dataclass
class MetricReport:
    group_key: str
    count: int
    sx: float
    se: float
    solved_count: int
    diff_avg: Optional[float] = None
    of_pct: Optional[float] = None
    og_pct: Optional[float] = None
    tu_avg: Optional[float] = None

    def to_record(self) -> dict:
        def pct(x):
            return None if x is None else round(100 * x, 1)
        return {
            "group": self.group_key,
            "count": self.count,
            "sx": pct(self.sx),
            "se": pct(self.se),
            "solved": self.solved_count,
            "diff": None if self.diff_avg is None else round(self.diff_avg, 2),
            "of": pct(self.of_pct),
            "og": pct(self.og_pct),
            "tu": pct(self.tu_avg),
        }


@dataclass
class Outcome:
    """Per-challenge metric values, computed once and reused across groupings."""
    result: ChallengeResult
    sx: int
    se: int
    quality: Optional[QualityMetrics] = None
    groups: dict = field(default_factory=dict)


def score(result: ChallengeResult) -> Outcome:
    sx = syntax_correct(result)
    se = semantics_correct(result) if sx else 0
    quality = quality_metrics(result) if se else None
    return Outcome(result, sx, se, quality, {
        "by_nonterminals": nonterminal_bucket(result.reference),
        "by_productions": production_bucket(result.reference),
    })


def _report(key: str, outcomes: list[Outcome]) -> MetricReport:
    n = len(outcomes)
    solved = [o.quality for o in outcomes if o.quality is not None]
    rep = MetricReport(key, n,
                       sx=sum(o.sx for o in outcomes) / n if n else 0.0,
                       se=sum(o.se for o in outcomes) / n if n else 0.0,
                       solved_count=len(solved))
    if solved:
        k = len(solved)
        rep.diff_avg = sum(q.diff for q in solved) / k
        rep.of_pct = sum(q.overfit for q in solved) / k
        rep.og_pct = sum(q.overgen for q in solved) / k
        rep.tu_avg = sum(q.tu for q in solved) / k
    return rep


_GROUP_KEYS = {
    "by_nonterminals": ("C1", "C2", "C3"),
    "by_productions": ("P1", "P2", "P3"),
}


def aggregate(results: Iterable[ChallengeResult | Outcome],
              grouping: Optional[str] = None) -> list[MetricReport]:
    """One report per bucket of ``grouping`` followed by an "All" report.

    ``grouping`` is None, ``"by_nonterminals"`` (C1..C3) or
    ``"by_productions"`` (P1..P3).  Empty buckets are still reported.
    """
    outcomes = [r if isinstance(r, Outcome) else score(r) for r in results]
    reports = []
    if grouping is not None:
        if grouping not in _GROUP_KEYS:
            raise ValueError(f"unknown grouping {grouping!r}")
        for key in _GROUP_KEYS[grouping]:
            reports.append(_report(key, [o for o in outcomes if o.groups[grouping] == key]))
    reports.append(_report("All", outcomes))
    return reports


def format_table(reports: Sequence[MetricReport], title: str = "") -> str:
    header = ("Group", "N", "SX", "SE", "Solved", "Diff", "OF", "OG", "TU")
    rows = []
    for r in reports:
        rec = r.to_record()

        def cell(v, fmt):
            return "N/A" if v is None else format(v, fmt)
        rows.append((rec["group"], str(rec["count"]), cell(rec["sx"], ".1f"), cell(rec["se"], ".1f"),
                     str(rec["solved"]), cell(rec["diff"], ".2f"), cell(rec["of"], ".1f"),
                     cell(rec["og"], ".1f"), cell(rec["tu"], ".1f")))
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(header)]
    lines = [title] if title else []
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)
    return "\n".join(lines)
