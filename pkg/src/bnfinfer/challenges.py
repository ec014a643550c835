"""Challenge datasets: a line-delimited JSON format, semantic validation
against the reference grammar, and an LLM-assisted construction pipeline
that sends anything failing validation to a correction queue.

Record layout, one per line::

    {"id": "...", "k": 3, "grammar": "<s> ::= ...", "positives": [...], "negatives": [...]}
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .bnf import check_bnf, print_bnf
from .grammar import Grammar, is_valid
from .llm import GatewayError
from .prompts import render_grammars_prompt, render_negatives_prompt, render_positives_prompt
from .recognizer import RecognitionLimitError, accepts

log = logging.getLogger(__name__)

EXAMPLES_PER_SIDE = 3
FIELDS = ("id", "k", "grammar", "positives", "negatives")


@dataclass(frozen=True)
class Challenge:
    id: str
    grammar_text: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...]
    k: int

    @cached_property
    def reference(self) -> Optional[Grammar]:
        g, diags = check_bnf(self.grammar_text)
        return None if diags else g

    def to_record(self) -> dict:
        return {"id": self.id, "k": self.k, "grammar": self.grammar_text,
                "positives": list(self.positives), "negatives": list(self.negatives)}


@dataclass(frozen=True)
class RecordError:
    index: int  # 1-based line number
    message: str

    def __str__(self):
        return f"record {self.index}: {self.message}"


class DatasetError(ValueError):
    def __init__(self, path, errors: Sequence[RecordError]):
        self.errors = list(errors)
        lines = "\n".join(f"  {e}" for e in self.errors)
        super().__init__(f"{path}: {len(self.errors)} malformed record(s)\n{lines}")


def _check_record(rec) -> list[str]:
    if not isinstance(rec, dict):
        return ["record must be a JSON object"]
    problems = [f"missing field {name!r}" for name in FIELDS if name not in rec]
    if problems:
        return problems
    if not isinstance(rec["id"], str) or not rec["id"]:
        problems.append("id must be a non-empty string")
    if not isinstance(rec["k"], int) or isinstance(rec["k"], bool) or not 1 <= rec["k"] <= 9:
        problems.append("k must be an integer in 1..9")
    if not isinstance(rec["grammar"], str):
        problems.append("grammar must be a string")
    for side in ("positives", "negatives"):
        xs = rec[side]
        if not isinstance(xs, list) or not all(isinstance(x, str) for x in xs):
            problems.append(f"{side} must be a list of strings")
        elif len(xs) != EXAMPLES_PER_SIDE:
            problems.append(f"{side} must hold exactly {EXAMPLES_PER_SIDE} examples, found {len(xs)}")
    return problems


def parse_records(lines: Iterable[str], source="<dataset>") -> list[Challenge]:
    challenges, errors, seen = [], [], {}
    for index, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(RecordError(index, f"invalid JSON: {exc.msg}"))
            continue
        problems = _check_record(rec)
        if problems:
            errors.extend(RecordError(index, p) for p in problems)
            continue
        if rec["id"] in seen:
            errors.append(RecordError(index, f"duplicate id {rec['id']!r} (first at record {seen[rec['id']]})"))
            continue
        seen[rec["id"]] = index
        challenges.append(Challenge(rec["id"], rec["grammar"], tuple(rec["positives"]),
                                    tuple(rec["negatives"]), rec["k"]))
    if errors:
        raise DatasetError(source, errors)
    return challenges


def load_dataset(path) -> list[Challenge]:
    """Structural load only; see :func:`validate_dataset` for semantics."""
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh, path)


def dumps_records(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def dump_dataset(challenges: Iterable[Challenge], path) -> None:
    Path(path).write_text(dumps_records(c.to_record() for c in challenges), encoding="utf-8")


# -- validation --------------------------------------------------------------

INVALID_REFERENCE = "invalid_reference"
K_MISMATCH = "k_mismatch"
POSITIVE_REJECTED = "positive_rejected"
NEGATIVE_ACCEPTED = "negative_accepted"
OVERLAP = "overlap"
LIMIT = "recognizer_limit"


@dataclass(frozen=True)
class Violation:
    challenge_id: str
    kind: str
    detail: str

    def to_record(self) -> dict:
        return {"id": self.challenge_id, "kind": self.kind, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    checked: int = 0

    @property
    def clean(self) -> bool:
        return not self.violations

    def for_challenge(self, cid: str) -> list[Violation]:
        return [v for v in self.violations if v.challenge_id == cid]

    def render(self) -> str:
        if self.clean:
            return f"{self.checked} challenge(s) checked, no violations"
        lines = [f"{self.checked} challenge(s) checked, {len(self.violations)} violation(s)"]
        lines.extend(f"  {v.challenge_id}: {v.kind}: {v.detail}" for v in self.violations)
        return "\n".join(lines)


def check_challenge(c: Challenge) -> list[Violation]:
    out = []

    def flag(kind, detail):
        out.append(Violation(c.id, kind, detail))

    g, diags = check_bnf(c.grammar_text)
    if diags or g is None or not is_valid(g):
        flag(INVALID_REFERENCE, "; ".join(d.message for d in diags) or "grammar is not valid")
        return out
    if len(g.rule_sets) != c.k:
        flag(K_MISMATCH, f"declared k = {c.k} but the grammar has {len(g.rule_sets)} rule sets")
    for x in sorted(set(c.positives) & set(c.negatives)):
        flag(OVERLAP, f"{x!r} is both positive and negative")
    for want, side in ((True, c.positives), (False, c.negatives)):
        for x in side:
            try:
                got = accepts(g, x)
            except RecognitionLimitError as exc:
                flag(LIMIT, f"{x!r}: {exc}")
                continue
            if want and not got:
                flag(POSITIVE_REJECTED, f"positive {x!r} is not in the reference language")
            elif not want and got:
                flag(NEGATIVE_ACCEPTED, f"negative {x!r} is in the reference language")
    return out


def validate_dataset(challenges: Iterable[Challenge]) -> ValidationReport:
    report = ValidationReport()
    for c in challenges:
        report.checked += 1
        report.violations.extend(check_challenge(c))
    return report


# -- construction ------------------------------------------------------------

@dataclass
class QueueItem:
    item: dict
    violations: list[str]
    raw: str

    def to_record(self) -> dict:
        return {"item": self.item, "violations": self.violations, "raw": self.raw}


@dataclass
class Construction:
    draft: list[Challenge] = field(default_factory=list)
    queue: list[QueueItem] = field(default_factory=list)
    grammars_attempted: int = 0
    challenges_attempted: int = 0


_BLANK = re.compile(r"\n[ \t]*\n")


def split_blocks(text: str, expected: Optional[int] = None) -> list[str]:
    """Split LLM output into items separated by blank lines.

    If that yields fewer items than ``expected`` but there are enough
    non-blank lines, fall back to one item per line.
    """
    text = text.strip("\n")
    if not text.strip():
        return []
    blocks = [b.strip("\n") for b in _BLANK.split(text) if b.strip()]
    if expected is not None and len(blocks) < expected:
        lines = [ln for ln in text.split("\n") if ln.strip()]
        if len(lines) >= expected:
            return lines
    return blocks


def _grammar_problems(text: str, k: int) -> tuple[Optional[Grammar], list[str]]:
    g, diags = check_bnf(text)
    if diags or g is None:
        return None, [f"{INVALID_REFERENCE}: {d.render()}" for d in diags] or [INVALID_REFERENCE]
    if len(g.rule_sets) != k:
        return g, [f"{K_MISMATCH}: asked for {k} rule sets, got {len(g.rule_sets)}"]
    return g, []


def _ask(llm, prompt: str, template_id: str) -> tuple[Optional[str], Optional[str]]:
    try:
        return llm.complete(prompt, temperature=0.0, template_id=template_id).text, None
    except GatewayError as exc:
        return None, f"gateway_error: {type(exc).__name__}: {exc}"


def construct_dataset(llm, k_range: Iterable[int] = range(1, 10), grammars_per_k: int = 10,
                      challenges_per_grammar: int = 6, m: int = EXAMPLES_PER_SIDE) -> Construction:
    """Generate reference grammars and example sets, keeping only items that
    pass validation.  Everything else, including gateway failures, lands in
    the correction queue for a human to fix."""
    out = Construction()
    seen: set[str] = set()
    for k in k_range:
        raw, err = _ask(llm, render_grammars_prompt(k, grammars_per_k), "generate_grammars")
        if err:
            out.queue.append(QueueItem({"kind": "grammar_batch", "k": k}, [err], ""))
            continue
        texts = split_blocks(raw, None)[:grammars_per_k]
        for gi, text in enumerate(texts):
            out.grammars_attempted += 1
            g, problems = _grammar_problems(text, k)
            canonical = print_bnf(g) if g is not None else None
            if not problems and canonical in seen:
                # one retry for an alternative grammar, then hand it to a human
                alt_raw, err = _ask(llm, render_grammars_prompt(k, 1), "generate_grammars")
                alt = split_blocks(alt_raw or "")
                if err or not alt:
                    problems = [f"duplicate_grammar: {canonical!r}"] + ([err] if err else [])
                else:
                    text = alt[0]
                    g, problems = _grammar_problems(text, k)
                    canonical = print_bnf(g) if g is not None else None
                    if not problems and canonical in seen:
                        problems = [f"duplicate_grammar: {canonical!r}"]
            if problems:
                out.queue.append(QueueItem({"kind": "grammar", "k": k, "grammar": text}, problems, raw))
                continue
            seen.add(canonical)
            _challenges_for(llm, out, k, gi, canonical, challenges_per_grammar, m)
    return out


def _challenges_for(llm, out: Construction, k: int, gi: int, grammar_text: str,
                    count: int, m: int) -> None:
    for ci in range(count):
        out.challenges_attempted += 1
        cid = f"k{k}-g{gi + 1}-c{ci + 1}"
        pos_raw, err_p = _ask(llm, render_positives_prompt(m, grammar_text), "positives")
        neg_raw, err_n = _ask(llm, render_negatives_prompt(m, grammar_text), "negatives")
        positives = split_blocks(pos_raw or "", m)[:m]
        negatives = split_blocks(neg_raw or "", m)[:m]
        item = {"kind": "challenge", "id": cid, "k": k, "grammar": grammar_text,
                "positives": positives, "negatives": negatives}
        raw = f"{pos_raw or ''}\n\n{neg_raw or ''}"
        problems = [e for e in (err_p, err_n) if e]
        for side, xs in (("positives", positives), ("negatives", negatives)):
            if len(xs) != m:
                problems.append(f"count: expected {m} {side}, got {len(xs)}")
        if not problems:
            c = Challenge(cid, grammar_text, tuple(positives), tuple(negatives), k)
            problems = [f"{v.kind}: {v.detail}" for v in check_challenge(c)]
            if not problems:
                out.draft.append(c)
                continue
        out.queue.append(QueueItem(item, problems, raw))


def dump_queue(items: Iterable[QueueItem], path) -> None:
    Path(path).write_text(dumps_records(q.to_record() for q in items), encoding="utf-8")


def load_queue(path) -> list[QueueItem]:
    with open(path, encoding="utf-8") as fh:
        return [QueueItem(r["item"], r["violations"], r["raw"])
                for r in map(json.loads, filter(str.strip, fh))]
