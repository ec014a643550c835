"""Single-shot prompting and parser-feedback refinement, the two comparison
points for the genetic search."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .evolution import Candidate, _record, ask_llm
from .grammar import is_valid
from .llm import DEFAULT_MAX_TOKENS
from .prompts import render_dp_prompt, render_opf_feedback_prompt

log = logging.getLogger(__name__)


@dataclass
class OpfConfig:
    max_turns: int = 5
    temperature: float = 0.3
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if self.max_turns < 1:
            raise ValueError("max_turns must be at least 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass
class BaselineResult:
    best: Candidate
    log: list[dict] = field(default_factory=list)
    llm_calls: int = 0
    stopped_generation: Optional[int] = None


def _check_examples(positives, negatives) -> None:
    if not positives or not negatives:
        raise ValueError("need at least one positive and one negative example")
    if set(positives) & set(negatives):
        raise ValueError("positive and negative examples overlap")


def run_dp(positives: Sequence[str], negatives: Sequence[str], llm, *,
           temperature: float = 0.0, max_tokens: int = DEFAULT_MAX_TOKENS) -> BaselineResult:
    _check_examples(positives, negatives)
    cand = ask_llm(llm, render_dp_prompt(positives, negatives), positives, negatives, "dp",
                   temperature=temperature, max_tokens=max_tokens, template_id="direct")
    run_log: list[dict] = []
    _record(run_log, 1, 0, cand)
    return BaselineResult(cand, run_log, 1)


def _syntax_ok(cand: Candidate) -> bool:
    return cand.grammar is not None and not cand.diagnostics and is_valid(cand.grammar)


def run_opf(positives: Sequence[str], negatives: Sequence[str], cfg: OpfConfig, llm) -> BaselineResult:
    """Re-prompt with parser diagnostics until the grammar is well-formed.

    Each turn is a fresh request carrying only the latest grammar and its
    diagnostics.  The loop stops on syntactic validity, not on correctness,
    and the final turn's candidate is returned.
    """
    _check_examples(positives, negatives)
    run_log: list[dict] = []
    cand = ask_llm(llm, render_dp_prompt(positives, negatives), positives, negatives, "dp",
                   temperature=cfg.temperature, max_tokens=cfg.max_tokens, template_id="direct")
    _record(run_log, 1, 0, cand)
    calls = 1
    while not _syntax_ok(cand) and calls < cfg.max_turns:
        if not cand.diagnostics:
            log.warning("invalid grammar without diagnostics; stopping feedback loop")
            break
        prompt = render_opf_feedback_prompt(positives, negatives, cand.source_text, cand.diagnostics)
        nxt = ask_llm(llm, prompt, positives, negatives, "opf_feedback",
                      temperature=cfg.temperature, max_tokens=cfg.max_tokens, template_id="feedback")
        calls += 1
        _record(run_log, calls, 0, nxt)
        if nxt.error:
            # a failed call ends the loop; keep the last real answer
            break
        cand = nxt
    return BaselineResult(cand, run_log, calls)
