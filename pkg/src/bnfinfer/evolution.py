"""Hybrid genetic search over grammars.

An LLM seeds the population from the examples; each generation keeps the
fitter half, splices pairs of survivors together at a rule-set boundary and
occasionally mutates the child, either locally (shuffling right-hand sides
and inserting space terminals) or by asking the LLM for a small edit.  The
search returns as soon as a candidate accepts every positive and rejects
every negative.

All structural randomness comes from one ``random.Random`` seeded from the
config, so a run against a deterministic backend replays exactly.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bnf import Diagnostic, EmptyExtractionError, check_bnf, extract_fenced_grammar, print_bnf
from .grammar import Grammar, RuleSet, T, is_valid
from .llm import DEFAULT_MAX_TOKENS, GatewayError
from .prompts import render_dp_prompt, render_mutation_prompt
from .recognizer import accepts_or_reject

log = logging.getLogger(__name__)

SPACE = T(" ")


@dataclass
class GaConfig:
    population_size: int = 10
    generations: int = 5
    crossover_rate: float = 0.7
    mutation_rate: float = 0.3
    space_insert_prob: float = 0.1
    local_vs_llm_prob: float = 0.5
    max_fitness: Optional[int] = None
    rng_seed: int = 0
    temperature: float = 0.7
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        for name in ("crossover_rate", "mutation_rate", "space_insert_prob", "local_vs_llm_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")


@dataclass(frozen=True)
class Candidate:
    source_text: str
    grammar: Optional[Grammar]
    fitness: int
    operator: str = "init"
    error: Optional[str] = None
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def valid(self) -> bool:
        return self.fitness >= 0


def grammar_fitness(g: Optional[Grammar], positives: Sequence[str], negatives: Sequence[str]) -> int:
    if g is None or not is_valid(g):
        return -1
    return (sum(accepts_or_reject(g, p) for p in positives)
            + sum(not accepts_or_reject(g, n) for n in negatives))


def fitness(candidate_text: str, positives: Sequence[str], negatives: Sequence[str]) -> int:
    """-1 for text that is not a valid grammar, else positives accepted plus
    negatives rejected."""
    g, diags = check_bnf(candidate_text)
    if diags:
        return -1
    return grammar_fitness(g, positives, negatives)


def candidate_from_text(text: str, positives, negatives, operator: str) -> Candidate:
    g, diags = check_bnf(text)
    score = -1 if diags else grammar_fitness(g, positives, negatives)
    return Candidate(text, g, score, operator, diagnostics=tuple(diags))


def candidate_from_response(response: str, positives, negatives, operator: str) -> Candidate:
    try:
        text = extract_fenced_grammar(response).text
    except EmptyExtractionError:
        text = ""  # scored like any other unparsable text
    return candidate_from_text(text, positives, negatives, operator)


def candidate_from_grammar(g: Grammar, positives, negatives, operator: str) -> Candidate:
    return Candidate(print_bnf(g), g, grammar_fitness(g, positives, negatives), operator)


def ask_llm(llm, prompt: str, positives, negatives, operator: str, *, temperature: float,
            max_tokens: int = DEFAULT_MAX_TOKENS, template_id: str = "",
            fallback_text: str = "") -> Candidate:
    try:
        reply = llm.complete(prompt, temperature=temperature, max_tokens=max_tokens,
                             template_id=template_id or operator)
    except GatewayError as exc:
        log.warning("%s call failed: %s", operator, exc)
        return Candidate(fallback_text, None, -1, operator, error=f"{type(exc).__name__}: {exc}")
    return candidate_from_response(reply.text, positives, negatives, operator)


# -- operators ---------------------------------------------------------------

def select(population: Sequence[Candidate]) -> list[Candidate]:
    """The fitter half of the population, best first; ties keep population order."""
    if not population:
        raise ValueError("cannot select from an empty population")
    keep = max(1, len(population) // 2)
    return sorted(population, key=lambda c: -c.fitness)[:keep]


def splice(a: Grammar, b: Grammar, w: int) -> Grammar:
    """Rule sets 1..w-1 of ``a`` followed by rule sets w..n of ``b``.

    The start symbol comes from ``a``; repeated left-hand sides are merged.
    """
    if not 1 <= w <= min(len(a), len(b)):
        raise ValueError(f"splice point {w} outside 1..{min(len(a), len(b))}")
    rule_sets = a.rule_sets[:w - 1] + b.rule_sets[w - 1:]
    return Grammar.build(((rs.lhs, rs.alternatives) for rs in rule_sets), start=a.start)


def crossover(a: Candidate, b: Candidate, rho: float, rng: random.Random,
              positives=(), negatives=()) -> Candidate:
    ra = a.grammar.rule_sets if a.grammar is not None else ()
    rb = b.grammar.rule_sets if b.grammar is not None else ()
    if not ra and not rb:
        return dataclasses.replace(rng.choice((a, b)), operator="parent_passthrough")
    if not ra:
        return dataclasses.replace(b, operator="parent_passthrough")
    if not rb:
        return dataclasses.replace(a, operator="parent_passthrough")
    if rng.random() < rho:
        w = rng.randint(1, min(len(ra), len(rb)))
        return candidate_from_grammar(splice(a.grammar, b.grammar, w), positives, negatives,
                                      "crossover")
    return dataclasses.replace(rng.choice((a, b)), operator="parent_passthrough")


def _replace_rule_set(g: Grammar, i: int, rs: RuleSet) -> Grammar:
    rule_sets = list(g.rule_sets)
    rule_sets[i - 1] = rs
    return Grammar(tuple(rule_sets), g.start)


def _check_index(g: Grammar, i: int) -> None:
    if not 1 <= i <= len(g.rule_sets):
        raise IndexError(f"rule set index {i} outside 1..{len(g.rule_sets)}")


def shuffle_rule_set(g: Grammar, i: int, rng: random.Random) -> Grammar:
    """Permute the symbols of every alternative in rule set ``i`` (1-based)."""
    _check_index(g, i)
    rs = g.rule_sets[i - 1]
    alts = []
    for alt in rs.alternatives:
        syms = list(alt)
        rng.shuffle(syms)
        alts.append(tuple(syms))
    return _replace_rule_set(g, i, RuleSet(rs.lhs, tuple(alts)))


def space_insert(g: Grammar, i: int, p: float, rng: random.Random) -> Grammar:
    """With probability ``p`` per alternative of rule set ``i``, insert between
    0 and len(alternative) single-space terminals, each just before or after a
    uniformly chosen symbol."""
    _check_index(g, i)
    rs = g.rule_sets[i - 1]
    alts = []
    for alt in rs.alternatives:
        if alt and rng.random() < p:
            # gap j sits before symbol j; gap len(alt) is the end
            gaps = [0] * (len(alt) + 1)
            for _ in range(rng.randint(0, len(alt))):
                gaps[rng.randrange(len(alt)) + rng.randrange(2)] += 1
            out: list = []
            for j, sym in enumerate(alt):
                out.extend([SPACE] * gaps[j])
                out.append(sym)
            out.extend([SPACE] * gaps[-1])
            alt = tuple(out)
        alts.append(alt)
    return _replace_rule_set(g, i, RuleSet(rs.lhs, tuple(alts)))


def llm_mutate(candidate: Candidate, positives, negatives, cfg: GaConfig, llm) -> Candidate:
    prompt = render_mutation_prompt(candidate.source_text, positives, negatives)
    return ask_llm(llm, prompt, positives, negatives, "llm_mutation",
                   temperature=cfg.temperature, max_tokens=cfg.max_tokens, template_id="mutation",
                   fallback_text=candidate.source_text)


def mutate(candidate: Candidate, positives, negatives, cfg: GaConfig, rng: random.Random,
           llm) -> Candidate:
    g = candidate.grammar
    if g is None or not g.rule_sets:
        return llm_mutate(candidate, positives, negatives, cfg, llm)
    if rng.random() < cfg.local_vs_llm_prob:
        i = rng.randint(1, len(g.rule_sets))
        g = shuffle_rule_set(g, i, rng)
        g = space_insert(g, i, cfg.space_insert_prob, rng)
        return candidate_from_grammar(g, positives, negatives, "local_mutation")
    return llm_mutate(candidate, positives, negatives, cfg, llm)


# -- main loop ---------------------------------------------------------------

@dataclass
class RunResult:
    best: Candidate
    log: list[dict] = field(default_factory=list)
    stopped_generation: Optional[int] = None
    llm_calls: int = 0
    best_history: list[int] = field(default_factory=list)  # best fitness after each scoring pass

    def log_lines(self) -> str:
        return "".join(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n" for rec in self.log)


class _CountingLLM:
    def __init__(self, llm):
        self.llm = llm
        self.calls = 0

    def complete(self, prompt, **kwargs):
        self.calls += 1
        return self.llm.complete(prompt, **kwargs)


def _record(log_: list, generation: int, slot: int, cand: Candidate) -> None:
    rec = {"generation": generation, "slot": slot, "operator": cand.operator,
           "fitness": cand.fitness, "grammar_text": cand.source_text}
    if cand.error:
        rec["error"] = cand.error
    log_.append(rec)


def run_hygenar(positives: Sequence[str], negatives: Sequence[str], cfg: GaConfig, llm) -> RunResult:
    """Evolve a grammar for the examples.

    Log records carry the generation whose scoring pass first sees the
    candidate: the initial population is generation 1 and children bred
    during generation i belong to generation i + 1.  ``stopped_generation``
    is 0 for a perfect initial candidate, the generation number for an early
    exit, and None when every generation ran.
    """
    if not positives or not negatives:
        raise ValueError("need at least one positive and one negative example")
    if set(positives) & set(negatives):
        raise ValueError("positive and negative examples overlap")
    max_fit = cfg.max_fitness if cfg.max_fitness is not None else len(positives) + len(negatives)
    rng = random.Random(cfg.rng_seed)
    llm = _CountingLLM(llm)
    run_log: list[dict] = []
    history: list[int] = []

    def done(best: Candidate, stopped: Optional[int]) -> RunResult:
        return RunResult(best, run_log, stopped, llm.calls, history)

    prompt = render_dp_prompt(positives, negatives)
    population: list[Candidate] = []
    for slot in range(cfg.population_size):
        cand = ask_llm(llm, prompt, positives, negatives, "init",
                       temperature=cfg.temperature, max_tokens=cfg.max_tokens, template_id="direct")
        _record(run_log, 1, slot, cand)
        if cand.fitness == max_fit:
            return done(cand, 0)
        population.append(cand)

    if all(c.error for c in population):
        log.error("every initialization call failed at the gateway")
        run_log.append({"generation": 1, "slot": None, "operator": "init", "fitness": -1,
                        "grammar_text": "", "error": "all initialization calls failed"})

    best: Optional[Candidate] = None
    for gen in range(1, cfg.generations + 1):
        for cand in population:
            if best is None or cand.fitness > best.fitness:
                best = cand
        history.append(best.fitness)
        if best.fitness == max_fit:
            return done(best, gen)
        selected = select(population)
        children: list[Candidate] = []
        while len(children) < cfg.population_size:
            a, b = rng.choice(selected), rng.choice(selected)
            child = crossover(a, b, cfg.crossover_rate, rng, positives, negatives)
            if rng.random() < cfg.mutation_rate:
                child = mutate(child, positives, negatives, cfg, rng, llm)
            _record(run_log, gen + 1, len(children), child)
            children.append(child)
        population = children
    return done(best, None)
