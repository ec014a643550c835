"""Membership and derivation queries for BNF grammars.

Recognition is an Earley chart over characters.  A terminal of length k is
scanned as k consecutive characters; the empty terminal is an epsilon step.
Nullable non-terminals are advanced at prediction time, which makes epsilon
rules and left recursion safe.

The derivation extractor walks the finished chart top-down and, at every
expansion of the left-most non-terminal, takes the lowest-index alternative
that can still complete the parse.  Derivations that revisit the same
(non-terminal, span) on one branch are excluded so the choice is always
well defined.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from .grammar import Grammar, Production, is_valid

log = logging.getLogger(__name__)

DEFAULT_MAX_ITEMS = 200_000


class RecognitionLimitError(RuntimeError):
    """The chart for a membership query outgrew its item cap."""


class NotInLanguageError(ValueError):
    def __init__(self, example: str):
        self.example = example
        super().__init__(f"example not in the language of the grammar: {example!r}")


@dataclass(frozen=True)
class DerivationTrace:
    used_productions: frozenset[Production]
    choices: tuple[int, ...]


class _Compiled:
    def __init__(self, g: Grammar):
        self.grammar = g
        self.start = g.start
        # nt -> tuple of alternatives; each symbol is (is_terminal, text)
        self.rules = {rs.lhs: tuple(tuple((s.terminal, s.text) for s in alt)
                                    for alt in rs.alternatives)
                      for rs in g.rule_sets}
        self.nullable = self._nullable()

    def _nullable(self) -> frozenset[str]:
        nullable: set[str] = set()
        changed = True
        while changed:
            changed = False
            for nt, alts in self.rules.items():
                if nt in nullable:
                    continue
                for alt in alts:
                    if all((t and text == "") or (not t and text in nullable) for t, text in alt):
                        nullable.add(nt)
                        changed = True
                        break
        return frozenset(nullable)


@functools.lru_cache(maxsize=256)
def _compile(g: Grammar) -> _Compiled:
    return _Compiled(g)


class _Chart:
    """Earley item sets for one input string."""

    def __init__(self, cg: _Compiled, s: str, max_items: int):
        self.cg = cg
        self.s = s
        self.max_items = max_items
        n = len(s)
        self.sets: list[list[tuple]] = [[] for _ in range(n + 1)]
        self.seen: list[set] = [set() for _ in range(n + 1)]
        # waiting[pos][nt] -> items at pos with the dot before nt
        self.waiting: list[dict[str, list[tuple]]] = [dict() for _ in range(n + 1)]
        # completed[(nt, origin)] -> set of end positions
        self.completed: dict[tuple[str, int], set[int]] = {}
        self.count = 0
        self._run()

    def _add(self, pos: int, item: tuple) -> None:
        if item in self.seen[pos]:
            return
        self.count += 1
        if self.count > self.max_items:
            raise RecognitionLimitError(
                f"chart exceeded {self.max_items} items on input of length {len(self.s)}")
        self.seen[pos].add(item)
        self.sets[pos].append(item)

    def _run(self) -> None:
        cg, s = self.cg, self.s
        rules, nullable = cg.rules, cg.nullable
        n = len(s)
        for a in range(len(rules[cg.start])):
            self._add(0, (cg.start, a, 0, 0))
        for pos in range(n + 1):
            items = self.sets[pos]
            predicted: set[str] = set()
            k = 0
            while k < len(items):
                nt, a, dot, origin = item = items[k]
                k += 1
                alt = rules[nt][a]
                if dot == len(alt):
                    self.completed.setdefault((nt, origin), set()).add(pos)
                    for w in self.waiting[origin].get(nt, ()):
                        wn, wa, wd, wo = w
                        self._add(pos, (wn, wa, wd + 1, wo))
                    continue
                is_t, text = alt[dot]
                if is_t:
                    if text == "":
                        self._add(pos, (nt, a, dot + 1, origin))
                    elif s.startswith(text, pos):
                        self._add(pos + len(text), (nt, a, dot + 1, origin))
                    continue
                self.waiting[pos].setdefault(text, []).append(item)
                if text not in predicted:
                    predicted.add(text)
                    for b in range(len(rules[text])):
                        self._add(pos, (text, b, 0, pos))
                if text in nullable:
                    self._add(pos, (nt, a, dot + 1, origin))
                # a completion of `text` at this position that happened before
                # this item arrived only matters for zero-length spans, which
                # the nullable step above already covers

    def accepted(self) -> bool:
        return len(self.s) in self.completed.get((self.cg.start, 0), ())

    def ends(self, nt: str, i: int) -> set[int]:
        ends = self.completed.get((nt, i), set())
        if nt in self.cg.nullable and i not in ends:
            ends = ends | {i}
        return ends


def _chart(g: Grammar, s: str, max_items: int) -> Optional[_Chart]:
    if not is_valid(g):
        return None
    return _Chart(_compile(g), s, max_items)


def accepts(g: Grammar, s: str, max_items: int = DEFAULT_MAX_ITEMS) -> bool:
    """True iff ``s`` is in the language of ``g``.

    Invalid grammars have the empty language.  Raises
    :class:`RecognitionLimitError` when the chart passes ``max_items``.
    """
    chart = _chart(g, s, max_items)
    return chart is not None and chart.accepted()


def accepts_or_reject(g: Grammar, s: str, max_items: int = DEFAULT_MAX_ITEMS) -> bool:
    """Like :func:`accepts`, but a cap hit counts as rejection and is logged."""
    try:
        return accepts(g, s, max_items)
    except RecognitionLimitError as exc:
        log.warning("treating %r as rejected: %s", s, exc)
        return False


class _Extractor:
    def __init__(self, chart: _Chart, budget: int):
        self.chart = chart
        self.rules = chart.cg.rules
        self.s = chart.s
        self.budget = budget
        self.steps = 0
        self._tree_memo: dict = {}
        self._feasible_memo: dict = {}
        self._seq_memo: dict = {}

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise RecognitionLimitError("derivation extraction exceeded its step budget")

    def feasible(self, alt: tuple, d: int, k: int, j: int) -> bool:
        """Can symbols ``alt[d:]`` derive ``s[k:j]``?"""
        key = (alt, d, k, j)
        hit = self._feasible_memo.get(key)
        if hit is not None:
            return hit
        self._tick()
        if d == len(alt):
            ok = k == j
        else:
            is_t, text = alt[d]
            if is_t:
                end = k + len(text)
                ok = end <= j and self.s.startswith(text, k) and self.feasible(alt, d + 1, end, j)
            else:
                ok = any(e <= j and self.feasible(alt, d + 1, e, j) for e in self.chart.ends(text, k))
        self._feasible_memo[key] = ok
        return ok

    def tree(self, nt: str, i: int, j: int, blocked: frozenset) -> Optional[tuple]:
        """Lexicographically least choice sequence deriving ``s[i:j]`` from ``nt``.

        Returns a tuple of ``(alt_index, nt)`` pairs in pre-order, or None.
        ``blocked`` holds the non-terminals already expanded over this exact
        span on the current branch.
        """
        if nt in blocked:
            return None
        key = (nt, i, j, blocked)
        if key in self._tree_memo:
            return self._tree_memo[key]
        self._tick()
        result = None
        inner = blocked | {nt}
        for a, alt in enumerate(self.rules[nt]):
            if not self.feasible(alt, 0, i, j):
                continue
            rest = self.sequence(alt, 0, i, j, inner, (i, j))
            if rest is not None:
                result = ((a, nt),) + rest
                break
        self._tree_memo[key] = result
        return result

    def sequence(self, alt: tuple, d: int, k: int, j: int, blocked: frozenset,
                 span: tuple[int, int]) -> Optional[tuple]:
        if d == len(alt):
            return () if k == j else None
        key = (alt, d, k, j, blocked, span)
        if key in self._seq_memo:
            return self._seq_memo[key]
        self._tick()
        is_t, text = alt[d]
        result = None
        if is_t:
            end = k + len(text)
            if end <= j and self.s.startswith(text, k):
                result = self.sequence(alt, d + 1, end, j, blocked, span)
        else:
            options = []
            for e in self.chart.ends(text, k):
                if e > j or not self.feasible(alt, d + 1, e, j):
                    continue
                # only a child covering the parent's exact span can close a cycle
                sub = self.tree(text, k, e, blocked if (k, e) == span else frozenset())
                if sub is not None:
                    options.append((tuple(c for c, _ in sub), e, sub))
            # subtree encodings are prefix-free, so the least head wins unless
            # the remaining symbols cannot be derived after it
            for _, e, sub in sorted(options, key=lambda o: o[0]):
                rest = self.sequence(alt, d + 1, e, j, blocked, span)
                if rest is not None:
                    result = sub + rest
                    break
        self._seq_memo[key] = result
        return result


def leftmost_derivation_rules(g: Grammar, s: str,
                              max_items: int = DEFAULT_MAX_ITEMS) -> Optional[DerivationTrace]:
    """Productions used by one left-most derivation of ``s``, or None.

    Ties between parses go to the lowest alternative index at each expansion,
    in left-most order.
    """
    chart = _chart(g, s, max_items)
    if chart is None or not chart.accepted():
        return None
    ex = _Extractor(chart, max_items)
    try:
        seq = ex.tree(g.start, 0, len(s), frozenset())
    except RecursionError:
        raise RecognitionLimitError("derivation too deep to extract") from None
    if seq is None:  # pragma: no cover - accepted() guarantees a derivation
        raise AssertionError("accepted string without a derivation")
    alts = {rs.lhs: rs.alternatives for rs in g.rule_sets}
    used = frozenset(Production(nt, alts[nt][a]) for a, nt in seq)
    return DerivationTrace(used, tuple(a for a, _ in seq))


def used_rules_for_examples(g: Grammar, examples: Iterable[str],
                            max_items: int = DEFAULT_MAX_ITEMS) -> frozenset[Production]:
    used: set[Production] = set()
    for ex in examples:
        trace = leftmost_derivation_rules(g, ex, max_items)
        if trace is None:
            raise NotInLanguageError(ex)
        used |= trace.used_productions
    return frozenset(used)
