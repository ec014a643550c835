"""BNF grammar values.

A grammar is an ordered list of rule sets, one per non-terminal, plus a
start symbol.  Values are frozen dataclasses built from tuples, so they are
hashable, compare structurally and can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Tuple


@dataclass(frozen=True)
class Symbol:
    text: str
    terminal: bool

    def __post_init__(self):
        if not self.terminal and not self.text:
            raise ValueError("non-terminal name must be non-empty")
        if self.terminal and '"' in self.text:
            raise ValueError("terminal text may not contain a double quote")

    def __str__(self) -> str:
        return f'"{self.text}"' if self.terminal else f"<{self.text}>"


def T(text: str) -> Symbol:
    return Symbol(text, True)


def NT(name: str) -> Symbol:
    return Symbol(name, False)


Alternative = Tuple[Symbol, ...]


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: Alternative

    def __str__(self) -> str:
        body = " ".join(map(str, self.rhs)) if self.rhs else '""'
        return f"<{self.lhs}> ::= {body}"


@dataclass(frozen=True)
class RuleSet:
    lhs: str
    alternatives: Tuple[Alternative, ...]

    def productions(self) -> Iterator[Production]:
        for alt in self.alternatives:
            yield Production(self.lhs, alt)


def _normalize_alt(alt: Iterable[Symbol]) -> Alternative:
    alt = tuple(alt)
    # a lone "" is the written form of epsilon
    if alt == (T(""),):
        return ()
    return alt


@dataclass(frozen=True)
class Grammar:
    rule_sets: Tuple[RuleSet, ...] = ()
    start: Optional[str] = field(default=None)

    def __post_init__(self):
        if self.start is None and self.rule_sets:
            object.__setattr__(self, "start", self.rule_sets[0].lhs)

    @classmethod
    def build(cls, rules: Iterable[Tuple[str, Sequence[Iterable[Symbol]]]],
              start: Optional[str] = None) -> "Grammar":
        """Build a grammar from ``(lhs, alternatives)`` pairs.

        Rule sets sharing an lhs are merged at the position of the first one;
        alternatives from later duplicates are appended unless an identical
        alternative is already present.
        """
        order: list[str] = []
        merged: dict[str, list[Alternative]] = {}
        for lhs, alts in rules:
            alts = [_normalize_alt(a) for a in alts]
            if lhs not in merged:
                order.append(lhs)
                merged[lhs] = list(alts)
            else:
                existing = merged[lhs]
                for alt in alts:
                    if alt not in existing:
                        existing.append(alt)
        rule_sets = tuple(RuleSet(lhs, tuple(merged[lhs])) for lhs in order)
        return cls(rule_sets, start)

    @classmethod
    def empty(cls) -> "Grammar":
        return cls((), None)

    def __len__(self) -> int:
        return len(self.rule_sets)

    def rule_set(self, lhs: str) -> Optional[RuleSet]:
        for rs in self.rule_sets:
            if rs.lhs == lhs:
                return rs
        return None

    @property
    def nonterminals(self) -> frozenset[str]:
        names = {rs.lhs for rs in self.rule_sets}
        for rs in self.rule_sets:
            for alt in rs.alternatives:
                names.update(s.text for s in alt if not s.terminal)
        return frozenset(names)

    @property
    def terminals(self) -> frozenset[str]:
        return frozenset(s.text for rs in self.rule_sets
                         for alt in rs.alternatives for s in alt if s.terminal)

    def productions(self) -> list[Production]:
        return [p for rs in self.rule_sets for p in rs.productions()]

    def production_set(self) -> frozenset[Production]:
        return frozenset(self.productions())

    def undefined_nonterminals(self) -> list[str]:
        """Referenced non-terminals with no rule set, in first-reference order."""
        defined = {rs.lhs for rs in self.rule_sets}
        missing: list[str] = []
        for rs in self.rule_sets:
            for alt in rs.alternatives:
                for s in alt:
                    if not s.terminal and s.text not in defined and s.text not in missing:
                        missing.append(s.text)
        return missing


def is_valid(g: Grammar) -> bool:
    if not g.rule_sets:
        return False
    defined = {rs.lhs for rs in g.rule_sets}
    if g.start not in defined:
        return False
    if any(not rs.alternatives for rs in g.rule_sets):
        return False
    return not g.undefined_nonterminals()


def nonterminal_count(g: Grammar) -> int:
    return len(g.rule_sets)


def production_count(g: Grammar) -> int:
    return sum(len(rs.alternatives) for rs in g.rule_sets)
