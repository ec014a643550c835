"""Independent reference implementations used to check the library.

Nothing here shares code with the recognizer: membership comes from a
bounded string-set fixpoint and derivations from exhaustive enumeration.
"""
from __future__ import annotations

import itertools
import random
import string

from hypothesis import strategies as st

from bnfinfer.grammar import NT, Grammar, Production, T


def language_upto(g: Grammar, max_len: int) -> set[str]:
    """Every string of length <= max_len derivable from the start symbol."""
    sets: dict[str, set[str]] = {rs.lhs: set() for rs in g.rule_sets}
    changed = True
    while changed:
        changed = False
        for rs in g.rule_sets:
            for alt in rs.alternatives:
                partial = {""}
                for sym in alt:
                    if sym.terminal:
                        parts = {sym.text}
                    else:
                        parts = sets.get(sym.text, set())
                    partial = {a + b for a in partial for b in parts if len(a) + len(b) <= max_len}
                    if not partial:
                        break
                new = partial - sets[rs.lhs]
                if new:
                    sets[rs.lhs] |= new
                    changed = True
    return sets.get(g.start, set())


def all_strings(alphabet: str, max_len: int):
    for n in range(max_len + 1):
        for chars in itertools.product(alphabet, repeat=n):
            yield "".join(chars)


def derivations(g: Grammar, s: str) -> list[tuple[int, ...]]:
    """Pre-order alternative-index sequences of every parse tree of ``s``
    in which no (non-terminal, span) pair repeats along a branch."""
    rules = {rs.lhs: rs.alternatives for rs in g.rule_sets}

    def trees(nt, i, j, path):
        if (nt, i, j) in path or nt not in rules:
            return []
        path = path | {(nt, i, j)}
        out = []
        for idx, alt in enumerate(rules[nt]):
            out.extend((idx,) + rest for rest in seqs(alt, 0, i, j, path))
        return out

    def seqs(alt, d, i, j, path):
        if d == len(alt):
            return [()] if i == j else []
        sym = alt[d]
        if sym.terminal:
            if s.startswith(sym.text, i) and i + len(sym.text) <= j:
                return seqs(alt, d + 1, i + len(sym.text), j, path)
            return []
        out = []
        for k in range(i, j + 1):
            heads = trees(sym.text, i, k, path)
            if not heads:
                continue
            tails = seqs(alt, d + 1, k, j, path)
            out.extend(h + t for h in heads for t in tails)
        return out

    return trees(g.start, 0, len(s), frozenset())


def productions_of(g: Grammar, choices: tuple[int, ...]) -> frozenset[Production]:
    """Decode a pre-order choice sequence back into the productions it uses."""
    rules = {rs.lhs: rs.alternatives for rs in g.rule_sets}
    it = iter(choices)
    used = set()

    def walk(nt):
        alt = rules[nt][next(it)]
        used.add(Production(nt, alt))
        for sym in alt:
            if not sym.terminal:
                walk(sym.text)

    walk(g.start)
    rest = list(it)
    assert not rest, f"trailing choices {rest}"
    return frozenset(used)


# -- random grammars ---------------------------------------------------------

def random_small_grammar(rng: random.Random, alphabet: str = "ab", max_rule_sets: int = 4,
                         max_alts: int = 3, max_alt_len: int = 3, max_term_len: int = 2) -> Grammar:
    """A valid grammar over ``alphabet``; terminals may be empty (epsilon)."""
    names = ["S", "A", "B", "C"][: rng.randint(1, max_rule_sets)]
    rules = []
    for name in names:
        alts = []
        for _ in range(rng.randint(1, max_alts)):
            alt = []
            for _ in range(rng.randint(0, max_alt_len)):
                if rng.random() < 0.45:
                    alt.append(NT(rng.choice(names)))
                else:
                    n = rng.randint(0, max_term_len)
                    alt.append(T("".join(rng.choice(alphabet) for _ in range(n))))
            alts.append(alt)
        rules.append((name, alts))
    return Grammar.build(rules)


# anything printable except the double quote; newlines would split the rule
TERMINAL_CHARS = "".join(c for c in string.printable if c not in '"\n\r\x0b\x0c')
NAME_HEAD = string.ascii_letters + string.digits + "_-."
NAME_CHARS = NAME_HEAD + " "


def random_printable_grammar(rng: random.Random) -> Grammar:
    """Random well-formed grammar exercising the full terminal and name syntax."""
    def name():
        body = "".join(rng.choice(NAME_CHARS) for _ in range(rng.randint(0, 6))).strip()
        return rng.choice(NAME_HEAD) + body if body else rng.choice(NAME_HEAD)

    names = []
    while len(names) < rng.randint(1, 6):
        n = name()
        if n not in names:
            names.append(n)
    rules = []
    for lhs in names:
        alts = []
        for _ in range(rng.randint(1, 4)):
            alt = []
            for _ in range(rng.randint(0, 4)):
                if rng.random() < 0.4:
                    alt.append(NT(rng.choice(names)))
                else:
                    alt.append(T("".join(rng.choice(TERMINAL_CHARS) for _ in range(rng.randint(0, 4)))))
            alts.append(alt)
        rules.append((lhs, alts))
    return Grammar.build(rules)


@st.composite
def grammars(draw, max_rule_sets: int = 5):
    """Hypothesis strategy for well-formed grammars with unique left-hand sides."""
    name = st.text(alphabet=NAME_HEAD, min_size=1, max_size=6)
    names = draw(st.lists(name, min_size=1, max_size=max_rule_sets, unique=True))
    term = st.text(alphabet=TERMINAL_CHARS, max_size=4).map(T)
    sym = st.one_of(term, st.sampled_from(names).map(NT))
    rules = [(lhs, draw(st.lists(st.lists(sym, max_size=4), min_size=1, max_size=4))) for lhs in names]
    return Grammar.build(rules)
