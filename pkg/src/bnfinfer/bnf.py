"""Reading and writing BNF text.

The accepted dialect is plain BNF::

    <expr> ::= <term> "+" <expr> | <term>
             | "(" <expr> ")"

One rule set per line.  A line that starts with ``|``, or that follows a line
ending in ``|``, continues the previous rule set.  Terminals are double
quoted with no escapes; ``""`` is the empty string.  EBNF constructs are
rejected with a diagnostic rather than interpreted.

Errors are reported as :class:`Diagnostic` values carrying a line number and
fix hints, written to be pasted back into an LLM prompt.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional

from .grammar import NT, T, Grammar, Symbol


class Code(enum.Enum):
    InvalidRule = "InvalidRule"
    MissingDefinitionOperator = "MissingDefinitionOperator"
    LackOfAlternatives = "LackOfAlternatives"
    UnterminatedTerminal = "UnterminatedTerminal"
    UnsupportedSymbol = "UnsupportedSymbol"
    UnwrappedNonTerminal = "UnwrappedNonTerminal"
    MisplacedBracket = "MisplacedBracket"
    MissingAlternativeSeparator = "MissingAlternativeSeparator"
    UndefinedNonTerminal = "UndefinedNonTerminal"


_INVALID_RULE_HINTS = (
    "This error is likely due to not satisfying one of the following requirements:",
    "1. A rule MUST start with a non-terminal definition;",
    "2. A non-terminal symbol MUST be in angle brackets, e.g. <non-terminal>;",
    "3. A non-terminal definition must be followed by '::=' to indicate the start of the right-hand side;",
)
_LACK_OF_ALTS_HINT = ("This error is likely due to the reason that the right-hand side "
                      "is not defined after '::='.")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    code: Code
    message: str
    hints: tuple[str, ...] = ()

    def render(self) -> str:
        return "\n".join((f"Line {self.line}: {self.message}",) + self.hints)

    def __str__(self) -> str:
        return self.render()


def render_diagnostics(diagnostics) -> str:
    return "\n\n".join(d.render() for d in diagnostics)


class BnfSyntaxError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__(render_diagnostics(self.diagnostics))


# -- tokenizer ---------------------------------------------------------------

NTERM, TERM, DEF, PIPE, BAD_DEF, BARE, ERR = "nt", "t", "def", "pipe", "bad_def", "bare", "err"


@dataclass
class _Tok:
    kind: str
    value: str
    line: int


_NT_RE = re.compile(r'<([^<>"|\s](?:[^<>"|]*[^<>"|\s])?)>')
_CHAR_CLASS_RE = re.compile(r'\[[^\]\s"<>]+\]')
_BARE_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
_BAD_DEF_RE = re.compile(r"(:=|::|->|→|=|:)")


def _excerpt(line: str, limit: int = 60) -> str:
    return line if len(line) <= limit else line[:limit - 3] + "..."


def _tokenize(line: str, lineno: int, diags: list[Diagnostic]) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(line)

    def unsupported(what: str, hint: str) -> None:
        diags.append(Diagnostic(lineno, Code.UnsupportedSymbol,
                                f"Unsupported Symbol: {what} is not standard BNF",
                                (hint,)))
        toks.append(_Tok(ERR, what, lineno))

    while i < n:
        c = line[i]
        if c.isspace():
            i += 1
        elif line.startswith("::=", i):
            toks.append(_Tok(DEF, "::=", lineno))
            i += 3
        elif c == "<":
            m = _NT_RE.match(line, i)
            if m:
                toks.append(_Tok(NTERM, m.group(1), lineno))
                i = m.end()
            else:
                unsupported("'<' without a matching '>'",
                            "A non-terminal symbol MUST be in angle brackets, e.g. <non-terminal>; "
                            "write a literal '<' as the terminal \"<\".")
                i += 1
        elif c == '"':
            j = line.find('"', i + 1)
            if j < 0:
                diags.append(Diagnostic(lineno, Code.UnterminatedTerminal,
                                        f"Unterminated Terminal: {_excerpt(line[i:])}",
                                        ("Each terminal symbol MUST be quoted with a pair of double quotes "
                                         "on a single line.",
                                         "Terminals cannot contain a double quote; escape sequences "
                                         "such as \\\" are not supported.")))
                toks.append(_Tok(ERR, line[i:], lineno))
                i = n
            else:
                toks.append(_Tok(TERM, line[i + 1:j], lineno))
                i = j + 1
        elif c == "|":
            toks.append(_Tok(PIPE, "|", lineno))
            i += 1
        elif c == "'":
            j = line.find("'", i + 1)
            j = n - 1 if j < 0 else j
            unsupported(f"single-quoted terminal {line[i:j + 1]}",
                        "Each terminal symbol MUST be quoted with double quotes, "
                        "e.g. \"a\" instead of 'a'.")
            i = j + 1
        elif c == "[":
            m = _CHAR_CLASS_RE.match(line, i)
            if m:
                unsupported(f"character class {m.group(0)}",
                            "List every character as its own alternative instead, "
                            "e.g. <digit> ::= \"0\" | \"1\" | \"2\".")
                i = m.end()
            else:
                diags.append(_bracket_diag(lineno, c))
                toks.append(_Tok(ERR, c, lineno))
                i += 1
        elif c in "()]{}":
            diags.append(_bracket_diag(lineno, c))
            toks.append(_Tok(ERR, c, lineno))
            i += 1
        elif c in "*+?":
            unsupported(f"quantifier '{c}'",
                        "Repetition and optional parts must be written with recursion and "
                        "alternatives, e.g. <list> ::= <item> | <item> <list>.")
            i += 1
        elif c == "ε":
            unsupported("'ε'", 'Write the empty string as the terminal "".')
            i += 1
        else:
            m = _BAD_DEF_RE.match(line, i)
            if m:
                toks.append(_Tok(BAD_DEF, m.group(0), lineno))
                i = m.end()
                continue
            m = _BARE_RE.match(line, i)
            if m:
                toks.append(_Tok(BARE, m.group(0), lineno))
                i = m.end()
                continue
            j = i
            while j < n and not line[j].isspace() and line[j] not in '<"|':
                j += 1
            unsupported(f"'{line[i:j]}'",
                        "Only non-terminals in angle brackets, double-quoted terminals and the "
                        "separator '|' may appear on the right-hand side.")
            i = j
    return toks


def _bracket_diag(lineno: int, c: str) -> Diagnostic:
    return Diagnostic(
        lineno, Code.MisplacedBracket,
        f"Misplaced Bracket: '{c}' cannot be used for grouping in BNF",
        ("Brackets are not part of standard BNF; remove them and introduce a new "
         "non-terminal for the grouped part if needed.",
         f"If '{c}' is meant literally, quote it as the terminal \"{c}\"."))


# -- parser ------------------------------------------------------------------

@dataclass
class _Rule:
    lhs: str
    line: int
    rhs: list[_Tok] = field(default_factory=list)


def _parse(text: str):
    diags: list[Diagnostic] = []
    rules: list[_Rule] = []
    lines = text.splitlines()
    current: Optional[_Rule] = None

    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        toks = _tokenize(line, lineno, diags)
        if not toks:
            continue
        first = toks[0]
        second = toks[1] if len(toks) > 1 else None
        dangling = current is not None and current.rhs and current.rhs[-1].kind == PIPE
        empty_rhs = current is not None and not current.rhs

        if first.kind == PIPE:
            if current is None:
                diags.append(Diagnostic(lineno, Code.InvalidRule,
                                        f"Invalid Production Rule: {_excerpt(line)}",
                                        ("An alternative separator '|' must follow a rule "
                                         "definition.",) + _INVALID_RULE_HINTS[1:]))
                continue
            current.rhs.extend(toks[1:] if empty_rhs else toks)
        elif first.kind == NTERM and second is not None and second.kind == DEF:
            current = _Rule(first.value, lineno, toks[2:])
            rules.append(current)
        elif dangling:
            current.rhs.extend(toks)
        elif first.kind == BARE and second is not None and second.kind in (DEF, BAD_DEF):
            diags.append(Diagnostic(
                lineno, Code.UnwrappedNonTerminal,
                f"Unwrapped Non-terminal: '{first.value}' is not wrapped in angle brackets",
                (f"A non-terminal symbol MUST be in angle brackets, e.g. <{first.value}>.",)))
            if second.kind == BAD_DEF:
                diags.append(_bad_def_diag(lineno, second.value, line))
            current = _Rule(first.value, lineno, toks[2:])
            rules.append(current)
        elif first.kind == NTERM and second is not None and second.kind == BAD_DEF:
            diags.append(_bad_def_diag(lineno, second.value, line))
            current = _Rule(first.value, lineno, toks[2:])
            rules.append(current)
        elif first.kind == NTERM and any(t.kind == DEF for t in toks):
            diags.append(Diagnostic(lineno, Code.InvalidRule,
                                    f"Invalid Production Rule: {_excerpt(line)}",
                                    _INVALID_RULE_HINTS))
            current = None
        elif current is not None and first.kind in (NTERM, TERM, BARE, ERR):
            hints = ("Separate alternatives with '|'; a line that continues the previous rule "
                     "MUST start with '|'.",)
            if first.kind == NTERM:
                hints += (f"If this line defines <{first.value}>, it must be followed by '::='.",)
            diags.append(Diagnostic(lineno, Code.MissingAlternativeSeparator,
                                    f"Missing Alternative Separator: {_excerpt(line)}",
                                    hints))
            # keep the symbols so later checks see a non-empty alternative
            current.rhs.append(_Tok(PIPE, "|", lineno))
            current.rhs.extend(toks)
        elif first.kind == NTERM:
            diags.append(Diagnostic(lineno, Code.MissingDefinitionOperator,
                                    f"Missing Definition Operator: {_excerpt(line)}",
                                    (_INVALID_RULE_HINTS[3],)))
            current = _Rule(first.value, lineno, toks[1:])
            rules.append(current)
        else:
            diags.append(Diagnostic(lineno, Code.InvalidRule,
                                    f"Invalid Production Rule: {_excerpt(line)}",
                                    _INVALID_RULE_HINTS))

    parsed: list[tuple[str, list[list[Symbol]]]] = []
    refs: dict[str, int] = {}
    for rule in rules:
        parsed.append((rule.lhs, _split_alternatives(rule, diags, refs)))

    if not rules and not diags:
        diags.append(Diagnostic(1, Code.InvalidRule,
                                "Invalid Production Rule: no production rules were found",
                                _INVALID_RULE_HINTS))
    diags.sort(key=lambda d: d.line)
    return parsed, refs, diags


def _bad_def_diag(lineno: int, op: str, line: str) -> Diagnostic:
    return Diagnostic(lineno, Code.MissingDefinitionOperator,
                      f"Missing Definition Operator: found '{op}' instead of '::=' in {_excerpt(line)}",
                      (_INVALID_RULE_HINTS[3],))


def _split_alternatives(rule: _Rule, diags: list[Diagnostic], refs: dict[str, int]):
    if not rule.rhs:
        diags.append(Diagnostic(rule.line, Code.LackOfAlternatives,
                                f"Lack of Alternatives: <{rule.lhs}> ::=",
                                (_LACK_OF_ALTS_HINT,)))
        return []
    alts: list[list[Symbol]] = []
    cur: list[Symbol] = []
    cur_nonempty = False
    last_line = rule.line
    for tok in rule.rhs:
        last_line = tok.line
        if tok.kind == PIPE:
            if not cur_nonempty:
                diags.append(_empty_alt_diag(tok.line, rule.lhs))
            alts.append(cur)
            cur, cur_nonempty = [], False
            continue
        cur_nonempty = True
        if tok.kind == NTERM:
            cur.append(NT(tok.value))
            refs.setdefault(tok.value, tok.line)
        elif tok.kind == TERM:
            cur.append(T(tok.value))
        elif tok.kind == BARE:
            diags.append(Diagnostic(
                tok.line, Code.UnwrappedNonTerminal,
                f"Unwrapped Non-terminal: '{tok.value}' in the rule for <{rule.lhs}>",
                (f"A non-terminal symbol MUST be in angle brackets, e.g. <{tok.value}>.",
                 f"If '{tok.value}' is meant literally, quote it as the terminal \"{tok.value}\".")))
        elif tok.kind == DEF:
            diags.append(Diagnostic(
                tok.line, Code.InvalidRule,
                f"Invalid Production Rule: '::=' appears more than once in the rule for <{rule.lhs}>",
                ("Each rule MUST be written on its own line.",) + _INVALID_RULE_HINTS[1:]))
        elif tok.kind == BAD_DEF:
            diags.append(Diagnostic(
                tok.line, Code.UnsupportedSymbol,
                f"Unsupported Symbol: '{tok.value}' on the right-hand side of <{rule.lhs}>",
                (f"If '{tok.value}' is meant literally, quote it as the terminal \"{tok.value}\".",)))
    if not cur_nonempty:
        diags.append(_empty_alt_diag(last_line, rule.lhs))
    alts.append(cur)
    return alts


def _empty_alt_diag(lineno: int, lhs: str) -> Diagnostic:
    return Diagnostic(lineno, Code.LackOfAlternatives,
                      f"Lack of Alternatives: an alternative of <{lhs}> is empty",
                      ("Every '|' MUST be followed by an alternative.",
                       'Write the empty string explicitly as the terminal "".'))


def parse_bnf(text: str) -> Grammar:
    """Parse BNF text, raising :class:`BnfSyntaxError` on any syntax problem.

    Rule sets keep their textual order and the first one supplies the start
    symbol.  Rule sets repeating an lhs are merged into the first.
    """
    parsed, _, diags = _parse(text)
    if diags:
        raise BnfSyntaxError(diags)
    return Grammar.build(parsed)


def check_bnf(text: str) -> tuple[Optional[Grammar], list[Diagnostic]]:
    """Parse and validate in one pass.

    Returns the grammar (``None`` on syntax errors) and every diagnostic,
    including undefined non-terminals for grammars that parse.
    """
    parsed, refs, diags = _parse(text)
    if diags:
        return None, diags
    g = Grammar.build(parsed)
    for name in g.undefined_nonterminals():
        diags.append(Diagnostic(
            refs.get(name, 1), Code.UndefinedNonTerminal,
            f"Undefined Non-terminal: <{name}> is used but has no rule",
            (f"Every non-terminal MUST have at least one rule, e.g. <{name}> ::= ...;",
             "or replace it with a non-terminal that is already defined.")))
    return g, diags


def print_bnf(g: Grammar) -> str:
    rule_sets = list(g.rule_sets)
    # the start symbol is implicit in the first line
    idx = next((i for i, rs in enumerate(rule_sets) if rs.lhs == g.start), 0)
    if idx:
        rule_sets.insert(0, rule_sets.pop(idx))
    lines = []
    for rs in rule_sets:
        alts = [" ".join(map(str, alt)) if alt else '""' for alt in rs.alternatives]
        lines.append(f"<{rs.lhs}> ::= " + " | ".join(alts))
    return "\n".join(lines)


# -- LLM responses -----------------------------------------------------------

class EmptyExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class Extraction:
    text: str
    fenced: bool


_FENCE_RE = re.compile(r"```(.*?)```", re.S)
_INFO_RE = re.compile(r"[\w+.-]*")


def extract_fenced_grammar(response: str) -> Extraction:
    """Return the body of the first triple-backtick fence in ``response``.

    A language tag on the opening line (```bnf) is dropped.  Without a fence
    the whole trimmed response comes back with ``fenced=False``.
    """
    m = _FENCE_RE.search(response)
    if m is None:
        body = response.strip()
        if body.startswith("```"):
            # unclosed fence, typically a truncated reply
            first, _, rest = body[3:].partition("\n")
            body = rest.strip() if _INFO_RE.fullmatch(first.strip()) else body[3:].strip()
        return Extraction(body, False)
    inner = m.group(1)
    first, nl, rest = inner.partition("\n")
    if nl and _INFO_RE.fullmatch(first.strip()):
        inner = rest
    inner = inner.strip()
    if not inner:
        raise EmptyExtractionError("the response contains an empty code fence")
    return Extraction(inner, True)
