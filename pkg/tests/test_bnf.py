import pytest
from hypothesis import given, settings

from bnfinfer.bnf import (BnfSyntaxError, Code, EmptyExtractionError, check_bnf,
                          extract_fenced_grammar, parse_bnf, print_bnf, render_diagnostics)
from bnfinfer.grammar import NT, Grammar, T

from oracles import grammars


def codes(text):
    return [d.code for d in check_bnf(text)[1]]


def test_parse_simple_grammar():
    g = parse_bnf('<s> ::= "a" <s> "b" | "ab"')
    assert g.start == "s"
    assert g.rule_set("s").alternatives == ((T("a"), NT("s"), T("b")), (T("ab"),))


def test_terminals_may_hold_bnf_punctuation():
    g = parse_bnf('<s> ::= "|" "<x>" "::=" " " "(" "ε"')
    assert g.rule_sets[0].alternatives[0] == (T("|"), T("<x>"), T("::="), T(" "), T("("), T("ε"))


def test_non_terminal_names_may_contain_spaces_and_dashes():
    g = parse_bnf('<opt ws> ::= " " | ""\n<a-b> ::= <opt ws>')
    assert [rs.lhs for rs in g.rule_sets] == ["opt ws", "a-b"]


def test_epsilon_written_as_empty_terminal():
    g = parse_bnf('<s> ::= "a" <s> | ""')
    assert g.rule_set("s").alternatives[1] == ()


def test_continuation_lines():
    lead = parse_bnf('<s> ::= "a"\n    | "b"\n| "c"')
    trail = parse_bnf('<s> ::= "a" |\n     "b" |\n "c"')
    assert lead == trail
    assert len(lead.rule_set("s").alternatives) == 3


def test_rule_after_trailing_pipe_line_starts_a_new_rule():
    g = parse_bnf('<s> ::= "a" |\n "b"\n<t> ::= "c"')
    assert [rs.lhs for rs in g.rule_sets] == ["s", "t"]


def test_blank_lines_are_ignored():
    assert parse_bnf('\n<s> ::= <t>\n\n<t> ::= "x"\n') == parse_bnf('<s> ::= <t>\n<t> ::= "x"')


@pytest.mark.parametrize("text,code", [
    ('<s> ::= "a"*', Code.UnsupportedSymbol),
    ('<s> ::= "a"+ "b"?', Code.UnsupportedSymbol),
    ("<s> ::= [a-z]", Code.UnsupportedSymbol),
    ("<s> ::= 'a'", Code.UnsupportedSymbol),
    ('<s> ::= ε', Code.UnsupportedSymbol),
    ('<s> ::= ("a" | "b") <s>', Code.MisplacedBracket),
    ('<s> ::= {"a"}', Code.MisplacedBracket),
    ('<s> ::= "a', Code.UnterminatedTerminal),
    ('s ::= "a"', Code.UnwrappedNonTerminal),
    ('<s> ::= "a" t', Code.UnwrappedNonTerminal),
    ('<s> = "a"', Code.MissingDefinitionOperator),
    ('<s> -> "a"', Code.MissingDefinitionOperator),
    ('<s> := "a"', Code.MissingDefinitionOperator),
    ('<s> "a"', Code.MissingDefinitionOperator),
    ("<s> ::=", Code.LackOfAlternatives),
    ('<s> ::= "a" | | "b"', Code.LackOfAlternatives),
    ('<s> ::= "a" |', Code.LackOfAlternatives),
    ('<s> ::= "a" <t> ::= "b"', Code.InvalidRule),
    ("", Code.InvalidRule),
    ('| "a"', Code.InvalidRule),
    ('<s> ::= "a"\n"b"', Code.MissingAlternativeSeparator),
    ("<s> ::= <t>", Code.UndefinedNonTerminal),
])
def test_error_codes(text, code):
    assert code in codes(text)


def test_diagnostics_carry_line_numbers():
    g, diags = check_bnf('<s> ::= <t>\n<t> ::= "a"\n<u> = "b"')
    assert g is None
    assert [(d.line, d.code) for d in diags] == [(3, Code.MissingDefinitionOperator)]


def test_parse_raises_with_all_diagnostics():
    with pytest.raises(BnfSyntaxError) as exc:
        parse_bnf('<s> ::= "a"*\n<t> ::=')
    assert {d.code for d in exc.value.diagnostics} == {Code.UnsupportedSymbol, Code.LackOfAlternatives}
    assert "Line 1" in str(exc.value)


def test_parse_accepts_undefined_references_but_check_flags_them():
    g = parse_bnf('<s> ::= <t> "x"')
    assert g.undefined_nonterminals() == ["t"]
    _, diags = check_bnf('<s> ::= "x"\n<u> ::= <s> <t>')
    assert [(d.line, d.code) for d in diags] == [(2, Code.UndefinedNonTerminal)]


def test_render_uses_line_prefix_and_hints():
    _, diags = check_bnf("<s> ::=")
    text = render_diagnostics(diags)
    first, *rest = text.splitlines()
    assert first.startswith("Line 1: ")
    assert rest == ["This error is likely due to the reason that the right-hand side is not "
                    "defined after '::='."]


def test_invalid_rule_hints_list_requirements():
    _, diags = check_bnf("hello world")
    rendered = diags[-1].render()
    assert "1. A rule MUST start with a non-terminal definition;" in rendered
    assert "angle brackets" in rendered


def test_print_format():
    g = parse_bnf('<s>::="a"<s>|""\n<t> ::= <s>')
    assert print_bnf(g) == '<s> ::= "a" <s> | ""\n<t> ::= <s>'


def test_print_puts_start_rule_first():
    g = Grammar.build([("t", [[T("b")]]), ("s", [[NT("t")]])], start="s")
    assert print_bnf(g).splitlines()[0].startswith("<s> ::=")


@settings(max_examples=300)
@given(grammars())
def test_round_trip(g):
    assert parse_bnf(print_bnf(g)) == g


@given(grammars())
def test_print_is_a_fixed_point(g):
    text = print_bnf(g)
    assert print_bnf(parse_bnf(text)) == text


# -- fence extraction ---------------------------------------------------------

def test_extracts_first_fence_and_drops_language_tag():
    reply = 'Sure!\n```bnf\n<s> ::= "a"\n```\nand another\n```\n<t> ::= "b"\n```'
    got = extract_fenced_grammar(reply)
    assert got.fenced and got.text == '<s> ::= "a"'


def test_unfenced_reply_is_used_whole():
    got = extract_fenced_grammar('  <s> ::= "a"\n')
    assert not got.fenced and got.text == '<s> ::= "a"'


def test_unclosed_fence_is_tolerated():
    got = extract_fenced_grammar('```\n<s> ::= "a"\n<t> ::= "b"')
    assert got.text == '<s> ::= "a"\n<t> ::= "b"'


def test_empty_fence_raises():
    with pytest.raises(EmptyExtractionError):
        extract_fenced_grammar("```\n\n```")


def test_single_line_fence():
    assert extract_fenced_grammar('```<s> ::= "a"```').text == '<s> ::= "a"'
