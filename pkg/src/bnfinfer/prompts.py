"""Prompt templates.

Rendering is plain string substitution; examples are written one per line
in the order given.
"""
from __future__ import annotations

import re
from typing import Iterable

from .bnf import render_diagnostics

_REQUIREMENTS = """\
Given a set of positive and negative examples, generate the Backus–Naur Form (BNF) grammar that accepts all positive examples and rejects all negative examples.
1. Only generate the standard BNF grammar;
2. The generated BNF grammar MUST accept all positive examples and reject all negative examples;
3. Each terminal symbol MUST be quoted with double quotes and MUST NOT escape double quotes or pipeline in terminal symbols;
4. Pay special attention to whether spaces, line breaks, or other special symbols are required between each symbol, and if so, these need to be explicitly specified, e.g. <term> ::= "1" "+" "2" can handle "1+2" but not "1 + 2" while <term> ::= "1" " " "+" " " "2" can handle "1 + 2" but not "1+2";
5. The entry point of the generated BNF grammar MUST be the non-terminal symbol in the first production rule;
6. Only the generated BNF should be wrapped in a pair of triple backtick;
7. Do NOT output any additional texts, comments, or explanations.

===Positive Examples===
{positive_examples}
===Negative Examples===
{negative_examples}"""

DIRECT_PROMPT = _REQUIREMENTS

FEEDBACK_PROMPT = _REQUIREMENTS + """

===Generated BNF===
{bnf_grammar}

===Feedback===
The generated BNF grammar has incorrect syntax and please consider fixing it by referring to the feedback.
Here is the feedback from the BNF parser:
{parser_feedback}"""

MUTATION_PROMPT = """\
Modify the following BNF grammar slightly to improve its acceptance of the positive examples and rejection of the negative examples.

===BNF Grammar===
{bnf_grammar}

===Positive Examples===
{positive_examples}
===Negative Examples===
{negative_examples}

Only output the modified BNF grammar wrapped in triple backticks."""

GENERATE_GRAMMARS_PROMPT = """\
Generate a list of random standard Backus-Naur Form (BNF) grammar with the following constraints:
1. Each generated BNF grammar MUST be SELF-CONTAINED and VALID, which means it should be able to recognize a valid string;
2. Each generated BNF grammar MUST have exactly {k} lines;
3. Each generated BNF grammar MUST be unique;
4. Each generated BNF grammar MUST be separated by a newline in addition to the linebreak;
5. For each generated BNF grammar, the entry point MUST be at the first line;
6. Only generate {n} BNF grammars;
7. Only output BNF grammars WITHOUT any additional text or code block, like "```"."""

POSITIVES_PROMPT = """\
Generate a list of positive examples with the following constraints:
1. Each example MUST be separated by a newline in addition to the linebreak;
2. Only output examples WITHOUT any additional text or code block, like "```";
3. Only output {m} examples;
4. Each example MUST be generated based on the given BNF grammar;
5. Pay attention to whether the whitespaces are allowed between symbols.

For example, given the following BNF grammar:
<term> ::=  "0" | "1" | "2"
you should output positive examples like:
0

1

2

Then, the given BNF grammar is:
{reference_grammar}"""

NEGATIVES_PROMPT = """\
Generate a list of negative examples with the following constraints:
1. Each example MUST be separated by a newline in addition to the linebreak;
2. Only output examples WITHOUT any additional text or code block, like "```";
3. Only output {m} examples;
4. Each example MUST be generated based on the given BNF grammar;
5. Each example should be greatly related to the given BNF grammar, but ensure it is NOT a valid string for the given BNF grammar.

For example, given the following BNF grammar:
<term> ::=  "0" | "1" | "2"
you should output negative examples like:
6

*

9

Then, the given BNF grammar is:
{reference_grammar}"""


def _lines(examples: Iterable[str]) -> str:
    return "\n".join(examples)


_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def _fill(template: str, **values: str) -> str:
    # single pass, so substituted text is never rescanned for placeholders
    return _PLACEHOLDER.sub(lambda m: values.get(m.group(1), m.group(0)), template)


def render_dp_prompt(positives, negatives) -> str:
    return _fill(DIRECT_PROMPT, positive_examples=_lines(positives),
                 negative_examples=_lines(negatives))


def render_opf_feedback_prompt(positives, negatives, grammar_text: str, diagnostics) -> str:
    diagnostics = list(diagnostics)
    if not diagnostics:
        raise ValueError("a feedback prompt needs at least one diagnostic")
    return _fill(FEEDBACK_PROMPT, positive_examples=_lines(positives),
                 negative_examples=_lines(negatives), bnf_grammar=grammar_text,
                 parser_feedback=render_diagnostics(diagnostics))


def render_mutation_prompt(grammar_text: str, positives, negatives) -> str:
    return _fill(MUTATION_PROMPT, bnf_grammar=grammar_text, positive_examples=_lines(positives),
                 negative_examples=_lines(negatives))


def render_grammars_prompt(k: int, n: int) -> str:
    if not 1 <= k <= 9:
        raise ValueError("k must be between 1 and 9")
    if n < 1:
        raise ValueError("n must be positive")
    return _fill(GENERATE_GRAMMARS_PROMPT, k=str(k), n=str(n))


def render_positives_prompt(m: int, reference_grammar: str) -> str:
    if m < 1:
        raise ValueError("m must be positive")
    return _fill(POSITIVES_PROMPT, m=str(m), reference_grammar=reference_grammar)


def render_negatives_prompt(m: int, reference_grammar: str) -> str:
    if m < 1:
        raise ValueError("m must be positive")
    return _fill(NEGATIVES_PROMPT, m=str(m), reference_grammar=reference_grammar)
