import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bnfinfer.bnf import parse_bnf  # noqa: E402

# one summary line per acceptance check, in declaration order
_ACCEPTANCE: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): test belongs to a named acceptance check")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark:
            _ACCEPTANCE.setdefault(mark.args[0], [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark and (rep.when == "call" or not rep.passed):
        _ACCEPTANCE.setdefault(mark.args[0], []).append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for name, outcomes in _ACCEPTANCE.items():
        ok = bool(outcomes) and all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")


CALL_POSITIVES = ["add(1,2,3)", "merge(x,y)", "fibonacci(9)"]
CALL_NEGATIVES = ["add(1,2,3", "merge(x,,y)", "fibonacci 9)"]

_LETTERS = " | ".join(f'"{c}"' for c in "abcdefghijklmnopqrstuvwxyz")
_DIGITS = " | ".join(f'"{c}"' for c in "0123456789")

CALL_GRAMMAR = f"""\
<stmt> ::= <func> "(" <args> ")"
<args> ::= <expr> | <expr> "," <args>
<expr> ::= <char> | <number>
<func> ::= <char> <func> | <char>
<char> ::= {_LETTERS}
<number> ::= {_DIGITS}"""

OVERFIT_GRAMMAR = '''\
<stmt> ::= "add(1,2,3)" | "merge(x,y)" |
           "fibonacci(9)"'''


@pytest.fixture
def call_grammar():
    return parse_bnf(CALL_GRAMMAR)


@pytest.fixture
def overfit_grammar():
    return parse_bnf(OVERFIT_GRAMMAR)
