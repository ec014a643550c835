"""Infer context-free grammars in BNF from positive and negative examples."""
from .bnf import BnfSyntaxError, check_bnf, extract_fenced_grammar, parse_bnf, print_bnf
from .grammar import Grammar, NT, T, is_valid
from .recognizer import accepts, leftmost_derivation_rules

__version__ = "0.1.0"

__all__ = [
    "BnfSyntaxError", "Grammar", "NT", "T", "accepts", "check_bnf", "extract_fenced_grammar",
    "is_valid", "leftmost_derivation_rules", "parse_bnf", "print_bnf",
]
