"""flc: a small functional-logic language with default rules."""

from .core import Program, Rule, OperationDef
from .parser import ParseError, parse_expr, parse_program
from .pretty import pretty_print, print_expr, print_rule

__version__ = "0.1.0"
