"""Parser, quantity checker and transactional interpreter for a flow-based
smart-contract language."""

from psamathe.parser import ParseError, parse
from psamathe.quantity import ANY, EMPTY, NONEMPTY, ONE, TypeQuant
from psamathe.runtime import FlowError, RunResult, run_program
from psamathe.typechecker import CheckResult, check

__all__ = [
    "ANY", "EMPTY", "NONEMPTY", "ONE", "TypeQuant",
    "ParseError", "parse", "check", "CheckResult",
    "FlowError", "RunResult", "run_program",
]
