"""
Shared pieces of the command modules - routes/routes_common.py

- Command: what each routes module registers with app.py
- exit codes and the error -> exit code mapping
- the flags several commands share
- emitting a report as text or JSON
"""

import json
import logging
import sys
from dataclasses import dataclass
from typing import Callable

from models.errors import DynkinError
from models.game_model import to_jsonable

logger = logging.getLogger(__name__)

# ---------- EXIT CODES ----------
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2

# parse, schema, validation and precondition errors are all ValueErrors
INPUT_ERRORS = (ValueError, OSError)


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    add_arguments: Callable
    handler: Callable


def exit_code_for(error: Exception) -> int:
    """Input problems exit 1; solver errors and anything unexpected exit 2."""
    if isinstance(error, INPUT_ERRORS):
        return EXIT_INPUT
    if not isinstance(error, DynkinError):
        logger.error("unexpected %s", type(error).__name__, exc_info=error)
    return EXIT_SOLVER


# ---------- FLAGS ----------

def add_game_argument(parser):
    parser.add_argument("--game", required=True, metavar="PATH", help="game specification (JSON)")


def add_numeric_arguments(parser):
    parser.add_argument("--tol", type=float, default=None,
                        help="verification tolerance, relative to the payoff scale")
    parser.add_argument("--max-iter", type=int, default=None, help="iteration budget per solver run")
    add_seed_arguments(parser)


def add_seed_arguments(parser):
    parser.add_argument("--seed", type=int, default=None, help="root seed for restarts and sampling")
    parser.add_argument("--n-jobs", type=int, default=None, help="joblib workers (1 = serial)")


def add_output_argument(parser):
    parser.add_argument("--output", choices=("text", "json"), default="text")


# ---------- OUTPUT ----------

def emit(payload, output: str, text_lines, stream=None):
    """Print a report; ``text_lines`` is only consulted for text output."""
    stream = stream or sys.stdout
    if output == "json":
        stream.write(json.dumps(to_jsonable(payload), indent=2) + "\n")
    else:
        stream.write("\n".join(text_lines) + "\n")
    stream.flush()


def fmt_values(values) -> str:
    return "[" + ", ".join(f"{float(v):.12g}" for v in values) + "]"


def report_error(error: Exception) -> int:
    code = exit_code_for(error)
    logger.debug("command failed with %s", type(error).__name__)
    sys.stderr.write(f"error: {type(error).__name__}: {error}\n")
    return code
