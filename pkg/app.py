# This is the main entry point of the solver
# It reads the settings, sets up logging and hands the command line to one of the commands
# When you run "python3 app.py solve --game games/two_state_randomized.json", this file runs

import os
import sys

# Prevent Python from creating .pyc files and __pycache__ directories
os.environ['PYTHONDONTWRITEBYTECODE'] = '1'
sys.dont_write_bytecode = True

import argparse
import logging

# Importing settings loads the .env file (DYNKIN_* variables)
from models.settings import get_settings
from routes import all_commands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynkin",
        description="Equilibria of two-player stopping games on finite Markov chains",
    )
    parser.add_argument("--log-level", default=None,
                        help="logging level (default: DYNKIN_LOG_LEVEL or WARNING)")
    commands = parser.add_subparsers(dest="command", required=True)

    # Register every command module
    # Each one adds its own flags and points at the handler that runs it
    for command in all_commands:
        sub = commands.add_parser(command.name, help=command.help)
        command.add_arguments(sub)
        sub.set_defaults(handler=command.handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = get_settings()
    except ValueError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1

    level = (args.log_level or settings.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    # joblib workers are chatty at INFO
    logging.getLogger("joblib").setLevel(logging.WARNING)

    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
