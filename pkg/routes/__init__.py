# routes/__init__.py

from .routes_solve import solve_command
from .routes_check import simulate_command, verify_command

all_commands = [
    solve_command,
    verify_command,
    simulate_command,
]
