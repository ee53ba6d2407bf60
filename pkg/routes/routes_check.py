"""
Verify and simulate commands - routes/routes_check.py

Both take a game file and a profiles file ({"p1": [...], "p2": [...]} in
declared state order).
- verify: exit 0 when the pair is an equilibrium, 2 with the worst condition otherwise
- simulate: Monte Carlo estimate of both players' payoffs from one initial state
"""

# ---------- IMPORTS ----------
import logging

# game and profile files
from models.game_model import load_game, load_profiles
from models.general_model import verify_equilibrium
# sampler for the simulate command
from models.simulate_model import HorizonMode, SimulationConfig, estimate_payoffs
from routes.routes_common import (
    EXIT_OK,
    EXIT_SOLVER,
    Command,
    add_game_argument,
    add_seed_arguments,
    add_output_argument,
    emit,
    fmt_values,
    report_error,
)

logger = logging.getLogger(__name__)


def _add_profiles_argument(parser):
    parser.add_argument("--profiles", required=True, metavar="PATH", help="profiles file (JSON)")


# ---------- VERIFY ----------

def add_verify_arguments(parser):
    add_game_argument(parser)
    _add_profiles_argument(parser)
    parser.add_argument("--tol", type=float, default=None,
                        help="verification tolerance, relative to the payoff scale")
    add_output_argument(parser)


def cmd_verify(args) -> int:
    # Load both files and run the check; any failure here is reported before output
    try:
        game = load_game(args.game)
        p1, p2 = load_profiles(args.profiles, game)
        report = verify_equilibrium(game, p1, p2, args.tol)
    except Exception as e:
        return report_error(e)
    # Text output shows the verdict line and both value vectors
    logger.info("Checked %s on %s: %s", args.profiles, args.game, report.verdict.value)

    lines = [f"verdict: {report.summary()}",
             f"v1: {fmt_values(report.v1.v)}",
             f"v2: {fmt_values(report.v2.v)}"]
    emit(report, args.output, lines)
    return EXIT_OK if report.verified else EXIT_SOLVER


# ---------- SIMULATE ----------

def add_simulate_arguments(parser):
    add_game_argument(parser)
    _add_profiles_argument(parser)
    add_seed_arguments(parser)
    parser.add_argument("--samples", type=int, default=None, help="number of episodes")
    parser.add_argument("--initial-state", default=None, help="state label (default: first state)")
    parser.add_argument("--horizon", choices=[m.value for m in HorizonMode],
                        default=HorizonMode.GEOMETRIC_KILLING.value)
    parser.add_argument("--cutoff", type=int, default=200, help="episode length for DiscountedCutoff")
    add_output_argument(parser)


def cmd_simulate(args) -> int:
    try:
        # --samples and --seed fall back to DYNKIN_SAMPLES and DYNKIN_SEED
        game = load_game(args.game)
        p1, p2 = load_profiles(args.profiles, game)
        cfg = SimulationConfig(samples=args.samples, seed=args.seed, initial_state=args.initial_state,
                               horizon_mode=args.horizon, cutoff=args.cutoff)
        estimate = estimate_payoffs(game, p1, p2, cfg, n_jobs=args.n_jobs)
    except Exception as e:
        return report_error(e)

    # outcome counts in the fixed order player1-first, player2-first, simultaneous, never
    counts = ", ".join(f"{k}={v}" for k, v in estimate.outcome_counts.items())
    lines = [f"samples: {estimate.samples}",
             f"player 1: {estimate.mean1:.12g} +/- {estimate.std_err1:.3g}",
             f"player 2: {estimate.mean2:.12g} +/- {estimate.std_err2:.3g}",
             f"outcomes: {counts}"]
    emit(estimate, args.output, lines)
    return EXIT_OK


verify_command = Command("verify", "check a profile pair against the equilibrium conditions",
                         add_verify_arguments, cmd_verify)
simulate_command = Command("simulate", "estimate payoffs of a profile pair by Monte Carlo",
                           add_simulate_arguments, cmd_simulate)
