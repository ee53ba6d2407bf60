"""
Solve command - routes/routes_solve.py

load game -> classify -> pick a solver path -> verify -> report

Paths (--mode auto):
- zero-sum with the med condition: MedIteration
- other zero-sum games: Shapley
- symmetric with f = h: ClosedForm
- other symmetric games: FixedPoint
- everything else: BestResponse
--mode diagnose-pure runs the pure-equilibrium diagnostics of a zero-sum game instead.
"""

# ---------- IMPORTS ----------
# Standard library imports
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

# Game files, error types and the solver paths
from models.errors import DynkinError, NonConvergence, PreconditionViolated
from models.game_model import GameClass, classify_game, load_game, save_profiles, save_report
from models.general_model import EquilibriumReport, best_response_search, verify_equilibrium
from models.simulate_model import EmpiricalEstimate, SimulationConfig, estimate_payoffs
from models.symmetric_model import solve_closed_form, symmetric_fixed_point
from models.zero_sum_model import (
    PureDiagnosticsReport,
    PureExistenceResult,
    pure_existence_check,
    pure_nonexistence_diagnostic,
    shapley_solve,
    solve_med,
    solve_zero_sum,
)
# Shared command helpers
from routes.routes_common import (
    EXIT_OK,
    EXIT_SOLVER,
    Command,
    add_game_argument,
    add_numeric_arguments,
    add_output_argument,
    emit,
    fmt_values,
    report_error,
)

logger = logging.getLogger(__name__)

MODES = ("auto", "zero-sum", "symmetric", "general", "diagnose-pure")


@dataclass
class RunReport:
    game: dict
    classification: GameClass
    path: str
    report: Optional[EquilibriumReport] = None
    diagnostics: Optional[PureDiagnosticsReport] = None
    pure_existence: Optional[PureExistenceResult] = None
    estimate: Optional[EmpiricalEstimate] = None
    timings: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "classification": self.classification,
            "path": self.path,
            "report": self.report,
            "diagnostics": self.diagnostics,
            "pure_existence": self.pure_existence,
            "estimate": self.estimate,
            "timings": self.timings,
            "error": self.error,
        }


# ---------- DISPATCH ----------

def choose_path(kind: GameClass, mode: str = "auto") -> str:
    """Solver path for a classified game; explicit modes check their precondition."""
    if mode == "diagnose-pure":
        if not kind.is_zero_sum:
            raise PreconditionViolated("pure diagnostics need a zero-sum game")
        return "DiagnosePure"
    if mode == "zero-sum" or (mode == "auto" and kind.is_zero_sum):
        if not kind.is_zero_sum:
            raise PreconditionViolated("game is not zero-sum")
        return "MedIteration" if kind.med_condition else "Shapley"
    if mode == "symmetric" or (mode == "auto" and kind.is_symmetric):
        if not kind.is_symmetric:
            raise PreconditionViolated("game is not symmetric")
        return "ClosedForm" if kind.f_equals_h else "FixedPoint"
    if mode in ("general", "auto"):
        return "BestResponse"
    raise ValueError(f"unknown mode {mode!r}")


def run_path(game, path: str, args):
    """Run one solver path and return (p1, p2, iterations)."""
    # cmd_solve verifies whatever comes back against --tol
    if path == "MedIteration":
        solution = solve_med(game, max_iter=args.max_iter)
        return solution.p1, solution.p2, solution.iterations
    if path == "Shapley":
        solution = shapley_solve(game, max_iter=args.max_iter)
        return solution.p1, solution.p2, solution.iterations
    if path == "ClosedForm":
        solution = solve_closed_form(game, max_iter=args.max_iter)
        return solution.p, solution.p, 0
    if path == "FixedPoint":
        solution = symmetric_fixed_point(game, tol=args.tol, max_iter=args.max_iter, damping=args.damping)
        return solution.p, solution.p, solution.report.iterations
    report = best_response_search(game, tol=args.tol, max_iter=args.max_iter, damping=args.damping,
                                  restarts=args.restarts, seed=args.seed, n_jobs=args.n_jobs)
    return report.p1, report.p2, report.iterations


def _diagnose(game, run: RunReport):
    run.diagnostics = pure_nonexistence_diagnostic(game)
    try:
        solution = solve_zero_sum(game)
    except DynkinError as e:
        logger.warning("Could not compute the game value for the existence test: %s", e)
        return
    run.report = solution.report
    run.pure_existence = pure_existence_check(game, solution.value)


def _game_summary(game) -> dict:
    return {"states": list(game.states), "n_states": game.n_states, "alpha": game.alpha}


def _text(run: RunReport):
    kind = run.classification
    flags = [name for name, on in (("zero-sum", kind.is_zero_sum), ("symmetric", kind.is_symmetric),
                                   ("med condition", kind.med_condition), ("f = h", kind.f_equals_h)) if on]
    lines = [f"game: {run.game['n_states']} states, alpha={run.game['alpha']:g}"
             + (f" ({', '.join(flags)})" if flags else ""),
             f"path: {run.path}"]
    if run.diagnostics is not None:
        d = run.diagnostics
        if d.pure_impossible:
            summary = d.to_dict()
            values = [f"V_M1({s})={v:.12g}" for s, v in summary["v_m1"].items() if s in d.witnesses_m1]
            values += [f"V_M2({s})={v:.12g}" for s, v in summary["v_m2"].items() if s in d.witnesses_m2]
            lines.append(f"pure impossible, witness state {', '.join(d.witnesses)}, {', '.join(values)}")
        else:
            lines.append(f"pure diagnostics inconclusive (M1={list(d.m1)}, M2={list(d.m2)})")
        if run.pure_existence is not None:
            lines.append(f"pure equilibrium exists: {'yes' if run.pure_existence.verdict else 'no'}")
    if run.report is not None:
        r = run.report
        lines += [f"verdict: {r.summary()}",
                  f"p1: {fmt_values(r.p1.p)}",
                  f"p2: {fmt_values(r.p2.p)}",
                  f"v1: {fmt_values(r.v1.v)}",
                  f"v2: {fmt_values(r.v2.v)}"]
    if run.estimate is not None:
        e = run.estimate
        lines += [f"simulated from state {run.game['states'][0]} ({e.samples} episodes):",
                  f"  player 1: {e.mean1:.12g} +/- {e.std_err1:.3g}",
                  f"  player 2: {e.mean2:.12g} +/- {e.std_err2:.3g}"]
    if run.error:
        lines.append(f"error: {run.error}")
    return lines


# ---------- COMMAND ----------

def add_solve_arguments(parser):
    add_game_argument(parser)
    parser.add_argument("--mode", choices=MODES, default="auto")
    add_numeric_arguments(parser)
    parser.add_argument("--damping", type=float, default=None, help="best-response damping in (0, 1]")
    parser.add_argument("--restarts", type=int, default=None, help="random restarts of the general search")
    parser.add_argument("--save-profiles", metavar="PATH", default=None,
                        help="write the verified profiles for a later verify/simulate run")
    parser.add_argument("--samples", type=int, default=None,
                        help="also estimate the verified payoffs with N simulated episodes")
    parser.add_argument("--report", metavar="PATH", default=None, help="also write the JSON run report to PATH")
    add_output_argument(parser)


def cmd_solve(args) -> int:
    """Exit 0 on a verified equilibrium (or finished diagnostics), 1 on bad input, 2 on solver failure."""
    started = time.perf_counter()

    # Step 1: load, classify and choose a path (input errors exit 1 here)
    try:
        game = load_game(args.game)
        kind = classify_game(game)
        path = choose_path(kind, args.mode)
    except Exception as e:
        return report_error(e)
    logger.info("Solving %s with path %s", args.game, path)
    run = RunReport(game=_game_summary(game), classification=kind, path=path)

    # Step 2: run the path and verify what it returns
    code = EXIT_OK
    try:
        if path == "DiagnosePure":
            _diagnose(game, run)
        else:
            p1, p2, iterations = run_path(game, path, args)
            run.report = verify_equilibrium(game, p1, p2, args.tol).with_run_info(iterations, path)
            if not run.report.verified:
                code = EXIT_SOLVER
            else:
                if args.save_profiles:
                    save_profiles(args.save_profiles, run.report.p1, run.report.p2)
                if args.samples:
                    # Monte Carlo cross-check of the verified values from the first state
                    cfg = SimulationConfig(samples=args.samples, seed=args.seed)
                    run.estimate = estimate_payoffs(game, run.report.p1, run.report.p2, cfg, n_jobs=args.n_jobs)
    except NonConvergence as e:
        run.report = e.best
        run.error = str(e)
        code = report_error(e)
    except Exception as e:
        run.error = str(e)
        code = report_error(e)

    # Step 3: report, also when the solver failed
    run.timings["total_seconds"] = time.perf_counter() - started
    emit(run, args.output, _text(run))
    if args.report:
        save_report(args.report, run)
    return code


solve_command = Command("solve", "compute and verify an equilibrium", add_solve_arguments, cmd_solve)
