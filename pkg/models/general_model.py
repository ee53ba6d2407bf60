# Equilibrium verification and search for general two-player games
#
# verify_equilibrium is the single gate every solver path goes through: it
# evaluates the payoffs of a candidate pair exactly and checks the value and
# stop/continue conditions of both players state by state.

import enum
import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import nashpy as nash
import numpy as np
from joblib import Parallel, delayed

from models.errors import NonConvergence
from models.game_model import DynkinGame, StoppingProfile, ValueFunction
from models.settings import resolve
from models.stopping_model import (
    best_response_constraints,
    best_response_selection,
    deviation_values,
    evaluate_payoffs,
)

logger = logging.getLogger(__name__)

P_TOL = 1e-9
CONDITIONS = ("value1", "value2", "stop1", "continue1", "stop2", "continue2")


class Verdict(str, enum.Enum):
    VERIFIED = "Verified"
    FAILED = "Failed"


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    p1: StoppingProfile
    p2: StoppingProfile
    v1: ValueFunction
    v2: ValueFunction
    residuals: np.ndarray
    verdict: Verdict
    tol: float
    states: Tuple[str, ...] = ()
    worst_state: Optional[str] = None
    worst_condition: Optional[str] = None
    iterations: int = 0
    method: str = "verify"

    @property
    def verified(self) -> bool:
        return self.verdict is Verdict.VERIFIED

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals, initial=0.0))

    def with_run_info(self, iterations: int, method: str) -> "EquilibriumReport":
        return EquilibriumReport(self.p1, self.p2, self.v1, self.v2, self.residuals, self.verdict,
                                 self.tol, self.states, self.worst_state, self.worst_condition,
                                 iterations, method)

    def summary(self) -> str:
        if self.verified:
            return f"Verified (max residual {self.max_residual:.3e})"
        return (f"Failed at state {self.worst_state!r}, condition {self.worst_condition} "
                f"(residual {self.max_residual:.3e})")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "worst_state": self.worst_state,
            "worst_condition": self.worst_condition,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "iterations": self.iterations,
            "method": self.method,
            "states": list(self.states),
            "p1": self.p1.p,
            "p2": self.p2.p,
            "v1": self.v1.v,
            "v2": self.v2.v,
            "residuals": {name: self.residuals[:, j] for j, name in enumerate(CONDITIONS)},
        }


def _as_profile(p) -> StoppingProfile:
    return p if isinstance(p, StoppingProfile) else StoppingProfile(p)


# ---------- VERIFICATION ----------

def verify_equilibrium(game: DynkinGame, p1, p2, tol: float = None,
                       p_tol: float = P_TOL) -> EquilibriumReport:
    """
    Check a profile pair against the full equilibrium system.

    For each player: its value equals the better of continuing and stopping,
    positive stopping probability requires stopping to be weakly best, and
    stopping probability below one requires continuing to be weakly best.
    Residuals are absolute; the verdict compares them with tol * payoff scale.
    """
    tol = resolve(tol, "verify_tol")
    p1, p2 = _as_profile(p1), _as_profile(p2)
    v1, v2 = evaluate_payoffs(game, p1, p2)
    cont1, stop1 = deviation_values(game, 1, p2.p, v1.v)
    cont2, stop2 = deviation_values(game, 2, p1.p, v2.v)

    residuals = np.column_stack([
        np.abs(v1.v - np.maximum(cont1, stop1)),
        np.abs(v2.v - np.maximum(cont2, stop2)),
        np.where(p1.p > p_tol, np.maximum(cont1 - stop1, 0.0), 0.0),
        np.where(p1.p < 1.0 - p_tol, np.maximum(stop1 - cont1, 0.0), 0.0),
        np.where(p2.p > p_tol, np.maximum(cont2 - stop2, 0.0), 0.0),
        np.where(p2.p < 1.0 - p_tol, np.maximum(stop2 - cont2, 0.0), 0.0),
    ])
    limit = tol * game.payoff_scale
    worst = np.unravel_index(int(np.argmax(residuals)), residuals.shape)
    ok = bool(residuals[worst] < limit)
    return EquilibriumReport(
        p1=p1, p2=p2, v1=v1, v2=v2,
        residuals=residuals,
        verdict=Verdict.VERIFIED if ok else Verdict.FAILED,
        tol=tol,
        states=game.states,
        worst_state=None if ok else game.states[worst[0]],
        worst_condition=None if ok else CONDITIONS[worst[1]],
    )


# ---------- LOCAL BIMATRIX GAMES ----------

def local_bimatrix(game: DynkinGame, v1: np.ndarray, v2: np.ndarray, x: int):
    """Payoff matrices at state x; rows are player 1 (continue, stop), columns player 2."""
    a = game.player1
    b = game.player2
    cc1 = game.alpha * float(game.kernel[x] @ v1)
    cc2 = game.alpha * float(game.kernel[x] @ v2)
    A = np.array([[cc1, a.g[x]], [a.f[x], a.h[x]]])
    B = np.array([[cc2, b.f[x]], [b.g[x], b.h[x]]])
    return A, B


def bimatrix_equilibria(A: np.ndarray, B: np.ndarray, eps: float = 0.0) -> List[Tuple[float, float]]:
    """
    All equilibria of a 2x2 bimatrix game as (player 1 stop prob, player 2 stop prob).

    Pure equilibria come from enumerating the four cells (ties within ``eps``
    count as best responses); fully mixed ones from nashpy's support enumeration.
    """
    found = []
    for r in (0, 1):
        for c in (0, 1):
            if A[r, c] >= A[1 - r, c] - eps and B[r, c] >= B[r, 1 - c] - eps:
                found.append((float(r), float(c)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for sigma_r, sigma_c in nash.Game(A, B).support_enumeration():
            if min(sigma_r.min(), sigma_c.min()) > 1e-12:
                found.append((float(sigma_r[1]), float(sigma_c[1])))
    return found


def _expected(M: np.ndarray, s1: float, s2: float) -> float:
    return float(np.array([1.0 - s1, s1]) @ M @ np.array([1.0 - s2, s2]))


def _select(A, B, candidates, scale: float) -> Tuple[float, float]:
    # maximize player 1's local payoff, then player 2's, then prefer stopping
    def key(pair):
        s1, s2 = pair
        return (round(_expected(A, s1, s2) / scale, 10), round(_expected(B, s1, s2) / scale, 10), s1, s2)
    return max(candidates, key=key)


def local_bimatrix_refine(game: DynkinGame, v1, v2) -> Tuple[StoppingProfile, StoppingProfile]:
    """Per-state equilibrium of the local 2x2 game built from the current values."""
    v1 = np.asarray(getattr(v1, "v", v1), dtype=float)
    v2 = np.asarray(getattr(v2, "v", v2), dtype=float)
    scale = game.payoff_scale
    eps = resolve(None, "indifference_tol") * scale
    p1 = np.zeros(game.n_states)
    p2 = np.zeros(game.n_states)
    for x in range(game.n_states):
        A, B = local_bimatrix(game, v1, v2, x)
        candidates = bimatrix_equilibria(A, B, eps)
        if not candidates:
            # every 2x2 game has an equilibrium; only reachable through round-off
            logger.warning("No local equilibrium found at state %r; using least-regret cell",
                           game.states[x])
            regrets = {(float(r), float(c)): max(A[1 - r, c] - A[r, c], B[r, 1 - c] - B[r, c])
                       for r in (0, 1) for c in (0, 1)}
            candidates = [min(regrets, key=regrets.get)]
        p1[x], p2[x] = _select(A, B, candidates, scale)
    return StoppingProfile(p1), StoppingProfile(p2)


# ---------- BEST RESPONSE SEARCH ----------

def better_report(a: Optional[EquilibriumReport], b: EquilibriumReport) -> EquilibriumReport:
    return b if a is None or b.max_residual < a.max_residual else a


def _search_once(game, p1, p2, tol, max_iter, damping, refine_every, refine_steps):
    best = None
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    for it in range(1, max_iter + 1):
        # tags against the opponent's current profile; ties keep the own probability
        c1, _ = best_response_constraints(game, 1, StoppingProfile(p2))
        c2, _ = best_response_constraints(game, 2, StoppingProfile(p1))
        s1 = best_response_selection(c1, p1)
        s2 = best_response_selection(c2, p2)

        # the undamped selection first
        raw = verify_equilibrium(game, s1, s2, tol)
        if raw.verified:
            return raw.with_run_info(it, "best-response")
        best = better_report(best, raw)

        p1 = (1.0 - damping) * p1 + damping * s1
        p2 = (1.0 - damping) * p2 + damping * s2
        current = verify_equilibrium(game, p1, p2, tol)
        if current.verified:
            return current.with_run_info(it, "best-response")
        best = better_report(best, current)

        if it % refine_every == 0:
            for _ in range(refine_steps):
                r1, r2 = local_bimatrix_refine(game, current.v1, current.v2)
                refined = verify_equilibrium(game, r1, r2, tol)
                if refined.verified:
                    return refined.with_run_info(it, "best-response+refine")
                if refined.max_residual >= current.max_residual:
                    break
                current = refined
                p1, p2 = r1.p.copy(), r2.p.copy()
            best = better_report(best, current)
        if it % 100 == 0:
            logger.debug("best-response round %d, best residual %.3e", it, best.max_residual)
    return best.with_run_info(max_iter, "best-response")


def _initial_profiles(game: DynkinGame, seed: int, restart: int):
    rng = np.random.default_rng([seed, restart])
    # odd restarts start pure, even ones fully mixed
    n = game.n_states
    if restart % 2 == 1:
        return rng.integers(0, 2, n).astype(float), rng.integers(0, 2, n).astype(float)
    return rng.random(n), rng.random(n)


def best_response_search(game: DynkinGame, init=None, tol: float = None, max_iter: int = None,
                         damping: float = None, restarts: int = None, seed: int = None,
                         refine_every: int = 10, refine_steps: int = 50,
                         n_jobs: int = None) -> EquilibriumReport:
    """
    Damped simultaneous best-response iteration with periodic local refinement.

    Starts from ``init`` (default: nobody ever stops), then from up to ``restarts``
    seeded random profiles. Restarts may run in parallel; the verified result
    with the lowest restart index wins.

    Raises:
        NonConvergence: no verified pair found; ``best`` holds the lowest-residual candidate.
    """
    tol = resolve(tol, "verify_tol")
    max_iter = resolve(max_iter, "max_iter")
    damping = resolve(damping, "damping")
    restarts = resolve(restarts, "restarts")
    seed = resolve(seed, "seed")
    n_jobs = resolve(n_jobs, "n_jobs")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")

    n = game.n_states
    if init is None:
        init = (np.zeros(n), np.zeros(n))
    starts = [tuple(np.asarray(getattr(p, "p", p), dtype=float) for p in init)]
    starts += [_initial_profiles(game, seed, r) for r in range(1, restarts + 1)]

    def run(start):
        return _search_once(game, start[0], start[1], tol, max_iter, damping, refine_every, refine_steps)

    best = None
    if n_jobs == 1:
        for index, start in enumerate(starts):
            report = run(start)
            if report.verified:
                logger.info("Best-response search verified on start %d after %d rounds",
                            index, report.iterations)
                return report
            best = better_report(best, report)
    else:
        reports = Parallel(n_jobs=n_jobs)(delayed(run)(start) for start in starts)
        for index, report in enumerate(reports):
            if report.verified:
                logger.info("Best-response search verified on start %d", index)
                return report
            best = better_report(best, report)

    logger.warning("Best-response search did not converge (best residual %.3e)", best.max_residual)
    raise NonConvergence(
        f"no verified equilibrium after {len(starts)} start(s); best: {best.summary()}",
        best=best, iterations=max_iter * len(starts))
