# Symmetric games: both players share one payoff triple and we look for p1 = p2
#
# f = h admits a closed-form construction from the one-player stopping value;
# the war of attrition is the special case with an explicit formula; anything
# else goes through a damped symmetric best-response iteration.

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from models.errors import CaseGuardFailure, NonConvergence, PreconditionViolated, VerificationFailed
from models.game_model import DynkinGame, StoppingProfile, ValueFunction, classify_game
from models.general_model import EquilibriumReport, better_report, verify_equilibrium
from models.settings import resolve
from models.stopping_model import (
    best_response_constraints,
    best_response_selection,
    build_auxiliary,
    solve_wald_bellman,
)

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    WAR_OF_ATTRITION = "WarOfAttrition"
    FIXED_POINT = "FixedPoint"


@dataclass(frozen=True, eq=False)
class SymmetricSolution:
    p: StoppingProfile
    value: ValueFunction
    method: Method
    report: Optional[EquilibriumReport] = None


def require_symmetric(game: DynkinGame, f_equals_h: bool = False):
    kind = classify_game(game)
    if not kind.is_symmetric:
        raise PreconditionViolated("game is not symmetric")
    if f_equals_h and not kind.f_equals_h:
        t = game.player1
        raise PreconditionViolated("f differs from h", [game.states[x] for x in np.flatnonzero(t.f != t.h)])


def optimal_stopping_value(game: DynkinGame, tol: float = None, max_iter: int = None) -> ValueFunction:
    """sup over stopping times of E[α^τ f(X_τ)]: the fixed point of V = max(f, αΠV) from V⁰ = f."""
    require_symmetric(game)
    # against an opponent who never stops the auxiliary problem is exactly this one
    aux = build_auxiliary(game, 1, StoppingProfile.constant(game.n_states, 0.0))
    return ValueFunction(solve_wald_bellman(aux, tol, max_iter).v_c)


def symmetric_profile(game: DynkinGame, value, tol: float = None) -> StoppingProfile:
    """
    Shared stopping probabilities for a symmetric game with f = h.

    Per state, comparing αΠV with f and g with f:
      αΠV = f:          0 (continuing is weakly optimal)
      αΠV < f, g > f:   (f - αΠV) / (g - αΠV), which makes the opponent indifferent
      αΠV < f, g <= f:  1
      αΠV > f:          0

    Raises:
        CaseGuardFailure: V does not satisfy V = max(f, αΠV) at some state.
    """
    require_symmetric(game, f_equals_h=True)
    eps = resolve(tol, "indifference_tol") * game.payoff_scale
    v = np.asarray(getattr(value, "v", value), dtype=float)
    t = game.player1
    apiv = game.alpha * game.expectation(v)

    p = np.zeros(game.n_states)
    for x in range(game.n_states):
        f, g = t.f[x], t.g[x]
        if not abs(v[x] - max(f, apiv[x])) <= eps:
            raise CaseGuardFailure(game.states[x], f"(V={v[x]!r}, f={f!r}, αΠV={apiv[x]!r})")
        if apiv[x] > f + eps or abs(apiv[x] - f) <= eps:
            p[x] = 0.0
        elif g > f + eps:
            ratio = (f - apiv[x]) / (g - apiv[x])
            if not 0.0 < ratio <= 1.0:
                raise CaseGuardFailure(game.states[x], f"(mixing probability {ratio!r})")
            p[x] = ratio
        else:
            p[x] = 1.0
    return StoppingProfile(p)


def solve_closed_form(game: DynkinGame, tol: float = None, max_iter: int = None) -> SymmetricSolution:
    value = optimal_stopping_value(game, tol, max_iter)
    p = symmetric_profile(game, value)
    report = verify_equilibrium(game, p, p).with_run_info(0, Method.CLOSED_FORM.value)
    if not report.verified:
        raise VerificationFailed(report)
    return SymmetricSolution(p, report.v1, Method.CLOSED_FORM, report)


def war_of_attrition_profile(game: DynkinGame) -> SymmetricSolution:
    """
    Fully mixed equilibrium of a war of attrition: αΠf < f and g > f = h everywhere.

    p = (f - αΠf) / (g - αΠf) and both players get f.

    Raises:
        PreconditionViolated: with the states where f is not strictly excessive or g <= f.
        VerificationFailed: the formula profile does not pass verification.
    """
    require_symmetric(game, f_equals_h=True)
    t = game.player1
    apif = game.alpha * game.expectation(t.f)
    bad = ~((apif < t.f) & (t.g > t.f))
    if bad.any():
        raise PreconditionViolated("not a war of attrition (needs αΠf < f and g > f)",
                                   [game.states[x] for x in np.flatnonzero(bad)])
    p = StoppingProfile((t.f - apif) / (t.g - apif))
    report = verify_equilibrium(game, p, p).with_run_info(0, Method.WAR_OF_ATTRITION.value)
    if not report.verified:
        raise VerificationFailed(report)
    return SymmetricSolution(p, ValueFunction(t.f), Method.WAR_OF_ATTRITION, report)


# ---------- FIXED POINT ----------

def local_symmetric_equilibrium(cc, f, g, h) -> np.ndarray:
    """
    Smallest symmetric equilibrium stop probability of the 2x2 symmetric game per state.

    Own payoff is cc if both continue, g if only the opponent stops, f if only
    oneself stops and h if both stop.
    """
    cc, f, g, h = (np.asarray(a, dtype=float) for a in (cc, f, g, h))
    out = np.ones(cc.shape)
    # s = 1 is an equilibrium iff h >= g; interior or s = 0 otherwise
    denom = f - cc - h + g
    with np.errstate(divide="ignore", invalid="ignore"):
        mixed = np.where(denom != 0.0, (f - cc) / np.where(denom != 0.0, denom, 1.0), np.nan)
    interior = (mixed > 0.0) & (mixed < 1.0)
    out = np.where(interior, mixed, out)
    out = np.where(cc >= f, 0.0, out)
    return out


def symmetric_best_response(game: DynkinGame, p) -> Tuple[np.ndarray, np.ndarray]:
    """
    Best-response selection against the shared profile ``p`` and the local refinement.

    Returns (selection, local): selection is 1 on MustStop states, 0 on
    MustContinue states and the smallest local symmetric equilibrium on
    Indifferent states; local is that equilibrium at every state, with the
    continuation entry αΠV̂ taken from the best-response value V̂ against p.
    """
    t = game.player1
    constraints, val = best_response_constraints(game, 1, StoppingProfile(p))
    cc = game.alpha * game.expectation(val.v_c)
    local = local_symmetric_equilibrium(cc, t.f, t.g, t.h)
    return best_response_selection(constraints, local), local


def symmetric_fixed_point(game: DynkinGame, init=None, tol: float = None, max_iter: int = None,
                          damping: float = None, refine_steps: int = 50) -> SymmetricSolution:
    """
    Damped iteration p <- (1-λ)p + λp' towards a symmetric equilibrium.

    p' is the best-response selection against the current p (see
    ``symmetric_best_response``). Each round the raw selection and the damped
    iterate are verified, then a refinement chain re-solves the local
    symmetric games from the current p for as long as the residual shrinks.

    Raises:
        NonConvergence: ``best`` holds the lowest-residual report.
    """
    require_symmetric(game)
    tol = resolve(tol, "verify_tol")
    max_iter = resolve(max_iter, "max_iter")
    damping = resolve(damping, "damping")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")

    p = np.zeros(game.n_states) if init is None else np.asarray(getattr(init, "p", init), dtype=float)
    best = None

    def accept(report, it):
        logger.info("Symmetric fixed point verified after %d rounds", it)
        report = report.with_run_info(it, Method.FIXED_POINT.value)
        return SymmetricSolution(report.p1, report.v1, Method.FIXED_POINT, report)

    for it in range(1, max_iter + 1):
        selection, local = symmetric_best_response(game, p)
        damped = (1.0 - damping) * p + damping * selection

        for candidate in (selection, damped):
            report = verify_equilibrium(game, candidate, candidate, tol)
            if report.verified:
                return accept(report, it)
            best = better_report(best, report)

        # refinement: follow the local games without damping while it helps
        previous = None
        for _ in range(refine_steps):
            report = verify_equilibrium(game, local, local, tol)
            if report.verified:
                return accept(report, it)
            best = better_report(best, report)
            if previous is not None and report.max_residual >= previous:
                break
            previous = report.max_residual
            _, local = symmetric_best_response(game, local)

        p = damped
        if it % 100 == 0:
            logger.debug("symmetric round %d, best residual %.3e", it, best.max_residual)

    logger.warning("Symmetric fixed point did not converge (best residual %.3e)", best.max_residual)
    raise NonConvergence(f"no verified symmetric equilibrium after {max_iter} rounds; best: {best.summary()}",
                         best=best.with_run_info(max_iter, Method.FIXED_POINT.value), iterations=max_iter)


def solve_symmetric(game: DynkinGame, tol: float = None, max_iter: int = None,
                    damping: float = None) -> SymmetricSolution:
    """Closed form when f = h, symmetric fixed point otherwise."""
    if classify_game(game).f_equals_h:
        return solve_closed_form(game, max_iter=max_iter)
    return symmetric_fixed_point(game, tol=tol, max_iter=max_iter, damping=damping)
