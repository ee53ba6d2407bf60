# Zero-sum games: player 1 maximizes V, player 2 gets -V
#
# Two solution paths:
#   - med condition (h between f and g everywhere): monotone value iteration and
#     a pure equilibrium read off case by case
#   - anything else: value iteration over the per-state 2x2 matrix games
# plus the pure-existence test that needs the value, and the sufficient
# non-existence test that only needs the payoffs.

import enum
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from models.catalog_model import drift_game
from models.errors import (
    DegenerateGame,
    MaxIterExceeded,
    MedConditionViolated,
    NoCaseMatched,
    PreconditionViolated,
    VerificationFailed,
)
from models.game_model import (
    DynkinGame,
    StoppingProfile,
    ValueFunction,
    classify_game,
    med_array,
    med_condition_witnesses,
)
from models.general_model import EquilibriumReport, verify_equilibrium
from models.settings import resolve
from models.stopping_model import StoppingMode, constrained_stopping_value

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    MED_ITERATION = "MedIteration"
    SHAPLEY = "Shapley"


@dataclass(frozen=True, eq=False)
class ZeroSumSolution:
    value: ValueFunction
    p1: StoppingProfile
    p2: StoppingProfile
    method: Method
    pure: bool
    report: Optional[EquilibriumReport] = None
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class LocalSolution:
    """Solution of one 2x2 zero-sum game; probabilities are of the continue action."""
    value: float
    row_continue: float
    col_continue: float

    @property
    def row_stop(self) -> float:
        return 1.0 - self.row_continue

    @property
    def col_stop(self) -> float:
        return 1.0 - self.col_continue


@dataclass(frozen=True, eq=False)
class PureDiagnosticsReport:
    m1: Tuple[str, ...]
    m2: Tuple[str, ...]
    v_m1: Optional[np.ndarray]
    v_m2: Optional[np.ndarray]
    witnesses_m1: Tuple[str, ...]
    witnesses_m2: Tuple[str, ...]
    states: Tuple[str, ...]

    @property
    def witnesses(self) -> Tuple[str, ...]:
        return self.witnesses_m1 + self.witnesses_m2

    @property
    def pure_impossible(self) -> bool:
        return bool(self.witnesses)

    def to_dict(self) -> dict:
        def on_region(values, region):
            if values is None:
                return {}
            return {s: float(values[self.states.index(s)]) for s in region}
        return {
            "verdict": "pure impossible" if self.pure_impossible else "inconclusive",
            "m1": list(self.m1),
            "m2": list(self.m2),
            "v_m1": on_region(self.v_m1, self.m1),
            "v_m2": on_region(self.v_m2, self.m2),
            "witnesses": list(self.witnesses),
        }


@dataclass(frozen=True, eq=False)
class PureExistenceResult:
    holds: np.ndarray
    verdict: bool
    cases: Tuple[Optional[int], ...]
    p1: Optional[StoppingProfile] = None
    p2: Optional[StoppingProfile] = None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "per_state": self.holds, "cases": list(self.cases),
                "p1": None if self.p1 is None else self.p1.p,
                "p2": None if self.p2 is None else self.p2.p}


def require_zero_sum(game: DynkinGame):
    if not classify_game(game).is_zero_sum:
        raise PreconditionViolated("game is not zero-sum")


def _threshold(tol, game):
    return tol * game.payoff_scale * (1.0 - game.alpha)


# ---------- MED CONDITION PATH ----------

def med_value_iteration(game: DynkinGame, tol: float = None, max_iter: int = None) -> ValueFunction:
    """
    Value for zero-sum games whose h is always the middle payoff.

    V = med(f, αΠV, g) where f < g and V = h where f >= g, iterated from f ∧ h.
    The iterates increase monotonically.

    Raises:
        MedConditionViolated: with the states where h is not the middle value.
    """
    require_zero_sum(game)
    witnesses = med_condition_witnesses(game)
    if witnesses:
        raise MedConditionViolated("h is not the middle payoff", witnesses)
    tol = resolve(tol, "solve_tol")
    max_iter = resolve(max_iter, "max_iter")
    t = game.player1
    threshold = _threshold(tol, game)
    play = t.f < t.g

    v = np.minimum(t.f, t.h)
    for it in range(1, max_iter + 1):
        new = np.where(play, med_array(t.f, game.alpha * game.expectation(v), t.g), t.h)
        step = float(np.max(np.abs(new - v)))
        v = new
        if step < threshold:
            logger.debug("med iteration converged in %d iterations", it)
            return ValueFunction(v)
    raise MaxIterExceeded(max_iter, step, best=ValueFunction(v))


# default free choices per case label; None marks a forced entry
_PURE_CASES = {
    "i": (1.0, 1.0),
    "ii": (1.0, 1.0),
    "iii": (0.0, 0.0),
    "iv": (1.0, 1.0),
    "v": (0.0, 1.0),
    "vi": (0.0, 0.0),
    "vii": (0.0, 0.0),
    "viii": (0.0, 0.0),
    "ix": (1.0, 0.0),
}
# which player's entry is free in each case (1, 2, "both" for tied p1 = p2)
_FREE_SLOT = {"ii": 2, "iii": "both", "iv": 1, "vi": 2, "viii": 1}


def pure_case(f: float, g: float, v: float, apiv: float, eps: float) -> Optional[str]:
    """Which of the nine sign patterns of (f-g, αΠV-V, αΠV-g, αΠV-f) applies."""
    if not all(np.isfinite([f, g, v, apiv])):
        return None
    if f - g > eps:
        return "i"
    if abs(f - g) <= eps:
        if apiv < v - eps:
            return "ii"
        if apiv <= v + eps:
            return "iii"
        return "iv"
    if apiv > g + eps:
        return "v"
    if apiv >= g - eps:
        return "vi"
    if apiv > f + eps:
        return "vii"
    if apiv >= f - eps:
        return "viii"
    return "ix"


def assemble_pure_profiles(game: DynkinGame, value, tol: float = None,
                           verify_tol: float = None) -> Tuple[StoppingProfile, StoppingProfile]:
    """
    Pure equilibrium pair from the med-condition value, one case per state.

    Free entries take the default endpoint; if the pair does not verify the free
    entries are flipped to the opposite endpoint and the better pair is kept.

    Raises:
        NoCaseMatched: the value contains non-finite entries.
    """
    require_zero_sum(game)
    eps = resolve(tol, "indifference_tol") * game.payoff_scale
    v = np.asarray(getattr(value, "v", value), dtype=float)
    t = game.player1
    apiv = game.alpha * game.expectation(v)

    p1 = np.zeros(game.n_states)
    p2 = np.zeros(game.n_states)
    free1 = np.zeros(game.n_states, dtype=bool)
    free2 = np.zeros(game.n_states, dtype=bool)
    for x in range(game.n_states):
        case = pure_case(t.f[x], t.g[x], v[x], apiv[x], eps)
        if case is None:
            raise NoCaseMatched(game.states[x], f"(V={v[x]!r}, αΠV={apiv[x]!r})")
        p1[x], p2[x] = _PURE_CASES[case]
        slot = _FREE_SLOT.get(case)
        free1[x] = slot in (1, "both")
        free2[x] = slot in (2, "both")

    report = verify_equilibrium(game, p1, p2, verify_tol)
    if report.verified or not (free1.any() or free2.any()):
        return report.p1, report.p2
    flipped = verify_equilibrium(game, np.where(free1, 1.0 - p1, p1), np.where(free2, 1.0 - p2, p2),
                                 verify_tol)
    logger.info("Default endpoints failed verification; opposite endpoints %s",
                "verified" if flipped.verified else "failed too")
    chosen = flipped if flipped.max_residual < report.max_residual else report
    return chosen.p1, chosen.p2


def solve_med(game: DynkinGame, tol: float = None, max_iter: int = None) -> ZeroSumSolution:
    """Med-condition path end to end: value, pure profiles, verification."""
    value = med_value_iteration(game, tol, max_iter)
    p1, p2 = assemble_pure_profiles(game, value)
    report = verify_equilibrium(game, p1, p2).with_run_info(0, Method.MED_ITERATION.value)
    if not report.verified:
        raise VerificationFailed(report)
    return ZeroSumSolution(value, p1, p2, Method.MED_ITERATION, True, report)


# ---------- LOCAL MATRIX GAMES ----------

# pure cells in tie-break order: (row, col) with 1 = stop
_SADDLE_ORDER = ((1, 1), (1, 0), (0, 1), (0, 0))


def solve_local_matrix_games(cc, cs, sc, ss):
    """
    Vectorized closed-form solution of 2x2 zero-sum games (row player maximizes).

    Rows and columns are (continue, stop). Returns (value, row_continue,
    col_continue) arrays. A pure saddle point is preferred when one exists,
    taking the first of (stop,stop), (stop,continue), (continue,stop),
    (continue,continue); otherwise the unique fully mixed solution.
    """
    cc, cs, sc, ss = (np.asarray(a, dtype=float) for a in (cc, cs, sc, ss))
    cells = {(0, 0): cc, (0, 1): cs, (1, 0): sc, (1, 1): ss}
    value = np.full(cc.shape, np.nan)
    row_c = np.full(cc.shape, np.nan)
    col_c = np.full(cc.shape, np.nan)
    open_ = np.ones(cc.shape, dtype=bool)
    for r, c in _SADDLE_ORDER:
        a = cells[(r, c)]
        saddle = open_ & (a <= cells[(r, 1 - c)]) & (a >= cells[(1 - r, c)])
        value[saddle] = a[saddle]
        row_c[saddle] = 1.0 - r
        col_c[saddle] = 1.0 - c
        open_ &= ~saddle

    if open_.any():
        denom = cc - cs - sc + ss
        if np.any(denom[open_] == 0.0):
            raise DegenerateGame("mixed denominator vanished without a pure saddle point")
        d = np.where(open_, denom, 1.0)
        mixed_row = (ss - sc) / d
        mixed_col = (ss - cs) / d
        inside = (mixed_row[open_] >= -1e-12).all() and (mixed_row[open_] <= 1 + 1e-12).all() \
            and (mixed_col[open_] >= -1e-12).all() and (mixed_col[open_] <= 1 + 1e-12).all()
        assert inside, "mixed 2x2 solution outside [0, 1]"
        value[open_] = ((cc * ss - cs * sc) / d)[open_]
        row_c[open_] = np.clip(mixed_row, 0.0, 1.0)[open_]
        col_c[open_] = np.clip(mixed_col, 0.0, 1.0)[open_]
    return value, row_c, col_c


def solve_local_matrix_game(cc: float, cs: float, sc: float, ss: float) -> LocalSolution:
    """Single 2x2 zero-sum game; see solve_local_matrix_games."""
    value, row_c, col_c = solve_local_matrix_games([cc], [cs], [sc], [ss])
    return LocalSolution(float(value[0]), float(row_c[0]), float(col_c[0]))


def _local_games(game: DynkinGame, v: np.ndarray):
    t = game.player1
    return game.alpha * game.expectation(v), t.g, t.f, t.h


def shapley_solve(game: DynkinGame, tol: float = None, max_iter: int = None,
                  verify: bool = True) -> ZeroSumSolution:
    """
    Value iteration over the local matrix games, V_{n+1}(x) = val(game at x built from V_n).

    Only the continue/continue entry depends on V and it carries the factor alpha,
    so the iteration contracts. Optimal local mixes at the fixed point give the
    profiles, which are checked against the full equilibrium system.

    Raises:
        MaxIterExceeded: best value in ``best``.
        VerificationFailed: extracted profiles do not verify (report attached).
    """
    require_zero_sum(game)
    tol = resolve(tol, "solve_tol")
    max_iter = resolve(max_iter, "max_iter")
    threshold = tol * game.payoff_scale * (1.0 - game.alpha) / (2.0 * game.alpha)

    t = game.player1
    v = np.minimum(t.f, t.h)
    for it in range(1, max_iter + 1):
        new, _, _ = solve_local_matrix_games(*_local_games(game, v))
        step = float(np.max(np.abs(new - v)))
        v = new
        if step < threshold:
            break
    else:
        logger.warning("Shapley iteration hit max_iter=%d (step %.3e)", max_iter, step)
        raise MaxIterExceeded(max_iter, step, best=ValueFunction(v))

    _, row_c, col_c = solve_local_matrix_games(*_local_games(game, v))
    p1 = StoppingProfile(1.0 - row_c)
    p2 = StoppingProfile(1.0 - col_c)
    solution_pure = p1.is_pure and p2.is_pure
    report = None
    if verify:
        report = verify_equilibrium(game, p1, p2).with_run_info(it, Method.SHAPLEY.value)
        if not report.verified:
            logger.warning("Shapley profiles failed verification: %s", report.summary())
            raise VerificationFailed(report)
        logger.info("Shapley iteration converged in %d iterations; %s", it, report.summary())
    return ZeroSumSolution(ValueFunction(v), p1, p2, Method.SHAPLEY, solution_pure, report, it)


# ---------- PURE EXISTENCE ----------

def existence_case(f: float, g: float, h: float, apiv: float, eps: float = 0.0) -> Optional[int]:
    """
    Lowest-numbered pattern that admits a pure action pair at a state:
    1: g <= h <= f, 2: αΠV <= f <= h, 3: h <= g <= αΠV, 4: f <= αΠV <= g.
    """
    if g <= h + eps and h <= f + eps:
        return 1
    if apiv <= f + eps and f <= h + eps:
        return 2
    if h <= g + eps and g <= apiv + eps:
        return 3
    if f <= apiv + eps and apiv <= g + eps:
        return 4
    return None


# pure action pair (p1, p2) for each pattern
EXISTENCE_CASE_PROFILES = {1: (1.0, 1.0), 2: (1.0, 0.0), 3: (0.0, 1.0), 4: (0.0, 0.0)}


def pure_existence_check(game: DynkinGame, value, tol: float = None) -> PureExistenceResult:
    """
    Per-state test h ∨ αΠV >= f ∧ g and h ∧ αΠV <= f ∨ g for the game value V.

    When every state passes, the pure pair built from the per-state patterns is
    returned with the result.
    """
    require_zero_sum(game)
    eps = resolve(tol, "indifference_tol") * game.payoff_scale
    v = np.asarray(getattr(value, "v", value), dtype=float)
    t = game.player1
    apiv = game.alpha * game.expectation(v)
    holds = ((np.maximum(t.h, apiv) >= np.minimum(t.f, t.g) - eps)
             & (np.minimum(t.h, apiv) <= np.maximum(t.f, t.g) + eps))
    cases = tuple(existence_case(t.f[x], t.g[x], t.h[x], apiv[x], eps) for x in range(game.n_states))
    verdict = bool(holds.all())
    if not verdict:
        return PureExistenceResult(holds, False, cases)
    if any(c is None for c in cases):
        # patterns and the inequality test disagree only within eps
        raise NoCaseMatched(game.states[cases.index(None)], "inequalities hold but no pattern matched")
    pairs = np.array([EXISTENCE_CASE_PROFILES[c] for c in cases])
    return PureExistenceResult(holds, True, cases, StoppingProfile(pairs[:, 0]), StoppingProfile(pairs[:, 1]))


def pure_nonexistence_diagnostic(game: DynkinGame, tol: float = None) -> PureDiagnosticsReport:
    """
    Sufficient test for the absence of pure equilibria from the payoffs alone.

    M1 = {max(f,g) < h}: player 1 stopping problem on M1 with reward f inside and
    f ∧ h on exit; a state of M1 where it beats max(f,g) is a witness.
    M2 = {h < min(f,g)}: the minimizing counterpart with g inside and g ∨ h on exit.
    """
    require_zero_sum(game)
    eps = resolve(tol, "indifference_tol") * game.payoff_scale
    t = game.player1
    hi = np.maximum(t.f, t.g)
    lo = np.minimum(t.f, t.g)
    in_m1 = hi < t.h
    in_m2 = t.h < lo
    labels = game.states

    v_m1 = v_m2 = None
    w1: List[str] = []
    w2: List[str] = []
    if in_m1.any():
        k1 = np.where(in_m1, t.f, np.minimum(t.f, t.h))
        v_m1 = constrained_stopping_value(game, in_m1, k1, StoppingMode.MAX)
        w1 = [labels[x] for x in np.flatnonzero(in_m1 & (v_m1 > hi + eps))]
    if in_m2.any():
        k2 = np.where(in_m2, t.g, np.maximum(t.g, t.h))
        v_m2 = constrained_stopping_value(game, in_m2, k2, StoppingMode.MIN)
        w2 = [labels[x] for x in np.flatnonzero(in_m2 & (v_m2 < lo - eps))]
    report = PureDiagnosticsReport(
        m1=tuple(labels[x] for x in np.flatnonzero(in_m1)),
        m2=tuple(labels[x] for x in np.flatnonzero(in_m2)),
        v_m1=v_m1, v_m2=v_m2,
        witnesses_m1=tuple(w1), witnesses_m2=tuple(w2),
        states=labels,
    )
    logger.info("Pure diagnostics: M1=%s M2=%s witnesses=%s", report.m1, report.m2, report.witnesses)
    return report


def solve_zero_sum(game: DynkinGame, tol: float = None, max_iter: int = None) -> ZeroSumSolution:
    """Med-condition path when it applies, Shapley iteration otherwise."""
    if classify_game(game).med_condition:
        return solve_med(game, tol, max_iter)
    return shapley_solve(game, tol, max_iter)


# ---------- TRUNCATED DRIFT GAMES ----------

@dataclass(frozen=True)
class TruncationRow:
    length: int
    value_first: float
    value_last: float
    max_abs_value: float
    iterations: int
    verdict: str


def drift_truncation_study(lengths=(5, 10, 20, 40, 60), tol: float = None,
                           max_iter: int = None) -> List[TruncationRow]:
    """
    Solve truncated drift games of several lengths and record how big the values get.

    Every truncation is a finite game and has an equilibrium; max |V| grows like
    2^(length-1) so the rows say nothing about a limit as the length grows.
    """
    rows = []
    for length in lengths:
        solution = solve_zero_sum(drift_game(length), tol, max_iter)
        v = solution.value.v
        rows.append(TruncationRow(
            length=length,
            value_first=float(v[0]),
            value_last=float(v[-1]),
            max_abs_value=float(np.max(np.abs(v))),
            iterations=solution.iterations,
            verdict=solution.report.verdict.value,
        ))
        logger.info("drift game of length %d: V(0)=%.6g, max|V|=%.6g", length, v[0], rows[-1].max_abs_value)
    return rows
