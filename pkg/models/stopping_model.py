# One-player optimal stopping against a fixed opponent profile
#
# Player i facing an opponent who stops with probability q(x) solves a standard
# stopping problem on an augmented chain: from (x, C) it either stops and gets
# (1-q)f + q h, or continues, in which case the opponent stops first with
# probability q (absorbing reward g) and otherwise the chain moves on, discounted.
# The absorbing states and the killed state are never built explicitly; they
# show up as the q*g term and the missing mass (1-alpha) in the recursion.

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np
from scipy import linalg

from models.errors import MaxIterExceeded, SingularSystem
from models.game_model import DynkinGame, StoppingProfile, ValueFunction
from models.settings import resolve

logger = logging.getLogger(__name__)


class Tag(str, enum.Enum):
    MUST_STOP = "MustStop"
    INDIFFERENT = "Indifferent"
    MUST_CONTINUE = "MustContinue"


class StoppingMode(str, enum.Enum):
    MAX = "Max"
    MIN = "Min"


def _stop_threshold(tol: float, scale: float, alpha: float) -> float:
    # a sup-norm step below this keeps the fixed-point residual below tol * scale
    return tol * scale * (1.0 - alpha) / (2.0 * alpha)


# ---------- AUXILIARY PROBLEM ----------

@dataclass(frozen=True, eq=False)
class AuxiliaryProblem:
    player: int
    opponent: StoppingProfile
    continue_reward: np.ndarray
    absorbed_reward: np.ndarray
    q: np.ndarray
    alpha: float
    kernel: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.q)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.continue_reward), initial=0.0)),
                   float(np.max(np.abs(self.absorbed_reward), initial=0.0)))

    def continuation(self, v: np.ndarray) -> np.ndarray:
        """Expected value of continuing from (x, C) given V on the (x, C) states."""
        return (1.0 - self.q) * self.alpha * (self.kernel @ v) + self.q * self.absorbed_reward

    def bellman(self, v: np.ndarray) -> np.ndarray:
        return np.maximum(self.continuation(v), self.continue_reward)


@dataclass(frozen=True, eq=False)
class AuxiliaryValue:
    v_c: np.ndarray
    v_s: np.ndarray
    continuation_value: np.ndarray
    iterations: int = 0
    residual: float = 0.0


@dataclass(frozen=True)
class BestResponseConstraint:
    tags: Tuple[Tag, ...]
    states: Tuple[str, ...] = ()

    def mask(self, tag: Tag) -> np.ndarray:
        return np.array([t is tag for t in self.tags], dtype=bool)

    def states_with(self, tag: Tag) -> List[str]:
        labels = self.states or tuple(str(i) for i in range(len(self.tags)))
        return [labels[i] for i, t in enumerate(self.tags) if t is tag]

    def __len__(self):
        return len(self.tags)


def build_auxiliary(game: DynkinGame, player: int, opponent: StoppingProfile) -> AuxiliaryProblem:
    """Rewards and kernel data of player ``player``'s stopping problem against ``opponent``."""
    opponent.check(game.n_states, "opponent")
    me = game.payoffs(player)
    q = np.asarray(opponent.p, dtype=float)
    return AuxiliaryProblem(
        player=player,
        opponent=opponent,
        continue_reward=(1.0 - q) * me.f + q * me.h,
        absorbed_reward=np.array(me.g, dtype=float),
        q=q,
        alpha=game.alpha,
        kernel=game.kernel,
    )


def _aux_value(aux: AuxiliaryProblem, v: np.ndarray, iterations: int) -> AuxiliaryValue:
    continuation = aux.continuation(v)
    residual = float(np.max(np.abs(np.maximum(continuation, aux.continue_reward) - v), initial=0.0))
    return AuxiliaryValue(
        v_c=v,
        v_s=aux.absorbed_reward.copy(),
        continuation_value=continuation,
        iterations=iterations,
        residual=residual,
    )


def solve_wald_bellman(aux: AuxiliaryProblem, tol: float = None, max_iter: int = None) -> AuxiliaryValue:
    """
    Value iteration for V = max{(1-q) alpha ΠV + q g, r̂} starting from V⁰ = r̂.

    The operator is a contraction with modulus (1-q) alpha <= alpha, so the loop
    stops once a step is small enough to bound the residual by ``tol`` (relative
    to the reward scale).

    Raises:
        MaxIterExceeded: carries the last iterate as ``best``.
    """
    tol = resolve(tol, "solve_tol")
    max_iter = resolve(max_iter, "max_iter")
    if tol <= 0:
        raise ValueError("tol must be positive")
    threshold = _stop_threshold(tol, aux.scale, aux.alpha)

    v = aux.continue_reward.copy()
    for it in range(1, max_iter + 1):
        new = aux.bellman(v)
        step = float(np.max(np.abs(new - v), initial=0.0))
        v = new
        if step < threshold:
            result = _aux_value(aux, v, it)
            logger.debug("Wald-Bellman converged for player %d in %d iterations", aux.player, it)
            return result
    best = _aux_value(aux, v, max_iter)
    logger.warning("Wald-Bellman iteration hit max_iter=%d (residual %.3e)", max_iter, best.residual)
    raise MaxIterExceeded(max_iter, best.residual, best=best)


def classify_best_response(aux: AuxiliaryProblem, val: AuxiliaryValue, tol: float = None,
                           states: Iterable[str] = ()) -> BestResponseConstraint:
    """Tag every state MustStop / Indifferent / MustContinue by comparing Π̂V̂ with r̂."""
    tol = resolve(tol, "indifference_tol") * aux.scale
    gap = val.continuation_value - aux.continue_reward
    tags = tuple(
        Tag.MUST_STOP if d < -tol else Tag.INDIFFERENT if d <= tol else Tag.MUST_CONTINUE
        for d in gap
    )
    return BestResponseConstraint(tags=tags, states=tuple(states))


def best_response_constraints(game: DynkinGame, player: int, opponent: StoppingProfile,
                              tol: float = None) -> Tuple[BestResponseConstraint, AuxiliaryValue]:
    """Solve player ``player``'s stopping problem against ``opponent`` and classify it."""
    aux = build_auxiliary(game, player, opponent)
    val = solve_wald_bellman(aux)
    return classify_best_response(aux, val, tol, game.states), val


def is_best_response(profile: StoppingProfile, constraints: BestResponseConstraint,
                     p_tol: float = 1e-9) -> Tuple[bool, List[str]]:
    """True iff p=1 on MustStop and p=0 on MustContinue; also returns the offending states."""
    if len(profile) != len(constraints):
        raise ValueError("profile and constraints have different lengths")
    labels = constraints.states or tuple(str(i) for i in range(len(constraints)))
    bad = []
    for i, (p, tag) in enumerate(zip(profile.p, constraints.tags)):
        if tag is Tag.MUST_STOP and p < 1.0 - p_tol:
            bad.append(labels[i])
        elif tag is Tag.MUST_CONTINUE and p > p_tol:
            bad.append(labels[i])
    return not bad, bad


def best_response_selection(constraints: BestResponseConstraint, indifferent) -> np.ndarray:
    """1 on MustStop, 0 on MustContinue, ``indifferent`` (scalar or per-state) elsewhere."""
    indifferent = np.broadcast_to(np.asarray(indifferent, dtype=float), (len(constraints),))
    out = np.where(constraints.mask(Tag.MUST_STOP), 1.0, 0.0)
    tie = constraints.mask(Tag.INDIFFERENT)
    out[tie] = indifferent[tie]
    return out


# ---------- PAYOFF EVALUATION ----------

def deviation_values(game: DynkinGame, player: int, opponent_p: np.ndarray,
                     v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(continue value, stop value) of ``player`` at each state given its value function ``v``."""
    me = game.payoffs(player)
    q = np.asarray(opponent_p, dtype=float)
    cont = (1.0 - q) * game.alpha * game.expectation(v) + q * me.g
    stop = (1.0 - q) * me.f + q * me.h
    return cont, stop


def evaluate_player(game: DynkinGame, player: int, own: np.ndarray, other: np.ndarray) -> np.ndarray:
    me = game.payoffs(player)
    own = np.asarray(own, dtype=float)
    other = np.asarray(other, dtype=float)
    reward = (own * other * me.h + own * (1.0 - other) * me.f
              + (1.0 - own) * other * me.g)
    carry = (1.0 - own) * (1.0 - other) * game.alpha
    system = np.eye(game.n_states) - carry[:, None] * game.kernel
    try:
        return linalg.solve(system, reward)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f"payoff system for player {player} is singular: {e}") from e


def evaluate_payoffs(game: DynkinGame, p1: StoppingProfile,
                     p2: StoppingProfile) -> Tuple[ValueFunction, ValueFunction]:
    """Exact expected payoffs of both players under the profile pair, by dense linear solve."""
    p1.check(game.n_states, "p1")
    p2.check(game.n_states, "p2")
    v1 = evaluate_player(game, 1, p1.p, p2.p)
    v2 = evaluate_player(game, 2, p2.p, p1.p)
    return ValueFunction(v1), ValueFunction(v2)


# ---------- CONSTRAINED STOPPING ----------

def region_mask(game: DynkinGame, region) -> np.ndarray:
    """Boolean mask from a mask, or an iterable of state labels / indices."""
    if isinstance(region, np.ndarray) and region.dtype == bool:
        if region.shape != (game.n_states,):
            raise ValueError("region mask has the wrong length")
        return region.copy()
    mask = np.zeros(game.n_states, dtype=bool)
    for item in region:
        if isinstance(item, str):
            mask[game.space.index[item]] = True
        else:
            mask[int(item)] = True
    return mask


def constrained_stopping_value(game: DynkinGame, region, reward, mode=StoppingMode.MAX,
                               tol: float = None, max_iter: int = None) -> np.ndarray:
    """
    sup (or inf) over stopping times τ <= τ_M of E[α^τ k(X_τ)].

    Inside the region the controller may stop for k(x) or continue; on leaving
    it the reward k at the exit state is collected. Never stopping pays 0.

    Args:
        region: states of M (mask, labels or indices), must be non-empty
        reward: k on all states
        mode: StoppingMode.MAX or StoppingMode.MIN

    Returns:
        Array over all states: the optimal value on M and k outside it.
    """
    tol = resolve(tol, "solve_tol")
    max_iter = resolve(max_iter, "max_iter")
    mode = StoppingMode(mode)
    inside = region_mask(game, region)
    if not inside.any():
        raise ValueError("region must contain at least one state")
    k = np.asarray(reward, dtype=float)
    if k.shape != (game.n_states,):
        raise ValueError("reward must be defined on every state")

    pick = np.maximum if mode is StoppingMode.MAX else np.minimum
    scale = max(1.0, float(np.max(np.abs(k))))
    threshold = _stop_threshold(tol, scale, game.alpha)
    v = k.copy()
    for it in range(1, max_iter + 1):
        new = k.copy()
        new[inside] = pick(k, game.alpha * game.expectation(v))[inside]
        step = float(np.max(np.abs(new - v)))
        v = new
        if step < threshold:
            logger.debug("Constrained stopping (%s) converged in %d iterations", mode.value, it)
            return v
    residual = float(np.max(np.abs(np.where(inside, pick(k, game.alpha * game.expectation(v)), k) - v)))
    raise MaxIterExceeded(max_iter, residual, best=v)
