# Monte Carlo estimates of both players' payoffs under a profile pair
#
# Each step both players draw a uniform and player i stops iff p_i(X_n) >= ξ.
# Episodes run in fixed blocks; block k always draws from
# SeedSequence(seed, spawn_key=(k,)), so results depend only on the seed and
# not on how blocks are spread over workers.

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from models.errors import SchemaError
from models.game_model import DynkinGame, StoppingProfile
from models.settings import resolve

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096


class HorizonMode(str, enum.Enum):
    GEOMETRIC_KILLING = "GeometricKilling"
    DISCOUNTED_CUTOFF = "DiscountedCutoff"


class Outcome(enum.IntEnum):
    PLAYER1_FIRST = 0
    PLAYER2_FIRST = 1
    SIMULTANEOUS = 2
    NEVER = 3

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


@dataclass(frozen=True)
class SimulationConfig:
    samples: int = None
    seed: int = None
    initial_state: Optional[str] = None
    horizon_mode: HorizonMode = HorizonMode.GEOMETRIC_KILLING
    cutoff: int = 200

    def __post_init__(self):
        object.__setattr__(self, "samples", int(resolve(self.samples, "samples")))
        object.__setattr__(self, "seed", int(resolve(self.seed, "seed")))
        object.__setattr__(self, "horizon_mode", HorizonMode(self.horizon_mode))
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    def state_index(self, game: DynkinGame) -> int:
        label = game.states[0] if self.initial_state is None else str(self.initial_state)
        try:
            return game.space.index[label]
        except KeyError:
            raise SchemaError(f"unknown initial state {label!r}", field="initial_state") from None

    def tail_bound(self, game: DynkinGame) -> float:
        """Largest payoff mass lost by cutting episodes off after ``cutoff`` steps."""
        if self.horizon_mode is HorizonMode.GEOMETRIC_KILLING:
            return 0.0
        return game.alpha ** self.cutoff * game.payoff_scale


@dataclass(frozen=True)
class EmpiricalEstimate:
    mean1: float
    mean2: float
    std_err1: float
    std_err2: float
    samples: int
    outcome_counts: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"mean1": self.mean1, "mean2": self.mean2, "std_err1": self.std_err1,
                "std_err2": self.std_err2, "samples": self.samples,
                "outcome_counts": dict(self.outcome_counts)}


@dataclass(frozen=True)
class SampleOutcome:
    reward1: float
    reward2: float
    outcome: Outcome
    steps: int


def _profiles(game, p1, p2):
    p1 = p1 if isinstance(p1, StoppingProfile) else StoppingProfile(p1)
    p2 = p2 if isinstance(p2, StoppingProfile) else StoppingProfile(p2)
    p1.check(game.n_states, "p1")
    p2.check(game.n_states, "p2")
    return p1.p, p2.p


def _cdf(game: DynkinGame) -> np.ndarray:
    cdf = np.cumsum(game.kernel, axis=1)
    cdf[:, -1] = 1.0
    return cdf


def _stop_rewards(game, x, stop1, stop2, factor):
    a, b = game.player1, game.player2
    if stop1 and stop2:
        return factor * a.h[x], factor * b.h[x], Outcome.SIMULTANEOUS
    if stop1:
        return factor * a.f[x], factor * b.g[x], Outcome.PLAYER1_FIRST
    return factor * a.g[x], factor * b.f[x], Outcome.PLAYER2_FIRST


def sample_outcome(game: DynkinGame, p1, p2, x0, rng: np.random.Generator,
                   horizon_mode=HorizonMode.GEOMETRIC_KILLING, cutoff: int = 200) -> SampleOutcome:
    """One episode from state ``x0`` (label or index); rewards are 0 if nobody ever stops."""
    p1, p2 = _profiles(game, p1, p2)
    horizon_mode = HorizonMode(horizon_mode)
    x = game.space.index[x0] if isinstance(x0, str) else int(x0)
    cdf = _cdf(game)
    killing = horizon_mode is HorizonMode.GEOMETRIC_KILLING
    factor = 1.0
    n = 0
    while killing or n < cutoff:
        # ξ on (0, 1] so p = 0 never stops
        stop1 = p1[x] >= 1.0 - rng.random()
        stop2 = p2[x] >= 1.0 - rng.random()
        if stop1 or stop2:
            r1, r2, outcome = _stop_rewards(game, x, stop1, stop2, factor)
            return SampleOutcome(float(r1), float(r2), outcome, n)
        if killing:
            if rng.random() >= game.alpha:
                break
        else:
            factor *= game.alpha
        x = int(np.searchsorted(cdf[x], rng.random(), side="right"))
        n += 1
    return SampleOutcome(0.0, 0.0, Outcome.NEVER, n)


def _simulate_block(game, p1, p2, x0, size, seed, block, horizon_mode, cutoff):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    a, b = game.player1, game.player2
    cdf = _cdf(game)
    killing = horizon_mode is HorizonMode.GEOMETRIC_KILLING

    state = np.full(size, x0, dtype=np.int64)
    alive = np.ones(size, dtype=bool)
    r1 = np.zeros(size)
    r2 = np.zeros(size)
    codes = np.full(size, int(Outcome.NEVER), dtype=np.int64)
    factor = 1.0
    n = 0
    while alive.any() and (killing or n < cutoff):
        # uniforms are drawn for every episode so the stream layout is fixed
        stop1 = alive & (p1[state] >= 1.0 - rng.random(size))
        stop2 = alive & (p2[state] >= 1.0 - rng.random(size))
        for mask, u, v, outcome in (
            (stop1 & stop2, a.h, b.h, Outcome.SIMULTANEOUS),
            (stop1 & ~stop2, a.f, b.g, Outcome.PLAYER1_FIRST),
            (stop2 & ~stop1, a.g, b.f, Outcome.PLAYER2_FIRST),
        ):
            r1[mask] = factor * u[state[mask]]
            r2[mask] = factor * v[state[mask]]
            codes[mask] = int(outcome)
        alive &= ~(stop1 | stop2)

        if killing:
            alive &= rng.random(size) < game.alpha
        else:
            factor *= game.alpha
        u = rng.random(size)
        moving = np.flatnonzero(alive)
        if moving.size:
            state[moving] = (cdf[state[moving]] > u[moving, None]).argmax(axis=1)
        n += 1
    return r1, r2, codes


def estimate_payoffs(game: DynkinGame, p1, p2, cfg: SimulationConfig = None,
                     n_jobs: int = None) -> EmpiricalEstimate:
    """Sample means and standard errors of both players' rewards; deterministic given the seed."""
    cfg = cfg or SimulationConfig()
    p1, p2 = _profiles(game, p1, p2)
    x0 = cfg.state_index(game)
    n_jobs = resolve(n_jobs, "n_jobs")
    if cfg.tail_bound(game) > 1e-6 * game.payoff_scale:
        logger.warning("Cutoff %d leaves a tail of up to %.3e per episode", cfg.cutoff, cfg.tail_bound(game))

    # the last block may be short
    n_blocks = math.ceil(cfg.samples / BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, cfg.samples - k * BLOCK_SIZE) for k in range(n_blocks)]
    jobs = (delayed(_simulate_block)(game, p1, p2, x0, size, cfg.seed, k, cfg.horizon_mode, cfg.cutoff)
            for k, size in enumerate(sizes))
    # run inline for one worker
    if n_jobs == 1:
        parts = [fn(*args, **kwargs) for fn, args, kwargs in jobs]
    else:
        parts = Parallel(n_jobs=n_jobs)(jobs)

    r1 = np.concatenate([part[0] for part in parts])
    r2 = np.concatenate([part[1] for part in parts])
    codes = np.concatenate([part[2] for part in parts])
    counts = np.bincount(codes, minlength=len(Outcome))

    def std_err(r):
        return float(np.std(r, ddof=1) / math.sqrt(len(r))) if len(r) > 1 else 0.0

    estimate = EmpiricalEstimate(
        mean1=float(np.mean(r1)),
        mean2=float(np.mean(r2)),
        std_err1=std_err(r1),
        std_err2=std_err(r2),
        samples=cfg.samples,
        outcome_counts={o.label: int(counts[o]) for o in Outcome},
    )
    logger.info("Simulated %d episodes from %r: means (%.6g, %.6g)", cfg.samples,
                game.states[x0], estimate.mean1, estimate.mean2)
    return estimate


def never_stop_probability(game: DynkinGame, p1, p2, horizon_mode=HorizonMode.GEOMETRIC_KILLING,
                           cutoff: int = 200) -> np.ndarray:
    """Per starting state, probability that an episode ends with nobody having stopped."""
    p1, p2 = _profiles(game, p1, p2)
    carry = (1.0 - p1) * (1.0 - p2)
    if HorizonMode(horizon_mode) is HorizonMode.GEOMETRIC_KILLING:
        system = np.eye(game.n_states) - game.alpha * carry[:, None] * game.kernel
        return linalg.solve(system, carry * (1.0 - game.alpha))
    w = carry.copy()
    for _ in range(cutoff - 1):
        w = carry * game.expectation(w)
    return w
