# Named sample games used by the seeding script, the tests and the README

import numpy as np

from models.game_model import DynkinGame, PayoffTriple, StateSpace, validate_game


def _zero_sum(states, kernel, alpha, f, g, h) -> DynkinGame:
    p1 = PayoffTriple(f=f, g=g, h=h)
    return validate_game(DynkinGame(StateSpace(states), kernel, alpha, p1, p1.zero_sum_partner()))


def _symmetric(states, kernel, alpha, f, g, h) -> DynkinGame:
    triple = PayoffTriple(f=f, g=g, h=h)
    return validate_game(DynkinGame(StateSpace(states), kernel, alpha, triple, triple))


# ---------- ZERO-SUM ----------

def two_state_randomized_game() -> DynkinGame:
    """
    Zero-sum game with no pure equilibrium and the unique equilibrium
    p1 = p2 = (1/2, 1), value V = (1, 4).
    """
    return _zero_sum(
        states=["1", "2"],
        kernel=[[0.5, 0.5], [0.0, 1.0]],
        alpha=0.8,
        f=[0.0, 5.0],
        g=[0.0, 3.0],
        h=[2.0, 4.0],
    )


def two_state_med_game() -> DynkinGame:
    """Same chain with h(1) = 0, which satisfies the med condition; value V = (0, 4)."""
    return _zero_sum(
        states=["1", "2"],
        kernel=[[0.5, 0.5], [0.0, 1.0]],
        alpha=0.8,
        f=[0.0, 5.0],
        g=[0.0, 3.0],
        h=[0.0, 4.0],
    )


def drift_game(length: int) -> DynkinGame:
    """
    Deterministic drift 0 -> 1 -> ... -> length-1 (absorbing) with f = g = 2^n,
    h = 0 and alpha = 1/2, truncated from a game on all of N that has no equilibrium.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    kernel = np.zeros((length, length))
    kernel[np.arange(length - 1), np.arange(1, length)] = 1.0
    kernel[-1, -1] = 1.0
    powers = np.ldexp(1.0, np.arange(length))
    return _zero_sum(
        states=[str(n) for n in range(length)],
        kernel=kernel,
        alpha=0.5,
        f=powers,
        g=powers,
        h=np.zeros(length),
    )


# ---------- SYMMETRIC ----------

def war_of_attrition_game() -> DynkinGame:
    """One absorbing state, f = h = 1, g = 2, alpha = 1/2: equilibrium p = 1/3, value 1."""
    return _symmetric(["x"], [[1.0]], 0.5, f=[1.0], g=[2.0], h=[1.0])


def two_state_war_of_attrition_game() -> DynkinGame:
    """Two absorbing states: equilibrium p = (1/3, 1/3), value f = (2, 3)."""
    return _symmetric(["a", "b"], [[1.0, 0.0], [0.0, 1.0]], 0.5,
                      f=[2.0, 3.0], g=[4.0, 6.0], h=[2.0, 3.0])


# name -> builder for the seeding script
CATALOG = {
    "two_state_randomized": two_state_randomized_game,
    "two_state_med": two_state_med_game,
    "war_of_attrition": war_of_attrition_game,
    "two_state_war_of_attrition": two_state_war_of_attrition_game,
    "drift_60": lambda: drift_game(60),
}

# closed-form answers for the catalog games
EXPECTED = {
    "two_state_randomized": {"p1": [0.5, 1.0], "p2": [0.5, 1.0], "value": [1.0, 4.0]},
    "two_state_med": {"value": [0.0, 4.0]},
    "war_of_attrition": {"p": [1 / 3], "value": [1.0]},
    "two_state_war_of_attrition": {"p": [1 / 3, 1 / 3], "value": [2.0, 3.0]},
}
