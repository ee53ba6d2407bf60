# Random game factories and brute-force oracles shared by the tests

import itertools

import numpy as np

from models.game_model import DynkinGame, PayoffTriple, StateSpace, StoppingProfile, validate_game
from models.stopping_model import best_response_constraints, is_best_response

ALPHAS = (0.5, 0.8, 0.95)


# ---------- RANDOM GAMES ----------

def random_kernel(rng, n):
    kernel = rng.dirichlet(np.ones(n), size=n)
    # a few zero entries so the chains are not all fully connected
    if n > 2:
        kernel[rng.random((n, n)) < 0.3] = 0.0
        kernel[np.arange(n), rng.integers(0, n, n)] += 0.1
    return kernel / kernel.sum(axis=1, keepdims=True)


def make_game(kernel, alpha, player1, player2=None, states=None) -> DynkinGame:
    n = len(kernel)
    p1 = player1 if isinstance(player1, PayoffTriple) else PayoffTriple(*player1)
    if player2 is None:
        p2 = p1.zero_sum_partner()
    elif isinstance(player2, PayoffTriple):
        p2 = player2
    else:
        p2 = PayoffTriple(*player2)
    states = states or [f"s{i}" for i in range(n)]
    return validate_game(DynkinGame(StateSpace(states), kernel, alpha, p1, p2))


def _payoffs(rng, n, scale=10.0):
    return rng.uniform(-scale, scale, n)


def random_zero_sum_game(rng, n=None, alpha=None):
    n = n or int(rng.integers(1, 9))
    alpha = alpha or float(rng.choice(ALPHAS))
    return make_game(random_kernel(rng, n), alpha, (_payoffs(rng, n), _payoffs(rng, n), _payoffs(rng, n)))


def random_med_game(rng, n=None, alpha=None):
    """Zero-sum game where h always lies between f and g."""
    n = n or int(rng.integers(1, 9))
    alpha = alpha or float(rng.choice(ALPHAS))
    f, g = _payoffs(rng, n), _payoffs(rng, n)
    if rng.random() < 0.3:
        # exercise the f = g branches
        tie = rng.random(n) < 0.3
        g[tie] = f[tie]
    lo, hi = np.minimum(f, g), np.maximum(f, g)
    h = lo + rng.random(n) * (hi - lo)
    return make_game(random_kernel(rng, n), alpha, (f, g, h))


def random_symmetric_game(rng, n=None, alpha=None, f_equals_h=False):
    n = n or int(rng.integers(1, 9))
    alpha = alpha or float(rng.choice(ALPHAS))
    f, g = _payoffs(rng, n), _payoffs(rng, n)
    h = f.copy() if f_equals_h else _payoffs(rng, n)
    triple = PayoffTriple(f, g, h)
    return make_game(random_kernel(rng, n), alpha, triple, triple)


def random_general_game(rng, n=None, alpha=None):
    n = n or int(rng.integers(1, 5))
    alpha = alpha or float(rng.choice(ALPHAS))
    p1 = (_payoffs(rng, n), _payoffs(rng, n), _payoffs(rng, n))
    p2 = (_payoffs(rng, n), _payoffs(rng, n), _payoffs(rng, n))
    return make_game(random_kernel(rng, n), alpha, p1, p2)


# ---------- ORACLES ----------

def pure_profiles(n):
    for bits in itertools.product((0.0, 1.0), repeat=n):
        yield StoppingProfile(np.array(bits))


def is_pure_equilibrium(game, p1, p2):
    """Both players best-respond, checked through the one-player stopping problems."""
    c1, _ = best_response_constraints(game, 1, p2)
    c2, _ = best_response_constraints(game, 2, p1)
    return is_best_response(p1, c1)[0] and is_best_response(p2, c2)[0]


def pure_equilibria(game):
    return [(p1, p2) for p1 in pure_profiles(game.n_states) for p2 in pure_profiles(game.n_states)
            if is_pure_equilibrium(game, p1, p2)]


def backward_induction(aux, steps):
    """Finite-horizon stopping value: must stop at the horizon."""
    v = aux.continue_reward.copy()
    for _ in range(steps):
        v = np.maximum(aux.continuation(v), aux.continue_reward)
    return v
