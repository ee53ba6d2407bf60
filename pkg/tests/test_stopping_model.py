import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import MaxIterExceeded
from models.game_model import StoppingProfile
from models.stopping_model import (
    BestResponseConstraint,
    StoppingMode,
    Tag,
    best_response_constraints,
    best_response_selection,
    build_auxiliary,
    classify_best_response,
    constrained_stopping_value,
    evaluate_payoffs,
    is_best_response,
    solve_wald_bellman,
)
from tests.factories import (
    backward_induction,
    make_game,
    random_general_game,
    random_zero_sum_game,
)

EQUILIBRIUM = StoppingProfile([0.5, 1.0])


def _first_stop_sum(game, player, own, other, steps=80):
    """Sum over n of α^n E[reward if the first stop is at n], starting from each state."""
    me = game.payoffs(player)
    reward = own * other * me.h + own * (1 - other) * me.f + (1 - own) * other * me.g
    carry = (1 - own) * (1 - other)
    total = np.zeros(game.n_states)
    for x in range(game.n_states):
        mass = np.zeros(game.n_states)
        mass[x] = 1.0
        for n in range(steps):
            total[x] += game.alpha ** n * mass @ reward
            mass = (mass * carry) @ game.kernel
    return total


# ---------- AUXILIARY PROBLEM ----------

def test_continue_reward_mixes_f_and_h(randomized_game):
    aux = build_auxiliary(randomized_game, 1, EQUILIBRIUM)
    np.testing.assert_allclose(aux.continue_reward, [1.0, 4.0])
    np.testing.assert_array_equal(aux.absorbed_reward, [0.0, 3.0])


def test_opponent_extremes(randomized_game):
    never = build_auxiliary(randomized_game, 1, StoppingProfile.constant(2, 0.0))
    np.testing.assert_array_equal(never.continue_reward, randomized_game.player1.f)
    always = build_auxiliary(randomized_game, 1, StoppingProfile.constant(2, 1.0))
    np.testing.assert_array_equal(always.continue_reward, randomized_game.player1.h)
    np.testing.assert_array_equal(always.continuation(np.array([123.0, -7.0])), randomized_game.player1.g)


def test_wald_bellman_on_the_randomized_game(randomized_game):
    aux = build_auxiliary(randomized_game, 1, EQUILIBRIUM)
    val = solve_wald_bellman(aux)
    np.testing.assert_allclose(val.v_c, [1.0, 4.0], atol=1e-10)
    np.testing.assert_array_equal(val.v_s, randomized_game.player1.g)
    assert val.residual < 1e-11


def test_single_absorbing_state():
    game = make_game([[1.0]], 0.5, ([1.0], [5.0], [1.0]))
    val = solve_wald_bellman(build_auxiliary(game, 1, StoppingProfile([0.0])))
    assert val.v_c[0] == pytest.approx(1.0)


def test_wald_bellman_matches_backward_induction():
    rng = np.random.default_rng(11)
    for _ in range(100):
        game = random_general_game(rng, n=4)
        aux = build_auxiliary(game, int(rng.integers(1, 3)), StoppingProfile(rng.random(4)))
        val = solve_wald_bellman(aux)
        bound = 2 * game.alpha ** 60 * aux.scale
        np.testing.assert_allclose(val.v_c, backward_induction(aux, 60), atol=bound + 1e-9)


def test_max_iter_exceeded_carries_best_iterate(randomized_game):
    aux = build_auxiliary(randomized_game, 1, StoppingProfile([0.0, 0.0]))
    with pytest.raises(MaxIterExceeded) as info:
        solve_wald_bellman(aux, tol=1e-15, max_iter=2)
    assert info.value.best.v_c.shape == (2,)
    assert info.value.iterations == 2


def test_tol_must_be_positive(randomized_game):
    with pytest.raises(ValueError):
        solve_wald_bellman(build_auxiliary(randomized_game, 1, EQUILIBRIUM), tol=0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_bellman_operator_is_an_alpha_contraction(seed):
    rng = np.random.default_rng(seed)
    game = random_zero_sum_game(rng, n=5)
    aux = build_auxiliary(game, 1, StoppingProfile(rng.random(5)))
    v, w = rng.normal(size=5) * 10, rng.normal(size=5) * 10
    lhs = np.max(np.abs(aux.bellman(v) - aux.bellman(w)))
    assert lhs <= game.alpha * np.max(np.abs(v - w)) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_raising_rewards_never_lowers_the_value(seed):
    rng = np.random.default_rng(seed)
    game = random_zero_sum_game(rng, n=4)
    base = build_auxiliary(game, 1, StoppingProfile(rng.random(4)))
    bumped = build_auxiliary(game, 1, base.opponent)
    object.__setattr__(bumped, "continue_reward", base.continue_reward + rng.random(4))
    assert np.all(solve_wald_bellman(bumped).v_c >= solve_wald_bellman(base).v_c - 1e-9)


# ---------- BEST RESPONSES ----------

def test_best_response_tags_on_the_randomized_game(randomized_game):
    constraints, _ = best_response_constraints(randomized_game, 1, EQUILIBRIUM)
    assert constraints.tags == (Tag.INDIFFERENT, Tag.MUST_STOP)
    assert constraints.states_with(Tag.MUST_STOP) == ["2"]

    assert is_best_response(StoppingProfile([0.5, 1.0]), constraints) == (True, [])
    assert is_best_response(StoppingProfile([0.0, 1.0]), constraints) == (True, [])
    assert is_best_response(StoppingProfile([1.0, 0.0]), constraints) == (False, ["2"])


def test_everything_indifferent_when_opponent_always_stops_and_g_equals_h():
    game = make_game([[0.5, 0.5], [0.3, 0.7]], 0.9, ([3.0, -1.0], [2.0, 4.0], [2.0, 4.0]),
                     ([1.0, 1.0], [0.0, 0.0], [0.0, 0.0]))
    aux = build_auxiliary(game, 1, StoppingProfile([1.0, 1.0]))
    constraints = classify_best_response(aux, solve_wald_bellman(aux))
    assert set(constraints.tags) == {Tag.INDIFFERENT}


def test_excessive_reward_means_stop_everywhere():
    # αΠf < f at both states
    game = make_game([[0.0, 1.0], [1.0, 0.0]], 0.5, ([4.0, 5.0], [0.0, 0.0], [0.0, 0.0]))
    constraints, val = best_response_constraints(game, 1, StoppingProfile([0.0, 0.0]))
    assert set(constraints.tags) == {Tag.MUST_STOP}
    np.testing.assert_allclose(val.v_c, [4.0, 5.0])


def test_selection_keeps_indifferent_entries():
    constraints = BestResponseConstraint((Tag.MUST_STOP, Tag.INDIFFERENT, Tag.MUST_CONTINUE))
    np.testing.assert_array_equal(best_response_selection(constraints, [0.3, 0.4, 0.5]), [1.0, 0.4, 0.0])
    np.testing.assert_array_equal(best_response_selection(constraints, 1.0), [1.0, 1.0, 0.0])


def test_constructed_best_response_attains_the_value():
    rng = np.random.default_rng(5)
    for _ in range(50):
        game = random_general_game(rng, n=4)
        opponent = StoppingProfile(rng.random(4))
        constraints, val = best_response_constraints(game, 1, opponent)
        mine = StoppingProfile(best_response_selection(constraints, 0.0))
        v1, _ = evaluate_payoffs(game, mine, opponent)
        np.testing.assert_allclose(v1.v, val.v_c, atol=1e-8 * game.payoff_scale)


# ---------- PAYOFF EVALUATION ----------

def test_payoffs_at_the_randomized_equilibrium(randomized_game):
    v1, v2 = evaluate_payoffs(randomized_game, EQUILIBRIUM, EQUILIBRIUM)
    np.testing.assert_allclose(v1.v, [1.0, 4.0], atol=1e-12)
    np.testing.assert_allclose(v2.v, [-1.0, -4.0], atol=1e-12)


def test_both_stop_immediately_gives_h(randomized_game):
    ones = StoppingProfile.constant(2, 1.0)
    v1, v2 = evaluate_payoffs(randomized_game, ones, ones)
    np.testing.assert_array_equal(v1.v, randomized_game.player1.h)
    np.testing.assert_array_equal(v2.v, randomized_game.player2.h)


def test_payoffs_match_first_stop_summation():
    rng = np.random.default_rng(8)
    for _ in range(30):
        game = random_general_game(rng, n=int(rng.integers(1, 6)))
        n = game.n_states
        p1 = StoppingProfile(rng.integers(0, 2, n).astype(float))
        p2 = StoppingProfile(rng.random(n))
        v1, v2 = evaluate_payoffs(game, p1, p2)
        bound = 2 * game.alpha ** 80 * game.payoff_scale
        np.testing.assert_allclose(v1.v, _first_stop_sum(game, 1, p1.p, p2.p), atol=bound + 1e-9)
        np.testing.assert_allclose(v2.v, _first_stop_sum(game, 2, p2.p, p1.p), atol=bound + 1e-9)


# ---------- CONSTRAINED STOPPING ----------

def test_constrained_value_on_state_1(randomized_game):
    v = constrained_stopping_value(randomized_game, ["1"], [0.0, 4.0], StoppingMode.MAX)
    assert v[0] == pytest.approx(8 / 3, abs=1e-9)
    assert v[1] == 4.0


def test_whole_space_is_ordinary_optimal_stopping(randomized_game):
    f = randomized_game.player1.f
    v = constrained_stopping_value(randomized_game, np.array([True, True]), f)
    val = solve_wald_bellman(build_auxiliary(randomized_game, 1, StoppingProfile([0.0, 0.0])))
    np.testing.assert_allclose(v, val.v_c, atol=1e-10)


def test_min_mode_on_absorbing_loop():
    game = make_game([[1.0]], 0.5, ([1.0], [1.0], [1.0]))
    v = constrained_stopping_value(game, [0], [1.0], StoppingMode.MIN)
    assert v[0] == pytest.approx(0.0, abs=1e-10)


def test_empty_region_is_rejected(randomized_game):
    with pytest.raises(ValueError):
        constrained_stopping_value(randomized_game, [], [0.0, 0.0])
