import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import ExplicitLimitError, GameValidationError, ParseError, SchemaError
from models.game_model import (
    MAX_STATES,
    StoppingProfile,
    classify_game,
    game_from_dict,
    game_to_dict,
    load_game,
    load_profiles,
    med,
    med_array,
    med_condition_witnesses,
    save_game,
    save_profiles,
    to_jsonable,
)
from models.general_model import Verdict
from tests.factories import random_general_game

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def _doc(**overrides):
    doc = {
        "states": ["1", "2"],
        "alpha": 0.8,
        "kernel": [[0.5, 0.5], [0.0, 1.0]],
        "zero_sum": {"f": [0.0, 5.0], "g": [0.0, 3.0], "h": [2.0, 4.0]},
    }
    doc.update(overrides)
    return doc


# ---------- MED ----------

@given(finite, finite, finite)
def test_med_is_the_middle_value(a, b, c):
    assert med(a, b, c) == sorted([a, b, c])[1]
    assert med(a, b, c) == med(c, a, b) == med(b, c, a) == med(b, a, c)


@settings(max_examples=50)
@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_med_array_matches_scalar(rows):
    a, b, c = (np.array(col) for col in zip(*rows))
    expected = [med(*row) for row in rows]
    np.testing.assert_array_equal(med_array(a, b, c), expected)


# ---------- CLASSIFICATION ----------

def test_zero_sum_shorthand_builds_negated_partner():
    game = game_from_dict(_doc())
    np.testing.assert_array_equal(game.player2.f, [-0.0, -3.0])
    np.testing.assert_array_equal(game.player2.g, [-0.0, -5.0])
    np.testing.assert_array_equal(game.player2.h, [-2.0, -4.0])
    kind = classify_game(game)
    assert kind.is_zero_sum
    assert not kind.is_symmetric
    assert not kind.med_condition


def test_med_condition_witness_is_state_1(randomized_game, med_game):
    assert med_condition_witnesses(randomized_game) == ["1"]
    assert med_condition_witnesses(med_game) == []
    assert classify_game(med_game).med_condition


def test_symmetric_shorthand(war_game):
    kind = classify_game(war_game)
    assert kind.is_symmetric
    assert kind.f_equals_h
    assert not kind.is_zero_sum


def test_general_game_has_no_flags():
    game = random_general_game(np.random.default_rng(3), n=3)
    kind = classify_game(game)
    assert not (kind.is_zero_sum or kind.is_symmetric or kind.med_condition or kind.f_equals_h)


def test_relabeling_keeps_classification(randomized_game):
    swapped = randomized_game.relabeled([1, 0])
    assert swapped.states == ("2", "1")
    assert classify_game(swapped) == classify_game(randomized_game)
    assert med_condition_witnesses(swapped) == ["1"]


# ---------- VALIDATION ----------

@pytest.mark.parametrize("overrides, kind", [
    ({"kernel": [[0.5, 0.4], [0.0, 1.0]]}, "RowSumError"),
    ({"kernel": [[1.5, -0.5], [0.0, 1.0]]}, "ProbabilityRange"),
    ({"alpha": 1.0}, "AlphaRangeError"),
    ({"alpha": 0.0}, "AlphaRangeError"),
    ({"states": ["1", "1"]}, "DuplicateLabel"),
    ({"zero_sum": {"f": [0.0, float("nan")], "g": [0.0, 3.0], "h": [2.0, 4.0]}}, "NonFiniteEntry"),
])
def test_invalid_games_are_rejected(overrides, kind):
    with pytest.raises(GameValidationError) as info:
        game_from_dict(_doc(**overrides))
    assert kind in info.value.kinds


def test_all_violations_are_reported_together():
    with pytest.raises(GameValidationError) as info:
        game_from_dict(_doc(alpha=2.0, kernel=[[0.5, 0.4], [0.0, 1.0]]))
    assert {"AlphaRangeError", "RowSumError"} <= info.value.kinds


def test_empty_state_space():
    doc = {"states": [], "alpha": 0.5, "kernel": [], "zero_sum": {"f": [], "g": [], "h": []}}
    with pytest.raises(GameValidationError) as info:
        game_from_dict(doc)
    assert "EmptyStateSpace" in info.value.kinds


def test_payoff_length_mismatch():
    with pytest.raises(SchemaError) as info:
        game_from_dict(_doc(zero_sum={"f": [0.0], "g": [0.0, 3.0], "h": [2.0, 4.0]}))
    assert info.value.kind == "LengthMismatch"
    assert info.value.field == "zero_sum.f"


@pytest.mark.parametrize("field, overrides", [
    ("kernel", {"kernel": [[0.5, "0.5"], [0.0, 1.0]]}),
    ("kernel", {"kernel": [[True, 0.0], [0.0, 1.0]]}),
    ("zero_sum.g", {"zero_sum": {"f": [0.0, 5.0], "g": [0.0, None], "h": [2.0, 4.0]}}),
    ("alpha", {"alpha": "0.8"}),
])
def test_non_numeric_entries_name_the_field(field, overrides):
    with pytest.raises(SchemaError) as info:
        game_from_dict(_doc(**overrides))
    assert info.value.field == field
    assert info.value.kind == "SchemaError"


def test_missing_key():
    doc = _doc()
    del doc["alpha"]
    with pytest.raises(SchemaError, match="alpha"):
        game_from_dict(doc)


def test_state_limit():
    doc = _doc(states=[str(i) for i in range(MAX_STATES + 1)])
    with pytest.raises(ExplicitLimitError):
        game_from_dict(doc)


# ---------- FILES ----------

def test_malformed_file_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "states": ["1",\n}\n')
    with pytest.raises(ParseError) as info:
        load_game(path)
    assert info.value.line is not None


def test_empty_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("   \n")
    with pytest.raises(ParseError, match="empty"):
        load_game(path)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_game(tmp_path / "nope.json")


def test_save_and_load_round_trip(tmp_path, randomized_game):
    path = tmp_path / "game.json"
    save_game(path, randomized_game)
    again = load_game(path)
    assert game_to_dict(again) == game_to_dict(randomized_game)
    assert classify_game(again).is_zero_sum


def test_profiles_round_trip(tmp_path, randomized_game):
    path = tmp_path / "profiles.json"
    save_profiles(path, StoppingProfile([0.5, 1.0]), StoppingProfile([0.25, 0.0]))
    p1, p2 = load_profiles(path, randomized_game)
    np.testing.assert_array_equal(p1.p, [0.5, 1.0])
    np.testing.assert_array_equal(p2.p, [0.25, 0.0])


@pytest.mark.parametrize("payload", [
    {"p1": [0.5], "p2": [0.5, 1.0]},
    {"p1": [0.5, 1.5], "p2": [0.5, 1.0]},
    {"p1": [0.5, 1.0]},
])
def test_bad_profiles(tmp_path, randomized_game, payload):
    path = tmp_path / "profiles.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(SchemaError):
        load_profiles(path, randomized_game)


def test_profiles_are_read_only():
    profile = StoppingProfile([0.0, 1.0])
    with pytest.raises(ValueError):
        profile.p[0] = 0.5


def test_to_jsonable_keeps_floats_exact():
    data = to_jsonable({"x": np.float64(0.1), "arr": np.array([1 / 3, 2.0]), "v": Verdict.VERIFIED})
    assert data == {"x": 0.1, "arr": [1 / 3, 2.0], "v": "Verified"}
    assert json.loads(json.dumps(data))["arr"][0] == 1 / 3
