# This file contains the game data model and everything that reads or writes it
# A game is a finite Markov chain, a discount factor and one payoff triple per player
# The solver modules only ever receive games that passed validate_game()

import dataclasses
import enum
import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from models.errors import (
    ExplicitLimitError,
    GameValidationError,
    ParseError,
    SchemaError,
    Violation,
)

logger = logging.getLogger(__name__)

MAX_STATES = 10000
ROW_SUM_TOL = 1e-12
PLAYERS = (1, 2)


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _as_matrix(rows) -> np.ndarray:
    rows = [list(r) for r in rows]
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise GameValidationError([Violation(
            "LengthMismatch", f"kernel rows have different lengths {sorted(widths)}")])
    if not rows:
        return _frozen(np.zeros((0, 0)))
    return _frozen(rows)


# ---------- DOMAIN TYPES ----------

@dataclass(frozen=True)
class StateSpace:
    states: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    @cached_property
    def index(self) -> Dict[str, int]:
        return {label: i for i, label in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    def label(self, i: int) -> str:
        return self.states[i]


@dataclass(frozen=True, eq=False)
class PayoffTriple:
    """Rewards of one player: f if it stops first, g if the opponent does, h if both stop."""
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        for name in ("f", "g", "h"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def zero_sum_partner(self) -> "PayoffTriple":
        # player 2 gets -g when it stops first, -f when player 1 does
        return PayoffTriple(f=-self.g, g=-self.f, h=-self.h)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(a), initial=0.0) for a in (self.f, self.g, self.h)))

    def take(self, order) -> "PayoffTriple":
        return PayoffTriple(f=self.f[order], g=self.g[order], h=self.h[order])


@dataclass(frozen=True, eq=False)
class StoppingProfile:
    """Per-state stopping probability of one player."""
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))

    @classmethod
    def constant(cls, n: int, value: float) -> "StoppingProfile":
        return cls(np.full(n, float(value)))

    @property
    def is_pure(self) -> bool:
        return bool(np.all((self.p == 0.0) | (self.p == 1.0)))

    def __len__(self):
        return len(self.p)

    def check(self, n_states: int, name: str = "profile"):
        if len(self.p) != n_states:
            raise SchemaError(f"{name} has {len(self.p)} entries for {n_states} states",
                              field=name, kind="LengthMismatch")
        if not np.all(np.isfinite(self.p)) or np.any(self.p < 0.0) or np.any(self.p > 1.0):
            raise SchemaError(f"{name} entries must lie in [0, 1]", field=name)


@dataclass(frozen=True, eq=False)
class ValueFunction:
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen(self.v))

    def __len__(self):
        return len(self.v)


@dataclass(frozen=True, eq=False)
class DynkinGame:
    space: StateSpace
    kernel: np.ndarray
    alpha: float
    player1: PayoffTriple
    player2: PayoffTriple

    def __post_init__(self):
        if not isinstance(self.space, StateSpace):
            object.__setattr__(self, "space", StateSpace(self.space))
        if not isinstance(self.kernel, np.ndarray) or self.kernel.flags.writeable:
            object.__setattr__(self, "kernel", _as_matrix(self.kernel))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n_states(self) -> int:
        return len(self.space)

    @property
    def states(self) -> Tuple[str, ...]:
        return self.space.states

    def payoffs(self, player: int) -> PayoffTriple:
        if player == 1:
            return self.player1
        if player == 2:
            return self.player2
        raise ValueError(f"player must be 1 or 2, got {player!r}")

    @cached_property
    def payoff_scale(self) -> float:
        """Scale used to make tolerances relative: max(1, largest absolute payoff)."""
        return max(1.0, self.player1.max_abs(), self.player2.max_abs())

    def expectation(self, values: np.ndarray) -> np.ndarray:
        """(ΠV)(x) for every state."""
        return self.kernel @ values

    def relabeled(self, order: Sequence[int]) -> "DynkinGame":
        """The same game with states listed in ``order`` (a permutation of indices)."""
        order = np.asarray(order, dtype=int)
        return DynkinGame(
            space=StateSpace([self.states[i] for i in order]),
            kernel=self.kernel[np.ix_(order, order)],
            alpha=self.alpha,
            player1=self.player1.take(order),
            player2=self.player2.take(order),
        )


@dataclass(frozen=True)
class GameClass:
    is_zero_sum: bool
    is_symmetric: bool
    med_condition: bool = False
    f_equals_h: bool = False


class Kind(str, enum.Enum):
    ROW_SUM = "RowSumError"
    ALPHA_RANGE = "AlphaRangeError"
    LENGTH = "LengthMismatch"
    NON_FINITE = "NonFiniteEntry"
    PROBABILITY = "ProbabilityRange"
    EMPTY = "EmptyStateSpace"
    LABEL = "DuplicateLabel"


# ---------- MEDIAN ----------

def med(a: float, b: float, c: float) -> float:
    """Middle value of three numbers: min{max(a,b), max(a,c), max(b,c)}."""
    return min(max(a, b), max(a, c), max(b, c))


def med_array(a, b, c) -> np.ndarray:
    """Elementwise med() over arrays."""
    return np.minimum(np.minimum(np.maximum(a, b), np.maximum(a, c)), np.maximum(b, c))


# ---------- VALIDATION ----------

def find_violations(game: DynkinGame) -> List[Violation]:
    """Every invariant the game breaks, with state labels where one applies."""
    found = []
    labels = game.states
    n = len(labels)

    if n == 0:
        found.append(Violation(Kind.EMPTY.value, "at least one state is required"))
    if any((not isinstance(s, str)) or s == "" for s in labels):
        found.append(Violation(Kind.LABEL.value, "state labels must be non-empty strings"))
    if len(set(labels)) != n:
        dupes = sorted({s for s in labels if labels.count(s) > 1}, key=str)
        found.append(Violation(Kind.LABEL.value, f"duplicate labels {dupes}"))

    alpha = game.alpha
    if not math.isfinite(alpha) or not (0.0 < alpha < 1.0):
        found.append(Violation(Kind.ALPHA_RANGE.value, f"alpha must lie in (0, 1), got {alpha}"))

    kernel = game.kernel
    if kernel.shape != (n, n):
        found.append(Violation(Kind.LENGTH.value, f"kernel has shape {kernel.shape}, expected ({n}, {n})"))
    else:
        for i in range(n):
            row = kernel[i]
            if not np.all(np.isfinite(row)):
                found.append(Violation(Kind.NON_FINITE.value, "kernel row has non-finite entries", labels[i]))
                continue
            if np.any(row < 0.0) or np.any(row > 1.0):
                found.append(Violation(Kind.PROBABILITY.value, "kernel entries must lie in [0, 1]", labels[i]))
            total = float(np.sum(row))
            if abs(total - 1.0) > ROW_SUM_TOL:
                found.append(Violation(Kind.ROW_SUM.value, f"kernel row sums to {total!r}", labels[i]))

    for player in PLAYERS:
        triple = game.payoffs(player)
        for name in ("f", "g", "h"):
            arr = getattr(triple, name)
            field = f"player{player}.{name}"
            if arr.shape != (n,):
                found.append(Violation(Kind.LENGTH.value, f"{field} has {arr.size} entries for {n} states"))
                continue
            for i in np.flatnonzero(~np.isfinite(arr)):
                found.append(Violation(Kind.NON_FINITE.value, f"{field} = {arr[i]}", labels[i]))
    return found


def validate_game(game: DynkinGame) -> DynkinGame:
    """Return ``game`` if it satisfies every invariant, otherwise raise with the full list."""
    violations = find_violations(game)
    if violations:
        logger.warning("Game rejected with %d violation(s)", len(violations))
        raise GameValidationError(violations)
    return game


# ---------- CLASSIFICATION ----------

def classify_game(game: DynkinGame) -> GameClass:
    """Zero-sum / symmetric flags plus the structural conditions each solver path needs."""
    p1, p2 = game.player1, game.player2
    is_zero_sum = (np.array_equal(p1.f, -p2.g) and np.array_equal(p1.g, -p2.f)
                   and np.array_equal(p1.h, -p2.h))
    is_symmetric = (np.array_equal(p1.f, p2.f) and np.array_equal(p1.g, p2.g)
                    and np.array_equal(p1.h, p2.h))
    med_condition = False
    if is_zero_sum:
        med_condition = bool(np.array_equal(med_array(p1.f, p1.h, p1.g), p1.h))
    f_equals_h = bool(is_symmetric and np.array_equal(p1.f, p1.h))
    return GameClass(bool(is_zero_sum), bool(is_symmetric), med_condition, f_equals_h)


def med_condition_witnesses(game: DynkinGame) -> List[str]:
    """States where h is not the middle value of (f, h, g) for player 1."""
    t = game.player1
    bad = med_array(t.f, t.h, t.g) != t.h
    return [game.states[i] for i in np.flatnonzero(bad)]


# ---------- GAME FILES ----------

def _require(data: dict, key: str):
    if key not in data:
        raise SchemaError("missing required key", field=key)
    return data[key]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _triple_from(data, field: str, n: int) -> PayoffTriple:
    if not isinstance(data, dict):
        raise SchemaError("expected an object with keys f, g, h", field=field)
    arrays = {}
    for name in ("f", "g", "h"):
        if name not in data:
            raise SchemaError("missing required key", field=f"{field}.{name}")
        values = data[name]
        if not isinstance(values, list) or not all(_is_number(x) for x in values):
            raise SchemaError("expected a list of numbers", field=f"{field}.{name}")
        if len(values) != n:
            raise SchemaError(f"{len(values)} entries for {n} states",
                              field=f"{field}.{name}", kind="LengthMismatch")
        arrays[name] = values
    return PayoffTriple(**arrays)


def game_from_dict(data) -> DynkinGame:
    """Build and validate a game from the decoded JSON document."""
    if not isinstance(data, dict):
        raise SchemaError("top level must be a JSON object")
    states = _require(data, "states")
    if not isinstance(states, list):
        raise SchemaError("expected a list of state labels", field="states")
    if len(states) > MAX_STATES:
        raise ExplicitLimitError(len(states), MAX_STATES)
    if not all(isinstance(s, str) for s in states):
        raise SchemaError("state labels must be strings", field="states")
    n = len(states)

    alpha = _require(data, "alpha")
    if not _is_number(alpha):
        raise SchemaError("expected a number", field="alpha")

    kernel = _require(data, "kernel")
    if not isinstance(kernel, list) or len(kernel) != n:
        raise SchemaError(f"expected {n} rows", field="kernel", kind="LengthMismatch")
    for i, row in enumerate(kernel):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"row {i} must have {n} entries", field="kernel", kind="LengthMismatch")
        if not all(_is_number(x) for x in row):
            raise SchemaError(f"row {i} must hold numbers", field="kernel")

    if "zero_sum" in data:
        player1 = _triple_from(data["zero_sum"], "zero_sum", n)
        player2 = player1.zero_sum_partner()
    elif "symmetric" in data:
        player1 = _triple_from(data["symmetric"], "symmetric", n)
        player2 = player1
    else:
        player1 = _triple_from(_require(data, "player1"), "player1", n)
        player2 = _triple_from(_require(data, "player2"), "player2", n)

    game = DynkinGame(StateSpace(states), kernel, float(alpha), player1, player2)
    return validate_game(game)


def game_to_dict(game: DynkinGame) -> dict:
    """Full (non-shorthand) JSON form of a game."""
    def triple(t):
        return {"f": t.f.tolist(), "g": t.g.tolist(), "h": t.h.tolist()}
    return {
        "states": list(game.states),
        "alpha": game.alpha,
        "kernel": game.kernel.tolist(),
        "player1": triple(game.player1),
        "player2": triple(game.player2),
    }


def _read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror or e}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"{path} is not valid UTF-8") from e
    if not text.strip():
        raise ParseError(f"{path} is empty", line=1, column=1)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, column=e.colno) from e


def load_game(path) -> DynkinGame:
    """Read a game specification file."""
    game = game_from_dict(_read_json(path))
    logger.info("Loaded game with %d states from %s", game.n_states, path)
    return game


def save_game(path, game: DynkinGame):
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2) + "\n", encoding="utf-8")


def load_profiles(path, game: DynkinGame) -> Tuple[StoppingProfile, StoppingProfile]:
    """Read a profiles file ({"p1": [...], "p2": [...]}) in declared state order."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise SchemaError("top level must be a JSON object")
    profiles = []
    for key in ("p1", "p2"):
        values = _require(data, key)
        if not isinstance(values, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in values):
            raise SchemaError("expected a list of numbers", field=key)
        profile = StoppingProfile(values)
        profile.check(game.n_states, key)
        profiles.append(profile)
    return profiles[0], profiles[1]


def save_profiles(path, p1: StoppingProfile, p2: StoppingProfile):
    payload = {"p1": to_jsonable(p1.p), "p2": to_jsonable(p2.p)}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


# ---------- REPORTS ----------

def to_jsonable(obj):
    """
    Convert solver results into JSON-ready structures.

    Arrays become lists, enums their values, dataclasses dicts (or whatever their
    ``to_dict`` returns). Floats keep their shortest round-trip repr, which is
    lossless.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return repr(value)
        return float(format(value, ".17g"))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(x) for x in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return str(obj)


def save_report(path, report):
    Path(path).write_text(json.dumps(to_jsonable(report), indent=2) + "\n", encoding="utf-8")
