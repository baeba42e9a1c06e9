"""Heated gridworld dynamics.

A world is a finite grid (2D) or an interval of cells (1D). Every cell carries
a non-negative integer temperature. One frame proceeds in three stages:

1. the agent picks a cardinal move (the policy move);
2. the temperature T of the cell the frame started in is read, and T extra
   unit moves are drawn independently and uniformly over the cardinal
   directions (thermal noise);
3. the policy move and the noise moves are applied one after the other. In 2D
   a micro-move that would leave the grid or enter an obstacle is void (the
   position does not change); in 1D there are no walls and positions outside
   the interval are representable.

1D worlds may additionally carry a per-cell drift probability: with that
probability one extra leftward move is appended after the noise moves.

Absorption is configurable. The terminal set is the goal cell in 2D and the
two end cells of the interval in 1D (the walk lives on the interior; landing
on or beyond an end terminates). Under ``final-position`` semantics only the
position after the whole micro-sequence is tested, so a walker may pass over
an end cell mid-frame and survive by returning. Under ``first-crossing``
semantics the test runs after every micro-move and the remaining moves are
discarded on a hit.

Rewards: every frame costs ``r_tick`` (negative); the terminating frame
additionally pays ``r_target``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# Distinguished token for the absorbing state. `step` must never be called on it.
ABSORBED = "absorbed"

FINAL_POSITION = "final-position"
FIRST_CROSSING = "first-crossing"

# Action/move tables. Action indices are the public contract: greedy
# tie-breaking and policy serialization rely on this fixed order.
MOVES_1D = (-1, 1)                              # left, right
MOVES_2D = ((-1, 0), (1, 0), (0, -1), (0, 1))   # left, right, down, up
ACTION_NAMES_1D = ("left", "right")
ACTION_NAMES_2D = ("left", "right", "down", "up")
LEFT, RIGHT = 0, 1


class SpecError(ValueError):
    """Raised when a GridSpec violates a structural invariant."""


@dataclass(eq=False)
class GridSpec:
    """Full description of one world.

    extent is (width, height) for 2D and (n_cells,) for 1D. temperature (and
    drift, 1D only) are dense arrays over interior cells; 2D arrays are
    indexed [y, x]. obstacles is a frozenset of 2D cells. goal is required in
    2D; in 1D termination means leaving the interval, so goal is None.
    """

    dims: int
    extent: tuple[int, ...]
    start: tuple[int, int] | int
    temperature: np.ndarray
    goal: tuple[int, int] | None = None
    obstacles: frozenset = field(default_factory=frozenset)
    drift: np.ndarray | None = None
    r_tick: int = -1
    r_target: int = 0
    absorption: str = FINAL_POSITION
    name: str = ""

    def __post_init__(self):
        self.extent = tuple(int(e) for e in self.extent)
        self.temperature = np.asarray(self.temperature, dtype=np.int64)
        if self.drift is not None:
            self.drift = np.asarray(self.drift, dtype=np.float64)
        self.obstacles = frozenset(tuple(c) for c in self.obstacles)
        if self.dims == 2 and self.start is not None:
            self.start = tuple(self.start)
        if self.goal is not None:
            self.goal = tuple(self.goal)
        validate_spec(self)

    # ---- geometry helpers ----

    @property
    def n_states(self) -> int:
        if self.dims == 1:
            return self.extent[0]
        w, h = self.extent
        return w * h

    @property
    def n_actions(self) -> int:
        return 2 * self.dims

    def moves(self):
        return MOVES_1D if self.dims == 1 else MOVES_2D

    def in_bounds(self, cell) -> bool:
        if self.dims == 1:
            return 0 <= cell < self.extent[0]
        x, y = cell
        w, h = self.extent
        return 0 <= x < w and 0 <= y < h

    def state_index(self, cell) -> int:
        """Dense index of an interior cell (row-major in 2D)."""
        if self.dims == 1:
            return int(cell)
        x, y = cell
        return y * self.extent[0] + x

    def cell_of(self, index: int):
        if self.dims == 1:
            return int(index)
        w = self.extent[0]
        return (int(index % w), int(index // w))

    def temperature_at(self, cell) -> int:
        if self.dims == 1:
            return int(self.temperature[cell])
        x, y = cell
        return int(self.temperature[y, x])

    def drift_at(self, cell) -> float:
        if self.drift is None:
            return 0.0
        return float(self.drift[cell])

    def is_terminal(self, cell) -> bool:
        """Termination test for a raw position.

        2D: the goal cell. 1D: the two end cells absorb, so the walk lives
        on the interior 1..n-2; positions at or beyond an end terminate.
        """
        if self.dims == 1:
            return cell <= 0 or cell >= self.extent[0] - 1
        return tuple(cell) == self.goal

    # ---- serialization ----

    def to_json_dict(self) -> dict:
        return {
            "dims": self.dims,
            "extent": list(self.extent),
            "start": list(self.start) if self.dims == 2 else self.start,
            "goal": list(self.goal) if self.goal is not None else None,
            "obstacles": sorted(list(c) for c in self.obstacles),
            "temperature": self.temperature.tolist(),
            "drift": self.drift.tolist() if self.drift is not None else None,
            "r_tick": self.r_tick,
            "r_target": self.r_target,
            "absorption": self.absorption,
            "name": self.name,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "GridSpec":
        return cls(
            dims=d["dims"],
            extent=tuple(d["extent"]),
            start=tuple(d["start"]) if d["dims"] == 2 else d["start"],
            goal=tuple(d["goal"]) if d.get("goal") is not None else None,
            obstacles=frozenset(tuple(c) for c in d.get("obstacles", [])),
            temperature=np.array(d["temperature"]),
            drift=np.array(d["drift"]) if d.get("drift") is not None else None,
            r_tick=d.get("r_tick", -1),
            r_target=d.get("r_target", 0),
            absorption=d.get("absorption", FINAL_POSITION),
            name=d.get("name", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "GridSpec":
        return cls.from_json_dict(json.loads(text))


def validate_spec(spec: GridSpec) -> None:
    if spec.dims not in (1, 2):
        raise SpecError(f"dims must be 1 or 2, got {spec.dims}")
    if len(spec.extent) != spec.dims:
        raise SpecError(f"extent {spec.extent} does not match dims {spec.dims}")
    if any(e < 1 for e in spec.extent):
        raise SpecError(f"extent entries must be positive, got {spec.extent}")
    if spec.absorption not in (FINAL_POSITION, FIRST_CROSSING):
        raise SpecError(f"unknown absorption semantics {spec.absorption!r}")
    if spec.r_tick >= 0:
        raise SpecError(f"r_tick must be negative, got {spec.r_tick}")

    if spec.dims == 1:
        n = spec.extent[0]
        if n % 2 == 0:
            raise SpecError(f"1D extent must be odd so a centre cell exists, got {n}")
        if spec.temperature.shape != (n,):
            raise SpecError(
                f"temperature shape {spec.temperature.shape} does not cover {n} cells")
        if spec.goal is not None:
            raise SpecError("1D worlds terminate at the absorbing ends; goal must be None")
        if spec.obstacles:
            raise SpecError("obstacles are only supported in 2D")
        if not isinstance(spec.start, (int, np.integer)) or not 0 < spec.start < n - 1:
            raise SpecError(f"start {spec.start!r} is not an interior cell of (0, {n - 1})")
        if spec.drift is not None:
            if spec.drift.shape != (n,):
                raise SpecError(
                    f"drift shape {spec.drift.shape} does not cover {n} cells")
            if np.any(spec.drift < 0) or np.any(spec.drift > 1):
                raise SpecError("drift entries must be probabilities in [0, 1]")
    else:
        w, h = spec.extent
        if spec.temperature.shape != (h, w):
            raise SpecError(
                f"temperature shape {spec.temperature.shape} != (height, width) {(h, w)}")
        if spec.drift is not None:
            raise SpecError("drift is only supported in 1D")
        if spec.goal is None:
            raise SpecError("2D worlds need a goal cell")
        for label, cell in (("start", spec.start), ("goal", spec.goal)):
            if not spec.in_bounds(cell):
                raise SpecError(f"{label} {cell} lies outside the grid")
            if cell in spec.obstacles:
                raise SpecError(f"{label} {cell} is an obstacle cell")
        if spec.start == spec.goal:
            raise SpecError("start and goal must differ")
        for cell in spec.obstacles:
            if not spec.in_bounds(cell):
                raise SpecError(f"obstacle {cell} lies outside the grid")
    if np.any(spec.temperature < 0):
        raise SpecError("temperatures must be non-negative integers")


@dataclass
class EnvState:
    """Position plus a frame counter. position is ABSORBED once terminated."""
    position: object
    frames: int = 0


@dataclass
class StepOutcome:
    state: EnvState
    reward: int
    done: bool
    # positions after each applied micro-move, truncated at absorption under
    # first-crossing semantics; length = 1 + T + (0 or 1 drift move) otherwise
    micro_trail: list


def reset(spec: GridSpec) -> EnvState:
    return EnvState(position=spec.start, frames=0)


def sample_noise(temperature: int, dims: int, rng: np.random.Generator) -> list:
    """Draw `temperature` unit moves, each uniform over the 2*dims directions."""
    if temperature == 0:
        return []
    moves = MOVES_1D if dims == 1 else MOVES_2D
    picks = rng.integers(0, 2 * dims, size=temperature)
    return [moves[int(i)] for i in picks]


def apply_micro_move(cell, move, spec: GridSpec):
    """One unit move. 2D walls and obstacles are reflective: the move is void."""
    if spec.dims == 1:
        return cell + move
    target = (cell[0] + move[0], cell[1] + move[1])
    if not spec.in_bounds(target) or target in spec.obstacles:
        return cell
    return target


def step(state: EnvState, action: int, spec: GridSpec, rng: np.random.Generator) -> StepOutcome:
    """Advance one frame: policy move, thermal noise, optional drift."""
    pos = state.position
    if pos == ABSORBED:
        raise RuntimeError("step() called on an absorbed state")
    if not 0 <= action < spec.n_actions:
        raise ValueError(f"action {action} out of range for {spec.n_actions} actions")

    temperature = spec.temperature_at(pos)
    moves = [spec.moves()[action]]
    moves.extend(sample_noise(temperature, spec.dims, rng))
    drift_p = spec.drift_at(pos)
    if drift_p > 0 and rng.random() < drift_p:
        moves.append(MOVES_1D[LEFT])

    trail = []
    done = False
    for mv in moves:
        pos = apply_micro_move(pos, mv, spec)
        trail.append(pos)
        if spec.absorption == FIRST_CROSSING and spec.is_terminal(pos):
            done = True
            break
    if spec.absorption == FINAL_POSITION:
        done = spec.is_terminal(pos)

    reward = spec.r_tick + (spec.r_target if done else 0)
    nxt = EnvState(position=ABSORBED if done else pos, frames=state.frames + 1)
    return StepOutcome(state=nxt, reward=reward, done=done, micro_trail=trail)
