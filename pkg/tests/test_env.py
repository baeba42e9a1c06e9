"""Environment dynamics: validation, termination, noise law, rewards."""

import collections
import dataclasses

import numpy as np
import pytest

from heatgrid.catalog import (
    GRID_SIDE,
    L_OBSTACLE,
    grid2d_L,
    grid2d_moved_region,
    interval41,
    interval41_drift,
    make_spec,
    canonical_specs,
    uniform_interval,
)
from heatgrid.chain import displacement_pmf
from heatgrid.env import (
    ABSORBED,
    FINAL_POSITION,
    FIRST_CROSSING,
    LEFT,
    RIGHT,
    EnvState,
    GridSpec,
    SpecError,
    apply_micro_move,
    reset,
    sample_noise,
    step,
)

from helpers import assert_pmf_close


def _interval_spec(n=5, **overrides):
    base = dict(
        dims=1,
        extent=(n,),
        start=n // 2,
        temperature=np.zeros(n, dtype=int),
    )
    base.update(overrides)
    return GridSpec(**base)


def _grid_spec(**overrides):
    base = dict(
        dims=2,
        extent=(4, 4),
        start=(0, 0),
        goal=(3, 3),
        temperature=np.zeros((4, 4), dtype=int),
    )
    base.update(overrides)
    return GridSpec(**base)


# ---- validation ----

BAD_SPECS = [
    ("dims", lambda: _interval_spec(**{"dims": 3, "extent": (5, 5, 5)})),
    ("extent-mismatch", lambda: _interval_spec(extent=(5, 5))),
    ("extent-zero", lambda: _grid_spec(extent=(0, 4))),
    ("absorption", lambda: _interval_spec(absorption="sometimes")),
    ("r_tick", lambda: _interval_spec(r_tick=0)),
    ("even-interval", lambda: _interval_spec(n=6, start=3, temperature=np.zeros(6))),
    ("temp-shape-1d", lambda: _interval_spec(temperature=np.zeros(7))),
    ("goal-in-1d", lambda: _interval_spec(goal=(1, 1))),
    ("obstacles-in-1d", lambda: _interval_spec(obstacles={(1, 1)})),
    ("start-on-end", lambda: _interval_spec(start=0)),
    ("start-on-far-end", lambda: _interval_spec(start=4)),
    ("start-outside", lambda: _interval_spec(start=99)),
    ("drift-shape", lambda: _interval_spec(drift=np.zeros(3))),
    ("drift-range", lambda: _interval_spec(drift=np.full(5, 1.5))),
    ("temp-shape-2d", lambda: _grid_spec(temperature=np.zeros((3, 4)))),
    ("drift-in-2d", lambda: _grid_spec(drift=np.zeros(16))),
    ("no-goal", lambda: _grid_spec(goal=None)),
    ("start-out-of-grid", lambda: _grid_spec(start=(9, 0))),
    ("goal-equals-start", lambda: _grid_spec(goal=(0, 0))),
    ("obstacle-outside", lambda: _grid_spec(obstacles={(7, 7)})),
    ("start-on-obstacle", lambda: _grid_spec(obstacles={(0, 0)})),
    ("negative-temp", lambda: _interval_spec(temperature=np.array([0, -1, 0, 0, 0]))),
]


@pytest.mark.parametrize("label,build", BAD_SPECS, ids=[b[0] for b in BAD_SPECS])
def test_validate_rejects(label, build):
    with pytest.raises(SpecError):
        build()


def test_catalog_constructs_and_validates():
    factories = canonical_specs()
    assert len(factories) >= 5
    assert "interval41" in factories and "grid2d_L" in factories
    # every factory builds a valid world once required params are supplied
    required = {"grid2d_moved_region": {"variant": "corner"},
                "uniform_interval": {"half_width": 4}}
    for name, factory in factories.items():
        spec = factory(**required.get(name, {}))
        assert spec.name.startswith(name)
    # make_spec forwards params and rejects unknown names
    s = make_spec("uniform_interval", half_width=3, temperature=1)
    assert s.extent == (7,) and s.start == 3
    with pytest.raises(KeyError):
        make_spec("no_such_world")


def test_geometry_helpers():
    g = grid2d_L(0)
    assert g.n_states == GRID_SIDE * GRID_SIDE
    assert g.n_actions == 4
    for idx in range(g.n_states):
        assert g.state_index(g.cell_of(idx)) == idx
    iv = interval41()
    assert iv.n_states == 41 and iv.n_actions == 2
    assert iv.state_index(7) == 7 and iv.cell_of(7) == 7


# ---- termination semantics ----

def test_interval_ends_absorb():
    spec = interval41()
    assert spec.is_terminal(0) and spec.is_terminal(40)
    assert spec.is_terminal(-3) and spec.is_terminal(44)
    for cell in range(1, 40):
        assert not spec.is_terminal(cell)


def test_grid_terminates_only_at_goal():
    g = grid2d_L(0)
    assert g.is_terminal((9, 9))
    assert not g.is_terminal((0, 0)) and not g.is_terminal((9, 8))


def test_minimal_interval_right_move_terminates():
    # In a 3-cell cold interval the single interior cell sits next to both
    # ends, so one rightward policy move terminates with probability one.
    spec = uniform_interval(1, temperature=0)
    rng = np.random.default_rng(0)
    out = step(reset(spec), RIGHT, spec, rng)
    assert out.done and out.state.position == ABSORBED
    assert out.micro_trail == [2]
    # The same holds under first-crossing semantics at any temperature: the
    # policy move lands on an end before any noise is applied.
    hot = dataclasses.replace(uniform_interval(1, temperature=5),
                              absorption=FIRST_CROSSING)
    for seed in range(20):
        out = step(reset(hot), RIGHT, hot, np.random.default_rng(seed))
        assert out.done and out.micro_trail == [2]


def test_first_crossing_truncates_trail():
    spec = dataclasses.replace(interval41(3), absorption=FIRST_CROSSING)
    rng = np.random.default_rng(1)
    out = step(EnvState(position=39), RIGHT, spec, rng)
    assert out.done and out.micro_trail == [40]


def test_final_position_trail_length():
    spec = interval41(3)
    rng = np.random.default_rng(2)
    for _ in range(50):
        out = step(EnvState(position=25), RIGHT, spec, rng)
        assert len(out.micro_trail) == 4  # policy move plus T=3 noise moves
        assert not out.done
    drifted = interval41_drift()
    lengths = set()
    for _ in range(200):
        out = step(EnvState(position=35), RIGHT, drifted, rng)
        lengths.add(len(out.micro_trail))
    assert lengths == {4, 5}  # drift appends one extra move at probability 0.3


def test_final_position_survives_end_overshoot():
    # Under final-position semantics a walker may step past an end mid-frame
    # and come back; only the frame's last position decides absorption.
    spec = uniform_interval(2, temperature=2)  # cells 0..4, start 2
    rng = np.random.default_rng(3)
    survived_via_end = False
    for _ in range(500):
        out = step(EnvState(position=3), RIGHT, spec, rng)
        trail = out.micro_trail
        if not out.done and any(c >= 4 or c <= 0 for c in trail[:-1]):
            survived_via_end = True
    assert survived_via_end


# ---- 2D walls ----

def test_walls_and_obstacles_are_void_exhaustive():
    g = grid2d_L(0)
    cells = [(x, y) for x in range(10) for y in range(10)
             if (x, y) not in g.obstacles]
    for cell in cells:
        for mv in g.moves():
            target = (cell[0] + mv[0], cell[1] + mv[1])
            nxt = apply_micro_move(cell, mv, g)
            if g.in_bounds(target) and target not in g.obstacles:
                assert nxt == target
            else:
                assert nxt == cell
            assert g.in_bounds(nxt) and nxt not in g.obstacles


def test_obstacle_layout():
    assert L_OBSTACLE == frozenset(
        {(x, 5) for x in range(1, 6)} | {(5, y) for y in range(1, 6)})
    g = grid2d_L(3)
    heated = {(x, y) for x in range(10) for y in range(10)
              if g.temperature_at((x, y)) > 0}
    assert heated == {(x, y) for x in range(5, 10) for y in range(0, 5)}


# ---- noise law ----

def test_noise_moves_uniform():
    rng = np.random.default_rng(10)
    draws_2d = sample_noise(20_000, 2, rng)
    counts = collections.Counter(draws_2d)
    assert_pmf_close(counts, 20_000, {m: 0.25 for m in grid2d_L(0).moves()},
                     label="2d noise")
    draws_1d = sample_noise(20_000, 1, rng)
    counts = collections.Counter(draws_1d)
    assert_pmf_close(counts, 20_000, {-1: 0.5, 1: 0.5}, label="1d noise")
    assert sample_noise(0, 1, rng) == []


def test_cold_cell_moves_deterministically():
    spec = interval41(3)  # left half cold
    rng = np.random.default_rng(11)
    for _ in range(20):
        assert step(EnvState(position=5), RIGHT, spec, rng).state.position == 6
        assert step(EnvState(position=5), LEFT, spec, rng).state.position == 4


def test_displacement_matches_convolution_law():
    spec = interval41(3)
    rng = np.random.default_rng(12)
    n = 20_000
    counts = collections.Counter(
        step(EnvState(position=25), RIGHT, spec, rng).state.position - 25
        for _ in range(n))
    law = displacement_pmf(3, +1)
    assert set(law) == {-2, 0, 2, 4}
    assert all((1 + 3 + d) % 2 == 0 for d in counts)  # parity of 1+T moves
    assert_pmf_close(counts, n, law, label="T=3 displacement")


def test_displacement_with_drift():
    spec = interval41_drift()  # temperature 3, drift 0.3 on cells 31+
    rng = np.random.default_rng(13)
    n = 20_000
    counts = collections.Counter(
        step(EnvState(position=35), RIGHT, spec, rng).state.position - 35
        for _ in range(n))
    law = displacement_pmf(3, +1, drift_prob=0.3)
    assert_pmf_close(counts, n, law, label="drifted displacement")


# ---- rewards and episodes ----

def _up_then_right(cell):
    return 3 if cell[1] < 9 else 1  # action indices: up = 3, right = 1


def test_cold_grid_episode_reward():
    g = grid2d_L(0)
    rng = np.random.default_rng(14)
    state, total = reset(g), 0
    while True:
        out = step(state, _up_then_right(state.position), g, rng)
        total += out.reward
        state = out.state
        if out.done:
            break
    assert state.frames == 18
    assert total == -18 + 100


def test_cold_interval_episode_reward():
    spec = interval41(temperature=0)
    rng = np.random.default_rng(15)
    state, total = reset(spec), 0
    while True:
        out = step(state, LEFT, spec, rng)
        total += out.reward
        state = out.state
        if out.done:
            break
    assert state.frames == 20 and total == -20


def test_bfs_shortest_path_is_18():
    g = grid2d_L(0)
    dist = {g.start: 0}
    frontier = [g.start]
    while frontier:
        nxt_frontier = []
        for cell in frontier:
            for mv in g.moves():
                t = (cell[0] + mv[0], cell[1] + mv[1])
                if g.in_bounds(t) and t not in g.obstacles and t not in dist:
                    dist[t] = dist[cell] + 1
                    nxt_frontier.append(t)
        frontier = nxt_frontier
    assert dist[g.goal] == 18


# ---- error paths and determinism ----

def test_step_on_absorbed_raises():
    spec = uniform_interval(1, temperature=0)
    rng = np.random.default_rng(16)
    out = step(reset(spec), RIGHT, spec, rng)
    with pytest.raises(RuntimeError):
        step(out.state, LEFT, spec, rng)


def test_bad_action_raises():
    spec = interval41()
    with pytest.raises(ValueError):
        step(reset(spec), 2, spec, np.random.default_rng(17))
    g = grid2d_L(0)
    with pytest.raises(ValueError):
        step(reset(g), 4, g, np.random.default_rng(17))


def test_step_is_deterministic_given_seed():
    spec = interval41_drift()

    def run(seed):
        rng = np.random.default_rng(seed)
        state, record = reset(spec), []
        for _ in range(300):
            out = step(state, RIGHT, spec, rng)
            record.append((out.state.position, out.reward, out.done))
            state = reset(spec) if out.done else out.state
        return record

    assert run(99) == run(99)
    assert run(99) != run(100)


# ---- serialization ----

@pytest.mark.parametrize("spec", [grid2d_L(3), interval41_drift(),
                                  grid2d_moved_region("corner")],
                         ids=["grid-L", "drift", "moved-region"])
def test_json_roundtrip(spec):
    back = GridSpec.from_json(spec.to_json())
    assert back.dims == spec.dims and back.extent == spec.extent
    assert back.start == spec.start and back.goal == spec.goal
    assert back.obstacles == spec.obstacles
    assert np.array_equal(back.temperature, spec.temperature)
    if spec.drift is None:
        assert back.drift is None
    else:
        assert np.array_equal(back.drift, spec.drift)
    assert back.r_tick == spec.r_tick and back.r_target == spec.r_target
    assert back.absorption == spec.absorption and back.name == spec.name


def test_from_json_dict_defaults():
    spec = GridSpec.from_json_dict({
        "dims": 1, "extent": [5], "start": 2, "temperature": [0, 0, 0, 0, 0],
    })
    assert spec.obstacles == frozenset()
    assert spec.r_tick == -1 and spec.r_target == 0
    assert spec.absorption == FINAL_POSITION and spec.name == ""
