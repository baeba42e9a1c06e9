"""Vectorised engine: batched frame law, rollouts, lock-step training."""

import collections
import itertools

import numpy as np
import pytest

import heatgrid.engine as engine
from heatgrid.catalog import grid2d_L, interval41, interval41_drift, uniform_interval
from heatgrid.chain import build_transition_matrix
from heatgrid.engine import (
    argmax_tiebreak,
    greedy_policies,
    rollout_population,
    sample_frame_positions,
    train_population,
    vec_eps_greedy,
)
from heatgrid.env import GridSpec, apply_micro_move
from heatgrid.evaluate import threshold_policy_1d
from heatgrid.learners import Hyperparams

from helpers import assert_binomial, assert_pmf_close


# ---- action selection ----

def test_argmax_tiebreak_unique_rows():
    rows = np.array([[0.0, 3.0, 1.0], [9.0, 0.0, 0.0]])
    out = argmax_tiebreak(rows, np.random.default_rng(50))
    assert out.tolist() == [1, 0]


def test_argmax_tiebreak_uniform_over_ties():
    rows = np.tile(np.array([[1.0, 0.0, 1.0, 1.0]]), (9000, 1))
    out = argmax_tiebreak(rows, np.random.default_rng(51))
    counts = collections.Counter(out.tolist())
    assert counts[1] == 0
    for a in (0, 2, 3):
        assert_binomial(counts[a], 9000, 1 / 3, label=f"tied action {a}")


def test_argmax_tiebreak_consumes_one_draw_per_row():
    rows = np.ones((7, 3))
    rng = np.random.default_rng(52)
    argmax_tiebreak(rows, rng)
    probe = rng.random()
    ref = np.random.default_rng(52)
    ref.random(7)
    assert probe == ref.random()


def test_vec_eps_greedy_draw_structure_is_eps_independent():
    # both branches must consume identical draw blocks so that downstream
    # randomness does not depend on the epsilon value
    rows = np.tile(np.array([[0.0, 1.0]]), (11, 1))
    after = []
    for eps in (0.0, 1.0, 0.3):
        rng = np.random.default_rng(53)
        vec_eps_greedy(rows, eps, rng)
        after.append(rng.random())
    assert after[0] == after[1] == after[2]


def test_vec_eps_greedy_limits():
    rows = np.tile(np.array([[0.0, 1.0]]), (6000, 1))
    greedy = vec_eps_greedy(rows, 0.0, np.random.default_rng(54))
    assert np.all(greedy == 1)
    explore = vec_eps_greedy(rows, 1.0, np.random.default_rng(55))
    assert_binomial(int((explore == 0).sum()), 6000, 0.5, label="explore split")


# ---- one-frame law against the exact chain ----

def law_from_matrix(m, cell, n_states):
    law = {j: m[cell, j] for j in range(n_states) if m[cell, j] > 0}
    if m[cell, -1] > 0:
        law["abs"] = m[cell, -1]
    return law


@pytest.mark.parametrize("spec_builder,k", [
    (lambda: interval41(3), 1),
    (lambda: interval41_drift(), 0),
], ids=["heated", "drifted"])
def test_frame_law_matches_chain(spec_builder, k):
    spec = spec_builder()
    policy = threshold_policy_1d(spec, k)
    m = build_transition_matrix(spec, policy)
    rng = np.random.default_rng(56)
    n = 50_000
    for cell in (15, 20, 25, 35, 39):
        pos, done = sample_frame_positions(spec, cell, int(policy[cell]), n, rng)
        counts = collections.Counter(
            "abs" if d else int(p) for p, d in zip(pos, done))
        assert_pmf_close(counts, n, law_from_matrix(m, cell, spec.n_states),
                         label=f"cell {cell}")


def test_2d_frame_law_matches_enumeration():
    # Exact one-frame pmf by enumerating the 4^3 noise sequences next to the
    # obstacle wall, where reflections actually bite.
    g = grid2d_L(3)
    start_cell = (6, 2)
    law = collections.Counter()
    for seq in itertools.product(g.moves(), repeat=3):
        c = apply_micro_move(start_cell, g.moves()[0], g)  # policy move left
        for mv in seq:
            c = apply_micro_move(c, mv, g)
        law[g.state_index(c)] += 1 / 64
    rng = np.random.default_rng(57)
    n = 100_000
    pos, done = sample_frame_positions(g, start_cell, 0, n, rng)
    assert not done.any()  # goal is far away
    counts = collections.Counter(int(p) for p in pos)
    assert_pmf_close(counts, n, dict(law), label="2d cloud")


def test_2d_goal_touch_ends_frame():
    g = grid2d_L(3)  # first-crossing by default
    pos, done = sample_frame_positions(g, (9, 8), 3, 2000, np.random.default_rng(58))
    assert done.all()
    assert np.all(pos == g.state_index(g.goal))


# ---- rollouts ----

def test_rollout_population_cold_interval():
    spec = interval41(temperature=0)
    policies = np.stack([threshold_policy_1d(spec, -1)] * 4)
    stats = rollout_population(spec, policies, 2, None, np.random.default_rng(59))
    assert stats.total == 8 and stats.done.all() and stats.unfinished == 0
    assert np.all(stats.lengths == 20)


def test_rollout_population_cutoff():
    spec = interval41(temperature=0)
    policies = np.stack([threshold_policy_1d(spec, -1)] * 3)
    stats = rollout_population(spec, policies, 1, 5, np.random.default_rng(60))
    assert stats.unfinished == 3 and not stats.done.any()


def test_rollout_population_shape_validation():
    spec = interval41(temperature=0)
    with pytest.raises(ValueError):
        rollout_population(spec, np.zeros((2, 7), dtype=np.int64), 1, 10,
                           np.random.default_rng(61))


def test_rollout_population_hard_cap(monkeypatch):
    # a cold two-cell oscillator never terminates; the hard cap must cut it
    spec = uniform_interval(2, temperature=0)
    policy = np.array([1, 1, 0, 0, 0])  # cell 2 -> left, cell 1 -> right
    monkeypatch.setattr(engine, "HARD_CAP", 50)
    stats = rollout_population(spec, policy[None, :], 4, None,
                               np.random.default_rng(62))
    assert stats.unfinished == 4 and not stats.done.any()


def test_rollout_density_and_heat_tracking():
    g = grid2d_L(0)
    policy = np.empty(g.n_states, dtype=np.int64)
    for idx in range(g.n_states):
        x, y = g.cell_of(idx)
        policy[idx] = 3 if y < 9 else 1
    stats = rollout_population(g, policy[None, :], 3, 500,
                               np.random.default_rng(63),
                               collect_density=True, track_heated=True)
    assert stats.done.all() and np.all(stats.lengths == 18)
    assert not stats.heated.any()  # world is cold
    # deterministic route: 9 cells up the left column, 9 cells along the top
    expect = np.zeros(g.n_states, dtype=np.int64)
    for y in range(1, 10):
        expect[g.state_index((0, y))] = 3
    for x in range(1, 10):
        expect[g.state_index((x, 9))] = 3
    assert np.array_equal(stats.density, expect)


def test_rollout_determinism():
    spec = interval41(3)
    policies = np.stack([threshold_policy_1d(spec, k) for k in (0, 1, 2)])
    a = rollout_population(spec, policies, 5, 500, np.random.default_rng(64))
    b = rollout_population(spec, policies, 5, 500, np.random.default_rng(64))
    assert np.array_equal(a.lengths, b.lengths)
    assert np.array_equal(a.done, b.done)


# ---- lock-step population training ----

def test_train_population_shapes_and_snapshots():
    spec = interval41(1)
    hyper = Hyperparams(alpha=0.2, gamma=0.9, epsilon=0.1)
    tables = train_population(spec, "double_q", hyper, 400, 6,
                              np.random.default_rng(65), checkpoints=(200, 400))
    assert tables.q.shape == (6, 41, 2) and tables.q_b.shape == (6, 41, 2)
    assert tables.frames == 400
    assert sorted(tables.snapshots) == [200, 400]
    q200, qb200 = tables.snapshots[200]
    assert q200.shape == tables.q.shape and qb200 is not None
    q400, _ = tables.snapshots[400]
    assert np.array_equal(q400, tables.q)
    assert not np.array_equal(q200, tables.q)
    with pytest.raises(ValueError):
        train_population(spec, "q", hyper, 400, 2, np.random.default_rng(0),
                         checkpoints=(500,))
    with pytest.raises(ValueError):
        train_population(spec, "qq", hyper, 400, 2, np.random.default_rng(0))


@pytest.mark.parametrize("algorithm", ["q", "sarsa", "expected_sarsa", "double_q"])
def test_train_population_snapshot_purity(algorithm):
    spec = uniform_interval(5, temperature=2)
    hyper = Hyperparams(alpha=0.3, gamma=0.9, epsilon=0.2)
    full = train_population(spec, algorithm, hyper, 300, 5,
                            np.random.default_rng(66), checkpoints=(150,))
    short = train_population(spec, algorithm, hyper, 150, 5,
                             np.random.default_rng(66))
    assert np.array_equal(full.snapshots[150][0], short.q)


def test_train_population_determinism():
    spec = interval41(3)
    hyper = Hyperparams(alpha=0.1, gamma=0.9, epsilon=0.1)
    a = train_population(spec, "q", hyper, 500, 8, np.random.default_rng(67))
    b = train_population(spec, "q", hyper, 500, 8, np.random.default_rng(67))
    assert np.array_equal(a.q, b.q)


def test_train_population_learns_the_cold_interval():
    # all agents must find the 20-step exit from the centre of a cold world
    spec = interval41(temperature=0)
    hyper = Hyperparams(alpha=0.5, gamma=0.9, epsilon=0.3)
    tables = train_population(spec, "q", hyper, 20_000, 10,
                              np.random.default_rng(68))
    policies = greedy_policies(tables.q)
    stats = rollout_population(spec, policies, 1, 500, np.random.default_rng(69))
    assert stats.done.all()
    assert np.all(stats.lengths == 20)


def test_greedy_policies_shapes():
    q = np.zeros((3, 5, 2))
    q[:, :, 1] = 1.0
    assert np.all(greedy_policies(q) == 1)
    q_b = np.zeros_like(q)
    q_b[:, :, 0] = 2.0
    assert np.all(greedy_policies(q, q_b) == 0)
