"""Vectorised population simulation.

The scalar functions in `env` define the dynamics; this module replays the
same three-stage frame (policy move, thermal noise of the frame-start cell,
optional drift) across whole batches of independent walkers with numpy. 2D
reflection tables are generated from `env.apply_micro_move`, so there is a
single source of truth for the geometry.

Determinism contract: for a given batch size every frame consumes a fixed
sequence of draws from the supplied generator (behaviour draws, then one
block of noise directions, then drift uniforms, then algorithm extras), so a
(seed, config) pair fully determines every result no matter how the caller
schedules blocks across processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import FIRST_CROSSING, GridSpec, MOVES_1D, apply_micro_move
from .learners import ALGORITHMS, Hyperparams

# Fixed-policy rollouts without a cutoff stop here and flag the remainder.
HARD_CAP = 1_000_000


@dataclass
class EncodedWorld:
    dims: int
    n_states: int
    n_actions: int
    start_index: int
    temp: np.ndarray                 # int64 [n_states]
    max_temp: int
    first_crossing: bool
    r_tick: int
    r_target: int
    has_drift: bool
    drift: np.ndarray | None         # float64 [n_states] (1D)
    unit_moves: np.ndarray | None    # int64 [2] = (-1, +1)    (1D)
    move_to: np.ndarray | None       # int64 [n_states, 4]     (2D)
    goal_index: int | None


def encode_world(spec: GridSpec) -> EncodedWorld:
    n = spec.n_states
    if spec.dims == 1:
        temp = spec.temperature.astype(np.int64)
        has_drift = spec.drift is not None and bool(np.any(spec.drift > 0))
        return EncodedWorld(
            dims=1, n_states=n, n_actions=2,
            start_index=int(spec.start), temp=temp, max_temp=int(temp.max()),
            first_crossing=spec.absorption == FIRST_CROSSING,
            r_tick=spec.r_tick, r_target=spec.r_target,
            has_drift=has_drift,
            drift=(spec.drift.astype(np.float64) if has_drift else None),
            unit_moves=np.array(MOVES_1D, dtype=np.int64),
            move_to=None, goal_index=None)
    temp = np.empty(n, dtype=np.int64)
    move_to = np.empty((n, spec.n_actions), dtype=np.int64)
    for idx in range(n):
        cell = spec.cell_of(idx)
        temp[idx] = spec.temperature_at(cell)
        for a, mv in enumerate(spec.moves()):
            move_to[idx, a] = spec.state_index(apply_micro_move(cell, mv, spec))
    return EncodedWorld(
        dims=2, n_states=n, n_actions=spec.n_actions,
        start_index=spec.state_index(spec.start), temp=temp,
        max_temp=int(temp.max()),
        first_crossing=spec.absorption == FIRST_CROSSING,
        r_tick=spec.r_tick, r_target=spec.r_target,
        has_drift=False, drift=None, unit_moves=None,
        move_to=move_to, goal_index=spec.state_index(spec.goal))


# ---- batched action selection ----

def argmax_tiebreak(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise argmax with uniform random tie-breaking (one draw per row)."""
    ties = rows == rows.max(axis=1, keepdims=True)
    counts = ties.sum(axis=1)
    kth = (rng.random(rows.shape[0]) * counts).astype(np.int64)
    cumulative = np.cumsum(ties, axis=1)
    return np.argmax(cumulative > kth[:, None], axis=1)


def vec_eps_greedy(rows: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Batched epsilon-greedy; always consumes three draw blocks per call."""
    explore = rng.random(rows.shape[0]) < eps
    random_actions = rng.integers(0, rows.shape[1], size=rows.shape[0])
    greedy = argmax_tiebreak(rows, rng)
    return np.where(explore, random_actions, greedy).astype(np.int64)


# ---- batched frame ----

def _terminal(world: EncodedWorld, cur: np.ndarray) -> np.ndarray:
    if world.dims == 2:
        return cur == world.goal_index
    return (cur <= 0) | (cur >= world.n_states - 1)


def _collect(world, cur, mask, density, heated):
    if density is not None:
        sel = cur if mask is None else cur[mask]
        if world.dims == 1:
            sel = sel[(sel >= 0) & (sel < world.n_states)]
        np.add.at(density, sel, 1)
    if heated is not None and world.dims == 2:
        hot = world.temp[cur] > 0
        if mask is not None:
            hot = hot & mask
        heated |= hot


def advance_frame(world: EncodedWorld, pos: np.ndarray, act: np.ndarray,
                  rng: np.random.Generator, density=None, heated=None):
    """One frame for a batch of interior positions. Returns (new_pos, done).

    Collectors, when given, accumulate the micro-trail: `density` (flat int64
    visit counts) gets every applied micro-move slot, `heated` (bool per
    walker, 2D only) records contact with temperature > 0 cells.
    """
    batch = pos.shape[0]
    temp0 = world.temp[pos]
    drift0 = world.drift[pos] if world.has_drift else None
    done = np.zeros(batch, dtype=bool)

    cur = world.move_to[pos, act] if world.dims == 2 else pos + world.unit_moves[act]
    if world.first_crossing:
        done |= _terminal(world, cur)
    _collect(world, cur, None, density, heated)

    if world.max_temp > 0:
        dirs = rng.integers(0, world.n_actions, size=(world.max_temp, batch))
        for k in range(world.max_temp):
            use = (temp0 > k) & ~done
            stepped = (world.move_to[cur, dirs[k]] if world.dims == 2
                       else cur + world.unit_moves[dirs[k]])
            cur = np.where(use, stepped, cur)
            if world.first_crossing:
                done |= use & _terminal(world, cur)
            _collect(world, cur, use, density, heated)

    if world.has_drift:
        use = (rng.random(batch) < drift0) & ~done
        cur = np.where(use, cur - 1, cur)
        if world.first_crossing:
            done |= use & _terminal(world, cur)
        _collect(world, cur, use, density, heated)

    if not world.first_crossing:
        done = _terminal(world, cur)
    return cur, done


# ---- population training ----

@dataclass
class PopulationTables:
    algorithm: str
    q: np.ndarray                    # [agents, states, actions], final
    q_b: np.ndarray | None
    snapshots: dict                  # frame -> (q copy, q_b copy or None)
    frames: int


def train_population(spec: GridSpec, algorithm: str, hyper: Hyperparams,
                     frame_budget: int, n_agents: int, rng: np.random.Generator,
                     checkpoints=()) -> PopulationTables:
    """Train n_agents independent learners in lock-step for frame_budget frames.

    Functionally each agent runs the scalar loop from `learners.train`; the
    population shares one generator, drawing fixed-size blocks per frame.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}")
    wanted = set(checkpoints)
    for f in wanted:
        if not 0 < f <= frame_budget:
            raise ValueError(f"checkpoint {f} outside (0, {frame_budget}]")

    world = encode_world(spec)
    agents = np.arange(n_agents)
    q = np.full((n_agents, world.n_states, world.n_actions), hyper.q_init,
                dtype=np.float64)
    q_b = q.copy() if algorithm == "double_q" else None
    pos = np.full(n_agents, world.start_index, dtype=np.int64)
    alpha, gamma = hyper.alpha, hyper.gamma
    snapshots: dict[int, tuple] = {}

    pending = None
    if algorithm == "sarsa":
        pending = vec_eps_greedy(q[agents, pos],
                                 hyper.epsilon.value(0, frame_budget), rng)

    for t in range(frame_budget):
        eps = hyper.epsilon.value(t, frame_budget)
        if algorithm == "sarsa":
            act = pending
        elif algorithm == "double_q":
            act = vec_eps_greedy(q[agents, pos] + q_b[agents, pos], eps, rng)
        else:
            act = vec_eps_greedy(q[agents, pos], eps, rng)

        new_pos, done = advance_frame(world, pos, act, rng)
        reward = np.where(done, world.r_tick + world.r_target, world.r_tick
                          ).astype(np.float64)
        not_done = ~done
        s_next = np.where(done, 0, new_pos)  # dummy index where masked out

        if algorithm == "q":
            bootstrap = q[agents, s_next].max(axis=1)
            target = reward + gamma * not_done * bootstrap
            current = q[agents, pos, act]
            q[agents, pos, act] = current + alpha * (target - current)
        elif algorithm == "expected_sarsa":
            rows = q[agents, s_next]
            expected = eps * rows.mean(axis=1) + (1.0 - eps) * rows.max(axis=1)
            target = reward + gamma * not_done * expected
            current = q[agents, pos, act]
            q[agents, pos, act] = current + alpha * (target - current)
        elif algorithm == "sarsa":
            successor = np.where(done, world.start_index, s_next)
            a_next = vec_eps_greedy(q[agents, successor], eps, rng)
            target = reward + gamma * not_done * q[agents, s_next, a_next]
            current = q[agents, pos, act]
            q[agents, pos, act] = current + alpha * (target - current)
            pending = a_next
        else:  # double_q
            coin = rng.random(n_agents) < 0.5
            for mask, upd, other in ((coin, q, q_b), (~coin, q_b, q)):
                rows_of = agents[mask]
                if rows_of.size == 0:
                    continue
                sn = s_next[mask]
                a_star = np.argmax(upd[rows_of, sn], axis=1)
                target = reward[mask] + gamma * not_done[mask] * other[rows_of, sn, a_star]
                current = upd[rows_of, pos[mask], act[mask]]
                upd[rows_of, pos[mask], act[mask]] = current + alpha * (target - current)

        pos = np.where(done, world.start_index, new_pos)
        if (t + 1) in wanted:
            snapshots[t + 1] = (q.copy(), q_b.copy() if q_b is not None else None)

    return PopulationTables(algorithm=algorithm, q=q, q_b=q_b,
                            snapshots=snapshots, frames=frame_budget)


def greedy_policies(q: np.ndarray, q_b: np.ndarray | None = None) -> np.ndarray:
    """Per-agent greedy policy matrix [agents, states]; fixed-order tie-break."""
    values = q if q_b is None else q + q_b
    return np.argmax(values, axis=2).astype(np.int64)


# ---- fixed-policy rollouts ----

@dataclass
class RolloutStats:
    total: int
    done: np.ndarray                # bool [total]
    lengths: np.ndarray             # int64 [total]; valid where done
    heated: np.ndarray | None       # bool [total] (2D route tracking)
    density: np.ndarray | None      # int64 [n_states] visit counts
    unfinished: int                 # walkers still interior at the limit


def rollout_population(spec: GridSpec, policies: np.ndarray, rollouts_per_policy: int,
                       cutoff: int | None, rng: np.random.Generator,
                       collect_density: bool = False,
                       track_heated: bool = False) -> RolloutStats:
    """Roll each policy out rollouts_per_policy times until absorption.

    cutoff None means "run to absorption" with the module hard cap as a
    safety net; walkers still interior at the limit are reported in
    `unfinished` (with a finite cutoff those are the failed rollouts).
    """
    world = encode_world(spec)
    policies = np.asarray(policies, dtype=np.int64)
    if policies.ndim != 2 or policies.shape[1] != world.n_states:
        raise ValueError(f"policies must be [n_policies, {world.n_states}], "
                         f"got {policies.shape}")
    n_pol = policies.shape[0]
    total = n_pol * rollouts_per_policy
    owner = np.repeat(np.arange(n_pol), rollouts_per_policy)
    pos = np.full(total, world.start_index, dtype=np.int64)
    done = np.zeros(total, dtype=bool)
    lengths = np.zeros(total, dtype=np.int64)
    heated = None
    if track_heated and world.dims == 2:
        heated = np.zeros(total, dtype=bool)
        if world.temp[world.start_index] > 0:
            heated[:] = True
    density = np.zeros(world.n_states, dtype=np.int64) if collect_density else None

    limit = HARD_CAP if cutoff is None else cutoff
    active = np.arange(total)
    frame = 0
    while active.size and frame < limit:
        cur = pos[active]
        act = policies[0, cur] if n_pol == 1 else policies[owner[active], cur]
        heated_view = heated[active] if heated is not None else None
        new_pos, fin = advance_frame(world, cur, act, rng,
                                     density=density, heated=heated_view)
        if heated_view is not None:
            heated[active] = heated_view
        frame += 1
        pos[active] = new_pos
        if fin.any():
            ended = active[fin]
            done[ended] = True
            lengths[ended] = frame
            active = active[~fin]
    return RolloutStats(total=total, done=done, lengths=lengths, heated=heated,
                        density=density, unfinished=int(active.size))


def sample_frame_positions(spec: GridSpec, cell, action: int, n_samples: int,
                           rng: np.random.Generator):
    """Positions after a single frame from a fixed cell (scattering clouds).

    Returns (positions, done): raw state indices (1D positions may be
    exterior) and the termination flags.
    """
    world = encode_world(spec)
    pos = np.full(n_samples, spec.state_index(cell), dtype=np.int64)
    act = np.full(n_samples, action, dtype=np.int64)
    return advance_frame(world, pos, act, rng)
