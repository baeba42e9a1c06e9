"""Policy extraction and first-passage evaluation.

Policies are dense int arrays mapping state index -> action index. Greedy
extraction breaks ties by the fixed action-index order, so a given Q table
always yields the same policy. Rollouts run the policy with exploration off;
a rollout that has not terminated after `cutoff` frames counts as failed and
is excluded from the mean/std of the first-passage time. In 2D every
successful rollout is additionally labelled heated (touched a temperature>0
cell) or deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import chain, engine
from .env import FIRST_CROSSING, GridSpec, LEFT, RIGHT, reset, step
from .learners import LearnerState

DEFAULT_CUTOFF = 500


def greedy_policy(learner_or_q, q_b: np.ndarray | None = None) -> np.ndarray:
    """Deterministic greedy policy; double-Q learners act on q + q_b."""
    if isinstance(learner_or_q, LearnerState):
        values = learner_or_q.behaviour_values()
    else:
        values = learner_or_q if q_b is None else learner_or_q + q_b
    return np.argmax(values, axis=1).astype(np.int64)


def threshold_policy_1d(spec: GridSpec, k: int) -> np.ndarray:
    """Family of switch policies around the start cell x0.

    Cells with index > x0 - k - 1 move right, the rest move left: k = 0
    goes right from the centre on, k = 1 also from the cell left of centre,
    k = -1 moves left everywhere.
    """
    if spec.dims != 1:
        raise ValueError("threshold policies are defined on 1D worlds")
    idx = np.arange(spec.n_states)
    return np.where(idx > spec.start - k - 1, RIGHT, LEFT).astype(np.int64)


def policy_name_1d(policy, spec: GridSpec) -> str:
    """Name a 1D policy by its behaviour around the centre: pi_L, pi_R,
    pi_RR, pi_RRR, or pi_R(k) for longer right runs."""
    policy = np.asarray(policy)
    x0 = int(spec.start)
    if policy[x0] == LEFT:
        return "pi_L"
    run = 0
    while x0 - run - 1 >= 0 and policy[x0 - run - 1] == RIGHT:
        run += 1
    if run <= 2:
        return "pi_" + "R" * (run + 1)
    return f"pi_R(k={run})"


# ---- rollouts ----

@dataclass
class RolloutRecord:
    length: int
    done: bool
    trail: list  # every position after each applied micro-move


def rollout(policy, spec: GridSpec, cutoff: int, rng: np.random.Generator) -> RolloutRecord:
    policy = np.asarray(policy)
    state = reset(spec)
    trail: list = []
    for frame in range(1, cutoff + 1):
        action = int(policy[spec.state_index(state.position)])
        out = step(state, action, spec, rng)
        trail.extend(out.micro_trail)
        state = out.state
        if out.done:
            return RolloutRecord(length=frame, done=True, trail=trail)
    return RolloutRecord(length=cutoff, done=False, trail=trail)


def _trail_touches_heat(trail, spec: GridSpec) -> bool:
    cells = [spec.start] + list(trail)
    for cell in cells:
        if spec.dims == 1 and not spec.in_bounds(cell):
            continue
        if spec.dims == 2 and not spec.in_bounds(cell):
            continue
        if spec.temperature_at(cell) > 0:
            return True
    return False


@dataclass
class FptStats:
    total: int                  # rollouts attempted
    failed: int                 # rollouts that hit the cutoff
    lengths: np.ndarray         # successful first-passage times
    route_counts: dict          # 2D: {"heated": n, "deterministic": n}

    @property
    def successes(self) -> int:
        return self.total - self.failed

    @property
    def failed_pct(self) -> float:
        return 100.0 * self.failed / self.total if self.total else math.nan

    @property
    def mfpt(self) -> float:
        return float(self.lengths.mean()) if self.lengths.size else math.nan

    @property
    def fpt_std(self) -> float:
        if self.lengths.size < 2:
            return 0.0 if self.lengths.size else math.nan
        return float(self.lengths.std(ddof=1))

    @property
    def heated_route_pct(self) -> float:
        if not self.route_counts or self.successes == 0:
            return math.nan
        return 100.0 * self.route_counts.get("heated", 0) / self.successes


def _as_policies(learners_or_policies) -> list[np.ndarray]:
    out = []
    for item in learners_or_policies:
        if isinstance(item, LearnerState):
            out.append(greedy_policy(item))
        else:
            out.append(np.asarray(item))
    return out


def evaluate_population(learners_or_policies, spec: GridSpec, cutoff: int,
                        rollouts_per_agent: int, rng: np.random.Generator) -> FptStats:
    """Greedy-rollout statistics over a population (scalar reference path)."""
    policies = _as_policies(learners_or_policies)
    lengths = []
    failed = 0
    routes = {"heated": 0, "deterministic": 0} if spec.dims == 2 else {}
    for policy in policies:
        for _ in range(rollouts_per_agent):
            rec = rollout(policy, spec, cutoff, rng)
            if not rec.done:
                failed += 1
                continue
            lengths.append(rec.length)
            if spec.dims == 2:
                key = "heated" if _trail_touches_heat(rec.trail, spec) else "deterministic"
                routes[key] += 1
    return FptStats(total=len(policies) * rollouts_per_agent, failed=failed,
                    lengths=np.array(lengths, dtype=np.int64), route_counts=routes)


def evaluate_population_fast(policies: np.ndarray, spec: GridSpec, cutoff: int,
                             rollouts_per_agent: int, rng: np.random.Generator,
                             collect_density: bool = False):
    """Vectorised twin of evaluate_population; returns (FptStats, density|None)."""
    stats = engine.rollout_population(
        spec, np.asarray(policies), rollouts_per_agent, cutoff, rng,
        collect_density=collect_density, track_heated=spec.dims == 2)
    lengths = stats.lengths[stats.done]
    routes = {}
    if spec.dims == 2:
        heated = int((stats.heated & stats.done).sum())
        routes = {"heated": heated, "deterministic": int(stats.done.sum()) - heated}
    fpt = FptStats(total=stats.total, failed=stats.unfinished,
                   lengths=lengths, route_counts=routes)
    return fpt, stats.density


def most_common_policy(learners_or_policies):
    """Per-state modal action plus the per-state action frequency matrix."""
    policies = np.stack(_as_policies(learners_or_policies))
    n_pop, n_states = policies.shape
    n_actions = int(policies.max()) + 1
    counts = policy_action_counts(policies, n_actions)
    modal = np.argmax(counts, axis=1).astype(np.int64)
    return modal, counts / n_pop


def policy_action_counts(policies: np.ndarray, n_actions: int) -> np.ndarray:
    """Count matrix [n_states, n_actions] over a stack of policies."""
    policies = np.asarray(policies)
    n_pop, n_states = policies.shape
    counts = np.zeros((n_states, n_actions), dtype=np.int64)
    np.add.at(counts, (np.tile(np.arange(n_states), n_pop), policies.ravel()), 1)
    return counts


def path_density(learners_or_policies, spec: GridSpec, cutoff: int,
                 rollouts_per_agent: int, rng: np.random.Generator) -> np.ndarray:
    """Visit counts over greedy rollout trails, shaped like the world."""
    policies = np.stack(_as_policies(learners_or_policies))
    stats = engine.rollout_population(spec, policies, rollouts_per_agent, cutoff,
                                      rng, collect_density=True)
    if spec.dims == 1:
        return stats.density
    w, h = spec.extent
    return stats.density.reshape(h, w)


# ---- Monte Carlo oracle ----

@dataclass
class McEstimate:
    mfpt: float
    std: float
    n_runs: int
    unfinished: int               # runs cut at the hard cap (anomaly flag)
    histogram: np.ndarray         # counts indexed by first-passage time

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.n_runs - self.unfinished)


def mc_policy_mfpt(policy, spec: GridSpec, n_runs: int,
                   rng: np.random.Generator) -> McEstimate:
    """Monte Carlo mean first-passage time of a fixed policy (no cutoff).

    Runs to absorption; anomalous non-termination is flagged via
    `unfinished` once the engine hard cap is hit instead of hanging.
    """
    stats = engine.rollout_population(spec, np.asarray(policy)[None, :],
                                      n_runs, None, rng)
    lengths = stats.lengths[stats.done]
    hist = np.bincount(lengths) if lengths.size else np.zeros(1, dtype=np.int64)
    mean = float(lengths.mean()) if lengths.size else math.nan
    std = float(lengths.std(ddof=1)) if lengths.size > 1 else math.nan
    return McEstimate(mfpt=mean, std=std, n_runs=n_runs,
                      unfinished=stats.unfinished, histogram=hist)


def exact_policy_mfpt(policy, spec: GridSpec) -> float:
    """Fundamental-matrix mean first-passage time from the start cell.

    Picks the chain construction matching the spec's absorption semantics:
    the displacement convolution under final-position, the enumerated
    crossing chain otherwise.
    """
    matrix = policy_transition_matrix(policy, spec)
    return float(chain.mfpt_exact(matrix)[int(spec.start)])


def policy_transition_matrix(policy, spec: GridSpec) -> np.ndarray:
    """Exact per-frame chain of a fixed policy under the spec's semantics."""
    if spec.absorption == FIRST_CROSSING:
        return chain.crossing_transition_matrix(spec, policy)
    return chain.build_transition_matrix(spec, policy)


def best_threshold_policy(spec: GridSpec, k_range=range(-1, 6), *,
                          method: str = "exact", n_runs: int = 100_000,
                          rng: np.random.Generator | None = None):
    """Best policy of the threshold family; (k, mfpt), ties -> smaller k."""
    best_k, best_m = None, math.inf
    for k in k_range:
        policy = threshold_policy_1d(spec, k)
        if method == "exact":
            m = exact_policy_mfpt(policy, spec)
        elif method == "mc":
            if rng is None:
                raise ValueError("mc method needs an rng")
            m = mc_policy_mfpt(policy, spec, n_runs, rng).mfpt
        else:
            raise ValueError(f"unknown method {method!r}")
        if m < best_m:
            best_k, best_m = k, m
    return best_k, best_m
