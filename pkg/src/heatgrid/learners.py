"""Tabular TD(0) learners: Q-learning, SARSA, Expected SARSA, Double Q.

All learners share the same interaction loop: epsilon-greedy behaviour over
a dense Q table, one TD update per frame, episodes run back-to-back (the
world resets on absorption) until a fixed frame budget is spent. Terminal
transitions bootstrap nothing: the target is the reward alone.

Q tables start at zero. Epsilon-greedy ties are broken uniformly at random;
deterministic greedy extraction (for evaluation) lives in `evaluate` and
breaks ties by the fixed action-index order instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import math

import numpy as np

from .env import GridSpec, reset, step

ALGORITHMS = ("q", "sarsa", "expected_sarsa", "double_q")


@dataclass
class EpsilonSchedule:
    """Exploration schedule over the global frame index.

    kind "constant" keeps eps fixed; kind "exp-decay" uses
    eps(t) = max(eps_min, eps0 * exp(-t / tau)) with tau defaulting to
    frame_budget / 5 when left as None.
    """

    kind: str = "constant"
    eps: float = 0.1
    eps0: float = 1.0
    eps_min: float = 0.01
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "exp-decay"):
            raise ValueError(f"unknown epsilon schedule kind {self.kind!r}")

    def value(self, frame: int, frame_budget: int) -> float:
        if self.kind == "constant":
            return self.eps
        tau = self.tau if self.tau is not None else frame_budget / 5
        return max(self.eps_min, self.eps0 * np.exp(-frame / tau))

    def label(self) -> str:
        if self.kind == "constant":
            return f"const({self.eps:g})"
        tau = "budget/5" if self.tau is None else f"{self.tau:g}"
        return f"exp-decay(eps0={self.eps0:g},min={self.eps_min:g},tau={tau})"


@dataclass
class Hyperparams:
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    q_init: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if isinstance(self.epsilon, (int, float)):
            self.epsilon = EpsilonSchedule(kind="constant", eps=float(self.epsilon))
        self.q_init = float(self.q_init)
        if not math.isfinite(self.q_init):
            raise ValueError(f"q_init must be finite, got {self.q_init}")


@dataclass
class LearnerState:
    algorithm: str
    q: np.ndarray                    # [n_states, n_actions]
    q_b: np.ndarray | None = None    # second table (double_q only)
    pending_action: int | None = None  # next behaviour action (sarsa only)
    frames: int = 0

    def behaviour_values(self) -> np.ndarray:
        """Table the behaviour policy reads (sum of both for double_q)."""
        if self.q_b is not None:
            return self.q + self.q_b
        return self.q


def new_learner(spec: GridSpec, algorithm: str,
                q_init: float = 0.0) -> LearnerState:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}")
    q = np.full((spec.n_states, spec.n_actions), q_init, dtype=np.float64)
    q_b = q.copy() if algorithm == "double_q" else None
    return LearnerState(algorithm=algorithm, q=q, q_b=q_b)


# ---- action selection ----

def eps_greedy(q_row: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Uniform random action with prob eps, else argmax with uniform tie-break."""
    if eps > 0 and rng.random() < eps:
        return int(rng.integers(0, len(q_row)))
    best = np.flatnonzero(q_row == q_row.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(0, len(best))])


def behaviour_action(learner: LearnerState, state_idx: int, eps: float,
                     rng: np.random.Generator) -> int:
    return eps_greedy(learner.behaviour_values()[state_idx], eps, rng)


# ---- TD updates ----
# All updates leave the target at the bare reward on terminal transitions.

def q_update(q, s, a, r, s_next, done, alpha, gamma) -> None:
    target = r if done else r + gamma * q[s_next].max()
    q[s, a] += alpha * (target - q[s, a])


def sarsa_update(q, s, a, r, s_next, a_next, done, alpha, gamma) -> None:
    target = r if done else r + gamma * q[s_next, a_next]
    q[s, a] += alpha * (target - q[s, a])


def expected_sarsa_update(q, s, a, r, s_next, done, alpha, gamma, eps) -> None:
    if done:
        target = r
    else:
        row = q[s_next]
        # epsilon-greedy expectation: eps/|A| on every action, the remaining
        # (1-eps) split over the argmax set, whose entries all equal max().
        expected = eps * row.mean() + (1.0 - eps) * row.max()
        target = r + gamma * expected
    q[s, a] += alpha * (target - q[s, a])


def double_q_update(q_a, q_b, s, a, r, s_next, done, alpha, gamma,
                    rng: np.random.Generator) -> None:
    """Fair coin picks the table to update; the other one scores the argmax."""
    if rng.random() < 0.5:
        upd, other = q_a, q_b
    else:
        upd, other = q_b, q_a
    if done:
        target = r
    else:
        a_star = int(np.argmax(upd[s_next]))
        target = r + gamma * other[s_next, a_star]
    upd[s, a] += alpha * (target - upd[s, a])


# ---- training loop ----

def train(spec: GridSpec, algorithm: str, hyper: Hyperparams, frame_budget: int,
          rng: np.random.Generator, checkpoints=()) -> tuple[LearnerState, dict]:
    """Run one learner for exactly frame_budget frames (= TD updates).

    Episodes reset on absorption. Returns the final learner plus a trace of
    deep-copied Q snapshots keyed by checkpoint frame.
    """
    for f in checkpoints:
        if not 0 < f <= frame_budget:
            raise ValueError(f"checkpoint {f} outside (0, {frame_budget}]")
    learner = new_learner(spec, algorithm, hyper.q_init)
    q, q_b = learner.q, learner.q_b
    wanted = set(checkpoints)
    trace: dict[int, dict] = {}

    state = reset(spec)
    s = spec.state_index(state.position)
    a = None
    if algorithm == "sarsa":
        a = eps_greedy(q[s], hyper.epsilon.value(0, frame_budget), rng)

    for t in range(frame_budget):
        eps = hyper.epsilon.value(t, frame_budget)
        if algorithm == "sarsa":
            act = a
        else:
            act = behaviour_action(learner, s, eps, rng)
        out = step(state, act, spec, rng)
        done = out.done
        s_next = None if done else spec.state_index(out.state.position)

        if algorithm == "q":
            q_update(q, s, act, out.reward, s_next, done, hyper.alpha, hyper.gamma)
        elif algorithm == "expected_sarsa":
            expected_sarsa_update(q, s, act, out.reward, s_next, done,
                                  hyper.alpha, hyper.gamma, eps)
        elif algorithm == "double_q":
            double_q_update(q, q_b, s, act, out.reward, s_next, done,
                            hyper.alpha, hyper.gamma, rng)
        else:  # sarsa: pick the successor action once, reuse it next frame
            if done:
                state_next = reset(spec)
                a_next = eps_greedy(q[spec.state_index(state_next.position)], eps, rng)
                sarsa_update(q, s, act, out.reward, 0, a_next, True,
                             hyper.alpha, hyper.gamma)
                state, s, a = state_next, spec.state_index(state_next.position), a_next
            else:
                a_next = eps_greedy(q[s_next], eps, rng)
                sarsa_update(q, s, act, out.reward, s_next, a_next, False,
                             hyper.alpha, hyper.gamma)
                state, s, a = out.state, s_next, a_next

        if algorithm != "sarsa":
            if done:
                state = reset(spec)
                s = spec.state_index(state.position)
            else:
                state, s = out.state, s_next

        learner.frames = t + 1
        if (t + 1) in wanted:
            snap = {"q": q.copy()}
            if q_b is not None:
                snap["q_b"] = q_b.copy()
            trace[t + 1] = snap

    learner.pending_action = a
    return learner, trace


# ---- Q-table serialization ----

def save_qtable_csv(q: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "action", "value"])
        for s in range(q.shape[0]):
            for a in range(q.shape[1]):
                writer.writerow([s, a, repr(float(q[s, a]))])


def load_qtable_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    n_states = max(int(r[0]) for r in rows) + 1
    n_actions = max(int(r[1]) for r in rows) + 1
    q = np.zeros((n_states, n_actions), dtype=np.float64)
    for s, a, v in rows:
        q[int(s), int(a)] = float(v)
    return q
