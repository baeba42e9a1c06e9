"""Exact absorbing-chain analysis of 1D heated intervals.

A 1D world under final-position absorption, driven by a fixed stationary
policy, is a finite Markov chain: one row per cell 0..n-1 plus one trailing
absorbing state. The walk lives on the interior 1..n-2; the two end cells
terminate, so their rows and any mass landing on or beyond them are routed
to the absorbing state. Per-frame displacement from an interior cell k is

    move(k) + (2 * Binomial(T_k, 1/2) - T_k) - Bernoulli(p_k)

(the policy move, the signed sum of T_k thermal coin flips, and the optional
drift move). From the transition matrix everything else follows exactly:
survival probabilities, mean first-passage times via the fundamental matrix,
geometric decay envelopes, and expected total reward under the per-frame
tick.

Under first-crossing semantics the per-frame law is not a convolution (a
micro-sequence stops at its first boundary touch), but it is still Markov
over frame-start cells; `crossing_transition_matrix` builds it exactly by
enumerating the 2^T noise sequences per cell.

Matrix convention: rows are current states, columns successors (rows sum to
one, last row is the absorbing loop). Survival after t frames from cell s is
the interior mass of row s of the t-th power, which by the submatrix identity
equals the row sum of the t-th power of the interior block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import FINAL_POSITION, GridSpec, MOVES_1D


def displacement_pmf(temperature: int, move: int, drift_prob: float = 0.0) -> dict[int, float]:
    """Exact per-frame displacement law for one cell."""
    base: dict[int, float] = {}
    for heads in range(temperature + 1):
        w = 2 * heads - temperature
        base[move + w] = base.get(move + w, 0.0) + (
            math.comb(temperature, heads) * 0.5 ** temperature)
    if drift_prob == 0.0:
        return base
    out: dict[int, float] = {}
    for d, p in base.items():
        out[d] = out.get(d, 0.0) + p * (1.0 - drift_prob)
        out[d - 1] = out.get(d - 1, 0.0) + p * drift_prob
    return out


def _policy_moves(spec: GridSpec, policy) -> np.ndarray:
    """Accept an action-index policy array and return signed unit moves."""
    policy = np.asarray(policy)
    if policy.shape != (spec.n_states,):
        raise ValueError(
            f"policy shape {policy.shape} does not cover {spec.n_states} cells")
    return np.array([MOVES_1D[int(a)] for a in policy], dtype=np.int64)


def _check_1d_exact(spec: GridSpec) -> None:
    if spec.dims != 1:
        raise ValueError("exact chain analysis covers 1D worlds only")
    if spec.absorption != FINAL_POSITION:
        raise ValueError(
            "exact chain analysis requires final-position absorption; "
            f"spec uses {spec.absorption!r}")


def build_matrix_from_moves(spec: GridSpec, moves) -> np.ndarray:
    """Transition matrix (n+1 x n+1) for per-cell signed moves in {-1, 0, 1}.

    Rows for the terminal end cells route straight to the absorbing state;
    they are never occupied at a frame start and carry no interior mass.
    """
    _check_1d_exact(spec)
    moves = np.asarray(moves, dtype=np.int64)
    if np.any(np.abs(moves) > 1):
        raise ValueError("per-cell moves must lie in {-1, 0, 1}")
    n = spec.n_states
    matrix = np.zeros((n + 1, n + 1), dtype=np.float64)
    for k in range(n):
        if spec.is_terminal(k):
            matrix[k, n] = 1.0
            continue
        pmf = displacement_pmf(spec.temperature_at(k), int(moves[k]), spec.drift_at(k))
        for d, p in pmf.items():
            nxt = k + d
            if spec.is_terminal(nxt):
                matrix[k, n] += p
            else:
                matrix[k, nxt] += p
    matrix[n, n] = 1.0
    return matrix


def build_transition_matrix(spec: GridSpec, policy) -> np.ndarray:
    """Transition matrix for an action-index policy (0 = left, 1 = right)."""
    return build_matrix_from_moves(spec, _policy_moves(spec, policy))


def crossing_transition_matrix(spec: GridSpec, policy) -> np.ndarray:
    """Exact per-frame transition matrix under first-crossing semantics.

    A frame's micro-sequence stops at its first touch of a terminal cell, so
    the per-frame law is not the displacement convolution; instead every
    2^T noise sequence (and drift branch) is enumerated and walked from each
    interior cell. The result is still an absorbing chain over frame-start
    cells with the same (n+1 x n+1) layout as build_transition_matrix, and
    the downstream moment machinery applies unchanged.
    """
    if spec.dims != 1:
        raise ValueError("crossing chain analysis covers 1D worlds only")
    moves = _policy_moves(spec, policy)
    n = spec.n_states
    matrix = np.zeros((n + 1, n + 1), dtype=np.float64)
    for k in range(n):
        if spec.is_terminal(k):
            matrix[k, n] = 1.0
            continue
        temp = spec.temperature_at(k)
        drift_p = spec.drift_at(k)
        first = k + int(moves[k])
        if spec.is_terminal(first):
            matrix[k, n] += 1.0
            continue
        if temp == 0:
            trails = np.array([[first]], dtype=np.int64)
        else:
            signs = np.array(
                [seq for seq in np.ndindex(*(2,) * temp)], dtype=np.int64) * 2 - 1
            trails = first + np.concatenate(
                [np.zeros((signs.shape[0], 1), dtype=np.int64),
                 np.cumsum(signs, axis=1)], axis=1)
        weight = 0.5 ** temp
        touched = (trails <= 0) | (trails >= n - 1)
        dead = touched.any(axis=1)
        matrix[k, n] += weight * int(dead.sum())
        final = trails[~dead, -1]
        if drift_p == 0.0:
            np.add.at(matrix[k], final, weight)
        else:
            np.add.at(matrix[k], final, weight * (1.0 - drift_p))
            shifted = final - 1
            exits = shifted <= 0
            matrix[k, n] += weight * drift_p * int(exits.sum())
            np.add.at(matrix[k], shifted[~exits], weight * drift_p)
    matrix[n, n] = 1.0
    return matrix


def interior_block(matrix: np.ndarray) -> np.ndarray:
    """Sub-matrix over interior states (drops the absorbing row/column)."""
    return matrix[:-1, :-1]


def survival_curve(matrix: np.ndarray, start: int, t_max: int) -> np.ndarray:
    """survival[t] = P(still interior after t frames | start), t = 0..t_max."""
    block = interior_block(matrix)
    v = np.zeros(block.shape[0])
    v[start] = 1.0
    out = np.empty(t_max + 1)
    out[0] = 1.0
    for t in range(1, t_max + 1):
        v = v @ block
        out[t] = v.sum()
    return out


def survival_probability(matrix: np.ndarray, start: int, t: int) -> float:
    return float(survival_curve(matrix, start, t)[t])


@dataclass
class SubmatrixReport:
    ok: bool
    t_max: int
    max_deviation: float


def check_submatrix_identity(matrix: np.ndarray, t_max: int = 200,
                             tol: float = 1e-10) -> SubmatrixReport:
    """Verify the interior block of matrix^t equals (interior block)^t.

    Holds exactly when the absorbing state never leaks back into the
    interior (last row a point mass on itself); degrades once that row is
    corrupted, which the negative-control tests exploit.
    """
    block = interior_block(matrix)
    full_p = matrix.copy()
    block_p = block.copy()
    worst = 0.0
    for _ in range(t_max):
        dev = np.abs(full_p[:-1, :-1] - block_p).max()
        worst = max(worst, dev)
        if worst > tol:
            break
        full_p = full_p @ matrix
        block_p = block_p @ block
    return SubmatrixReport(ok=worst <= tol, t_max=t_max, max_deviation=float(worst))


@dataclass
class EscapeBound:
    tau: int
    bound: float
    survival_at_tau: float
    ok: bool


def escape_time_bound(half_width: int, min_temperature: int) -> tuple[int, float]:
    """(tau, survival bound) for uniformly heated intervals.

    With every interior temperature >= w >= 2 and unit policy moves, the run
    of tau = floor(half_width / (w - 1)) + 1 frames in which every thermal
    flip lands rightward carries the walker from the centre past the right
    edge; it has probability at least 2^(-w*tau), so survival after tau
    frames is at most 1 - 2^(-w*tau).
    """
    w = int(min_temperature)
    if w < 2:
        raise ValueError(f"the escape bound needs minimum temperature >= 2, got {w}")
    tau = half_width // (w - 1) + 1
    return tau, 1.0 - 2.0 ** (-(w * tau))


def check_escape_bound(spec: GridSpec, policy) -> EscapeBound:
    """Survival at the lemma's tau, checked from the centre start cell."""
    _check_1d_exact(spec)
    if spec.drift is not None and np.any(spec.drift > 0):
        raise ValueError("the escape bound requires zero drift")
    w = int(spec.temperature.min())
    tau, bound = escape_time_bound(spec.n_states // 2, w)
    matrix = build_transition_matrix(spec, policy)
    surv = survival_probability(matrix, int(spec.start), tau)
    return EscapeBound(tau=tau, bound=bound, survival_at_tau=surv,
                       ok=surv <= bound + 1e-12)


@dataclass
class Envelope:
    c: float
    sigma: float
    t_max: int


def geometric_envelope(matrix: np.ndarray, t_max: int = 500) -> Envelope:
    """Constants (C, sigma) with survival(t) <= C * sigma^t for t <= t_max.

    sigma is the t_max-th root of the worst-case (over start cells)
    surviving mass after t_max frames; C is the smallest constant making the
    envelope dominate the whole measured curve. C is infinite when the chain
    empties exactly (sigma = 0) after some surviving history.
    """
    block = interior_block(matrix)
    power = np.eye(block.shape[0])
    worst = np.empty(t_max + 1)
    worst[0] = 1.0
    for t in range(1, t_max + 1):
        power = power @ block
        worst[t] = power.sum(axis=1).max()
    sigma = float(worst[t_max] ** (1.0 / t_max))
    c = 1.0
    for t in range(t_max + 1):
        envelope_t = sigma ** t
        if worst[t] == 0.0:
            continue
        if envelope_t == 0.0:
            c = float("inf")
            break
        c = max(c, float(worst[t] / envelope_t))
    return Envelope(c=c, sigma=sigma, t_max=t_max)


def closing_series_value(c: float, sigma: float, r_target: float) -> float:
    """Value of sum_{t>=1} (r_target - t) * C * sigma^(t-1), the envelope's
    closing geometric series: C * (r_target * (1 - sigma) - 1) / (1 - sigma)^2."""
    return c * (r_target * (1.0 - sigma) - 1.0) / (1.0 - sigma) ** 2


# ---- first-passage moments ----

def mfpt_exact(matrix: np.ndarray) -> np.ndarray:
    """Mean frames to absorption from every interior cell (fundamental matrix)."""
    block = interior_block(matrix)
    n = block.shape[0]
    return np.linalg.solve(np.eye(n) - block, np.ones(n))


def fpt_variance_exact(matrix: np.ndarray) -> np.ndarray:
    """Variance of the absorption time from every interior cell."""
    block = interior_block(matrix)
    n = block.shape[0]
    ident = np.eye(n)
    t = np.linalg.solve(ident - block, np.ones(n))
    # E[tau^2] = (2N - I) t with N the fundamental matrix; solve instead of invert.
    second = 2.0 * np.linalg.solve(ident - block, t) - t
    return second - t * t


@dataclass
class ExpectedReturn:
    value: float          # expected total reward, sum_t (r_target - t) P(absorb at t)
    mfpt: float           # conditional mean absorption frame
    fpt_std: float
    absorbed_mass: float  # 1 - residual survival at truncation
    horizon: int          # frames summed before the residual fell below cutoff


def expected_total_reward_exact(matrix: np.ndarray, r_target: float, start: int,
                                residual: float = 1e-12,
                                max_frames: int = 10_000_000) -> ExpectedReturn:
    """Sum the reward series exactly, truncating at negligible residual survival.

    Each absorption at frame t contributes r_target - t (one tick per frame
    plus the terminal bonus). The series is summed until the surviving mass
    drops below `residual`.
    """
    block = interior_block(matrix)
    v = np.zeros(block.shape[0])
    v[start] = 1.0
    prev = 1.0
    value = 0.0
    m1 = 0.0
    m2 = 0.0
    t = 0
    while prev >= residual:
        t += 1
        if t > max_frames:
            raise RuntimeError(
                f"survival has not fallen below {residual} after {max_frames} frames")
        v = v @ block
        cur = float(v.sum())
        died = prev - cur
        value += (r_target - t) * died
        m1 += t * died
        m2 += t * t * died
        prev = cur
    absorbed = 1.0 - prev
    mfpt = m1 / absorbed
    var = m2 / absorbed - mfpt * mfpt
    return ExpectedReturn(value=value, mfpt=mfpt, fpt_std=math.sqrt(max(var, 0.0)),
                          absorbed_mass=absorbed, horizon=t)
