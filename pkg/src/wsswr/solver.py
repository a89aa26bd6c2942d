"""SMO decomposition for the SVM dual

    min  f(alpha) = 1/2 alpha' Q alpha - e' alpha
    s.t. 0 <= alpha_i <= C,  y' alpha = 0

with optional shrinking and a pluggable working-set selector.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kernel import KernelSpec, QMatrix
from .model import Diagnostics, TrainedModel
from .selection import SelectionResult, get_selector, select_wsswr, up_low_masks

log = logging.getLogger(__name__)

DEFAULT_CACHE_BYTES = 100 * 1024 ** 2
CONTINUE, CONVERGED, EXHAUSTED, MAX_ITER = "continue", "converged", "exhausted", "max_iter"


class TrainingError(RuntimeError):
    pass


@dataclass
class SolverParams:
    C: float = 1.0
    epsilon: float = 1e-3
    tau: float = 1e-12
    cache_bytes: int = DEFAULT_CACHE_BYTES
    shrinking: bool = True
    max_iter: int | None = None
    record_pairs: bool = False

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass
class SolverState:
    y: np.ndarray
    alpha: np.ndarray
    grad: np.ndarray
    C: float
    epsilon: float
    tau: float
    active: np.ndarray
    available: np.ndarray
    iteration: int = 0
    objective: float = 0.0
    objective_trace: list = field(default_factory=list)
    selection_counts: np.ndarray | None = None
    unshrunk: bool = False

    @property
    def l(self) -> int:
        return self.y.size

    @property
    def optimized_T(self) -> np.ndarray:
        return np.flatnonzero(~self.available)

    @property
    def all_active(self) -> bool:
        return self.active.size == self.l


def init_state(d: Dataset, params: SolverParams | None = None, **overrides) -> SolverState:
    """alpha = 0 (feasible), grad = -e, nothing optimized yet."""
    if params is None:
        params = SolverParams(**overrides)
    elif overrides:
        raise TypeError("pass either params or keyword overrides, not both")
    l = len(d)
    return SolverState(
        y=np.asarray(d.labels, dtype=np.float64),
        alpha=np.zeros(l),
        grad=-np.ones(l),
        C=float(params.C),
        epsilon=float(params.epsilon),
        tau=float(params.tau),
        active=np.arange(l),
        available=np.ones(l, dtype=bool),
        selection_counts=np.zeros(l, dtype=np.int64),
    )


# Keerthi classes: 0 free, 1 (+1, 0), 2 (-1, C), 3 (+1, C), 4 (-1, 0).
def index_classes(y: np.ndarray, alpha: np.ndarray, C: float) -> np.ndarray:
    pos = y > 0
    cls = np.zeros(y.size, dtype=np.int8)
    cls[pos & (alpha == 0)] = 1
    cls[~pos & (alpha == C)] = 2
    cls[pos & (alpha == C)] = 3
    cls[~pos & (alpha == 0)] = 4
    return cls


def objective_value(state: SolverState) -> float:
    """f(alpha) from the maintained gradient; exact only when nothing is shrunk."""
    return float(0.5 * np.dot(state.alpha, state.grad - 1.0))


def solve_subproblem(i: int, j: int, state: SolverState, Q_ij: float, Q_ii: float, Q_jj: float):
    """Minimise f over (alpha_i, alpha_j) with y_i alpha_i + y_j alpha_j fixed.

    The step uses curvature a = K_ii + K_jj - 2 K_ij, replaced by tau when
    a <= 0, and is clipped to the box along the constraint line.
    """
    C, G, alpha = state.C, state.grad, state.alpha
    ai, aj = float(alpha[i]), float(alpha[j])
    if state.y[i] != state.y[j]:
        quad = Q_ii + Q_jj + 2.0 * Q_ij
        if quad <= 0:
            quad = state.tau
        delta = (-G[i] - G[j]) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        quad = Q_ii + Q_jj - 2.0 * Q_ij
        if quad <= 0:
            quad = state.tau
        delta = (G[i] - G[j]) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total
    return float(ai), float(aj)


def update_gradient(state: SolverState, i: int, j: int, d_ai: float, d_aj: float, q_i, q_j) -> SolverState:
    """grad_t += Q_ti d_ai + Q_tj d_aj over the active set (columns given over it)."""
    if d_ai == 0.0 and d_aj == 0.0:
        return state
    delta = q_i * d_ai + q_j * d_aj
    if state.all_active:
        state.grad += delta
    else:
        state.grad[state.active] += delta
    return state


def stopping_check(state: SolverState, result: SelectionResult) -> str:
    if result.pair is not None:
        return CONTINUE
    return EXHAUSTED if result.exhausted else CONVERGED


def shrink(state: SolverState, q, candidates_only: bool = False) -> SolverState:
    """Drop bounded indices that cannot take part in a violating pair soon.

    An index only in I_up is dropped when v_t < M, one only in I_low when
    v_t > m, with (m, M) the current extremes over the selection candidates.
    """
    idx = state.active
    y = state.y[idx]
    v = -y * state.grad[idx]
    up, low = up_low_masks(y, state.alpha[idx], state.C)
    cand = state.available[idx] if candidates_only else np.ones(idx.size, dtype=bool)
    if not (up & cand).any() or not (low & cand).any():
        return state
    m = v[up & cand].max()
    M = v[low & cand].min()
    if not state.unshrunk and m - M <= 10 * state.epsilon:
        state.unshrunk = True
        unshrink_reconstruct(state, q)
        return shrink(state, q, candidates_only)
    drop = (up & ~low & (v < M)) | (low & ~up & (v > m))
    if drop.any():
        state.active = idx[~drop]
    return state


def unshrink_reconstruct(state: SolverState, q) -> SolverState:
    """Restore every index and recompute the shrunk gradient entries from Q alpha."""
    if state.all_active:
        return state
    mask = np.ones(state.l, dtype=bool)
    mask[state.active] = False
    shrunk = np.flatnonzero(mask)
    sv = np.flatnonzero(state.alpha > 0)
    g = -np.ones(shrunk.size)
    if sv.size:
        g += q.block(shrunk, sv) @ state.alpha[sv]
    state.grad[shrunk] = g
    state.active = np.arange(state.l)
    return state


def reconstruct_full_gradient(state: SolverState, q) -> np.ndarray:
    """Q alpha - e from scratch (for checks; does not touch the state)."""
    all_idx = np.arange(state.l)
    sv = np.flatnonzero(state.alpha > 0)
    g = -np.ones(state.l)
    if sv.size:
        g += q.block(all_idx, sv) @ state.alpha[sv]
    return g


def compute_rho(state: SolverState) -> float:
    """Bias from the final gradient: -(m + M) / 2 over all indices."""
    v = -state.y * state.grad
    up, low = up_low_masks(state.y, state.alpha, state.C)
    if up.any() and low.any():
        return float(-(v[up].max() + v[low].min()) / 2.0)
    # a free index would sit in both sets, so none exists here
    return 0.0


def kkt_violation(state: SolverState) -> float:
    """m(alpha) - M(alpha) over all indices (requires an up-to-date gradient)."""
    v = -state.y * state.grad
    up, low = up_low_masks(state.y, state.alpha, state.C)
    if not up.any() or not low.any():
        return -math.inf
    return float(v[up].max() - v[low].min())


def train(d: Dataset, spec: KernelSpec, selector="wss3", params: SolverParams | None = None,
          callback=None, **overrides) -> TrainedModel:
    """Run SMO until the selector reports no violating pair.

    ``callback(state, q)``, if given, runs after every iteration.
    """
    if params is None:
        params = SolverParams(**overrides)
    elif overrides:
        raise TypeError("pass either params or keyword overrides, not both")
    d.check_trainable()
    if np.all(d.labels > 0) or np.all(d.labels < 0):
        raise TrainingError("training data contains a single class")
    select = get_selector(selector)
    wr = select is select_wsswr

    start = time.perf_counter()
    q = QMatrix(d, spec, params.cache_bytes)
    state = init_state(d, params)
    l = state.l
    max_iter = params.max_iter if params.max_iter is not None else max(10_000_000, 100 * l)
    iteration_bound = math.ceil(l / 2) if wr else math.inf
    shrink_every = min(l, 1000)
    counter = shrink_every
    pairs = [] if params.record_pairs else None
    y, qd = state.y, q.diag

    status = CONTINUE
    while True:
        if state.iteration >= iteration_bound:
            status = EXHAUSTED
            break
        if state.iteration >= max_iter:
            status = MAX_ITER
            break
        if params.shrinking:
            counter -= 1
            if counter == 0:
                counter = shrink_every
                shrink(state, q, candidates_only=wr)
        result = select(state, q)
        status = stopping_check(state, result)
        if status != CONTINUE:
            if not state.all_active:
                unshrink_reconstruct(state, q)
                # re-check on the full set before shrinking again
                counter = 2
                continue
            break

        i, j = result.pair
        q_i = q.column(i, state.active)
        q_j = q.column(j, state.active)
        pos_j = int(np.searchsorted(state.active, j))
        Q_ij = float(q_i[pos_j])
        old_i, old_j = float(state.alpha[i]), float(state.alpha[j])
        gi, gj = float(state.grad[i]), float(state.grad[j])
        new_i, new_j = solve_subproblem(i, j, state, Q_ij, float(qd[i]), float(qd[j]))
        state.alpha[i], state.alpha[j] = new_i, new_j
        update_gradient(state, i, j, new_i - old_i, new_j - old_j, q_i, q_j)

        # f change along the feasible direction, written so it cannot come out positive.
        t = y[i] * (new_i - old_i)
        b = -y[i] * gi + y[j] * gj
        a = float(qd[i] + qd[j] - 2.0 * y[i] * y[j] * Q_ij)
        state.objective += t * (0.5 * a * t - b) if t != 0.0 else 0.0

        if wr:
            state.available[i] = False
            state.available[j] = False
        state.selection_counts[i] += 1
        state.selection_counts[j] += 1
        state.iteration += 1
        state.objective_trace.append((state.iteration, time.perf_counter() - start, state.objective))
        if pairs is not None:
            pairs.append((i, j, old_i, old_j, new_i, new_j))
        if callback is not None:
            callback(state, q)

    unshrink_reconstruct(state, q)
    seconds = time.perf_counter() - start
    if status == MAX_ITER:
        log.warning("reached max_iter=%d before convergence", max_iter)

    diagnostics = Diagnostics(
        iterations=state.iteration,
        seconds=seconds,
        objective=objective_value(state),
        status=status,
        violation=kkt_violation(state),
        selection_counts=state.selection_counts,
        trace=state.objective_trace,
        pairs=pairs,
        alpha=state.alpha,
        kernel_evaluations=q.kernel_evaluations,
        cache_hits=q.cache.hits,
        cache_misses=q.cache.misses,
    )
    return TrainedModel.from_solution(d, spec, state.alpha, compute_rho(state), params.C, diagnostics)
