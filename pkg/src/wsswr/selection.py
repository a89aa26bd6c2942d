"""Working-set selection: maximal violating pair, second order, and without reselection.

Every selector has the signature ``select(state, q) -> SelectionResult`` where
``state`` is a :class:`~wsswr.solver.SolverState` and ``q`` gives Q columns
(``q.column(i, active)``) and the diagonal (``q.diag``). Selectors only read
the state. Ties go to the lowest index.

With v_t = -y_t grad_t the candidate sets are

    I_up  = {t : y_t = +1, alpha_t < C} | {t : y_t = -1, alpha_t > 0}
    I_low = {t : y_t = +1, alpha_t > 0} | {t : y_t = -1, alpha_t < C}

and the violation is max(v over I_up) - min(v over I_low).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SelectionResult:
    pair: tuple[int, int] | None
    violation: float
    # No candidate left on one side (WSS-WR: available set used up).
    exhausted: bool = False


def up_low_masks(y: np.ndarray, alpha: np.ndarray, C: float):
    pos = y > 0
    at_lower = alpha > 0
    below_upper = alpha < C
    up = (pos & below_upper) | (~pos & at_lower)
    low = (pos & at_lower) | (~pos & below_upper)
    return up, low


def _first_order(state, candidates=None):
    idx = state.active
    y = state.y[idx]
    v = -y * state.grad[idx]
    up, low = up_low_masks(y, state.alpha[idx], state.C)
    if candidates is not None:
        up &= candidates
        low &= candidates
    if not up.any() or not low.any():
        return idx, v, up, low, None, -np.inf
    i_pos = int(np.argmax(np.where(up, v, -np.inf)))
    j_pos = int(np.argmin(np.where(low, v, np.inf)))
    return idx, v, up, low, (i_pos, j_pos), float(v[i_pos] - v[j_pos])


def select_wss1(state, q=None) -> SelectionResult:
    """Maximal violating pair: i = argmax v over I_up, j = argmin v over I_low."""
    idx, _, _, _, pos, violation = _first_order(state)
    if pos is None or violation <= state.epsilon:
        return SelectionResult(None, violation)
    return SelectionResult((int(idx[pos[0]]), int(idx[pos[1]])), violation)


def _second_order_j(state, q, idx, v, low, i_pos):
    i = int(idx[i_pos])
    q_i = q.column(i, state.active)
    if q_i.size != idx.size:
        raise ValueError("Q column does not match the active set")
    y = state.y[idx]
    qd = q.diag
    a = qd[i] + qd[idx] - 2.0 * state.y[i] * y * q_i
    a_bar = np.where(a > 0, a, state.tau)
    b = v[i_pos] - v
    eligible = low & (v < v[i_pos])
    if not eligible.any():
        return None
    score = np.where(eligible, -(b * b) / a_bar, np.inf)
    return int(np.argmin(score))


def select_wss3(state, q) -> SelectionResult:
    """Second-order selection with the tau fallback for non-positive curvature.

    i is the maximal violator in I_up; j minimises -b_it^2 / a_bar_it over
    t in I_low with v_t < v_i, where b_it = v_i - v_t,
    a_it = K_ii + K_tt - 2 K_it and a_bar = a if a > 0 else tau.
    """
    idx, v, _, low, pos, violation = _first_order(state)
    if pos is None or violation <= state.epsilon:
        return SelectionResult(None, violation)
    j_pos = _second_order_j(state, q, idx, v, low, pos[0])
    return SelectionResult((int(idx[pos[0]]), int(idx[j_pos])), violation)


def select_wsswr(state, q) -> SelectionResult:
    """Second-order selection restricted to the never-selected (available) indices.

    The solver moves the returned pair into the optimized set after the
    update, so no index is returned twice.
    """
    cand = state.available[state.active]
    idx, v, _, low, pos, violation = _first_order(state, cand)
    if pos is None:
        return SelectionResult(None, violation, exhausted=True)
    if violation <= state.epsilon:
        return SelectionResult(None, violation)
    j_pos = _second_order_j(state, q, idx, v, low, pos[0])
    if j_pos is None:
        return SelectionResult(None, violation, exhausted=True)
    return SelectionResult((int(idx[pos[0]]), int(idx[j_pos])), violation)


SELECTORS = {
    "wss1": select_wss1,
    "wss3": select_wss3,
    "wsswr": select_wsswr,
}


def get_selector(name):
    if callable(name):
        return name
    try:
        return SELECTORS[name]
    except KeyError:
        raise ValueError(f"unknown selector {name!r}; expected one of {sorted(SELECTORS)}") from None
