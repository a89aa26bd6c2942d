"""Shared test doubles and problem generators."""

import numpy as np

from wsswr.solver import init_state
from wsswr.synthetic import from_arrays
from oracles import dense_kernel


class DenseQ:
    """Minimal stand-in for QMatrix backed by an explicit dense Q."""

    def __init__(self, Q):
        self.Q = np.asarray(Q, dtype=float)
        self.diag = np.diag(self.Q).copy()

    def column(self, i, active):
        return self.Q[np.asarray(active), i].copy()

    def block(self, rows, cols):
        return self.Q[np.ix_(rows, cols)]


def random_points(rng, l, n_features=3):
    X = rng.uniform(-1, 1, (l, n_features))
    y = np.where(rng.random(l) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    return X, y


def random_state(rng, l, kind="rbf", gamma=0.5, C=1.0, epsilon=1e-3, p_bound=0.3,
                 available=None, active=None):
    """A solver state with random alpha in [0, C] (some at the bounds) and random gradient."""
    X, y = random_points(rng, l)
    d = from_arrays(X, y)
    K = dense_kernel(X, kind, gamma)
    Q = np.outer(y, y) * K
    state = init_state(d, C=C, epsilon=epsilon)
    u = rng.random(l)
    alpha = rng.uniform(0, C, l)
    alpha[u < p_bound] = 0.0
    alpha[u > 1 - p_bound / 2] = C
    state.alpha = alpha
    state.grad = rng.normal(scale=1.0, size=l)
    if available is not None:
        state.available = available
    if active is not None:
        state.active = active
    return state, DenseQ(Q), X, y
