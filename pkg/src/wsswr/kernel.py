"""Kernel functions, Q-matrix columns and the column cache.

Q_ij = y_i y_j K(x_i, x_j). The four kernels:

    rbf         exp(-gamma * |a - b|^2)
    linear      a.b
    polynomial  (gamma * (a.b + 1)) ** d
    sigmoid     tanh(gamma * a.b + d)
"""

from __future__ import annotations

import re
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .data import Dataset, SparseVector

KERNELS = ("rbf", "linear", "polynomial", "sigmoid")

ENTRY_BYTES = 8
COLUMN_OVERHEAD_BYTES = 32


@dataclass(frozen=True)
class KernelSpec:
    """Kernel identity and parameters.

    ``degree`` is the exponent of the polynomial kernel and the additive
    offset of the sigmoid kernel; it defaults to 3 and 0 respectively.
    """

    kind: str = "rbf"
    gamma: float = 1.0
    degree: float | None = None

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {KERNELS}")
        if self.degree is None:
            object.__setattr__(self, "degree", 3.0 if self.kind == "polynomial" else 0.0)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "degree", float(self.degree))
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf kernel requires gamma > 0")
        if self.kind == "polynomial" and not self.degree >= 1:
            raise ValueError("polynomial kernel requires degree >= 1")

    def with_gamma(self, gamma: float) -> "KernelSpec":
        return KernelSpec(self.kind, gamma, self.degree)

    def label(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "rbf":
            return f"rbf(g={self.gamma:g})"
        return f"{self.kind}(g={self.gamma:g},d={self.degree:g})"

    def _from_dot(self, dot):
        if self.kind == "linear":
            return dot
        if self.kind == "polynomial":
            return (self.gamma * (dot + 1.0)) ** self.degree
        return np.tanh(self.gamma * dot + self.degree)


def kernel_eval(spec: KernelSpec, a: SparseVector, b: SparseVector) -> float:
    """Evaluate K(a, b) with a merged traversal of the two sparse vectors."""
    dot = a.dot(b)
    if spec.kind == "rbf":
        d2 = max(a.sq_norm() + b.sq_norm() - 2.0 * dot, 0.0)
        return float(np.exp(-spec.gamma * d2))
    return float(spec._from_dot(dot))


def kernel_matrix(spec: KernelSpec, A: Dataset, B: Dataset) -> np.ndarray:
    """Dense K(A_s, B_t) block, shape (len(A), len(B))."""
    XA, XB = A.matrix, B.matrix
    n = max(XA.shape[1], XB.shape[1])
    XA = XA if XA.shape[1] == n else _pad(XA, n)
    XB = XB if XB.shape[1] == n else _pad(XB, n)
    dot = np.asarray((XA @ XB.T).todense())
    if spec.kind == "rbf":
        d2 = A.sq_norms[:, None] + B.sq_norms[None, :] - 2.0 * dot
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-spec.gamma * d2)
    return spec._from_dot(dot)


def _pad(X, n):
    X = X.copy()
    X.resize((X.shape[0], n))
    return X


def diag_q(data: Dataset, spec: KernelSpec) -> np.ndarray:
    """Q_ii = K(x_i, x_i) for every sample (y_i^2 = 1)."""
    if spec.kind == "rbf":
        return np.ones(len(data))
    return np.asarray(spec._from_dot(data.sq_norms), dtype=np.float64)


def parse_size(text) -> int:
    """Byte count from ``"100M"``, ``"100K"``, ``"512"`` (powers of 1024)."""
    if isinstance(text, (int, np.integer)):
        return int(text)
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([KkMmGg]?)[Bb]?\s*", str(text))
    if not m:
        raise ValueError(f"bad size {text!r}")
    mult = {"": 1, "k": 1024, "m": 1024 ** 2, "g": 1024 ** 3}[m.group(2).lower()]
    return int(float(m.group(1)) * mult)


class KernelCache:
    """LRU store of Q columns under a byte budget.

    Columns are kept for one active index set at a time; handing the cache
    a different active set drops everything. A budget too small for a single
    column serves columns uncached.
    """

    def __init__(self, budget_bytes: int):
        budget_bytes = int(budget_bytes)
        if budget_bytes <= 0:
            raise ValueError("cache budget must be positive")
        self.budget_bytes = budget_bytes
        self.columns: OrderedDict[int, np.ndarray] = OrderedDict()
        self.used_bytes = 0
        self.hits = 0
        self.misses = 0
        self._active = None

    @staticmethod
    def column_bytes(length: int) -> int:
        return length * ENTRY_BYTES + COLUMN_OVERHEAD_BYTES

    def bind(self, active: np.ndarray) -> None:
        if active is self._active:
            return
        if self._active is not None and np.array_equal(active, self._active):
            self._active = active
            return
        self.clear()
        self._active = active

    def clear(self) -> None:
        self.columns.clear()
        self.used_bytes = 0

    def get(self, i: int):
        col = self.columns.get(i)
        if col is None:
            self.misses += 1
            return None
        self.columns.move_to_end(i)
        self.hits += 1
        return col

    def put(self, i: int, col: np.ndarray) -> None:
        size = self.column_bytes(col.size)
        if size > self.budget_bytes:
            return
        while self.used_bytes + size > self.budget_bytes:
            _, old = self.columns.popitem(last=False)
            self.used_bytes -= self.column_bytes(old.size)
        col.setflags(write=False)
        self.columns[i] = col
        self.used_bytes += size


class QMatrix:
    """Column access to Q for one dataset and kernel, backed by a KernelCache."""

    def __init__(self, data: Dataset, spec: KernelSpec, cache_bytes: int = 100 * 1024 ** 2,
                 cache: KernelCache | None = None):
        self.data = data
        self.spec = spec
        self.y = data.labels
        self.diag = diag_q(data, spec)
        self.cache = cache if cache is not None else KernelCache(cache_bytes)
        self.kernel_evaluations = 0
        self._X = data.matrix
        self._sq = data.sq_norms

    def __len__(self):
        return len(self.data)

    def _kernel_row(self, i: int, rows) -> np.ndarray:
        xi = self._X[i].toarray().ravel()
        X = self._X if rows is None else self._X[rows]
        dot = X @ xi
        self.kernel_evaluations += dot.size
        if self.spec.kind == "rbf":
            sq = self._sq if rows is None else self._sq[rows]
            d2 = self._sq[i] + sq - 2.0 * dot
            np.maximum(d2, 0.0, out=d2)
            if rows is None:
                d2[i] = 0.0
            else:
                d2[np.asarray(rows) == i] = 0.0
            return np.exp(-self.spec.gamma * d2)
        return np.asarray(self.spec._from_dot(dot), dtype=np.float64)

    def compute_column(self, i: int, active: np.ndarray | None = None) -> np.ndarray:
        """Q_it over ``active`` (all indices if None), bypassing the cache."""
        k = self._kernel_row(i, active)
        y = self.y if active is None else self.y[active]
        return self.y[i] * y * k

    def column(self, i: int, active: np.ndarray) -> np.ndarray:
        """Q_it for t in ``active``, served through the cache."""
        self.cache.bind(active)
        col = self.cache.get(i)
        if col is None:
            col = self.compute_column(i, None if active.size == len(self) else active)
            self.cache.put(i, col)
        return col

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Uncached Q[rows][:, cols]."""
        out = np.empty((rows.size, cols.size))
        for k, s in enumerate(cols):
            out[:, k] = self.compute_column(int(s))[rows]
        return out


def q_column(cache: KernelCache, i: int, active: np.ndarray, data: Dataset, spec: KernelSpec) -> np.ndarray:
    """Functional form of :meth:`QMatrix.column` for a standalone cache."""
    return QMatrix(data, spec, cache=cache).column(i, np.asarray(active))
