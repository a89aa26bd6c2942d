"""Trained models: decision function, prediction, metrics and file I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .data import Dataset, SparseVector
from .kernel import KernelSpec, kernel_matrix


@dataclass
class Diagnostics:
    iterations: int = 0
    seconds: float = 0.0
    objective: float = 0.0
    status: str = ""
    violation: float = float("nan")
    selection_counts: np.ndarray | None = None
    trace: list = field(default_factory=list)
    pairs: list | None = None
    alpha: np.ndarray | None = None
    kernel_evaluations: int = 0
    cache_hits: int = 0
    cache_misses: int = 0


@dataclass
class Metrics:
    accuracy: float
    mse: float


class TrainedModel:
    """decision(x) = sum_s coef_s K(x_s, x) - rho, with coef_s = y_s alpha_s.

    Support vectors are ordered positive class first, then by training index.
    """

    def __init__(self, kernel: KernelSpec, coefs, vectors, rho: float,
                 C: float | None = None, diagnostics: Diagnostics | None = None,
                 support_indices=None):
        self.kernel = kernel
        self.coefs = np.asarray(coefs, dtype=np.float64)
        self.vectors = list(vectors)
        self.rho = float(rho)
        self.C = C
        self.diagnostics = diagnostics or Diagnostics()
        self.support_indices = None if support_indices is None else np.asarray(support_indices)
        if self.coefs.size != len(self.vectors):
            raise ValueError("coefficient and support-vector counts differ")

    @classmethod
    def from_solution(cls, d: Dataset, spec: KernelSpec, alpha, rho, C, diagnostics=None):
        alpha = np.asarray(alpha)
        y = d.labels
        pos = np.flatnonzero((alpha > 0) & (y > 0))
        neg = np.flatnonzero((alpha > 0) & (y < 0))
        sv = np.concatenate([pos, neg])
        return cls(spec, y[sv] * alpha[sv], [d.samples[i] for i in sv], rho, C,
                   diagnostics, support_indices=sv)

    @property
    def support(self) -> list[tuple[float, SparseVector]]:
        return list(zip(self.coefs.tolist(), self.vectors))

    @property
    def n_support(self) -> int:
        return self.coefs.size

    @cached_property
    def _sv_data(self) -> Dataset:
        n = max((int(v.indices[-1]) for v in self.vectors if len(v)), default=1)
        return Dataset(self.vectors, np.ones(len(self.vectors)), n)

    def decision_function(self, x) -> np.ndarray | float:
        if isinstance(x, SparseVector):
            n = int(x.indices[-1]) if len(x) else 1
            return float(self.decision_function(Dataset([x], [1.0], n))[0])
        if self.n_support == 0:
            return np.full(len(x), -self.rho)
        K = kernel_matrix(self.kernel, self._sv_data, x)
        return self.coefs @ K - self.rho

    def predict(self, x):
        """+1/-1 labels; a decision value of exactly 0 maps to +1."""
        dec = self.decision_function(x)
        if np.isscalar(dec):
            return 1.0 if dec >= 0 else -1.0
        return np.where(dec >= 0, 1.0, -1.0)

    def evaluate(self, d: Dataset) -> Metrics:
        return evaluate(self, d)

    def save(self, path) -> None:
        save_model(self, path)

    def __repr__(self):
        return (f"TrainedModel({self.kernel.label()}, n_support={self.n_support}, "
                f"rho={self.rho:.6g})")


def predict(m: TrainedModel, x):
    return m.predict(x)


def evaluate(m: TrainedModel, d: Dataset) -> Metrics:
    if len(d) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    dec = m.decision_function(d)
    pred = np.where(dec >= 0, 1.0, -1.0)
    return Metrics(
        accuracy=100.0 * float(np.mean(pred == d.labels)),
        mse=float(np.mean((dec - d.labels) ** 2)),
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_model(m: TrainedModel) -> str:
    k = m.kernel
    lines = ["svm_type c_svc", f"kernel_type {k.kind}"]
    if k.kind == "polynomial":
        lines += [f"degree {_fmt(k.degree)}", f"gamma {_fmt(k.gamma)}", f"coef0 {_fmt(k.gamma)}"]
    elif k.kind == "rbf":
        lines.append(f"gamma {_fmt(k.gamma)}")
    elif k.kind == "sigmoid":
        lines += [f"gamma {_fmt(k.gamma)}", f"coef0 {_fmt(k.degree)}"]
    n_pos = int(np.sum(m.coefs > 0))
    lines += [
        "nr_class 2",
        f"total_sv {m.n_support}",
        f"rho {_fmt(m.rho)}",
        "label 1 -1",
        f"nr_sv {n_pos} {m.n_support - n_pos}",
        "SV",
    ]
    for c, v in m.support:
        body = " ".join(f"{j}:{_fmt(x)}" for j, x in zip(v.indices.tolist(), v.values.tolist()))
        lines.append(f"{_fmt(c)} {body}".rstrip())
    return "\n".join(lines) + "\n"


def save_model(m: TrainedModel, path) -> None:
    Path(path).write_text(format_model(m))


def load_model(path) -> TrainedModel:
    header = {}
    coefs, vectors = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "SV":
                break
            header[parts[0]] = parts[1:]
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            coefs.append(float(parts[0]))
            pairs = [tok.split(":") for tok in parts[1:]]
            vectors.append(SparseVector.from_pairs((int(a), float(b)) for a, b in pairs))
    kind = header["kernel_type"][0]
    gamma = float(header.get("gamma", ["1"])[0])
    if kind == "polynomial":
        coef0 = float(header.get("coef0", [str(gamma)])[0])
        if coef0 != gamma:
            raise ValueError("polynomial kernels here require coef0 == gamma")
        spec = KernelSpec(kind, gamma, float(header["degree"][0]))
    elif kind == "sigmoid":
        spec = KernelSpec(kind, gamma, float(header.get("coef0", ["0"])[0]))
    else:
        spec = KernelSpec(kind, gamma if kind == "rbf" else 1.0)
    labels = [float(v) for v in header.get("label", ["1", "-1"])]
    if labels != [1.0, -1.0]:
        raise ValueError(f"unsupported label order {labels}")
    return TrainedModel(spec, coefs, vectors, float(header["rho"][0]))


def write_diagnostics(diag: Diagnostics, path) -> Path:
    """Write the objective trace to ``path`` and selection counts next to it.

    Returns the path of the selection-count table.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "seconds", "objective"])
        for it, sec, obj in diag.trace:
            w.writerow([it, f"{sec:.6f}", _fmt(obj)])
    counts_path = path.with_name(path.stem + "_selection.csv")
    with open(counts_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "count"])
        counts = diag.selection_counts if diag.selection_counts is not None else []
        for i, c in enumerate(counts, start=1):
            w.writerow([i, int(c)])
    return counts_path
