"""Parameter selection: k-fold cross-validation over a log2 (C, gamma) grid."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, kfold_split
from .kernel import KernelSpec
from .solver import SolverParams, train


class TuningError(RuntimeError):
    pass


def _point_spec(kind: str, degree, log2_gamma) -> KernelSpec:
    gamma = 1.0 if log2_gamma is None else 2.0 ** log2_gamma
    return KernelSpec(kind, gamma, degree)


def _axis(start: float, end: float, step: float) -> list[float]:
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    if n < 1:
        raise ValueError(f"empty range {start},{end},{step}")
    return [start + k * step for k in range(n)]


@dataclass(frozen=True)
class ParamGrid:
    """log2 C and (optionally) log2 gamma ranges, each ``(start, end, step)`` inclusive."""

    kind: str
    log2_c: tuple
    log2_gamma: tuple | None = None
    degree: float | None = None

    def c_values(self) -> list[float]:
        return _axis(*self.log2_c)

    def gamma_values(self) -> list[float | None]:
        return _axis(*self.log2_gamma) if self.log2_gamma else [None]

    def points(self) -> list[tuple[float, float | None]]:
        return [(c, g) for c in self.c_values() for g in self.gamma_values()]

    def __len__(self):
        return len(self.c_values()) * len(self.gamma_values())

    def spec(self, log2_gamma: float | None) -> KernelSpec:
        return _point_spec(self.kind, self.degree, log2_gamma)


# (log2 C), (log2 gamma) per kernel for classification.
_TABLE = {
    "rbf": ((-5, 15, 2), (3, -15, -2)),
    "linear": ((-3, 5, 2), None),
    "polynomial": ((-3, 5, 2), (-5, -1, 1)),
    "sigmoid": ((-3, 12, 3), (-12, 3, 3)),
}


def default_grid(kind: str, task: str = "classification", degree: float | None = None) -> ParamGrid:
    if task != "classification":
        raise ValueError("only classification grids are supported")
    if kind not in _TABLE:
        raise ValueError(f"unknown kernel {kind!r}")
    c, g = _TABLE[kind]
    return ParamGrid(kind, c, g, degree)


def _spread(values: list, n: int) -> list:
    if len(values) <= n:
        return list(values)
    pick = np.round(np.linspace(0, len(values) - 1, n)).astype(int)
    return [values[k] for k in pick]


@dataclass(frozen=True)
class PointGrid:
    """An explicit list of (log2 C, log2 gamma) points; used for reduced searches."""

    kind: str
    point_list: tuple
    degree: float | None = None

    def points(self):
        return list(self.point_list)

    def __len__(self):
        return len(self.point_list)

    def spec(self, log2_gamma):
        return _point_spec(self.kind, self.degree, log2_gamma)


def reduced_grid(grid: ParamGrid, n_points: int = 16) -> PointGrid:
    """Evenly spaced sub-grid: sqrt(n) values per axis (all C values if no gamma axis)."""
    cs, gs = grid.c_values(), grid.gamma_values()
    if grid.log2_gamma is None:
        pts = [(c, None) for c in _spread(cs, n_points)]
    else:
        side = int(round(math.sqrt(n_points)))
        pts = [(c, g) for c in _spread(cs, side) for g in _spread(gs, side)]
    return PointGrid(grid.kind, tuple(pts), grid.degree)


def stratifiable_folds(d: Dataset, k: int, seed: int, attempts: int = 10):
    """Folds whose training parts all contain both classes, reshuffling with seed+1, ..."""
    for s in range(seed, seed + attempts):
        folds = kfold_split(d, k, s)
        if all(np.unique(d.labels[tr]).size == 2 for tr, _ in folds):
            return folds
    raise TuningError(f"could not build {k} folds with both classes in every training part")


@dataclass
class CVResult:
    accuracy: float
    iterations: int
    seconds: float
    predictions: np.ndarray = field(repr=False, default=None)


def cross_validate_detail(d: Dataset, spec: KernelSpec, selector, params: SolverParams,
                          k: int = 5, seed: int = 0, folds=None) -> CVResult:
    if folds is None:
        folds = stratifiable_folds(d, k, seed)
    pred = np.zeros(len(d))
    iterations, seconds = 0, 0.0
    for tr, va in folds:
        m = train(d.subset(tr), spec, selector, params)
        pred[va] = m.predict(d.subset(va))
        iterations += m.diagnostics.iterations
        seconds += m.diagnostics.seconds
    acc = 100.0 * float(np.mean(pred == d.labels))
    return CVResult(acc, iterations, seconds, pred)


def cross_validate(d: Dataset, spec: KernelSpec, selector="wss3", params: SolverParams | None = None,
                   k: int = 5, seed: int = 0, folds=None) -> float:
    """Accuracy (percent) over all held-out predictions of k-fold CV."""
    params = params or SolverParams()
    return cross_validate_detail(d, spec, selector, params, k, seed, folds).accuracy


@dataclass(frozen=True)
class GridRow:
    log2_c: float
    log2_gamma: float | None
    accuracy: float
    iterations: int
    seconds: float


@dataclass
class GridResult:
    best: GridRow
    rows: list[GridRow]

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.rows)

    @property
    def total_seconds(self) -> float:
        return sum(r.seconds for r in self.rows)

    def write_csv(self, path) -> None:
        write_grid_csv(self.rows, path)


def select_best(rows: list[GridRow]) -> GridRow:
    """Highest accuracy; ties go to smaller C, then smaller gamma."""
    if not rows:
        raise ValueError("empty grid")
    def key(r):
        g = -math.inf if r.log2_gamma is None else r.log2_gamma
        return (-r.accuracy, r.log2_c, g)
    return min(rows, key=key)


def _grid_job(args):
    d, spec, selector, params, folds, c, g = args
    p = replace(params, C=2.0 ** c)
    res = cross_validate_detail(d, spec, selector, p, folds=folds)
    return GridRow(c, g, res.accuracy, res.iterations, res.seconds)


def grid_search(d: Dataset, grid, selector="wss3", k: int = 5, seed: int = 0,
                params: SolverParams | None = None, n_jobs: int = 1) -> GridResult:
    """Cross-validate every grid point on one fixed set of folds."""
    params = params or SolverParams()
    folds = stratifiable_folds(d, k, seed)
    jobs = [(d, grid.spec(g), selector, params, folds, c, g) for c, g in grid.points()]
    if not jobs:
        raise ValueError("empty grid")
    if n_jobs == 1:
        rows = [_grid_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            rows = list(ex.map(_grid_job, jobs))
    return GridResult(select_best(rows), rows)


GRID_FIELDS = ["log2C", "log2gamma", "accuracy", "iterations", "seconds"]


def write_grid_csv(rows: list[GridRow], path) -> None:
    """Write to a path, or to an open text stream."""
    if hasattr(path, "write"):
        _write_grid_rows(rows, path)
        return
    with open(path, "w", newline="") as fh:
        _write_grid_rows(rows, fh)


def _write_grid_rows(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(GRID_FIELDS)
    for r in rows:
        w.writerow([f"{r.log2_c:g}", "" if r.log2_gamma is None else f"{r.log2_gamma:g}",
                    f"{r.accuracy:.4f}", r.iterations, f"{r.seconds:.6f}"])


def read_grid_csv(path) -> list[GridRow]:
    with open(path, newline="") as fh:
        return [GridRow(float(r["log2C"]),
                        float(r["log2gamma"]) if r["log2gamma"] else None,
                        float(r["accuracy"]), int(r["iterations"]), float(r["seconds"]))
                for r in csv.DictReader(fh)]
