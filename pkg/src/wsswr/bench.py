"""Comparison harness: run matrices, WSS-WR / WSS-3 ratios, histograms and traces.

Ratios (WSS-WR over WSS-3):

    ratio1  time, 100M cache, shrinking
    ratio2  time, 100M cache, no shrinking
    ratio3  time, 100K cache, shrinking
    ratio4  time, 100K cache, no shrinking
    ratio5  total iterations
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset
from .kernel import KernelSpec
from .solver import SolverParams, train
from .tune import grid_search

log = logging.getLogger(__name__)

CACHE_100M = 100 * 1024 ** 2
CACHE_100K = 100 * 1024
FINAL, PARAM_SELECTION = "final-training", "parameter-selection"


@dataclass(frozen=True)
class Setting:
    cache_bytes: int
    shrinking: bool

    @property
    def tag(self) -> str:
        size = f"{self.cache_bytes // 1024 ** 2}M" if self.cache_bytes >= 1024 ** 2 else f"{self.cache_bytes // 1024}K"
        return f"{size}-{'shrink' if self.shrinking else 'noshrink'}"


# Order matches ratio1..ratio4.
FOUR_SETTINGS = (
    Setting(CACHE_100M, True),
    Setting(CACHE_100M, False),
    Setting(CACHE_100K, True),
    Setting(CACHE_100K, False),
)


@dataclass
class RunRecord:
    dataset: str
    selector: str
    kernel: str
    cache_bytes: int
    shrinking: bool
    phase: str
    iterations: int = 0
    seconds: float = math.nan
    objective: float = math.nan
    trace: list = field(default_factory=list, repr=False)
    selection_counts: list | None = field(default=None, repr=False)
    error: str = ""

    @property
    def setting(self) -> Setting:
        return Setting(self.cache_bytes, self.shrinking)

    @property
    def run_id(self) -> str:
        kernel = self.kernel.split("(")[0]
        return f"{self.dataset}_{self.selector}_{kernel}_{self.setting.tag}_{self.phase}"


def _run_cell(args) -> RunRecord:
    name, d, spec, C, selector, setting, phase, repeats, grid, k, seed, epsilon, timed = args
    rec = RunRecord(name, selector, spec.label(), setting.cache_bytes, setting.shrinking, phase)
    params = SolverParams(C=C, epsilon=epsilon, cache_bytes=setting.cache_bytes,
                          shrinking=setting.shrinking)
    try:
        if phase == FINAL:
            times = []
            for r in range(max(1, repeats)):
                m = train(d, spec, selector, params)
                times.append(m.diagnostics.seconds)
                if r == 0:
                    diag = m.diagnostics
            rec.iterations = diag.iterations
            rec.seconds = float(np.mean(times))
            rec.objective = diag.objective
            rec.trace = [tuple(t) for t in diag.trace]
            rec.selection_counts = diag.selection_counts.tolist()
        else:
            if grid is None:
                raise ValueError("parameter-selection runs need a grid")
            res = grid_search(d, grid, selector, k=k, seed=seed, params=params)
            rec.iterations = res.total_iterations
            rec.seconds = res.total_seconds
        if not timed:
            rec.seconds = math.nan
    except Exception as exc:  # one failed cell must not stop the matrix
        log.warning("run %s failed: %s", rec.run_id, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_matrix(datasets: Mapping[str, Dataset], kernels: Sequence, selectors=("wsswr", "wss3"),
               settings: Sequence[Setting] = FOUR_SETTINGS, *, C: float = 1.0, epsilon: float = 1e-3,
               phase: str = FINAL, repeats: int = 4, grids: Mapping | None = None,
               k: int = 5, seed: int = 0, n_jobs: int = 1) -> list[RunRecord]:
    """Run every dataset x kernel x selector x setting cell.

    ``kernels`` holds KernelSpec objects or (KernelSpec, C) pairs. Final
    training repeats each cell ``repeats`` times and reports the mean time;
    parameter selection sums iterations and time over the grid in
    ``grids[kind]``. With ``n_jobs > 1`` cells run in parallel and times are
    not recorded.
    """
    jobs = []
    for name, d in datasets.items():
        for kern in kernels:
            spec, c = kern if isinstance(kern, tuple) else (kern, C)
            grid = grids.get(spec.kind) if grids else None
            for sel in selectors:
                for s in settings:
                    jobs.append((name, d, spec, c, sel, s, phase, repeats, grid, k, seed,
                                 epsilon, n_jobs == 1))
    if n_jobs == 1:
        return [_run_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(_run_cell, jobs))


@dataclass
class RatioRow:
    dataset: str
    kernel: str
    phase: str
    ratio1: float = math.nan
    ratio2: float = math.nan
    ratio3: float = math.nan
    ratio4: float = math.nan
    ratio5: float = math.nan
    errors: list = field(default_factory=list)

    @property
    def ratios(self) -> list[float]:
        return [self.ratio1, self.ratio2, self.ratio3, self.ratio4, self.ratio5]

    def ordering_holds(self) -> bool:
        """ratio5 < ratio4 < ratio3 < ratio2 < ratio1 (observed, not guaranteed)."""
        r = self.ratios
        return all(r[k + 1] < r[k] for k in range(4))


def compute_ratios(wsswr: Sequence[RunRecord], wss3: Sequence[RunRecord]) -> list[RatioRow]:
    """Ratios per (dataset, kernel kind, phase) from matching WSS-WR / WSS-3 records."""
    def index(records):
        out = {}
        for r in records:
            if not r.error:
                out[(r.dataset, r.kernel.split("(")[0], r.phase, r.setting)] = r
        return out

    a, b = index(wsswr), index(wss3)
    groups = sorted({key[:3] for key in a} | {key[:3] for key in b})
    rows = []
    for g in groups:
        row = RatioRow(*g)
        iters_a = iters_b = 0
        for n, s in enumerate(FOUR_SETTINGS, start=1):
            ra, rb = a.get(g + (s,)), b.get(g + (s,))
            if ra is None or rb is None:
                row.errors.append(f"ratio{n}: missing {'WSS-WR' if ra is None else 'WSS-3'} record for {s.tag}")
                continue
            iters_a += ra.iterations
            iters_b += rb.iterations
            setattr(row, f"ratio{n}", ra.seconds / rb.seconds if rb.seconds > 0 else math.nan)
        if iters_b > 0:
            row.ratio5 = iters_a / iters_b
        else:
            row.errors.append("ratio5: no matched iterations")
        rows.append(row)
    return rows


def selection_histogram(record: RunRecord) -> np.ndarray:
    """How often each index entered a working set."""
    if record.selection_counts is None:
        raise ValueError(f"run {record.run_id} has no selection counts")
    return np.asarray(record.selection_counts, dtype=np.int64)


def convergence_trace(record: RunRecord, path=None) -> str:
    """CSV text ``iteration,seconds,objective``; also written to ``path`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "seconds", "objective"])
    for it, sec, obj in record.trace:
        w.writerow([it, f"{sec:.6f}", f"{obj:.17g}"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def time_spread(records: Sequence[RunRecord]) -> dict:
    """max/min training time across settings, per (dataset, selector, kernel)."""
    groups: dict = {}
    for r in records:
        if not r.error and r.seconds > 0:
            groups.setdefault((r.dataset, r.selector, r.kernel), []).append(r.seconds)
    return {key: max(v) / min(v) for key, v in groups.items() if len(v) > 1}


RUN_FIELDS = ["dataset", "selector", "kernel", "cache_bytes", "shrinking", "phase",
              "iterations", "seconds", "objective", "error", "selection_counts", "trace"]


def write_runs_csv(records: Sequence[RunRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_FIELDS)
        w.writeheader()
        for r in records:
            row = asdict(r)
            row["selection_counts"] = json.dumps(r.selection_counts)
            row["trace"] = json.dumps([list(t) for t in r.trace])
            row["shrinking"] = int(r.shrinking)
            w.writerow(row)


def read_runs_csv(path) -> list[RunRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(RunRecord(
                dataset=row["dataset"], selector=row["selector"], kernel=row["kernel"],
                cache_bytes=int(row["cache_bytes"]), shrinking=bool(int(row["shrinking"])),
                phase=row["phase"], iterations=int(row["iterations"]),
                seconds=float(row["seconds"]), objective=float(row["objective"]),
                trace=[tuple(t) for t in json.loads(row["trace"])],
                selection_counts=json.loads(row["selection_counts"]),
                error=row["error"],
            ))
    return out


def write_ratios_csv(rows: Sequence[RatioRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "kernel", "phase", "ratio1", "ratio2", "ratio3", "ratio4",
                    "ratio5", "ordering_holds", "errors"])
        for r in rows:
            w.writerow([r.dataset, r.kernel, r.phase, *(f"{x:.6g}" for x in r.ratios),
                        int(r.ordering_holds()), "; ".join(r.errors)])


def write_bench_outputs(records: Sequence[RunRecord], out_dir) -> Path:
    """runs.csv, ratios.csv and per-run histogram_/trace_ files under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_runs_csv(records, out / "runs.csv")
    wr = [r for r in records if r.selector == "wsswr"]
    w3 = [r for r in records if r.selector == "wss3"]
    write_ratios_csv(compute_ratios(wr, w3), out / "ratios.csv")
    for r in records:
        if r.error:
            continue
        if r.selection_counts is not None:
            with open(out / f"histogram_{r.run_id}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["index", "count"])
                for i, c in enumerate(r.selection_counts, start=1):
                    w.writerow([i, c])
        if r.trace:
            convergence_trace(r, out / f"trace_{r.run_id}.csv")
    return out
