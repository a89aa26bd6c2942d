"""LIBSVM-format datasets: parsing, writing, scaling and fold construction."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


class ParseError(DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True, eq=False)
class SparseVector:
    """One sample: strictly increasing 1-based feature indices with nonzero values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if idx.shape != val.shape:
            raise DataError("indices and values differ in length")
        if idx.size and (idx[0] < 1 or np.any(np.diff(idx) <= 0)):
            raise DataError("feature indices must be positive and strictly increasing")
        keep = val != 0.0
        if not keep.all():
            idx, val = idx[keep], val[keep]
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.int64),
                   np.array([p[1] for p in pairs], dtype=np.float64))

    @classmethod
    def from_dense(cls, x: Sequence[float]) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        nz = np.flatnonzero(x)
        return cls(nz + 1, x[nz])

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        out[self.indices - 1] = self.values
        return out

    def dot(self, other: "SparseVector") -> float:
        _, ia, ib = np.intersect1d(self.indices, other.indices,
                                   assume_unique=True, return_indices=True)
        return float(np.dot(self.values[ia], other.values[ib]))

    def sq_norm(self) -> float:
        return float(np.dot(self.values, self.values))

    def __len__(self):
        return self.indices.size

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"SparseVector({self.entries!r})"


@dataclass(frozen=True)
class ScalingTable:
    """Per-feature (lower, upper) observed ranges, keyed by 1-based feature index."""

    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_features(self) -> int:
        return self.lower.size

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for j in range(self.n_features):
                fh.write(f"{j + 1} {self.lower[j]:.17g} {self.upper[j]:.17g}\n")

    @classmethod
    def load(cls, path) -> "ScalingTable":
        rows = []
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 3:
                    raise ParseError(line_no, "expected 'index lower upper'")
                try:
                    rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
                except ValueError as exc:
                    raise ParseError(line_no, str(exc)) from exc
        n = max((r[0] for r in rows), default=0)
        lower, upper = np.zeros(n), np.zeros(n)
        for j, lo, hi in rows:
            lower[j - 1], upper[j - 1] = lo, hi
        return cls(lower, upper)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples with their labels.

    Absent features are zero. The dataset never changes after construction;
    the sparse design matrix and squared norms are built on first use.
    """

    samples: tuple
    labels: np.ndarray
    n_features: int
    scaling: ScalingTable | None = None
    name: str = ""
    _matrix: sp.csr_matrix | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if len(self.samples) != labels.size:
            raise DataError("samples and labels differ in length")

    def __len__(self):
        return len(self.samples)

    @property
    def y(self) -> np.ndarray:
        return self.labels

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is not None:
            return self._matrix
        indptr = np.zeros(len(self) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(s) for s in self.samples])
        if self.samples:
            indices = np.concatenate([s.indices - 1 for s in self.samples])
            data = np.concatenate([s.values for s in self.samples])
        else:
            indices, data = np.zeros(0, dtype=np.int64), np.zeros(0)
        return sp.csr_matrix((data, indices, indptr),
                             shape=(len(self), max(self.n_features, 1)))

    @cached_property
    def sq_norms(self) -> np.ndarray:
        return np.array([s.sq_norm() for s in self.samples])

    def is_classification(self) -> bool:
        return bool(np.all(np.abs(self.labels) == 1.0))

    def check_trainable(self) -> None:
        if len(self) < 2:
            raise DataError(f"need at least 2 samples, got {len(self)}")
        if not self.is_classification():
            raise DataError("classification labels must be +1 or -1")

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            samples=[self.samples[i] for i in indices],
            labels=self.labels[indices],
            n_features=self.n_features,
            scaling=self.scaling,
            name=self.name,
            _matrix=self.matrix[indices],
        )


def _remap_labels(raw: list[float]) -> np.ndarray:
    distinct = list(dict.fromkeys(raw))
    if set(distinct) <= {1.0, -1.0}:
        return np.array(raw, dtype=np.float64)
    if len(distinct) > 2:
        raise DataError(f"expected two classes, found {len(distinct)} distinct labels")
    mapping = {distinct[0]: 1.0}
    if len(distinct) == 2:
        mapping[distinct[1]] = -1.0
    return np.array([mapping[v] for v in raw], dtype=np.float64)


def parse_libsvm(text, classification: bool = True, name: str = "") -> Dataset:
    """Parse LIBSVM text (``label idx:val ...`` per line) into a Dataset.

    ``text`` may be bytes, str or a binary/text stream. With
    ``classification`` set, two-class labels other than +/-1 are remapped
    (first distinct label to +1, second to -1).
    """
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples, raw_labels = [], []
    n_features = 0
    for line_no, line in enumerate(io.StringIO(text), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            label = float(parts[0])
        except ValueError:
            raise ParseError(line_no, f"non-numeric label {parts[0]!r}") from None
        if not np.isfinite(label):
            raise ParseError(line_no, f"non-finite label {parts[0]!r}")
        idx = np.empty(len(parts) - 1, dtype=np.int64)
        val = np.empty(len(parts) - 1)
        prev = 0
        for k, tok in enumerate(parts[1:]):
            key, sep, value = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                j, v = int(key), float(value)
            except ValueError:
                raise ParseError(line_no, f"bad token {tok!r}") from None
            if j <= prev:
                raise ParseError(line_no, f"feature index {j} not increasing")
            idx[k], val[k], prev = j, v, j
        samples.append(SparseVector(idx, val))
        raw_labels.append(label)
        n_features = max(n_features, prev)
    labels = _remap_labels(raw_labels) if classification else np.array(raw_labels)
    return Dataset(samples, labels, n_features, name=name)


def load_libsvm(path, classification: bool = True) -> Dataset:
    path = Path(path)
    with open(path, "rb") as fh:
        return parse_libsvm(fh, classification=classification, name=path.name)


def format_libsvm(d: Dataset) -> str:
    lines = []
    for label, s in zip(d.labels, d.samples):
        head = f"{label:+g}" if abs(label) == 1.0 else f"{label:.17g}"
        body = " ".join(f"{j}:{v:.17g}" for j, v in zip(s.indices, s.values))
        lines.append(f"{head} {body}".rstrip())
    return "".join(line + "\n" for line in lines)


def write_libsvm(d: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_libsvm(d))


def feature_ranges(d: Dataset) -> ScalingTable:
    """Min/max per feature, counting absent entries as zero."""
    X = d.matrix
    n = d.n_features
    lower = np.asarray(X.min(axis=0).todense()).reshape(-1)[:n]
    upper = np.asarray(X.max(axis=0).todense()).reshape(-1)[:n]
    return ScalingTable(lower.astype(np.float64), upper.astype(np.float64))


def apply_scaling(d: Dataset, table: ScalingTable) -> Dataset:
    """Map each feature linearly so that [lower, upper] becomes [-1, 1].

    Constant features (lower == upper) map to 0. Features beyond the table
    pass through unchanged.
    """
    n = table.n_features
    span = table.upper - table.lower
    constant = span == 0
    safe_span = np.where(constant, 1.0, span)
    samples = []
    for s in d.samples:
        dense = s.to_dense(max(d.n_features, n))
        head = dense[:n]
        scaled = -1.0 + 2.0 * (head - table.lower) / safe_span
        scaled[constant] = 0.0
        dense[:n] = scaled
        samples.append(SparseVector.from_dense(dense))
    return Dataset(samples, d.labels, d.n_features, scaling=table, name=d.name)


def scale_to_unit_interval(d: Dataset) -> Dataset:
    if len(d) == 0:
        raise DataError("cannot scale an empty dataset")
    return apply_scaling(d, feature_ranges(d))


def kfold_split(d: Dataset | int, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffle then round-robin assignment into ``k`` folds.

    Returns ``(train_indices, validation_indices)`` pairs, each sorted.
    """
    l = d if isinstance(d, (int, np.integer)) else len(d)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > l:
        raise ValueError(f"k={k} exceeds the number of samples l={l}")
    perm = np.random.default_rng(seed).permutation(l)
    folds = []
    for f in range(k):
        val = np.sort(perm[f::k])
        mask = np.ones(l, dtype=bool)
        mask[val] = False
        folds.append((np.flatnonzero(mask), val))
    return folds


# Names as distributed on the LIBSVM binary-classification dataset page.
BENCHMARK_SMALL_SETS = ("a1a", "w1a", "australian", "splice", "breast-cancer",
                    "diabetes", "fourclass", "german.numer", "heart")
UNSCALED_SETS = {"a1a", "a9a", "w1a", "w8a"}


def data_dir() -> Path:
    return Path(os.environ.get("WSSWR_DATA_DIR",
                               Path(__file__).resolve().parents[2] / "data"))


def load_named_dataset(name: str, directory=None) -> Dataset:
    """Load one of the benchmark sets by its LIBSVM name.

    Looks for ``<name>`` (scaled here unless binary 0/1 data) and then
    ``<name>_scale`` (used as is) in ``directory`` or ``$WSSWR_DATA_DIR``.
    """
    directory = Path(directory) if directory is not None else data_dir()
    raw = directory / name
    if raw.is_file():
        d = load_libsvm(raw)
        return d if name in UNSCALED_SETS else scale_to_unit_interval(d)
    pre = directory / f"{name}_scale"
    if pre.is_file():
        return load_libsvm(pre)
    raise FileNotFoundError(f"dataset {name!r} not found in {directory}")
