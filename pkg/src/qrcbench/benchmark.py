"""Benchmark tasks, linear readout and capacity metrics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .protocols import FeatureTable

SANTAFE_LENGTH = 2000
MEMORY_LENGTH = 1000
TRAIN_FRACTION = 0.7
PINV_RCOND = 1e-10
DEFAULT_ETA_MAX = {"forward": 10, "memory": 25}


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    origin: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("time series must be one-dimensional")
        if values.size and (values.min() < 0 or values.max() > 1):
            raise ValueError("time series values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def head(self, k: int) -> "TimeSeries":
        return TimeSeries(self.values[:k], self.origin)


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    eta: int = 1
    eta_max: int | None = None

    def __post_init__(self):
        if self.kind not in DEFAULT_ETA_MAX:
            raise ValueError(f"unknown task kind {self.kind!r}")
        eta_max = DEFAULT_ETA_MAX[self.kind] if self.eta_max is None else int(self.eta_max)
        object.__setattr__(self, "eta_max", eta_max)
        if not 1 <= self.eta <= eta_max:
            raise ValueError(f"eta must be in [1, {eta_max}], got {self.eta}")

    def sub_tasks(self):
        return [TaskSpec(self.kind, eta, self.eta_max) for eta in range(1, self.eta_max + 1)]


@dataclass(frozen=True)
class CapacityReport:
    capacities: np.ndarray
    sum_capacity: float

    @classmethod
    def from_capacities(cls, capacities) -> "CapacityReport":
        caps = np.asarray(capacities, dtype=float)
        return cls(caps, sum_capacity(caps))

    def as_dict(self) -> dict:
        return {
            "capacities": {str(eta): float(c) for eta, c in enumerate(self.capacities, start=1)},
            "sum_capacity": self.sum_capacity,
        }


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        raise ValueError("series has zero range; cannot normalise")
    return (values - lo) / (hi - lo)


def load_santafe(path, length: int = SANTAFE_LENGTH) -> TimeSeries:
    """First ``length`` values of a one-value-per-line file, min-max scaled to [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Santa Fe data file not found: {path}")
    values = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
            if len(values) == length:
                break
    if len(values) < length:
        raise ValueError(f"{path}: need {length} values, found {len(values)}")
    return TimeSeries(_minmax(np.array(values)), "santafe")


def gen_memory_series(seed: int, length: int = MEMORY_LENGTH) -> TimeSeries:
    rng = np.random.default_rng(seed)
    return TimeSeries(rng.uniform(0.0, 1.0, size=length), "uniform-random")


def make_target(series, task: TaskSpec) -> tuple[np.ndarray, np.ndarray]:
    """Row indices (0-based) with a defined target, and those targets.

    forward: row k pairs with s[k + eta]; memory: row k pairs with s[k - eta].
    """
    values = np.asarray(getattr(series, "values", series), dtype=float)
    K, eta = len(values), task.eta
    if eta >= K:
        raise ValueError(f"eta = {eta} leaves no targets in a series of length {K}")
    if task.kind == "forward":
        rows = np.arange(0, K - eta)
        return rows, values[rows + eta]
    rows = np.arange(eta, K)
    return rows, values[rows - eta]


def aligned_pairs(table: FeatureTable, series, task: TaskSpec) -> tuple[np.ndarray, np.ndarray]:
    rows, targets = make_target(series, task)
    keep = rows >= table.washout
    return table.rows[rows[keep]], targets[keep]


def split_index(n_rows: int) -> int:
    return int(round(TRAIN_FRACTION * n_rows))


@dataclass(frozen=True)
class Readout:
    weights: np.ndarray
    intercept: float

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features) @ self.weights + self.intercept


def train_readout(features, targets) -> Readout:
    """Least-squares linear readout with intercept via the SVD pseudo-inverse.

    Fits on exactly the rows given; callers pass the training split.
    """
    X = np.asarray(getattr(features, "rows", features), dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features and targets are not aligned")
    if len(X) < X.shape[1] + 1:
        raise ValueError(f"ill-posed readout: {len(X)} rows for {X.shape[1]} features plus intercept")
    A = np.hstack([X, np.ones((len(X), 1))])
    coef = np.linalg.pinv(A, rcond=PINV_RCOND) @ y
    return Readout(coef[:-1], float(coef[-1]))


def _variance_floor(x: np.ndarray) -> float:
    return x.size * (1e-12 * np.abs(x).max()) ** 2


def capacity(predictions, targets) -> float:
    """Squared Pearson correlation; 0 when either side has zero variance."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size < 2:
        raise ValueError("need two equal-length arrays of at least two values")
    dp, dt = p - p.mean(), t - t.mean()
    vp, vt = np.dot(dp, dp), np.dot(dt, dt)
    # centring a constant array leaves rounding residue; treat that as zero variance
    if vp <= _variance_floor(p) or vt <= _variance_floor(t):
        return 0.0
    c = np.dot(dp, dt) ** 2 / (vp * vt)
    return float(min(c, 1.0))


def sum_capacity(capacities) -> float:
    return float(np.sum(capacities))


def performance_ratio(olp_sum: float, rsp_best_sum: float) -> float:
    if rsp_best_sum <= 0:
        raise ValueError("best restarting-protocol sum capacity must be positive")
    return olp_sum / rsp_best_sum


def task_capacity(table: FeatureTable, series, task: TaskSpec) -> float:
    """Train on the first 70% of aligned rows, score on the rest."""
    X, y = aligned_pairs(table, series, task)
    cut = split_index(len(y))
    readout = train_readout(X[:cut], y[:cut])
    return capacity(readout.predict(X[cut:]), y[cut:])


def evaluate(table: FeatureTable, series, kind: str, eta_max: int | None = None) -> CapacityReport:
    """Capacities for every sub-task eta = 1..eta_max, each with its own readout."""
    task = TaskSpec(kind, 1, eta_max)
    return CapacityReport.from_capacities([task_capacity(table, series, t) for t in task.sub_tasks()])
