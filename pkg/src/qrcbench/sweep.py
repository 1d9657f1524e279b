"""Grid sweeps over (g, h), per-direction optimisation and result persistence."""

from __future__ import annotations

import csv
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .benchmark import DEFAULT_ETA_MAX, MEMORY_LENGTH, SANTAFE_LENGTH, evaluate, gen_memory_series, load_santafe
from .protocols import FeatureTable, FeedbackSpec, run_feedback, run_olp, run_rsp
from .reservoir import DEFAULT_DT, DEFAULT_WASHOUT, ReservoirSpec, derive_seed
from .resources import INFINITE, apply_shot_noise, shots_rsp_equivalent
from .states import AXES

SANTAFE_ENV = "QRC_SANTAFE_PATH"

# sub-stream tags for derive_seed
_COUPLINGS, _SERIES, _NOISE = 0, 1, 2
_PROTOCOL_TAG = {"rsp": 0, "olp": 1, "feedback": 2}


def _logspace(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(lo, hi, n))


@dataclass(frozen=True)
class SweepConfig:
    task: str = "memory"
    g_grid: tuple[float, ...] = _logspace(0.03, 3.0, 33)
    h_grid: tuple[float, ...] = _logspace(0.01, 40.0, 40)
    realizations: int = 50
    K: int | None = None
    eta_max: int | None = None
    shot_mode: str = "infinite"
    n_shots_olp: float = 1.5e6
    direction_filter: str = "all"
    master_seed: int = 0
    n_spins: int = 6
    dt: float = DEFAULT_DT
    washout: int = DEFAULT_WASHOUT
    workers: int = 1
    santafe_file: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "g_grid", tuple(float(g) for g in self.g_grid))
        object.__setattr__(self, "h_grid", tuple(float(h) for h in self.h_grid))
        if self.task not in DEFAULT_ETA_MAX:
            raise ValueError(f"unknown task {self.task!r}")
        for name in ("g_grid", "h_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ValueError(f"{name} is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if self.g_grid[0] < 0 or self.h_grid[0] <= 0:
            raise ValueError("g must be >= 0 and h > 0")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.shot_mode not in ("infinite", "finite"):
            raise ValueError(f"shot_mode must be 'infinite' or 'finite', got {self.shot_mode!r}")
        if self.direction_filter not in ("all", *AXES):
            raise ValueError(f"unknown direction_filter {self.direction_filter!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.length <= self.washout + 1:
            raise ValueError("series too short for the washout")

    @property
    def length(self) -> int:
        if self.K is not None:
            return int(self.K)
        return MEMORY_LENGTH if self.task == "memory" else SANTAFE_LENGTH

    @property
    def directions(self) -> tuple[str, ...]:
        return AXES if self.direction_filter == "all" else (self.direction_filter,)

    @property
    def n_shots_rsp(self) -> float:
        return shots_rsp_equivalent(self.n_shots_olp, self.length, self.washout)


DESK_CONFIG = SweepConfig(
    task="memory",
    g_grid=(0.1, 0.26, 0.5, 1.0, 2.0),
    h_grid=(0.03, 0.066, 0.1, 0.3, 1.0),
    realizations=5,
    K=300,
)

# --- flat key = value config files -------------------------------------------

_LOGSPACE = re.compile(r"^logspace\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)$")


def _parse_grid(text: str) -> tuple[float, ...]:
    m = _LOGSPACE.match(text.strip())
    if m:
        return _logspace(float(m.group(1)), float(m.group(2)), int(m.group(3)))
    return tuple(float(v) for v in text.split(",") if v.strip())


def parse_config(text: str, base: SweepConfig | None = None) -> SweepConfig:
    """Parse ``key = value`` lines (``#`` comments) on top of ``base``.

    Grids are comma-separated numbers or ``logspace(lo, hi, n)``.  Keys not
    given keep the full-scale defaults of :class:`SweepConfig`.
    """
    base = SweepConfig() if base is None else base
    types = {f.name: f.type for f in fields(SweepConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            if key in ("g_grid", "h_grid"):
                values[key] = _parse_grid(value)
            elif key in ("realizations", "K", "eta_max", "master_seed", "n_spins", "washout", "workers"):
                values[key] = None if value.lower() == "none" else int(float(value))
            elif key in ("n_shots_olp", "dt"):
                values[key] = float(value)
            else:
                values[key] = None if value.lower() == "none" else value
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for {key}: {exc}") from None
    return replace(base, **values)


def load_config(path) -> SweepConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text())


def config_to_text(config: SweepConfig) -> str:
    lines = []
    for f in fields(SweepConfig):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ", ".join(repr(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


# --- per-realization inputs --------------------------------------------------


@lru_cache(maxsize=8)
def _santafe(path: str, length: int):
    return load_santafe(path, length)


def resolve_santafe(path: str | None) -> str:
    path = path or os.environ.get(SANTAFE_ENV)
    if not path:
        raise ValueError(f"forward task needs a Santa Fe data file (--santafe-file or ${SANTAFE_ENV})")
    return path


def task_series(config: SweepConfig, realization: int):
    if config.task == "forward":
        return _santafe(resolve_santafe(config.santafe_file), config.length)
    return gen_memory_series(derive_seed(config.master_seed, realization, _SERIES), config.length)


def realization_spec(config: SweepConfig, realization: int, h: float) -> ReservoirSpec:
    """Coupling draws are shared by every protocol and grid cell of a realization."""
    seed = derive_seed(config.master_seed, realization, _COUPLINGS)
    return ReservoirSpec(config.n_spins, None, h, config.dt, seed)


def noise_seed(config: SweepConfig, protocol: str, realization: int, gi: int, hi: int) -> int:
    return derive_seed(config.master_seed, realization, _NOISE, _PROTOCOL_TAG[protocol], gi, hi)


def simulate(config: SweepConfig, protocol: str, g: float, h: float, realization: int, gi: int = 0, hi: int = 0):
    """Feature table (with shot noise in finite mode) for one work unit."""
    series = task_series(config, realization)
    spec = realization_spec(config, realization, h)
    if protocol == "rsp":
        table = run_rsp(series, spec, directions=config.directions, washout=config.washout)
        g_noise, shots = INFINITE, config.n_shots_rsp
    else:
        table = run_olp(series, spec, g, directions=config.directions, washout=config.washout)
        g_noise, shots = g, config.n_shots_olp
    if config.shot_mode == "finite":
        table = apply_shot_noise(table, g_noise, shots, noise_seed(config, protocol, realization, gi, hi))
    return series, table


@dataclass(frozen=True)
class CellRecord:
    task: str
    protocol: str
    g: float
    h: float
    realization: int
    sum_capacity: float
    capacities: tuple[float, ...] = field(default=(), repr=False)


def _run_unit(args) -> CellRecord:
    config, protocol, gi, hi, r = args
    g = config.g_grid[gi] if protocol == "olp" else math.nan
    h = config.h_grid[hi]
    if protocol == "olp" and g == 0:
        n_eta = DEFAULT_ETA_MAX[config.task] if config.eta_max is None else config.eta_max
        return CellRecord(config.task, protocol, g, h, r, 0.0, (0.0,) * n_eta)
    series, table = simulate(config, protocol, g, h, r, gi, hi)
    report = evaluate(table, series, config.task, config.eta_max)
    return CellRecord(config.task, protocol, g, h, r, report.sum_capacity, tuple(report.capacities.tolist()))


def _map_units(config: SweepConfig, units: list) -> list[CellRecord]:
    if config.workers == 1 or len(units) == 1:
        return [_run_unit(u) for u in units]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_run_unit, units, chunksize=max(1, len(units) // (4 * config.workers))))


@dataclass
class RspSlice:
    records: list[CellRecord]
    mean_by_h: np.ndarray
    best_h: float
    best_sum: float


@dataclass
class SweepResult:
    config: SweepConfig
    rsp: RspSlice
    records: list[CellRecord]
    mean_pr: np.ndarray  # (len(g_grid), len(h_grid))
    std_pr: np.ndarray
    best: dict

    def pr_of(self, record: CellRecord) -> float:
        return 0.0 if record.g == 0 else record.sum_capacity / self.rsp.best_sum

    def best_record_capacities(self, protocol: str) -> np.ndarray:
        """Realization-mean per-eta capacities at the best cell of ``protocol``."""
        if protocol == "rsp":
            chosen = [r for r in self.rsp.records if r.h == self.rsp.best_h]
        else:
            chosen = [r for r in self.records if r.g == self.best["g"] and r.h == self.best["h"]]
        return np.mean([r.capacities for r in chosen], axis=0)


def sweep_rsp(config: SweepConfig) -> RspSlice:
    units = [(config, "rsp", 0, hi, r) for hi in range(len(config.h_grid)) for r in range(config.realizations)]
    records = _map_units(config, units)
    sums = np.array([rec.sum_capacity for rec in records]).reshape(len(config.h_grid), config.realizations)
    mean_by_h = sums.mean(axis=1)
    ib = int(np.argmax(mean_by_h))
    return RspSlice(records, mean_by_h, config.h_grid[ib], float(mean_by_h[ib]))


def aggregate(records: list[CellRecord], config: SweepConfig, rsp_best: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean and (population) std over realizations of per-realization P_R, per cell."""
    ng, nh = len(config.g_grid), len(config.h_grid)
    pr = np.zeros((ng, nh, config.realizations))
    gi = {g: i for i, g in enumerate(config.g_grid)}
    hi = {h: i for i, h in enumerate(config.h_grid)}
    for rec in records:
        value = 0.0 if rec.g == 0 else rec.sum_capacity / rsp_best
        pr[gi[rec.g], hi[rec.h], rec.realization] = value
    return pr.mean(axis=2), pr.std(axis=2)


def sweep_olp(config: SweepConfig, rsp_best: float) -> tuple[list[CellRecord], np.ndarray, np.ndarray, dict]:
    if rsp_best <= 0:
        raise ValueError("rsp_best must be positive")
    units = [
        (config, "olp", gi, hi, r)
        for gi in range(len(config.g_grid))
        for hi in range(len(config.h_grid))
        for r in range(config.realizations)
    ]
    records = _map_units(config, units)
    mean_pr, std_pr = aggregate(records, config, rsp_best)
    gi, hi = np.unravel_index(int(np.argmax(mean_pr)), mean_pr.shape)
    best = {
        "g": config.g_grid[gi],
        "h": config.h_grid[hi],
        "P_R": float(mean_pr[gi, hi]),
        "P_R_std": float(std_pr[gi, hi]),
    }
    return records, mean_pr, std_pr, best


def run_sweep(config: SweepConfig) -> SweepResult:
    rsp = sweep_rsp(config)
    records, mean_pr, std_pr, best = sweep_olp(config, rsp.best_sum)
    return SweepResult(config, rsp, records, mean_pr, std_pr, best)


# --- per-direction optimisation ------------------------------------------------


@dataclass
class DirectionStudy:
    per_direction: dict[str, SweepResult]
    joint_rsp: RspSlice
    combined_sums: np.ndarray
    combined_capacities: np.ndarray
    combined_pr: float


def combined_table(config: SweepConfig, realization: int, optima: dict[str, tuple[float, float]]) -> tuple:
    """Concatenate each direction's pass, run at that direction's own (g, h)."""
    blocks = []
    series = None
    for d, (g, h) in optima.items():
        cfg = replace(config, direction_filter=d)
        gi, hi = cfg.g_grid.index(g), cfg.h_grid.index(h)
        series, table = simulate(cfg, "olp", g, h, realization, gi, hi)
        blocks.append(table)
    return series, FeatureTable.hstack(blocks)


def per_direction_optimize(config: SweepConfig) -> DirectionStudy:
    per_direction = {d: run_sweep(replace(config, direction_filter=d)) for d in AXES}
    joint_rsp = sweep_rsp(replace(config, direction_filter="all"))
    optima = {d: (res.best["g"], res.best["h"]) for d, res in per_direction.items()}
    sums, caps = [], []
    for r in range(config.realizations):
        series, table = combined_table(config, r, optima)
        report = evaluate(table, series, config.task, config.eta_max)
        sums.append(report.sum_capacity)
        caps.append(report.capacities)
    sums = np.array(sums)
    return DirectionStudy(
        per_direction, joint_rsp, sums, np.mean(caps, axis=0), float(np.mean(sums / joint_rsp.best_sum))
    )


# --- feedback comparison -------------------------------------------------------


@dataclass
class FeedbackComparison:
    a_fb_grid: tuple[float, ...]
    h_fb_grid: tuple[float, ...]
    fb_capacities: np.ndarray  # (len(h_fb), len(a_fb), realizations, eta_max)
    olp_capacities: np.ndarray  # (realizations, eta_max)
    olp_point: tuple[float, float]

    @property
    def fb_sum_mean(self) -> np.ndarray:
        return self.fb_capacities.sum(axis=3).mean(axis=2)

    @property
    def best_feedback(self) -> tuple[int, int]:
        hi, ai = np.unravel_index(int(np.argmax(self.fb_sum_mean)), self.fb_sum_mean.shape)
        return int(hi), int(ai)

    def best_feedback_capacities(self) -> np.ndarray:
        hi, ai = self.best_feedback
        return self.fb_capacities[hi, ai]


def compare_feedback(
    config: SweepConfig,
    a_fb_grid=(0.0, 0.2, 0.4, 0.63, 0.8, 1.0, 1.5, 2.0),
    h_fb_grid=(10.0,),
    olp_point=(0.355, 0.066),
    fb_axis: str = "z",
) -> FeedbackComparison:
    """Feedback-driven protocol over (h, a_fb) versus the online protocol at one point, paired by realization."""
    eta_max = DEFAULT_ETA_MAX[config.task] if config.eta_max is None else config.eta_max
    fb = np.zeros((len(h_fb_grid), len(a_fb_grid), config.realizations, eta_max))
    olp = np.zeros((config.realizations, eta_max))
    g_olp, h_olp = olp_point
    for r in range(config.realizations):
        series = task_series(config, r)
        for hi, h in enumerate(h_fb_grid):
            spec = realization_spec(config, r, h)
            for ai, a in enumerate(a_fb_grid):
                table = run_feedback(series, spec, FeedbackSpec(a, feedback_axis=fb_axis), washout=config.washout)
                if config.shot_mode == "finite":
                    seed = derive_seed(config.master_seed, r, _NOISE, _PROTOCOL_TAG["feedback"], ai, hi)
                    table = apply_shot_noise(table, INFINITE, config.n_shots_rsp, seed)
                fb[hi, ai, r] = evaluate(table, series, config.task, eta_max).capacities
        table = run_olp(series, realization_spec(config, r, h_olp), g_olp, washout=config.washout)
        if config.shot_mode == "finite":
            table = apply_shot_noise(table, g_olp, config.n_shots_olp, noise_seed(config, "olp", r, 0, 0))
        olp[r] = evaluate(table, series, config.task, eta_max).capacities
    return FeedbackComparison(tuple(a_fb_grid), tuple(h_fb_grid), fb, olp, (g_olp, h_olp))


# --- persistence -------------------------------------------------------------------

CELL_HEADER = ["task", "protocol", "g", "h", "realization", "sum_capacity"]


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def _write_cells(path: Path, records: list[CellRecord]) -> None:
    ordered = sorted(records, key=lambda r: (r.protocol, 0.0 if math.isnan(r.g) else r.g, r.h, r.realization))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CELL_HEADER)
        for r in ordered:
            w.writerow([r.task, r.protocol, _fmt(r.g), _fmt(r.h), r.realization, _fmt(r.sum_capacity)])


def _write_capacities(path: Path, capacities) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eta", "capacity"])
        for eta, c in enumerate(capacities, start=1):
            w.writerow([eta, _fmt(c)])


def read_cells(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["g"] = float(row["g"]) if row["g"] else math.nan
        row["h"] = float(row["h"])
        row["realization"] = int(row["realization"])
        row["sum_capacity"] = float(row["sum_capacity"])
    return rows


def summary_dict(result: SweepResult) -> dict:
    cfg = asdict(result.config)
    cfg["g_grid"], cfg["h_grid"] = list(cfg["g_grid"]), list(cfg["h_grid"])
    return {
        "config": cfg,
        "n_shots_rsp": result.config.n_shots_rsp if result.config.shot_mode == "finite" else None,
        "rsp_best": {"h": result.rsp.best_h, "sum_capacity": result.rsp.best_sum},
        "rsp_mean_by_h": {repr(h): float(v) for h, v in zip(result.config.h_grid, result.rsp.mean_by_h)},
        "olp_best": result.best,
        "aggregates": [
            {"g": g, "h": h, "mean_PR": float(result.mean_pr[i, j]), "std_PR": float(result.std_pr[i, j])}
            for i, g in enumerate(result.config.g_grid)
            for j, h in enumerate(result.config.h_grid)
        ],
    }


def emit_results(result: SweepResult, out_dir) -> dict[str, Path]:
    """Write cell CSVs, the aggregate CSV, per-eta capacity CSVs and a JSON summary."""
    if not result.records:
        raise ValueError("nothing to write: sweep has no records")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    paths = {
        "cells": out / "cells.csv",
        "rsp_cells": out / "rsp_cells.csv",
        "aggregate": out / "aggregate.csv",
        "summary": out / "summary.json",
        "capacities_olp_best": out / "capacities_olp_best.csv",
        "capacities_rsp_best": out / "capacities_rsp_best.csv",
    }
    _write_cells(paths["cells"], result.records)
    _write_cells(paths["rsp_cells"], result.rsp.records)
    with paths["aggregate"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["g", "h", "mean_PR", "std_PR"])
        for i, g in enumerate(result.config.g_grid):
            for j, h in enumerate(result.config.h_grid):
                w.writerow([_fmt(g), _fmt(h), _fmt(result.mean_pr[i, j]), _fmt(result.std_pr[i, j])])
    _write_capacities(paths["capacities_olp_best"], result.best_record_capacities("olp"))
    _write_capacities(paths["capacities_rsp_best"], result.best_record_capacities("rsp"))
    paths["summary"].write_text(json.dumps(summary_dict(result), indent=2))
    return paths
