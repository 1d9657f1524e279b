"""Finite-shot noise and experiment-time accounting for the two measurement protocols."""

from __future__ import annotations

import math

import numpy as np

from .protocols import FeatureTable

INFINITE = math.inf


def _check(g: float, n_shots: float) -> None:
    if n_shots <= 0:
        raise ValueError("n_shots must be positive")
    if g <= 0:
        raise ValueError("statistical uncertainty diverges for g <= 0; pass math.inf for projective readout")


def sigma_single(g: float, n_shots: float) -> float:
    """Std of a single-spin expectation estimated from ``n_shots`` pointer readings."""
    _check(g, n_shots)
    if math.isinf(g):
        return 1.0 / math.sqrt(n_shots)
    return math.sqrt((g * g + 1) / (g * g * n_shots))


def sigma_pair(g: float, n_shots: float) -> float:
    _check(g, n_shots)
    if math.isinf(g):
        return 1.0 / math.sqrt(n_shots)
    g2 = g * g
    return math.sqrt((g2 * g2 + 2 * g2 + 1) / (g2 * g2 * n_shots))


def _is_pair_column(name: str) -> bool:
    return not name.startswith("var_") and len(name) > 1 and any(c in "xyz" for c in name[1:])


def apply_shot_noise(table: FeatureTable, g: float, n_shots: float, seed: int) -> FeatureTable:
    """Add i.i.d. Gaussian readout noise: pair columns get ``sigma_pair``, all others ``sigma_single``."""
    if math.isinf(n_shots):
        return table
    pair = np.array([_is_pair_column(c) for c in table.columns])
    scale = np.where(pair, sigma_pair(g, n_shots), sigma_single(g, n_shots))
    rng = np.random.default_rng(seed)
    return table.with_rows(table.rows + rng.standard_normal(table.shape) * scale)


def time_rsp(K: int, K_wo: int, dt: float, n_shots: float) -> float:
    """Wall-clock time (units of 1/J) of the restarting protocol over three bases."""
    if K <= K_wo:
        raise ValueError("series must be longer than the washout")
    kp = K - K_wo
    return 3 * n_shots * (kp * K_wo * dt + 0.5 * (kp + 1) * kp * dt)


def time_olp(K: int, dt: float, n_shots: float) -> float:
    if K <= 0:
        raise ValueError("K must be positive")
    return 3 * n_shots * K * dt


def shots_rsp_equivalent(n_shots_olp: float, K: int, K_wo: int) -> float:
    """Restarting-protocol shots affordable in the online protocol's run time."""
    if K <= K_wo:
        raise ValueError("series must be longer than the washout")
    kp = K - K_wo
    return n_shots_olp * 2 * K / (kp * kp + kp * (2 * K_wo + 1))
