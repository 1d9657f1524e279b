"""Indirect measurement model: pointer kernel, back-action mask and feature extraction."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .states import AXES, OperatorMatrix, QuantumState


@dataclass(frozen=True)
class MeasurementModel:
    strength_g: float
    basis: str = "z"

    def __post_init__(self):
        if self.strength_g < 0:
            raise ValueError("measurement strength must be >= 0")
        if self.basis not in AXES:
            raise ValueError(f"unknown basis {self.basis!r}")


@dataclass(frozen=True)
class BackActionMask:
    mask: np.ndarray
    g: float
    n_spins: int


def measurement_kernel(V: float, g: float) -> np.ndarray:
    """Diagonal Kraus operator for pointer outcome ``V`` at strength ``g`` (z basis)."""
    if g < 0:
        raise ValueError("measurement strength must be >= 0")
    norm = (2 * np.pi) ** -0.25
    return np.diag([norm * np.exp(-((V - g) ** 2) / 4), norm * np.exp(-((V + g) ** 2) / 4)])


@lru_cache(maxsize=64)
def _hamming_table(n_spins: int) -> np.ndarray:
    idx = np.arange(2**n_spins)
    xor = idx[:, None] ^ idx[None, :]
    return np.bitwise_count(xor.astype(np.uint64)).astype(float)


@lru_cache(maxsize=256)
def _mask_array(g: float, n_spins: int) -> np.ndarray:
    m = np.exp(-0.5 * g * g * _hamming_table(n_spins))
    m.setflags(write=False)
    return m


def backaction_mask(g: float, n_spins: int) -> BackActionMask:
    """Element-wise dephasing mask ``exp(-g^2 d_H(a, b) / 2)``.

    Equal to the matrix ``(I + exp(-g^2/2) sigma^x)^{x N}`` but filled directly
    from Hamming distances.
    """
    if g < 0:
        raise ValueError("measurement strength must be >= 0")
    return BackActionMask(_mask_array(float(g), int(n_spins)), float(g), int(n_spins))


def apply_backaction(rho: QuantumState, mask: BackActionMask) -> QuantumState:
    if rho.rho.shape != mask.mask.shape:
        raise ValueError("mask and state dimensions differ")
    return QuantumState(rho.rho * mask.mask, rho.n_spins)


# Single-qubit rotations R with R sigma^axis R^dag = sigma^z.
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_Y_TO_Z = np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2)
_LOCAL_ROTATION = {"x": _HADAMARD, "y": _Y_TO_Z, "z": np.eye(2, dtype=complex)}


@lru_cache(maxsize=32)
def _rotation_array(basis: str, n_spins: int) -> np.ndarray:
    r = np.ones((1, 1), dtype=complex)
    for _ in range(n_spins):
        r = np.kron(r, _LOCAL_ROTATION[basis])
    r.setflags(write=False)
    return r


def basis_rotation(basis: str, n_spins: int) -> OperatorMatrix:
    if basis not in AXES:
        raise ValueError(f"unknown basis {basis!r}")
    return OperatorMatrix(_rotation_array(basis, n_spins))


def pair_indices(n_spins: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n_spins) for j in range(i + 1, n_spins)]


def features_per_direction(n_spins: int) -> int:
    return 2 * n_spins + n_spins * (n_spins - 1) // 2


def feature_names(n_spins: int, directions=AXES) -> list[str]:
    names = []
    for d in directions:
        names += [f"{d}{i}" for i in range(n_spins)]
        names += [f"{d}{i}{d}{j}" for i, j in pair_indices(n_spins)]
        names += [f"var_{d}{i}" for i in range(n_spins)]
    return names


@lru_cache(maxsize=32)
def _sign_table(n_spins: int) -> np.ndarray:
    """Eigenvalues of each z single and z-z pair operator on the computational basis."""
    idx = np.arange(2**n_spins)
    z = np.stack([1 - 2 * ((idx >> (n_spins - 1 - i)) & 1) for i in range(n_spins)], axis=1).astype(float)
    pairs = [z[:, i] * z[:, j] for i, j in pair_indices(n_spins)]
    table = np.column_stack([z, *pairs]) if pairs else z
    table.setflags(write=False)
    return table


def features_from_diagonal(populations: np.ndarray, n_spins: int) -> np.ndarray:
    values = populations @ _sign_table(n_spins)
    return np.concatenate([values, np.ones(n_spins)])


def extract_features(rho: QuantumState, basis: str) -> np.ndarray:
    """Single, pair and (constant) variance features of one measured direction.

    ``rho`` must already be rotated so that ``basis`` is the z axis; only its
    diagonal is read.  The ``basis`` argument names the direction for the
    caller and does not change the arithmetic.
    """
    if basis not in AXES:
        raise ValueError(f"unknown basis {basis!r}")
    return features_from_diagonal(np.real(np.diag(rho.rho)), rho.n_spins)
