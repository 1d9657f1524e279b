"""Dense density-matrix primitives for small spin registers.

Qubit 0 is the most significant bit of a basis-state index, so for
``n_spins = 2`` the basis order is ``|00>, |01>, |10>, |11>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_SPINS = 12
ALGEBRA_TOL = 1e-10
PSD_TOL = 1e-9

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
AXES = ("x", "y", "z")


def _check_n_spins(n_spins: int) -> None:
    if not 1 <= n_spins <= MAX_SPINS:
        raise ValueError(f"n_spins must be in [1, {MAX_SPINS}], got {n_spins}")


def _check_site(site: int, n_spins: int) -> None:
    if not 0 <= site < n_spins:
        raise ValueError(f"site {site} out of range for {n_spins} spins")


def n_spins_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class QuantumState:
    """Density matrix of an ``n_spins`` register, validated on construction."""

    rho: np.ndarray
    n_spins: int

    def __post_init__(self):
        _check_n_spins(self.n_spins)
        rho = np.asarray(self.rho, dtype=complex)
        dim = 2**self.n_spins
        if rho.shape != (dim, dim):
            raise ValueError(f"rho has shape {rho.shape}, expected {(dim, dim)}")
        if np.abs(rho - rho.conj().T).max() > ALGEBRA_TOL:
            raise ValueError("rho is not Hermitian")
        if abs(np.trace(rho) - 1) > ALGEBRA_TOL:
            raise ValueError("rho does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise ValueError("rho is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def ground(cls, n_spins: int) -> "QuantumState":
        """The all-up product state |0...0>."""
        dim = 2**n_spins
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return cls(rho, n_spins)

    @classmethod
    def maximally_mixed(cls, n_spins: int) -> "QuantumState":
        dim = 2**n_spins
        return cls(np.eye(dim, dtype=complex) / dim, n_spins)

    @classmethod
    def from_ket(cls, psi) -> "QuantumState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), n_spins_of(psi.size))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho, self.rho)))


@dataclass(frozen=True)
class OperatorMatrix:
    mat: np.ndarray
    hermitian_flag: bool = False

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        if self.hermitian_flag and np.abs(mat - mat.conj().T).max() > ALGEBRA_TOL:
            raise ValueError("operator flagged Hermitian but is not")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def random_state(n_spins: int, rng: np.random.Generator, rank: int | None = None) -> QuantumState:
    """Random mixed state from a Ginibre matrix of the given rank (full rank by default)."""
    dim = 2**n_spins
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(rho / np.trace(rho).real, n_spins)


def pauli_on_site(axis: str, site: int, n_spins: int) -> OperatorMatrix:
    """``I x ... x sigma^axis x ... x I`` with the Pauli at position ``site``."""
    if axis not in PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    _check_n_spins(n_spins)
    _check_site(site, n_spins)
    left = np.eye(2**site)
    right = np.eye(2 ** (n_spins - site - 1))
    return OperatorMatrix(np.kron(np.kron(left, PAULI[axis]), right), True)


def propagator(H: OperatorMatrix, dt: float) -> OperatorMatrix:
    """Unitary ``exp(-i H dt)`` from the Hermitian eigendecomposition of ``H``."""
    if not H.hermitian_flag and np.abs(H.mat - H.mat.conj().T).max() > ALGEBRA_TOL:
        raise ValueError("propagator requires a Hermitian operator")
    evals, evecs = np.linalg.eigh(H.mat)
    U = (evecs * np.exp(-1j * evals * dt)) @ evecs.conj().T
    return OperatorMatrix(U)


def partial_trace_site(rho: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Trace out one spin of a ``2**n_spins`` density matrix (raw array in, raw array out)."""
    _check_site(site, n_spins)
    left, right = 2**site, 2 ** (n_spins - site - 1)
    t = rho.reshape(left, 2, right, left, 2, right)
    out = t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :]
    return out.reshape(left * right, left * right)


def partial_trace_input(rho: QuantumState, input_site: int = 0) -> np.ndarray:
    return partial_trace_site(rho.rho, input_site, rho.n_spins)


def insert_site(rho_a: np.ndarray, rho_rest: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Inverse of the partial trace for product states: place ``rho_a`` at ``site``."""
    _check_site(site, n_spins)
    if site == 0:
        return np.kron(rho_a, rho_rest)
    left, right = 2**site, 2 ** (n_spins - site - 1)
    rest = rho_rest.reshape(left, right, left, right)
    out = np.einsum("ab,icjd->iacjbd", rho_a, rest)
    dim = 2**n_spins
    return out.reshape(dim, dim)


def expectation(rho: QuantumState, O: OperatorMatrix) -> float:
    if rho.rho.shape != O.mat.shape:
        raise ValueError(f"dimension mismatch: state {rho.rho.shape}, operator {O.mat.shape}")
    # Tr(rho O) = sum_ab rho_ab O_ba
    value = np.sum(rho.rho * O.mat.T)
    if O.hermitian_flag and abs(value.imag) > ALGEBRA_TOL:
        raise ValueError("expectation of a Hermitian operator has an imaginary part")
    return float(value.real)


def hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(hermitize(a - b))).sum())
