"""Transverse-field Ising reservoir and its input-driven step map."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .states import (
    OperatorMatrix,
    QuantumState,
    hermitize,
    insert_site,
    partial_trace_site,
    pauli_on_site,
    propagator,
)

DEFAULT_DT = 10.0
DEFAULT_WASHOUT = 20


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(master_seed, *keys)``.

    Independent of call order, so parallel workers reproduce serial runs.
    """
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_couplings(n_spins: int, seed: int) -> np.ndarray:
    """Upper-triangular couplings ``J_ij`` (i < j), uniform in [-1/2, 1/2]."""
    if n_spins < 2:
        raise ValueError("need at least two spins")
    rng = np.random.default_rng(seed)
    J = np.zeros((n_spins, n_spins))
    iu = np.triu_indices(n_spins, k=1)
    J[iu] = rng.uniform(-0.5, 0.5, size=len(iu[0]))
    return J


@dataclass(frozen=True)
class ReservoirSpec:
    """Ising reservoir parameters, in units where J = 1."""

    n_spins: int = 6
    couplings: np.ndarray = field(default=None, repr=False)
    field_h: float = 1.0
    dt: float = DEFAULT_DT
    seed: int = 0
    input_site: int = 0

    def __post_init__(self):
        if self.n_spins < 2:
            raise ValueError("n_spins must be >= 2")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.input_site < self.n_spins:
            raise ValueError("input_site out of range")
        J = self.couplings
        if J is None:
            J = sample_couplings(self.n_spins, self.seed)
        J = np.array(J, dtype=float)
        if J.shape != (self.n_spins, self.n_spins):
            raise ValueError(f"couplings must be {self.n_spins}x{self.n_spins}")
        if np.any(np.tril(J) != 0):
            raise ValueError("couplings must be strictly upper-triangular")
        J.setflags(write=False)
        object.__setattr__(self, "couplings", J)

    def with_field(self, field_h: float) -> "ReservoirSpec":
        """Same coupling draw, different transverse field."""
        return ReservoirSpec(self.n_spins, self.couplings, field_h, self.dt, self.seed, self.input_site)

    @cached_property
    def unitary(self) -> np.ndarray:
        return propagator(build_hamiltonian(self), self.dt).mat


def build_hamiltonian(spec: ReservoirSpec) -> OperatorMatrix:
    n = spec.n_spins
    dim = 2**n
    sx = [pauli_on_site("x", i, n).mat for i in range(n)]
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            if spec.couplings[i, j] != 0:
                H += spec.couplings[i, j] * (sx[i] @ sx[j])
    # sigma^z_i is diagonal: +1 where bit i of the index is 0
    idx = np.arange(dim)
    zdiag = sum(1 - 2 * ((idx >> (n - 1 - i)) & 1) for i in range(n))
    H[idx, idx] += 0.5 * spec.field_h * zdiag
    return OperatorMatrix(H, True)


def encode_input(s: float) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"input value {s} outside [0, 1]")
    return np.array([np.sqrt(1.0 - s), np.sqrt(s)], dtype=complex)


def input_projector(s: float) -> np.ndarray:
    psi = encode_input(s)
    return np.outer(psi, psi.conj())


def step_raw(rho: np.ndarray, s: float, U: np.ndarray, input_site: int, n_spins: int) -> np.ndarray:
    """Unchecked step map on raw arrays; the trajectory engines call this in their inner loop."""
    rest = partial_trace_site(rho, input_site, n_spins)
    joint = insert_site(input_projector(s), rest, input_site, n_spins)
    return hermitize(U @ joint @ U.conj().T)


def step_map(rho_prev: QuantumState, s_k: float, U: OperatorMatrix, input_site: int = 0) -> QuantumState:
    """Reset the input spin to the encoded value, then evolve by ``U``."""
    n = rho_prev.n_spins
    if U.dim != 2**n:
        raise ValueError("propagator dimension does not match state")
    return QuantumState(step_raw(rho_prev.rho, s_k, U.mat, input_site, n), n)
