"""Trajectory runners for the restarting, online and feedback-driven protocols."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurement import (
    _LOCAL_ROTATION,
    backaction_mask,
    feature_names,
    features_from_diagonal,
    features_per_direction,
)
from .reservoir import DEFAULT_WASHOUT, ReservoirSpec, encode_input, input_projector
from .states import AXES, OperatorMatrix, QuantumState, hermitize, insert_site, partial_trace_site


@dataclass(frozen=True)
class FeatureTable:
    """K x F matrix of observables, one row per processed input."""

    rows: np.ndarray
    columns: tuple[str, ...]
    washout: int = DEFAULT_WASHOUT

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise ValueError("rows and column labels disagree")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    def direction_columns(self, direction: str) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.columns) if c.removeprefix("var_").startswith(direction)])

    def select(self, directions) -> "FeatureTable":
        """Column projection onto the observables of the given directions."""
        if directions in (None, "all"):
            return self
        cols = np.concatenate([self.direction_columns(d) for d in directions])
        return FeatureTable(self.rows[:, cols], [self.columns[c] for c in cols], self.washout)

    def with_rows(self, rows: np.ndarray) -> "FeatureTable":
        return FeatureTable(rows, self.columns, self.washout)

    @staticmethod
    def hstack(tables) -> "FeatureTable":
        tables = list(tables)
        rows = np.hstack([t.rows for t in tables])
        cols = [c for t in tables for c in t.columns]
        return FeatureTable(rows, cols, tables[0].washout)


def _check_series(series) -> np.ndarray:
    values = np.asarray(getattr(series, "values", series), dtype=float)
    if values.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if values.size and (values.min() < 0 or values.max() > 1):
        raise ValueError("series values must lie in [0, 1]")
    return values


def _rest_rotation(basis: str, n_spins: int, input_site: int) -> np.ndarray:
    r = np.ones((1, 1), dtype=complex)
    for site in range(n_spins):
        r = np.kron(r, np.eye(2) if site == input_site else _LOCAL_ROTATION[basis])
    return r


def frame_propagator(spec: ReservoirSpec, basis: str) -> np.ndarray:
    """Propagator acting directly in the measurement frame of ``basis``.

    With ``R`` the global rotation taking ``basis`` to z, a state kept in the
    rotated frame evolves as ``W (psi psi^dag x Tr_A sigma) W^dag`` where
    ``W = R U (I_A x R_B^dag)``.  This equals rotating back, stepping and
    rotating again, in two matrix products instead of six.
    """
    U = spec.unitary
    if basis == "z":
        return U
    n = spec.n_spins
    R = _rest_rotation(basis, n, n)  # all sites rotated; n is never an index
    R_rest = _rest_rotation(basis, n, spec.input_site)
    return R @ U @ R_rest.conj().T


def _initial_raw(spec: ReservoirSpec, initial_state: QuantumState | None) -> np.ndarray:
    if initial_state is None:
        return QuantumState.ground(spec.n_spins).rho.copy()
    if initial_state.n_spins != spec.n_spins:
        raise ValueError("initial state has the wrong number of spins")
    return np.array(initial_state.rho)


def _to_frame(rho: np.ndarray, basis: str, n_spins: int) -> np.ndarray:
    if basis == "z":
        return rho
    R = _rest_rotation(basis, n_spins, n_spins)
    return R @ rho @ R.conj().T


def run_pass(
    values: np.ndarray,
    spec: ReservoirSpec,
    basis: str,
    mask: np.ndarray | None,
    initial_state: QuantumState | None = None,
) -> np.ndarray:
    """One full pass over the series measuring a single direction.

    Returns the K x (2N + N(N-1)/2) block of singles, pairs and variances.
    ``mask=None`` is the disturbance-free (restarting) dynamics.
    """
    n, site = spec.n_spins, spec.input_site
    W = frame_propagator(spec, basis)
    Wd = W.conj().T
    rho = _to_frame(_initial_raw(spec, initial_state), basis, n)
    out = np.empty((len(values), features_per_direction(n)))
    for k, s in enumerate(values):
        rest = partial_trace_site(rho, site, n)
        rho = hermitize(W @ insert_site(input_projector(s), rest, site, n) @ Wd)
        if mask is not None:
            rho = rho * mask
        out[k] = features_from_diagonal(rho.diagonal().real, n)
    return out


def _table(blocks: list[np.ndarray], directions, n_spins: int, washout: int) -> FeatureTable:
    return FeatureTable(np.hstack(blocks), feature_names(n_spins, directions), washout)


def run_olp(
    series,
    spec: ReservoirSpec,
    g: float,
    *,
    directions=AXES,
    initial_state: QuantumState | None = None,
    washout: int = DEFAULT_WASHOUT,
    mask_override: np.ndarray | None = None,
) -> FeatureTable:
    """Online protocol: one independent pass per measured direction, each with back-action."""
    values = _check_series(series)
    if mask_override is not None:
        mask = np.asarray(mask_override, dtype=float)
    else:
        if g < 0:
            raise ValueError("measurement strength must be >= 0")
        if g == 0:
            raise ValueError("g = 0 extracts no information; use run_rsp for the undisturbed dynamics")
        mask = backaction_mask(g, spec.n_spins).mask
    blocks = [run_pass(values, spec, d, mask, initial_state) for d in directions]
    return _table(blocks, directions, spec.n_spins, washout)


def run_rsp(
    series,
    spec: ReservoirSpec,
    *,
    directions=AXES,
    initial_state: QuantumState | None = None,
    washout: int = DEFAULT_WASHOUT,
) -> FeatureTable:
    """Restarting protocol, simulated as the undisturbed trajectory."""
    values = _check_series(series)
    blocks = [run_pass(values, spec, d, None, initial_state) for d in directions]
    return _table(blocks, directions, spec.n_spins, washout)


# --- classical feedback-driven protocol -------------------------------------


def default_pattern(n_spins: int) -> tuple[tuple[int, int], ...]:
    """Brick wall: even bonds (0,1),(2,3),... then odd bonds (1,2),(3,4),..."""
    even = [(i, i + 1) for i in range(0, n_spins - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n_spins - 1, 2)]
    return tuple(even + odd)


@dataclass(frozen=True)
class FeedbackSpec:
    a_fb: float
    pattern: tuple[tuple[int, int], ...] | None = None
    feedback_axis: str = "z"

    def __post_init__(self):
        if self.feedback_axis not in AXES:
            raise ValueError(f"unknown feedback axis {self.feedback_axis!r}")
        if self.pattern is not None:
            pattern = tuple((int(i), int(j)) for i, j in self.pattern)
            for i, j in pattern:
                if i == j or i < 0 or j < 0:
                    raise ValueError(f"invalid feedback pair {(i, j)}")
            object.__setattr__(self, "pattern", pattern)

    def pairs(self, n_spins: int) -> tuple[tuple[int, int], ...]:
        pattern = default_pattern(n_spins) if self.pattern is None else self.pattern
        for i, j in pattern:
            if i >= n_spins or j >= n_spins:
                raise ValueError(f"feedback pair {(i, j)} out of range for {n_spins} spins")
        return pattern


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def feedback_module(theta: float) -> np.ndarray:
    """4x4 gate RX(t) x RX(t) . CX . (I x RZ(t)) . CX on an ordered (control, target) pair."""
    return np.kron(_rx(theta), _rx(theta)) @ _CX @ np.kron(np.eye(2), _rz(theta)) @ _CX


def _apply_two_qubit(gate: np.ndarray, psi: np.ndarray, i: int, j: int, n_spins: int) -> np.ndarray:
    """Apply a 4x4 gate on qubits (i, j) to ``psi`` of shape (2**n, batch)."""
    batch = psi.shape[1]
    t = psi.reshape((2,) * n_spins + (batch,))
    t = np.moveaxis(t, (i, j), (0, 1))
    shape = t.shape
    t = (gate @ t.reshape(4, -1)).reshape(shape)
    t = np.moveaxis(t, (0, 1), (i, j))
    return t.reshape(2**n_spins, batch)


def _apply_feedback(psi: np.ndarray, expectations, fb: FeedbackSpec, n_spins: int) -> np.ndarray:
    for i, j in fb.pairs(n_spins):
        theta = fb.a_fb * expectations[i]
        if theta != 0:
            psi = _apply_two_qubit(feedback_module(theta), psi, i, j, n_spins)
    return psi


def feedback_layer(expectations, fb: FeedbackSpec, n_spins: int | None = None) -> OperatorMatrix:
    """Unitary feedback layer; modules are applied in pattern order."""
    expectations = np.asarray(expectations, dtype=float)
    n = len(expectations) if n_spins is None else n_spins
    if np.any(np.abs(expectations) > 1 + 1e-12):
        raise ValueError("expectation values must lie in [-1, 1]")
    eye = np.eye(2**n, dtype=complex)
    return OperatorMatrix(_apply_feedback(eye, expectations, fb, n))


def _single_site_expectations(psi: np.ndarray, n_spins: int) -> np.ndarray:
    """<sigma^x_i>, <sigma^y_i>, <sigma^z_i> for a pure state, as an (3, N) array."""
    t = psi.reshape((2,) * n_spins)
    out = np.empty((3, n_spins))
    for i in range(n_spins):
        m = np.moveaxis(t, i, 0).reshape(2, -1)
        r = m @ m.conj().T
        out[0, i] = 2 * r[0, 1].real
        out[1, i] = -2 * r[0, 1].imag
        out[2, i] = (r[0, 0] - r[1, 1]).real
    return out


def run_feedback(
    series,
    spec: ReservoirSpec,
    fb: FeedbackSpec,
    *,
    washout: int = DEFAULT_WASHOUT,
) -> FeatureTable:
    """Reset-per-input protocol with a classical feedback layer.

    Each step starts from ``|0...0>`` with the input spin set to the encoded
    value, applies the feedback layer built from the previous step's
    expectations along ``fb.feedback_axis`` (zeros at the first step),
    evolves, and records single-spin x, y and z expectations.
    """
    values = _check_series(series)
    n, site = spec.n_spins, spec.input_site
    U = spec.unitary
    axis_row = AXES.index(fb.feedback_axis)
    previous = np.zeros(n)
    out = np.empty((len(values), 3 * n))
    for k, s in enumerate(values):
        psi = np.zeros((2**n, 1), dtype=complex)
        amp = encode_input(s)
        psi[0, 0], psi[1 << (n - 1 - site), 0] = amp[0], amp[1]
        psi = _apply_feedback(psi, previous, fb, n)
        psi = U @ psi[:, 0]
        ex = _single_site_expectations(psi, n)
        out[k] = ex.ravel()
        previous = ex[axis_row]
    columns = [f"{d}{i}" for d in AXES for i in range(n)]
    return FeatureTable(out, columns, washout)

