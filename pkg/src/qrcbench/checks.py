"""Fast invariant and oracle checks, runnable without the test suite (``qrcbench check``)."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate

from .benchmark import capacity, gen_memory_series, train_readout
from .measurement import apply_backaction, backaction_mask, basis_rotation, measurement_kernel
from .protocols import FeedbackSpec, feedback_layer, run_olp, run_rsp
from .reservoir import ReservoirSpec, build_hamiltonian, step_map
from .resources import shots_rsp_equivalent, sigma_pair, sigma_single, time_olp, time_rsp
from .states import PAULI, QuantumState, propagator, random_state

CHECKS: list[tuple[str, Callable[[], bool]]] = []


def check(name: str):
    def register(fn):
        CHECKS.append((name, fn))
        return fn

    return register


@check("propagator is unitary")
def _unitary():
    spec = ReservoirSpec(5, None, 0.7, seed=11)
    U = propagator(build_hamiltonian(spec), 10.0).mat
    return np.abs(U @ U.conj().T - np.eye(32)).max() < 1e-10


@check("step map is trace preserving and positive")
def _step_cptp():
    rng = np.random.default_rng(1)
    spec = ReservoirSpec(4, None, 0.5, seed=2)
    U = propagator(build_hamiltonian(spec), spec.dt)
    for _ in range(20):
        out = step_map(random_state(4, rng), rng.uniform(), U)
        if abs(np.trace(out.rho) - 1) > 1e-10 or np.linalg.eigvalsh(out.rho).min() < -1e-9:
            return False
    return True


@check("back-action mask is PSD and preserves states")
def _mask_channel():
    rng = np.random.default_rng(2)
    for g in (0.0, 0.5, 2.0):
        mask = backaction_mask(g, 4)
        if np.linalg.eigvalsh(mask.mask).min() < -1e-9:
            return False
        rho = random_state(4, rng)
        out = apply_backaction(rho, mask)
        if not np.array_equal(np.diag(out.rho), np.diag(rho.rho)):
            return False
    return True


@check("pointer kernel integrates to the mask factor")
def _kernel():
    for g in (0.25, 1.0, 3.0):
        off = integrate.quad(lambda v: measurement_kernel(v, g)[0, 0] * measurement_kernel(v, g)[1, 1], -40, 40)[0]
        diag = integrate.quad(lambda v: measurement_kernel(v, g)[0, 0] ** 2, -40, 40)[0]
        if abs(off - math.exp(-g * g / 2)) > 1e-6 or abs(diag - 1) > 1e-8:
            return False
    return True


@check("basis rotations map the axis to z")
def _rotations():
    for axis in ("x", "y"):
        R = basis_rotation(axis, 1).mat
        if np.abs(R @ PAULI[axis] @ R.conj().T - PAULI["z"]).max() > 1e-12:
            return False
    return True


@check("online protocol with unit mask equals restarting protocol")
def _olp_rsp():
    series = gen_memory_series(3, 60)
    spec = ReservoirSpec(4, None, 0.3, seed=4)
    a = run_olp(series, spec, 0.0, mask_override=np.ones((16, 16)))
    return np.array_equal(a.rows, run_rsp(series, spec).rows)


@check("feedback layer is unitary")
def _feedback_unitary():
    U = feedback_layer(np.linspace(-1, 1, 6), FeedbackSpec(0.63)).mat
    return np.abs(U @ U.conj().T - np.eye(64)).max() < 1e-10


@check("readout recovers an exact linear map")
def _readout():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 6))
    w = rng.normal(size=6)
    model = train_readout(X, X @ w + 0.3)
    return np.abs(model.weights - w).max() < 1e-8 and capacity(X @ w, X @ w) == 1.0


@check("shot noise formulas and time accounting")
def _resources():
    ok = abs(sigma_single(1.0, 2.0) - 1.0) < 1e-12 and abs(sigma_pair(1.0, 2.0) - math.sqrt(2)) < 1e-12
    ns = shots_rsp_equivalent(1.5e6, 2000, 20)
    ok &= 1484 <= ns <= 1514
    ok &= abs(time_rsp(2000, 20, 10.0, ns) / time_olp(2000, 10.0, 1.5e6) - 1) < 1e-9
    return bool(ok)


@check("maximally mixed state has zero Pauli expectations")
def _mixed():
    rho = QuantumState.maximally_mixed(3)
    return all(abs(np.trace(rho.rho @ np.kron(PAULI[a], np.eye(4)))) < 1e-12 for a in "xyz")


def run_checks(verbose: bool = True) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok = bool(fn())
        except Exception as exc:  # report and continue with the remaining checks
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all_ok
