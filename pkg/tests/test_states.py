import numpy as np
import pytest

from qrcbench.states import (
    OperatorMatrix,
    QuantumState,
    expectation,
    insert_site,
    partial_trace_input,
    partial_trace_site,
    pauli_on_site,
    propagator,
    random_state,
)

from .conftest import random_hermitian


def test_pauli_z_single_site():
    np.testing.assert_array_equal(pauli_on_site("z", 0, 1).mat, np.diag([1, -1]))


def test_pauli_x_on_second_of_two():
    # I (x) sigma_x, written out entry by entry: |00><01|, |01><00|, |10><11|, |11><10|
    expected = np.zeros((4, 4))
    expected[0, 1] = expected[1, 0] = expected[2, 3] = expected[3, 2] = 1
    np.testing.assert_array_equal(pauli_on_site("x", 1, 2).mat, expected)


@pytest.mark.parametrize("axis", "xyz")
@pytest.mark.parametrize("site", range(3))
def test_pauli_involution(axis, site):
    P = pauli_on_site(axis, site, 3).mat
    assert np.abs(P @ P - np.eye(8)).max() == 0
    assert np.abs(P - P.conj().T).max() == 0


def test_pauli_site_out_of_range():
    with pytest.raises(ValueError):
        pauli_on_site("z", 3, 3)
    with pytest.raises(ValueError):
        pauli_on_site("z", -1, 3)


def test_propagator_zero_hamiltonian():
    U = propagator(OperatorMatrix(np.zeros((4, 4)), True), 10.0)
    np.testing.assert_allclose(U.mat, np.eye(4), atol=1e-15)


def test_propagator_diagonal():
    H = OperatorMatrix(0.5 * np.diag([1.0, -1.0]), True)
    U = propagator(H, 10.0).mat
    np.testing.assert_allclose(U, np.diag([np.exp(-5j), np.exp(5j)]), atol=1e-13)


def _taylor_exp(A, terms=50):
    out = np.eye(len(A), dtype=complex)
    term = np.eye(len(A), dtype=complex)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_propagator_matches_taylor_oracle(rng):
    H = random_hermitian(8, rng)
    H /= np.linalg.norm(H, 2)  # keeps the 50-term series well inside its convergence regime
    U = propagator(OperatorMatrix(H, True), 1.0).mat
    assert np.abs(U - _taylor_exp(-1j * H)).max() < 1e-9


def test_propagator_unitary_random(rng):
    for _ in range(20):
        H = random_hermitian(16, rng) * rng.uniform(0.1, 10)
        U = propagator(OperatorMatrix(H, True), rng.uniform(0.1, 20)).mat
        assert np.abs(U @ U.conj().T - np.eye(16)).max() < 1e-10


def test_propagator_rejects_non_hermitian(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    with pytest.raises(ValueError):
        propagator(OperatorMatrix(A), 1.0)


def test_partial_trace_product_state(rng):
    psi = np.array([0.6, 0.8j])
    rho_b = random_state(2, rng).rho
    rho = QuantumState(np.kron(np.outer(psi, psi.conj()), rho_b), 3)
    np.testing.assert_allclose(partial_trace_input(rho, 0), rho_b, atol=1e-15)


def test_partial_trace_bell_state():
    bell = QuantumState.from_ket(np.array([1, 0, 0, 1]) / np.sqrt(2))
    np.testing.assert_allclose(partial_trace_input(bell, 0), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_valid_output(rng):
    for site in range(4):
        rho = random_state(4, rng)
        out = partial_trace_input(rho, site)
        assert abs(np.trace(out) - 1) < 1e-10
        assert np.abs(out - out.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(out).min() > -1e-12


def test_partial_trace_site_out_of_range(rng):
    with pytest.raises(ValueError):
        partial_trace_input(random_state(2, rng), 2)


def test_partial_trace_preserves_kept_observables(rng):
    # 100 random states; observables on spins other than the traced one
    n, site = 4, 0
    for _ in range(100):
        rho = random_state(n, rng)
        reduced = QuantumState(partial_trace_input(rho, site), n - 1)
        i = int(rng.integers(1, n))
        axis = "xyz"[int(rng.integers(3))]
        full = expectation(rho, pauli_on_site(axis, i, n))
        kept = expectation(reduced, pauli_on_site(axis, i - 1, n - 1))
        assert abs(full - kept) < 1e-12


def test_insert_site_inverts_partial_trace(rng):
    n = 4
    for site in range(n):
        a = random_state(1, rng).rho
        rest = random_state(n - 1, rng).rho
        joint = insert_site(a, rest, site, n)
        np.testing.assert_allclose(partial_trace_site(joint, site, n), rest, atol=1e-14)
        # cross-check against an explicit Kronecker product with a qubit swap network
        left, right = 2**site, 2 ** (n - site - 1)
        t = np.kron(a, rest).reshape(2, left, right, 2, left, right)
        ref = t.transpose(1, 0, 2, 4, 3, 5).reshape(2**n, 2**n)
        np.testing.assert_allclose(joint, ref, atol=1e-15)


def test_expectation_basic():
    zero = QuantumState.ground(1)
    assert expectation(zero, pauli_on_site("z", 0, 1)) == 1.0
    assert expectation(zero, pauli_on_site("x", 0, 1)) == 0.0
    mixed = QuantumState.maximally_mixed(1)
    for axis in "xyz":
        assert abs(expectation(mixed, pauli_on_site(axis, 0, 1))) < 1e-15


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation(QuantumState.ground(2), pauli_on_site("z", 0, 1))


def test_expectation_linear(rng):
    n = 3
    for _ in range(20):
        r1, r2 = random_state(n, rng), random_state(n, rng)
        A, B = random_hermitian(8, rng), random_hermitian(8, rng)
        a, b = rng.uniform(size=2)
        OA, OB = OperatorMatrix(A, True), OperatorMatrix(B, True)
        lhs = expectation(r1, OperatorMatrix(a * A + b * B, True))
        assert abs(lhs - (a * expectation(r1, OA) + b * expectation(r1, OB))) < 1e-12
        p = rng.uniform()
        mix = QuantumState(p * r1.rho + (1 - p) * r2.rho, n)
        assert abs(expectation(mix, OA) - (p * expectation(r1, OA) + (1 - p) * expectation(r2, OA))) < 1e-12


def test_expectation_bounded_by_norm(rng):
    for _ in range(20):
        A = random_hermitian(8, rng)
        value = expectation(random_state(3, rng), OperatorMatrix(A, True))
        assert abs(value) <= np.linalg.norm(A, 2) + 1e-12


def test_state_validation():
    with pytest.raises(ValueError):
        QuantumState(np.diag([0.5, 0.6]), 1)  # trace
    with pytest.raises(ValueError):
        QuantumState(np.array([[0.5, 1], [0, 0.5]]), 1)  # Hermiticity
    with pytest.raises(ValueError):
        QuantumState(np.diag([1.5, -0.5]), 1)  # positivity
    with pytest.raises(ValueError):
        QuantumState(np.eye(2) / 2, 13)  # above the dense cap
