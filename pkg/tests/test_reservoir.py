import numpy as np
import pytest
from scipy import stats

from qrcbench.reservoir import (
    ReservoirSpec,
    build_hamiltonian,
    derive_seed,
    encode_input,
    sample_couplings,
    step_map,
)
from qrcbench.states import (
    OperatorMatrix,
    PAULI,
    QuantumState,
    insert_site,
    partial_trace_input,
    propagator,
    random_state,
    trace_distance,
)


def test_couplings_deterministic_and_in_range():
    a = sample_couplings(6, 1234)
    np.testing.assert_array_equal(a, sample_couplings(6, 1234))
    values = a[np.triu_indices(6, 1)]
    assert values.size == 15
    assert np.all(np.abs(values) <= 0.5)
    assert np.all(np.tril(a) == 0)
    assert not np.array_equal(a, sample_couplings(6, 1235))


def test_couplings_uniform_ks():
    draws = np.concatenate([sample_couplings(6, s)[np.triu_indices(6, 1)] for s in range(6667)])
    assert draws.size >= 100_000
    assert stats.kstest(draws, stats.uniform(loc=-0.5, scale=1).cdf).statistic < 0.01


def test_couplings_need_two_spins():
    with pytest.raises(ValueError):
        sample_couplings(1, 0)


def test_derive_seed_is_order_independent():
    assert derive_seed(7, 3, 1) == derive_seed(7, 3, 1)
    assert len({derive_seed(7, r, k) for r in range(20) for k in range(3)}) == 60


def test_hamiltonian_field_only():
    spec = ReservoirSpec(2, np.zeros((2, 2)), 1.0)
    np.testing.assert_allclose(build_hamiltonian(spec).mat, np.diag([1.0, 0, 0, -1.0]), atol=0)


def test_hamiltonian_coupling_only():
    J = np.array([[0, 0.5], [0, 0]])
    spec = ReservoirSpec(2, J, 0.0)
    np.testing.assert_allclose(build_hamiltonian(spec).mat, 0.5 * np.kron(PAULI["x"], PAULI["x"]), atol=0)


def test_hamiltonian_traceless_and_hermitian():
    for seed in range(10):
        H = build_hamiltonian(ReservoirSpec(5, None, 0.1 * seed + 0.01, seed=seed)).mat
        assert abs(np.trace(H)) < 1e-12
        assert np.abs(H - H.conj().T).max() == 0


def test_hamiltonian_against_explicit_kron():
    spec = ReservoirSpec(3, None, 0.7, seed=5)
    I = np.eye(2)

    def op(single, site):
        mats = [single if k == site else I for k in range(3)]
        return np.kron(np.kron(mats[0], mats[1]), mats[2])

    H = sum(
        spec.couplings[i, j] * op(PAULI["x"], i) @ op(PAULI["x"], j) for i in range(3) for j in range(i + 1, 3)
    ) + 0.35 * sum(op(PAULI["z"], i) for i in range(3))
    np.testing.assert_allclose(build_hamiltonian(spec).mat, H, atol=1e-14)


def test_spec_validation():
    with pytest.raises(ValueError):
        ReservoirSpec(1)
    with pytest.raises(ValueError):
        ReservoirSpec(3, dt=0)
    with pytest.raises(ValueError):
        ReservoirSpec(3, np.ones((3, 3)))


def test_encode_input():
    np.testing.assert_array_equal(encode_input(0.0), [1, 0])
    np.testing.assert_array_equal(encode_input(1.0), [0, 1])
    np.testing.assert_allclose(encode_input(0.5), [2**-0.5, 2**-0.5], atol=1e-16)
    for s in np.linspace(0, 1, 11):
        assert abs(np.linalg.norm(encode_input(s)) - 1) < 1e-15
    with pytest.raises(ValueError):
        encode_input(1.01)
    with pytest.raises(ValueError):
        encode_input(-0.01)


def _identity(n):
    return OperatorMatrix(np.eye(2**n))


def test_step_identity_ground_state():
    ground = QuantumState.ground(4)
    out = step_map(ground, 0.0, _identity(4))
    np.testing.assert_array_equal(out.rho, ground.rho)


def test_step_identity_one(rng):
    rho = random_state(3, rng)
    out = step_map(rho, 1.0, _identity(3))
    expected = np.kron(np.diag([0.0, 1.0]), partial_trace_input(rho, 0))
    np.testing.assert_allclose(out.rho, expected, atol=1e-15)


def test_step_matches_definition(rng):
    spec = ReservoirSpec(4, None, 0.4, seed=9, input_site=2)
    U = propagator(build_hamiltonian(spec), spec.dt)
    rho = random_state(4, rng)
    s = 0.3
    psi = encode_input(s)
    joint = insert_site(np.outer(psi, psi.conj()), partial_trace_input(rho, 2), 2, 4)
    expected = U.mat @ joint @ U.mat.conj().T
    np.testing.assert_allclose(step_map(rho, s, U, input_site=2).rho, expected, atol=1e-13)


def test_step_cptp_random(rng):
    spec = ReservoirSpec(4, None, 0.8, seed=3)
    U = propagator(build_hamiltonian(spec), spec.dt)
    for _ in range(100):
        out = step_map(random_state(4, rng, rank=int(rng.integers(1, 17))), rng.uniform(), U)
        assert abs(np.trace(out.rho) - 1) < 1e-10
        assert np.linalg.eigvalsh(out.rho).min() > -1e-9


def test_step_ignores_input_marginal(rng):
    spec = ReservoirSpec(4, None, 0.5, seed=1)
    U = propagator(build_hamiltonian(spec), spec.dt)
    rho = random_state(4, rng)
    reference = step_map(rho, 0.6, U).rho
    # flipping or phasing the input spin changes its marginal but not Tr_A bit for bit
    for local in (PAULI["x"], PAULI["z"], PAULI["y"]):
        L = np.kron(local, np.eye(8))
        other = QuantumState(L @ rho.rho @ L.conj().T, 4)
        np.testing.assert_array_equal(step_map(other, 0.6, U).rho, reference)
    # an arbitrary input-spin unitary agrees to rounding
    V = propagator(OperatorMatrix(rng.normal() * PAULI["x"] + rng.normal() * PAULI["y"], True), 1.0).mat
    L = np.kron(V, np.eye(8))
    other = QuantumState(L @ rho.rho @ L.conj().T, 4)
    assert np.abs(step_map(other, 0.6, U).rho - reference).max() < 1e-14


def _distance_after(h, steps, seed, rng):
    spec = ReservoirSpec(6, None, h, seed=seed)
    U = propagator(build_hamiltonian(spec), spec.dt)
    a, b = random_state(6, rng), random_state(6, rng)
    for s in rng.uniform(size=steps):
        a, b = step_map(a, s, U), step_map(b, s, U)
    return trace_distance(a.rho, b.rho)


@pytest.mark.parametrize("h, steps", [(0.5, 20), (1.0, 20), (0.3, 40)])
def test_fading_memory(rng, h, steps):
    for seed in range(4):
        assert _distance_after(h, steps, seed, rng) < 1e-2


def test_fading_memory_slow_near_localization(rng):
    # at h = 0.1 memory still fades, just more slowly than deeper in the ergodic phase
    early = [_distance_after(0.1, 20, seed, np.random.default_rng(seed)) for seed in range(4)]
    late = [_distance_after(0.1, 60, seed, np.random.default_rng(seed)) for seed in range(4)]
    assert all(b < 0.6 * a for a, b in zip(early, late))
    assert max(late) < 5e-2


def test_with_field_shares_couplings():
    spec = ReservoirSpec(6, None, 0.1, seed=77)
    other = spec.with_field(3.0)
    np.testing.assert_array_equal(spec.couplings, other.couplings)
    assert other.field_h == 3.0
