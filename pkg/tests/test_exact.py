import numpy as np
import pytest

from gnlab.exact import (
    ConvergenceError,
    SpectrumResult,
    evolve_exact,
    fix_phase,
    ground_state_dense,
    ground_state_lanczos,
)
from gnlab.model import ModelSpec, build_hamiltonian
from gnlab.pauli import PauliSumOperator

from oracles import dense_hamiltonian, taylor_evolve


def random_hermitian_pauli_sum(n, n_terms, rng):
    terms = []
    for _ in range(n_terms):
        string = "".join(rng.choice(list("IXYZ"), size=n))
        terms.append((float(rng.standard_normal()), string))
    return PauliSumOperator.from_terms(n, terms)


class TestDense:
    def test_single_qubit_z(self):
        result = ground_state_dense(PauliSumOperator.from_terms(1, [(1.0, "Z")]))
        assert result.ground_energy == pytest.approx(-1.0)
        assert result.gap == pytest.approx(2.0)
        assert np.allclose(result.ground_vector, [0, 1])

    def test_gross_neveu_against_independent_solver(self):
        import scipy.linalg

        spec = ModelSpec(n_sites=2, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)
        result = ground_state_dense(build_hamiltonian(spec))
        oracle = scipy.linalg.eigh(dense_hamiltonian(spec), eigvals_only=True)
        assert result.ground_energy == pytest.approx(oracle[0], abs=1e-10)
        assert result.first_excited_energy == pytest.approx(oracle[1], abs=1e-10)

    def test_degenerate_ground_space_reports_zero_gap(self):
        result = ground_state_dense(PauliSumOperator.zero(2))
        assert result.gap == 0.0

    def test_cap_enforced(self):
        op = PauliSumOperator.identity(6)
        with pytest.raises(ValueError):
            ground_state_dense(op, dense_cap=5)

    def test_phase_convention_deterministic(self):
        spec = ModelSpec(n_sites=2, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)
        a = ground_state_dense(build_hamiltonian(spec)).ground_vector
        b = ground_state_dense(build_hamiltonian(spec)).ground_vector
        assert np.array_equal(a, b)
        lead = a[np.argmax(np.abs(a) > 1e-12 * np.abs(a).max())]
        assert lead.real > 0 and abs(lead.imag) < 1e-12

    def test_spectrum_csv_row(self):
        row = SpectrumResult(-1.0, -0.5, 0.5, np.array([1.0, 0])).csv_row(3)
        assert row.startswith("3,-1.0,-0.5,0.5")


class TestLanczos:
    def test_agrees_with_dense_to_ten_tol(self, small_spec):
        ham = build_hamiltonian(small_spec)
        tol = 1e-10
        dense = ground_state_dense(ham)
        krylov = ground_state_lanczos(ham, tol=tol, seed=11)
        assert abs(krylov.ground_energy - dense.ground_energy) <= 10 * tol
        assert abs(krylov.first_excited_energy - dense.first_excited_energy) <= 10 * tol
        assert abs(abs(np.vdot(dense.ground_vector, krylov.ground_vector)) - 1) < 1e-8

    def test_diagonal_operator_gives_basis_state(self):
        op = PauliSumOperator.from_terms(3, [(1.0, "ZII"), (0.5, "IZI"), (0.25, "IIZ")])
        result = ground_state_lanczos(op, tol=1e-12, seed=2)
        probs = np.abs(result.ground_vector) ** 2
        assert probs[-1] == pytest.approx(1.0, abs=1e-12)

    def test_positive_gap_at_reference_points(self, reference_points):
        for m0, g0_sq in reference_points:
            spec = ModelSpec(n_sites=5, spacing=0.5, bare_mass=m0, coupling_sq=g0_sq)
            dense = ground_state_dense(build_hamiltonian(spec))
            krylov = ground_state_lanczos(build_hamiltonian(spec), tol=1e-10, seed=4)
            assert krylov.gap > 0
            assert krylov.ground_energy == pytest.approx(dense.ground_energy, abs=1e-9)

    def test_energy_variance_bound(self, small_spec):
        ham = build_hamiltonian(small_spec)
        tol = 1e-8
        result = ground_state_lanczos(ham, tol=tol, seed=1)
        vec = result.ground_vector
        h_vec = ham.apply(vec)
        variance = np.real(np.vdot(h_vec, h_vec)) - np.real(np.vdot(vec, h_vec)) ** 2
        assert variance <= (10 * tol) ** 2

    def test_deterministic_given_seed(self, small_spec):
        ham = build_hamiltonian(small_spec)
        a = ground_state_lanczos(ham, tol=1e-10, seed=9)
        b = ground_state_lanczos(ham, tol=1e-10, seed=9)
        assert a.ground_energy == b.ground_energy
        assert np.array_equal(a.ground_vector, b.ground_vector)

    def test_nonconvergence_raises(self, small_spec):
        ham = build_hamiltonian(small_spec)
        with pytest.raises(ConvergenceError):
            ground_state_lanczos(ham, tol=1e-14, seed=1, max_restarts=1)

    def test_rejects_bad_tol(self, small_spec):
        with pytest.raises(ValueError):
            ground_state_lanczos(build_hamiltonian(small_spec), tol=0.0, seed=1)


class TestEvolveExact:
    def test_time_zero_is_identity(self, rng):
        op = random_hermitian_pauli_sum(4, 6, rng)
        state = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        state /= np.linalg.norm(state)
        assert np.allclose(evolve_exact(op, 0.0, state), state)

    def test_eigenstate_acquires_pure_phase(self, small_spec):
        ham = build_hamiltonian(small_spec)
        ground = ground_state_dense(ham)
        out = evolve_exact(ham, 0.37, ground.ground_vector)
        expected = np.exp(-1j * ground.ground_energy * 0.37) * ground.ground_vector
        assert np.allclose(out, expected, atol=1e-10)
        assert abs(abs(np.vdot(ground.ground_vector, out)) - 1) < 1e-12

    def test_norm_preserved_and_matches_taylor(self, rng):
        op = random_hermitian_pauli_sum(6, 8, rng)
        state = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        state /= np.linalg.norm(state)
        out = evolve_exact(op, 0.7, state)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12
        oracle = taylor_evolve(op.to_matrix(), 0.7, state)
        assert np.max(np.abs(out - oracle)) < 1e-8

    def test_composition_property(self, rng):
        op = random_hermitian_pauli_sum(5, 6, rng)
        state = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        state /= np.linalg.norm(state)
        once = evolve_exact(op, 0.9, state)
        twice = evolve_exact(op, 0.4, evolve_exact(op, 0.5, state))
        assert np.max(np.abs(once - twice)) < 1e-10

    def test_requires_normalized_state(self, small_spec):
        ham = build_hamiltonian(small_spec)
        with pytest.raises(ValueError):
            evolve_exact(ham, 0.1, np.ones(1 << ham.n_qubits))


def test_fix_phase_leading_amplitude_real_positive(rng):
    vec = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    fixed = fix_phase(vec)
    lead = fixed[np.argmax(np.abs(fixed) > 1e-12 * np.abs(fixed).max())]
    assert lead.imag == pytest.approx(0.0, abs=1e-12)
    assert lead.real > 0
