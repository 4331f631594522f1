import numpy as np
import pytest

from gnlab.exact import ground_state_dense
from gnlab.model import ModelSpec, build_hamiltonian, free_quadratic_form, majorana_gammas
from gnlab.mps import MatrixProductState, grouped_dims
from gnlab.observables import CorrelatorSeries, centered_pairs, continuum_free_correlator, two_point_correlator
from gnlab.bessel import bessel_k

from oracles import free_fermion_correlations


class TestSeriesStructure:
    def test_zero_separation_excluded(self):
        assert all(k >= 1 for k, _i, _j in centered_pairs(10))

    def test_pairs_are_centered(self):
        n = 50
        for k, i, j in centered_pairs(n):
            assert j - i == k
            assert abs((i + j) / 2 - (n - 1) / 2) <= 1.0

    def test_series_validation(self):
        with pytest.raises(ValueError):
            CorrelatorSeries(separations=(0.2, 0.1), values=(1.0, 2.0), error_bars=(0.0, 0.0))
        with pytest.raises(ValueError):
            CorrelatorSeries(separations=(0.1,), values=(1.0, 2.0), error_bars=(0.0, 0.0))


class TestFreeTheory:
    def test_dense_ground_state_matches_determinant_oracle(self):
        """Interacting machinery at g0^2 = 0 against the quadratic-H oracle."""
        spec = ModelSpec(n_sites=5, spacing=0.4, bare_mass=1.0, coupling_sq=0.0)
        ground = ground_state_dense(build_hamiltonian(spec)).ground_vector
        series = two_point_correlator(ground, spec)
        correl = free_fermion_correlations(free_quadratic_form(spec))
        gamma0 = majorana_gammas().gamma0
        for idx, (k, i, j) in enumerate(centered_pairs(spec.n_sites)):
            block = np.zeros((2, 2), dtype=complex)
            for alpha in range(2):
                for c in range(2):
                    block[alpha, c] = correl[spec.mode_index(i, 0, alpha), spec.mode_index(j, 0, c)]
            expected = (block @ gamma0 / spec.spacing)[0, 0]
            assert series.values[idx] == pytest.approx(expected.real, abs=1e-8)
            assert abs(series.blocks[idx][0, 0] - expected) < 1e-8

    def test_larger_free_lattice_against_oracle(self):
        spec = ModelSpec(n_sites=5, spacing=0.25, bare_mass=1.0, coupling_sq=0.0)
        ground = ground_state_dense(build_hamiltonian(spec)).ground_vector
        series = two_point_correlator(ground, spec)
        correl = free_fermion_correlations(free_quadratic_form(spec))
        gamma0 = majorana_gammas().gamma0
        i, j = centered_pairs(spec.n_sites)[0][1:]
        expected = (
            np.array([[correl[spec.mode_index(i, 0, a), spec.mode_index(j, 0, c)]
                       for c in range(2)] for a in range(2)]) @ gamma0 / spec.spacing
        )[0, 0]
        assert series.values[0] == pytest.approx(expected.real, abs=1e-8)

    def test_ten_site_statevector_against_oracle(self):
        """Full 20-qubit statevector correlator vs the determinant oracle.

        The state comes from a short DMRG warm-up densified and refined by
        warm-started Lanczos iterations, which certifies the residual; the
        correlator machinery under test then runs on the raw state vector.
        Takes a couple of minutes; this is the largest statevector check.
        """
        from gnlab.dmrg import dmrg_ground_state
        from gnlab.exact import _compiled_matvec, lanczos_lowest
        from gnlab.mps import compile_mpo

        spec = ModelSpec(n_sites=10, spacing=0.25, bare_mass=1.0, coupling_sq=0.0)
        op = build_hamiltonian(spec)
        warm, _report = dmrg_ground_state(
            compile_mpo(op), epsilon_goal=1e-11, max_bond=64, seed=3, max_sweeps=6
        )
        energy, vec = lanczos_lowest(
            _compiled_matvec(op), warm.to_dense(), tol=1e-9,
            max_restarts=40, krylov_dim=30,
        )
        assert np.linalg.norm(op.apply(vec) - energy * vec) <= 1e-9
        series = two_point_correlator(vec, spec)
        correl = free_fermion_correlations(free_quadratic_form(spec))
        gamma0 = majorana_gammas().gamma0
        for idx, (_k, i, j) in enumerate(centered_pairs(spec.n_sites)):
            block = np.array(
                [[correl[spec.mode_index(i, 0, a), spec.mode_index(j, 0, c)]
                  for c in range(2)] for a in range(2)]
            )
            expected = (block @ gamma0 / spec.spacing)[0, 0]
            assert series.values[idx] == pytest.approx(expected.real, abs=1e-8)


class TestPaths:
    def test_mps_and_dense_paths_agree(self, small_spec):
        ground = ground_state_dense(build_hamiltonian(small_spec)).ground_vector
        mps = MatrixProductState.from_dense(ground, grouped_dims(small_spec.n_qubits))
        dense_series = two_point_correlator(ground, small_spec)
        mps_series = two_point_correlator(mps, small_spec)
        assert np.allclose(dense_series.values, mps_series.values, atol=1e-10)

    def test_values_real_on_exact_states(self):
        spec = ModelSpec(n_sites=4, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        ground = ground_state_dense(build_hamiltonian(spec)).ground_vector
        series = two_point_correlator(ground, spec)
        assert np.max(np.abs(series.blocks[:, 0, 0].imag)) < 1e-10

    def test_error_bars_follow_epsilon(self, small_spec):
        ground = ground_state_dense(build_hamiltonian(small_spec)).ground_vector
        series = two_point_correlator(ground, small_spec, epsilon=1e-8)
        expected = 2 * np.sqrt(1e-8) / small_spec.spacing
        assert all(bar == pytest.approx(expected) for bar in series.error_bars)

    def test_csv_rows(self, small_spec):
        ground = ground_state_dense(build_hamiltonian(small_spec)).ground_vector
        series = two_point_correlator(ground, small_spec)
        rows = series.csv_rows(0.2, 1.5)
        assert len(rows) == len(series.separations)
        assert rows[0].startswith("0.2,1.5,")


def test_continuum_reference_is_bessel_shaped():
    m0 = 1.3
    for dx in (0.5, 1.0, 2.0):
        assert continuum_free_correlator(m0, dx) == pytest.approx(
            m0 / (2 * np.pi) * bessel_k(0, m0 * dx)
        )
    with pytest.raises(ValueError):
        continuum_free_correlator(1.0, 0.0)
