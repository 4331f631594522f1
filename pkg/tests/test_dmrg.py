import numpy as np
import pytest

from gnlab.dmrg import DegenerateEnergyError, dmrg_ground_state, epsilon_measure
from gnlab.exact import ground_state_dense
from gnlab.model import ModelSpec, build_hamiltonian
from gnlab.mps import MatrixProductState, compile_mpo, grouped_dims
from gnlab.pauli import PauliSumOperator


def solve(spec, epsilon_goal=1e-10, max_bond=64, seed=3):
    mpo = compile_mpo(build_hamiltonian(spec))
    return dmrg_ground_state(mpo, epsilon_goal=epsilon_goal, max_bond=max_bond, seed=seed)


class TestDmrgGroundState:
    def test_reference_point_matches_dense(self):
        spec = ModelSpec(n_sites=4, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        state, report = solve(spec)
        dense = ground_state_dense(build_hamiltonian(spec))
        rel = abs(report.energy - dense.ground_energy) / abs(dense.ground_energy)
        assert rel < 1e-8
        assert report.converged

    def test_product_hamiltonian_converges_in_one_sweep(self):
        n = 8
        terms = [(1.0 + 0.1 * q, "I" * q + "Z" + "I" * (n - q - 1)) for q in range(n)]
        mpo = compile_mpo(PauliSumOperator.from_terms(n, terms))
        state, report = dmrg_ground_state(mpo, epsilon_goal=1e-8, max_bond=16, seed=1)
        assert report.sweeps == 1
        assert max(state.bond_dims) == 1
        assert report.converged

    def test_energy_monotone_across_sweeps(self):
        spec = ModelSpec(n_sites=5, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)
        _state, report = solve(spec, epsilon_goal=1e-12)
        hist = report.energy_history
        for earlier, later in zip(hist, hist[1:]):
            assert later <= earlier + 1e-12 * (1 + abs(earlier))

    def test_deterministic_given_seed(self):
        spec = ModelSpec(n_sites=4, spacing=0.5, bare_mass=0.4, coupling_sq=1.0)
        a_state, a_report = solve(spec, seed=12)
        b_state, b_report = solve(spec, seed=12)
        assert a_report == b_report
        for ta, tb in zip(a_state.tensors, b_state.tensors):
            assert np.array_equal(ta, tb)

    def test_consistency_with_delta_bound(self):
        """|E - E_exact| <= sqrt(eps) |E| for converged runs at N <= 6.

        The exact reference is full diagonalization up to N = 5 and a
        matrix-free ARPACK solve at N = 6 (same spectrum, far cheaper).
        """
        import scipy.sparse.linalg as spla

        for n in (4, 5, 6):
            spec = ModelSpec(n_sites=n, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)
            state, report = solve(spec, epsilon_goal=1e-9)
            op = build_hamiltonian(spec)
            if n <= 5:
                e_exact = ground_state_dense(op).ground_energy
            else:
                dim = 1 << op.n_qubits
                lin = spla.LinearOperator((dim, dim), matvec=op.apply, dtype=complex)
                v0 = np.ones(dim)
                e_exact = float(spla.eigsh(lin, k=1, which="SA", v0=v0, tol=1e-12)[0][0])
            assert abs(report.energy - e_exact) <= max(
                np.sqrt(report.epsilon), 1e-12
            ) * abs(report.energy)

    def test_validates_arguments(self, small_spec):
        mpo = compile_mpo(build_hamiltonian(small_spec))
        with pytest.raises(ValueError):
            dmrg_ground_state(mpo, epsilon_goal=0.0, max_bond=16, seed=0)
        with pytest.raises(ValueError):
            dmrg_ground_state(mpo, epsilon_goal=1e-8, max_bond=1, seed=0)

    def test_csv_row_format(self):
        spec = ModelSpec(n_sites=3, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)
        _state, report = solve(spec)
        row = report.csv_row(3)
        fields = row.split(",")
        assert fields[0] == "3" and len(fields) == 5


class TestEpsilonMeasure:
    def test_exact_eigenstate_has_tiny_epsilon(self, small_spec):
        op = build_hamiltonian(small_spec)
        dense = ground_state_dense(op)
        mps = MatrixProductState.from_dense(dense.ground_vector, grouped_dims(op.n_qubits))
        eps = epsilon_measure(mps, compile_mpo(op))
        assert eps <= 1e-10

    @pytest.mark.parametrize("delta", [1e-2, 1e-3, 1e-4])
    def test_delta_bound_for_perturbed_states(self, delta):
        """delta <= sqrt(eps) when the orthogonal piece points at the top state."""
        spec = ModelSpec(n_sites=4, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        op = build_hamiltonian(spec)
        evals, evecs = np.linalg.eigh(op.to_matrix())
        mixed = evecs[:, 0] + delta * evecs[:, -1]
        mixed /= np.linalg.norm(mixed)
        mps = MatrixProductState.from_dense(mixed, grouped_dims(op.n_qubits))
        eps = epsilon_measure(mps, compile_mpo(op))
        assert delta <= np.sqrt(eps)

    def test_epsilon_scales_as_delta_squared(self):
        spec = ModelSpec(n_sites=4, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        op = build_hamiltonian(spec)
        mpo = compile_mpo(op)
        evals, evecs = np.linalg.eigh(op.to_matrix())
        ratios = []
        for delta in (1e-2, 1e-4):
            mixed = evecs[:, 0] + delta * evecs[:, -1]
            mixed /= np.linalg.norm(mixed)
            mps = MatrixProductState.from_dense(mixed, grouped_dims(op.n_qubits))
            ratios.append(epsilon_measure(mps, mpo) / delta**2)
        assert max(ratios) / min(ratios) < 2.0

    def test_dense_cross_check(self, small_spec):
        op = build_hamiltonian(small_spec)
        rng = np.random.default_rng(5)
        vec = rng.standard_normal(1 << op.n_qubits) + 1j * rng.standard_normal(1 << op.n_qubits)
        vec /= np.linalg.norm(vec)
        mps = MatrixProductState.from_dense(vec, grouped_dims(op.n_qubits))
        eps = epsilon_measure(mps, compile_mpo(op))
        dense = op.to_matrix()
        h_val = np.vdot(vec, dense @ vec)
        h2_val = np.vdot(dense @ vec, dense @ vec)
        expected = (abs(h2_val) - abs(h_val) ** 2) / abs(h_val) ** 2
        assert eps == pytest.approx(expected, rel=1e-8)

    def test_zero_energy_rejected(self):
        op = PauliSumOperator.from_terms(4, [(1.0, "XXII"), (1.0, "IIXX")])
        mpo = compile_mpo(op)
        zero = np.array([1, 0, 0, 0], dtype=complex)
        state = MatrixProductState.product_state([zero, zero])
        with pytest.raises(DegenerateEnergyError):
            epsilon_measure(state, mpo)
