import numpy as np
import pytest

from gnlab.exact import ground_state_dense
from gnlab.fits import CorrelationFit
from gnlab.model import ModelSpec, build_hamiltonian
from gnlab.overlaps import (
    Engine,
    OverlapSeries,
    PadKind,
    consecutive_overlaps,
    eta_vs_correlation,
    pad_state,
    plateau_estimate,
)


class TestPadState:
    def test_uniform_single_flavor(self):
        pad = pad_state(PadKind.UNIFORM, flavors=1)
        assert np.allclose(pad, np.full(4, 0.5))

    def test_symmetry_adapted_single_flavor(self):
        pad = pad_state(PadKind.SYMMETRY_ADAPTED, flavors=1)
        assert np.allclose(pad, [0, 1 / np.sqrt(2), 1 / np.sqrt(2), 0])

    @pytest.mark.parametrize("kind", [PadKind.UNIFORM, PadKind.SYMMETRY_ADAPTED])
    @pytest.mark.parametrize("flavors", [1, 2])
    def test_unit_norm(self, kind, flavors):
        assert np.linalg.norm(pad_state(kind, flavors)) == pytest.approx(1.0)

    def test_custom_pad(self):
        vec = np.zeros(4)
        vec[0] = 1.0
        assert np.allclose(pad_state(PadKind.CUSTOM, 1, custom=vec), vec)
        with pytest.raises(ValueError):
            pad_state(PadKind.CUSTOM, 1, custom=np.ones(4))
        with pytest.raises(ValueError):
            pad_state(PadKind.CUSTOM, 1)


class TestConsecutiveOverlaps:
    def test_dense_engine_matches_brute_force(self, reference_points):
        """Deep product-like regime, dense solves vs direct statevector math."""
        spec = ModelSpec(n_sites=2, spacing=0.5, bare_mass=5.0, coupling_sq=0.0)
        pad = pad_state(PadKind.UNIFORM, 1)
        series = consecutive_overlaps(spec, range(2, 6), pad, engine=Engine.DENSE)
        for j, value in zip(series.sizes, series.overlaps):
            g_small = ground_state_dense(build_hamiltonian(spec.with_sites(j))).ground_vector
            g_large = ground_state_dense(build_hamiltonian(spec.with_sites(j + 1))).ground_vector
            brute = abs(np.vdot(np.kron(g_small, pad), g_large))
            assert value == pytest.approx(brute, abs=1e-10)

    def test_dmrg_and_dense_engines_agree(self):
        spec = ModelSpec(n_sites=2, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        pad = pad_state(PadKind.UNIFORM, 1)
        eps_goal = 1e-10
        dense = consecutive_overlaps(spec, range(2, 6), pad, engine=Engine.DENSE)
        dmrg = consecutive_overlaps(
            spec, range(2, 6), pad, engine=Engine.DMRG, epsilon_goal=eps_goal
        )
        for a, b in zip(dense.overlaps, dmrg.overlaps):
            assert abs(a - b) <= 10 * np.sqrt(eps_goal)

    def test_symmetry_adapted_gains_sqrt_two(self):
        spec = ModelSpec(n_sites=2, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        uniform = consecutive_overlaps(
            spec, range(2, 5), pad_state(PadKind.UNIFORM, 1), engine=Engine.DENSE
        )
        adapted = consecutive_overlaps(
            spec, range(2, 5), pad_state(PadKind.SYMMETRY_ADAPTED, 1), engine=Engine.DENSE
        )
        for u, s in zip(uniform.overlaps, adapted.overlaps):
            assert s / u == pytest.approx(np.sqrt(2), abs=1e-6)

    def test_phase_invariance_of_pad(self):
        spec = ModelSpec(n_sites=2, spacing=0.5, bare_mass=0.3, coupling_sq=1.0)
        pad = pad_state(PadKind.UNIFORM, 1)
        rotated = np.exp(1j * 0.83) * pad
        a = consecutive_overlaps(spec, range(2, 5), pad, engine=Engine.DENSE)
        b = consecutive_overlaps(spec, range(2, 5), rotated, engine=Engine.DENSE)
        assert np.allclose(a.overlaps, b.overlaps, atol=1e-12)

    def test_overlaps_lie_in_unit_interval(self):
        spec = ModelSpec(n_sites=2, spacing=0.25, bare_mass=0.4, coupling_sq=1.0)
        series = consecutive_overlaps(
            spec, range(2, 6), pad_state(PadKind.UNIFORM, 1), engine=Engine.DENSE
        )
        assert all(0.0 <= o <= 1.0 for o in series.overlaps)

    def test_decoupled_sites_give_constant_overlap(self):
        """With hopping suppressed (huge mass), overlap = |<site ground|pad>|."""
        spec = ModelSpec(n_sites=2, spacing=0.5, bare_mass=400.0, coupling_sq=0.0)
        pad = pad_state(PadKind.UNIFORM, 1)
        series = consecutive_overlaps(spec, range(2, 6), pad, engine=Engine.DENSE)
        spread = max(series.overlaps) - min(series.overlaps)
        assert spread < 1e-3
        site_spec = spec.with_sites(2)
        # per-site ground state of the decoupled mass term, from the 2-site solve
        ground = ground_state_dense(build_hamiltonian(site_spec)).ground_vector
        site_ground = ground.reshape(4, 4)
        u, s, vh = np.linalg.svd(site_ground)
        single = u[:, 0]
        expected = abs(np.vdot(single, pad))
        assert series.overlaps[-1] == pytest.approx(expected, abs=1e-3)

    def test_sizes_must_be_consecutive(self):
        spec = ModelSpec(n_sites=2, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)
        with pytest.raises(ValueError):
            consecutive_overlaps(spec, [2, 4, 6], pad_state(PadKind.UNIFORM, 1))

    def test_solver_failure_returns_partial_flagged_series(self):
        spec = ModelSpec(n_sites=2, spacing=0.25, bare_mass=0.2, coupling_sq=1.5)
        series = consecutive_overlaps(
            spec, range(2, 8), pad_state(PadKind.UNIFORM, 1),
            engine=Engine.DENSE, dense_cap=8,
        )
        assert not series.complete
        assert series.sizes == (2, 3)


class TestPlateauAndTable:
    def test_plateau_estimator_on_synthetic_series(self):
        overlaps = [0.5, 0.7, 0.79, 0.8, 0.8, 0.8, 0.8, 0.8]
        eta, spread = plateau_estimate(overlaps)
        assert eta == pytest.approx(0.8)
        assert spread == pytest.approx(0.0)

    def test_table_for_reference_points(self, reference_points):
        series = {
            pt: OverlapSeries(
                sizes=(2, 3), overlaps=(0.5, 0.5), pad_label=PadKind.UNIFORM,
                eta_estimate=0.5, eta_spread=0.0,
            )
            for pt in reference_points
        }
        fits = {
            pt: CorrelationFit(
                amplitude_b=1.0, corr_length_chi=0.1 * (i + 1),
                fit_window=(0.0, 1.0), residual_norm=0.01,
            )
            for i, pt in enumerate(reference_points)
        }
        rows = eta_vs_correlation(series, fits, spacing=0.02)
        assert len(rows) == 2
        assert all(0 < r["eta"] <= 1 for r in rows)
        assert rows[0]["chi_over_a"] == pytest.approx(5.0)

    def test_empty_map_gives_empty_table(self):
        assert eta_vs_correlation({}, {}, spacing=0.1) == []

    def test_missing_fit_raises(self):
        series = {
            (0.2, 1.5): OverlapSeries(
                sizes=(2,), overlaps=(0.5,), pad_label=PadKind.UNIFORM,
                eta_estimate=0.5, eta_spread=0.0,
            )
        }
        with pytest.raises(KeyError):
            eta_vs_correlation(series, {}, spacing=0.1)

    def test_csv_rows(self):
        series = OverlapSeries(
            sizes=(2, 3), overlaps=(0.4, 0.5), pad_label=PadKind.UNIFORM,
            eta_estimate=0.5, eta_spread=0.01,
        )
        rows = series.csv_rows(0.2, 1.5)
        assert rows[0] == "0.2,1.5,2,0.4,uniform"
        assert series.summary_row(0.2, 1.5).startswith("0.2,1.5,0.5,")
