"""Desk-scale laboratory for site-by-site vacuum preparation of the
lattice Gross-Neveu model: Hamiltonian construction, classical ground-state
engines, correlator and energy analyses, and a statevector simulation of
the quantum preparation algorithm."""

__version__ = "0.1.0"

from .model import (
    Boundary,
    GammaRep,
    ModelSpec,
    REFERENCE_PARAMETER_POINTS,
    SiteOrder,
    build_hamiltonian,
    free_dispersion,
    free_quadratic_form,
    lattice_momenta,
    lattice_spacing_for,
    majorana_gammas,
    site_order,
)
from .pauli import PauliSumOperator, jordan_wigner
from .exact import (
    ConvergenceError,
    SpectrumResult,
    evolve_exact,
    ground_state_dense,
    ground_state_lanczos,
)
from .mps import (
    MatrixProductOperator,
    MatrixProductState,
    append_site,
    apply_mpo,
    compile_mpo,
    expectation_value,
    mps_overlap,
)
from .dmrg import DmrgReport, dmrg_ground_state, epsilon_measure
from .bessel import bessel_k
from .observables import CorrelatorSeries, continuum_free_correlator, two_point_correlator
from .fits import (
    CorrelationFit,
    EnergyFit,
    EnergyModel,
    ErrorBudget,
    error_budget,
    fit_correlation_length,
    fit_energy_extrapolation,
)
from .overlaps import Engine, OverlapSeries, PadKind, consecutive_overlaps, eta_vs_correlation, pad_state
from .stateprep import (
    Decision,
    FixedPointConfig,
    OracleMode,
    PhaseEstimationConfig,
    PrepTrace,
    fixed_point_amplify,
    fixed_point_schedule_length,
    ground_oracle_reflection,
    phase_estimate,
    prepare_vacuum,
    state_reflection,
)

__all__ = [name for name in dir() if not name.startswith("_")]
