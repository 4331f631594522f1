"""Nonlinear fits: correlation length, finite-size energy models, error budget.

All fits use one deterministic damped Gauss-Newton engine with fixed,
documented initialization, so identical inputs reproduce identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .bessel import bessel_k


class FitConvergenceError(RuntimeError):
    """The Gauss-Newton iteration did not meet its step tolerance."""


def _finite_difference_jacobian(
    residual: Callable[[np.ndarray], np.ndarray],
    theta: np.ndarray,
    r0: np.ndarray,
) -> np.ndarray:
    jac = np.empty((len(r0), len(theta)))
    for i in range(len(theta)):
        h = 1e-7 * max(abs(theta[i]), 1e-3)
        probe = theta.copy()
        probe[i] += h
        jac[:, i] = (residual(probe) - r0) / h
    return jac


def damped_gauss_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    theta0: Sequence[float],
    feasible: Callable[[np.ndarray], bool] | None = None,
    max_iter: int = 200,
    step_tol: float = 1e-12,
) -> tuple[np.ndarray, float]:
    """Minimize ||residual(theta)||; returns (theta, residual 2-norm).

    Steps that leave the feasible region or fail to reduce the cost are
    halved; the iteration stops once the accepted step is below `step_tol`
    relative to |theta|.  Raises FitConvergenceError after `max_iter`
    iterations without meeting the tolerance.
    """
    theta = np.asarray(theta0, dtype=float)
    r = residual(theta)
    cost = float(r @ r)
    for _ in range(max_iter):
        jac = _finite_difference_jacobian(residual, theta, r)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam = 1.0
        accepted = False
        while lam > 1e-14:
            trial = theta + lam * step
            if feasible is not None and not feasible(trial):
                lam *= 0.5
                continue
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial <= cost:
                theta, r, cost = trial, r_trial, cost_trial
                accepted = True
                break
            lam *= 0.5
        if not accepted or np.linalg.norm(lam * step) <= step_tol * (1.0 + np.linalg.norm(theta)):
            return theta, math.sqrt(cost)
    raise FitConvergenceError(f"no convergence after {max_iter} Gauss-Newton iterations")


# ---------------------------------------------------------------------------
# Correlation-length fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationFit:
    """Best-fit b * K0(dx / chi) over a separation window.

    `residual_norm` is the unweighted relative misfit ||model - y|| / ||y||
    over the window.
    """

    amplitude_b: float
    corr_length_chi: float
    fit_window: tuple[float, float]
    residual_norm: float

    def __post_init__(self) -> None:
        if self.corr_length_chi <= 0:
            raise ValueError("corr_length_chi must be positive")

    @property
    def renormalized_mass(self) -> float:
        """1 / chi, with the proportionality constant set to one."""
        return 1.0 / self.corr_length_chi

    @property
    def half_gap(self) -> float:
        return 0.5 / self.corr_length_chi

    def csv_row(self, m0: float, g0_sq: float) -> str:
        return f"{m0!r},{g0_sq!r},{self.amplitude_b!r},{self.corr_length_chi!r},{self.residual_norm!r}"

    @staticmethod
    def csv_header() -> str:
        return "m0,g0_sq,b,chi,residual"


def default_fit_window(separations: Sequence[float]) -> tuple[float, float]:
    """[3a, L/4] with a the first separation and L twice the largest one."""
    a = separations[0]
    length = 2.0 * separations[-1]
    return (3.0 * a, length / 4.0)


def fit_correlation_length(series, window: tuple[float, float] | None = None) -> CorrelationFit:
    """Weighted least squares of b * K0(dx / chi) on the windowed series.

    Initialization is fixed: chi0 = L / 10 (a tenth of the chain length)
    and b0 matching the first windowed point.  Points with zero error bars
    get unit weight.
    """
    seps = np.asarray(series.separations, dtype=float)
    vals = np.asarray(series.values, dtype=float)
    errs = np.asarray(series.error_bars, dtype=float)
    if window is None:
        window = default_fit_window(seps)
    lo, hi = window
    if lo < seps[0] - 1e-12 or hi > seps[-1] + 1e-12:
        raise ValueError(f"window {window} extends beyond the data range")
    mask = (seps >= lo - 1e-12) & (seps <= hi + 1e-12)
    if int(mask.sum()) < 4:
        raise ValueError(f"window {window} contains {int(mask.sum())} points, need at least 4")
    x, y, e = seps[mask], vals[mask], errs[mask]
    weights = np.where(e > 0, 1.0 / np.where(e > 0, e, 1.0), 1.0)

    chi0 = 2.0 * seps[-1] / 10.0
    b0 = y[0] / bessel_k(0, x[0] / chi0)

    def residual(theta: np.ndarray) -> np.ndarray:
        b, chi = theta
        model = b * np.array([bessel_k(0, xi / chi) for xi in x])
        return weights * (model - y)

    theta, _ = damped_gauss_newton(
        residual,
        (b0, chi0),
        feasible=lambda th: th[1] > 0,
    )
    b, chi = float(theta[0]), float(theta[1])
    model = b * np.array([bessel_k(0, xi / chi) for xi in x])
    rel = float(np.linalg.norm(model - y) / np.linalg.norm(y))
    return CorrelationFit(
        amplitude_b=b,
        corr_length_chi=chi,
        fit_window=(float(lo), float(hi)),
        residual_norm=rel,
    )


# ---------------------------------------------------------------------------
# Finite-size energy models
# ---------------------------------------------------------------------------


class EnergyModel(str, Enum):
    LINEAR = "linear"
    INVERSE_SERIES = "inverse-series"
    CASIMIR = "casimir"


_N_COEFFS = {
    EnergyModel.LINEAR: 2,
    EnergyModel.INVERSE_SERIES: 5,
    EnergyModel.CASIMIR: 4,
}

CASIMIR_HARMONICS = 10


def _casimir_sum(c3: float, size: float) -> float:
    return sum(bessel_k(2, c3 * h * size) / h**2 for h in range(1, CASIMIR_HARMONICS + 1))


def _linear_design(model: EnergyModel, sizes: np.ndarray) -> np.ndarray:
    if model is EnergyModel.LINEAR:
        return np.column_stack([np.ones_like(sizes), sizes])
    if model is EnergyModel.INVERSE_SERIES:
        return np.column_stack(
            [np.ones_like(sizes), sizes, 1.0 / sizes, sizes**-2.0, sizes**-3.0]
        )
    raise ValueError(model)


def _fit_coefficients(model: EnergyModel, sizes: np.ndarray, energies: np.ndarray) -> tuple[float, ...]:
    if model in (EnergyModel.LINEAR, EnergyModel.INVERSE_SERIES):
        coeffs, *_ = np.linalg.lstsq(_linear_design(model, sizes), energies, rcond=None)
        return tuple(float(c) for c in coeffs)
    # Casimir: C0 + C1 L + C2 sum_h h^-2 K2(C3 h L); C2 linear for fixed C3,
    # so scan C3 on a fixed logarithmic grid, then refine all four together.
    median = float(np.median(sizes))
    grid = np.geomspace(0.05, 50.0, 60) / median

    def solve_linear(c3: float) -> tuple[np.ndarray, float]:
        basis = np.column_stack(
            [np.ones_like(sizes), sizes, [_casimir_sum(c3, s) for s in sizes]]
        )
        lin, *_ = np.linalg.lstsq(basis, energies, rcond=None)
        resid = basis @ lin - energies
        return lin, float(resid @ resid)

    best_c3, best_cost, best_lin = None, np.inf, None
    for c3 in grid:
        lin, cost = solve_linear(float(c3))
        if cost < best_cost:
            best_c3, best_cost, best_lin = float(c3), cost, lin

    def residual(theta: np.ndarray) -> np.ndarray:
        c0, c1, c2, c3 = theta
        return np.array(
            [c0 + c1 * s + c2 * _casimir_sum(c3, s) - e for s, e in zip(sizes, energies)]
        )

    theta, _ = damped_gauss_newton(
        residual,
        (best_lin[0], best_lin[1], best_lin[2], best_c3),
        feasible=lambda th: th[3] > 0,
    )
    if theta[3] <= 0:
        raise ValueError("Casimir fit diverged: C3 <= 0")
    return tuple(float(c) for c in theta)


def _evaluate(model: EnergyModel, coeffs: Sequence[float], size: float) -> float:
    if model is EnergyModel.LINEAR:
        c0, c1 = coeffs
        return c0 + c1 * size
    if model is EnergyModel.INVERSE_SERIES:
        c0, c1, c2, c3, c4 = coeffs
        return c0 + c1 * size + c2 / size + c3 / size**2 + c4 / size**3
    c0, c1, c2, c3 = coeffs
    return c0 + c1 * size + c2 * _casimir_sum(c3, size)


@dataclass(frozen=True)
class EnergyFit:
    """Finite-size energy model with strictly causal prediction errors.

    `prediction_errors[k]` is |model fitted to sizes < sizes[k], evaluated
    at sizes[k], minus energies[k]|, and NaN where fewer prior points exist
    than the model has coefficients.  `coefficients` come from the fit to
    the full data set.
    """

    model: EnergyModel
    coefficients: tuple[float, ...]
    sizes: tuple[float, ...]
    energies: tuple[float, ...]
    prediction_errors: tuple[float, ...]
    half_gap: float

    def predict(self, size: float) -> float:
        return _evaluate(self.model, self.coefficients, size)

    def threshold_size(self, bound: float | None = None) -> float | None:
        """Smallest size from which every later causal error stays below `bound`."""
        bound = self.half_gap if bound is None else bound
        ok_from = None
        for size, err in zip(self.sizes, self.prediction_errors):
            if math.isnan(err):
                continue
            if err < bound:
                if ok_from is None:
                    ok_from = size
            else:
                ok_from = None
        return ok_from

    def csv_rows(self) -> list[str]:
        rows = []
        for size, energy, err in zip(self.sizes, self.energies, self.prediction_errors):
            pred = "" if math.isnan(err) else repr(float(self.predict_causal(size)))
            err_s = "" if math.isnan(err) else repr(float(err))
            rows.append(
                f"{size!r},{energy!r},{self.model.value},{pred},{err_s},{self.half_gap!r}"
            )
        return rows

    @staticmethod
    def csv_header() -> str:
        return "N,E,model,prediction,abs_error,half_gap"

    def predict_causal(self, size: float) -> float:
        """Prediction at `size` from the fit to strictly smaller recorded sizes."""
        sizes = np.asarray(self.sizes)
        energies = np.asarray(self.energies)
        mask = sizes < size
        need = _N_COEFFS[self.model]
        if int(mask.sum()) < need:
            raise ValueError(f"fewer than {need} sizes below {size}")
        coeffs = _fit_coefficients(self.model, sizes[mask], energies[mask])
        return _evaluate(self.model, coeffs, size)


def fit_energy_extrapolation(
    energies: Sequence[tuple[float, float]],
    model: EnergyModel | str,
    gap: float,
) -> EnergyFit:
    """Fit the chosen finite-size model and record causal prediction errors.

    For each recorded size the model is refit to all strictly smaller sizes
    and evaluated there; the global coefficients come from the full data.
    """
    model = EnergyModel(model)
    if gap <= 0:
        raise ValueError("gap must be positive")
    pairs = sorted((float(n), float(e)) for n, e in energies)
    sizes = np.array([p[0] for p in pairs])
    if len(np.unique(sizes)) != len(sizes):
        raise ValueError("duplicate sizes in energy data")
    vals = np.array([p[1] for p in pairs])
    need = _N_COEFFS[model]
    if len(sizes) < need + 1:
        raise ValueError(f"{model.value} model needs at least {need + 1} points, got {len(sizes)}")

    errors = []
    for k in range(len(sizes)):
        if k < need:
            errors.append(float("nan"))
            continue
        coeffs = _fit_coefficients(model, sizes[:k], vals[:k])
        errors.append(float(abs(_evaluate(model, coeffs, sizes[k]) - vals[k])))

    global_coeffs = _fit_coefficients(model, sizes, vals)
    return EnergyFit(
        model=model,
        coefficients=global_coeffs,
        sizes=tuple(float(s) for s in sizes),
        energies=tuple(float(v) for v in vals),
        prediction_errors=tuple(errors),
        half_gap=gap / 2.0,
    )


# ---------------------------------------------------------------------------
# Convergence-measure error budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorBudget:
    """State-error bounds implied by the relative-variance measure epsilon."""

    epsilon: float
    delta_bound: float
    condition_kappa: float | None = None
    delta_bound_sharp: float | None = None
    active_bound: str = "sqrt_epsilon"

    def __post_init__(self) -> None:
        if abs(self.delta_bound - math.sqrt(self.epsilon)) > 1e-15 * (1 + self.delta_bound):
            raise ValueError("delta_bound must equal sqrt(epsilon)")


def error_budget(
    epsilon: float,
    e_ground: float | None = None,
    e_max: float | None = None,
) -> ErrorBudget:
    """delta <= sqrt(epsilon), sharpened to sqrt(eps) / |kappa^2 - 2 kappa|
    when the extreme energies are supplied and the denominator is nonzero."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    delta = math.sqrt(epsilon)
    if e_ground is None or e_max is None:
        return ErrorBudget(epsilon=epsilon, delta_bound=delta)
    if e_ground == 0:
        raise ValueError("e_ground must be nonzero")
    kappa_signed = e_max / e_ground
    denom = abs(kappa_signed**2 - 2.0 * kappa_signed)
    kappa_mag = abs(e_max) / abs(e_ground)
    if denom < 1e-12:
        return ErrorBudget(epsilon=epsilon, delta_bound=delta, condition_kappa=kappa_mag)
    sharp = delta / denom
    active = "kappa" if sharp < delta else "sqrt_epsilon"
    return ErrorBudget(
        epsilon=epsilon,
        delta_bound=delta,
        condition_kappa=kappa_mag,
        delta_bound_sharp=sharp,
        active_bound=active,
    )
