"""Ground-truth engines: dense and matrix-free eigensolvers, exact evolution.

All eigenvectors follow one phase convention so that overlap tables are
reproducible bit-for-bit: the first amplitude whose magnitude exceeds
1e-12 times the largest is rotated to the positive real axis.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pauli import PauliSumOperator, compile_string_action

DENSE_CAP_DEFAULT = 14
LANCZOS_CAP_DEFAULT = 24


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest two eigenpairs of a Hermitian Pauli-sum operator."""

    ground_energy: float
    first_excited_energy: float
    gap: float
    ground_vector: np.ndarray

    def csv_row(self, n_sites: int) -> str:
        return f"{n_sites},{self.ground_energy!r},{self.first_excited_energy!r},{self.gap!r}"

    @staticmethod
    def csv_header() -> str:
        return "n_sites,ground_energy,first_excited,gap"


def fix_phase(vector: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first significant amplitude is real > 0."""
    mags = np.abs(vector)
    top = mags.max()
    if top == 0.0:
        return vector
    idx = int(np.argmax(mags > 1e-12 * top))
    return vector * np.exp(-1j * np.angle(vector[idx]))


def _compiled_matvec(op: PauliSumOperator) -> Callable[[np.ndarray], np.ndarray]:
    actions = [
        (coeff, *compile_string_action(op.n_qubits, string))
        for coeff, string in op.terms
    ]

    def matvec(state: np.ndarray) -> np.ndarray:
        out = np.zeros_like(state)
        for coeff, perm, phase in actions:
            out[perm] += (coeff * phase) * state
        return out

    return matvec


def ground_state_dense(op: PauliSumOperator, dense_cap: int = DENSE_CAP_DEFAULT) -> SpectrumResult:
    """Full diagonalization; lowest two eigenpairs with the fixed phase convention."""
    if op.n_qubits > dense_cap:
        raise ValueError(f"{op.n_qubits} qubits exceeds dense cap {dense_cap}")
    if not op.is_hermitian(1e-10):
        raise ValueError("operator must be Hermitian")
    evals, evecs = np.linalg.eigh(op.to_matrix())
    ground = fix_phase(evecs[:, 0])
    e0, e1 = float(evals[0]), float(evals[1])
    return SpectrumResult(
        ground_energy=e0,
        first_excited_energy=e1,
        gap=max(e1 - e0, 0.0),
        ground_vector=ground,
    )


def lanczos_lowest(
    matvec: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    tol: float,
    max_restarts: int = 400,
    krylov_dim: int = 30,
    locked: list[np.ndarray] | None = None,
    strict: bool = True,
) -> tuple[float, np.ndarray]:
    """Restarted Lanczos with full reorthogonalization for the lowest eigenpair.

    `locked` vectors are projected out of the Krylov space, which targets the
    lowest eigenpair orthogonal to them.  Deterministic given `start`.
    Raises ConvergenceError if the residual norm stays above `tol`; with
    strict=False the best pair found is returned instead (inner-loop use).
    """
    locked = locked or []
    dim = start.shape[0]
    m_cap = min(krylov_dim, dim - len(locked))
    if m_cap < 1:
        raise ValueError("Krylov space is empty after deflation")

    def project_out(w: np.ndarray) -> np.ndarray:
        for u in locked:
            w = w - np.vdot(u, w) * u
        return w

    v = project_out(start.astype(complex))
    nrm = np.linalg.norm(v)
    if nrm < 1e-14:
        raise ValueError("start vector lies in the locked subspace")
    v = v / nrm

    theta = 0.0
    for _ in range(max_restarts):
        basis = [v]
        alphas: list[float] = []
        betas: list[float] = []
        for j in range(m_cap):
            w = project_out(matvec(basis[j]))
            alpha = float(np.real(np.vdot(basis[j], w)))
            alphas.append(alpha)
            w = w - alpha * basis[j]
            if j > 0:
                w = w - betas[-1] * basis[j - 1]
            # full reorthogonalization, twice for stability
            for _pass in range(2):
                for u in basis:
                    w = w - np.vdot(u, w) * u
            beta = float(np.linalg.norm(w))
            if beta < 1e-14 or j == m_cap - 1:
                break
            betas.append(beta)
            basis.append(w / beta)
        k = len(alphas)
        tmat = np.diag(alphas)
        for i, b in enumerate(betas[: k - 1]):
            tmat[i, i + 1] = b
            tmat[i + 1, i] = b
        tvals, tvecs = np.linalg.eigh(tmat)
        theta = float(tvals[0])
        y = tvecs[:, 0]
        v_new = sum(y[i] * basis[i] for i in range(k))
        v_new = project_out(v_new)
        v_new = v_new / np.linalg.norm(v_new)
        residual = float(np.linalg.norm(project_out(matvec(v_new)) - theta * v_new))
        v = v_new
        if residual <= tol:
            return theta, v
    if not strict:
        return theta, v
    raise ConvergenceError(
        f"Lanczos did not reach residual {tol:.2e} after {max_restarts} restarts"
    )


def ground_state_lanczos(
    op: PauliSumOperator,
    tol: float = 1e-10,
    seed: int = 0,
    lanczos_cap: int = LANCZOS_CAP_DEFAULT,
    max_restarts: int = 400,
) -> SpectrumResult:
    """Matrix-free Krylov solver for the lowest two eigenpairs."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if op.n_qubits > lanczos_cap:
        raise ValueError(f"{op.n_qubits} qubits exceeds Lanczos cap {lanczos_cap}")
    dim = 1 << op.n_qubits
    matvec = _compiled_matvec(op)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    e0, v0 = lanczos_lowest(matvec, start, tol, max_restarts=max_restarts)
    start2 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    e1, _v1 = lanczos_lowest(matvec, start2, tol, max_restarts=max_restarts, locked=[v0])
    return SpectrumResult(
        ground_energy=e0,
        first_excited_energy=e1,
        gap=max(e1 - e0, 0.0),
        ground_vector=fix_phase(v0),
    )


# ---------------------------------------------------------------------------
# Exact time evolution
# ---------------------------------------------------------------------------

_EIG_CACHE: "OrderedDict[tuple, tuple[np.ndarray, np.ndarray]]" = OrderedDict()
_EIG_CACHE_MAX = 8


def _eigensystem(op: PauliSumOperator, dense_cap: int) -> tuple[np.ndarray, np.ndarray]:
    if op.n_qubits > dense_cap:
        raise ValueError(f"{op.n_qubits} qubits exceeds dense cap {dense_cap}")
    key = (op.n_qubits, op.terms)
    hit = _EIG_CACHE.get(key)
    if hit is not None:
        _EIG_CACHE.move_to_end(key)
        return hit
    evals, evecs = np.linalg.eigh(op.to_matrix())
    _EIG_CACHE[key] = (evals, evecs)
    if len(_EIG_CACHE) > _EIG_CACHE_MAX:
        _EIG_CACHE.popitem(last=False)
    return evals, evecs


class ExactPropagator:
    """Eigendecomposition-backed evolution exp(-iHt) for one fixed operator."""

    def __init__(self, op: PauliSumOperator, dense_cap: int = DENSE_CAP_DEFAULT):
        self.op = op
        self.evals, self.evecs = _eigensystem(op, dense_cap)

    def to_eigenbasis(self, state: np.ndarray) -> np.ndarray:
        return self.evecs.conj().T @ state

    def from_eigenbasis(self, state: np.ndarray) -> np.ndarray:
        return self.evecs @ state

    def apply(self, time: float, state: np.ndarray) -> np.ndarray:
        amps = self.to_eigenbasis(state)
        amps = amps * np.exp(-1j * self.evals * time)
        return self.from_eigenbasis(amps)


def evolve_exact(
    op: PauliSumOperator,
    time: float,
    state: np.ndarray,
    dense_cap: int = DENSE_CAP_DEFAULT,
) -> np.ndarray:
    """exp(-iHt) |state> via eigendecomposition; unitary to machine precision."""
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"state must be normalized, got norm {nrm}")
    return ExactPropagator(op, dense_cap).apply(time, state)
