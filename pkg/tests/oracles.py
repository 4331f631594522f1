"""Independent reference implementations used only to check the package.

Everything here is built directly from dense matrices and textbook
formulas, bypassing the package's Pauli/MPS machinery, so agreement is a
genuine cross-check rather than a tautology.
"""

from __future__ import annotations

import numpy as np

from gnlab.model import Boundary, ModelSpec

SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


def ladder_operators(n_modes: int) -> list[np.ndarray]:
    """Dense annihilation operators with Jordan-Wigner parity strings."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for k in range(n_modes):
        mats = [z] * k + [lower] + [eye] * (n_modes - k - 1)
        full = mats[0]
        for m in mats[1:]:
            full = np.kron(full, m)
        ops.append(full)
    return ops


def dense_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """The model Hamiltonian assembled from dense ladder operators."""
    n = spec.n_qubits
    ann = ladder_operators(n)
    cre = [m.conj().T for m in ann]
    a = spec.spacing
    onsite = (spec.bare_mass + spec.wilson_r / a) * SIGMA_Y
    grad = (1j / (2 * a)) * SIGMA_Z
    wilson = (-spec.wilson_r / (2 * a)) * SIGMA_Y

    def mode(x: int, j: int, alpha: int) -> int:
        return 2 * (spec.flavors * x + j) + alpha

    dim = 1 << n
    ham = np.zeros((dim, dim), dtype=complex)

    def bilinear(x: int, y: int, j: int, mat: np.ndarray) -> np.ndarray:
        out = np.zeros_like(ham)
        for alpha in range(2):
            for beta in range(2):
                if mat[alpha, beta] != 0:
                    out += mat[alpha, beta] * cre[mode(x, j, alpha)] @ ann[mode(y, j, beta)]
        return out

    for x in range(spec.n_sites):
        density = np.zeros_like(ham)
        for j in range(spec.flavors):
            ham += bilinear(x, x, j, onsite)
            for step, mat in ((1, grad + wilson), (-1, -grad + wilson)):
                y = x + step
                if 0 <= y < spec.n_sites:
                    ham += bilinear(x, y, j, mat)
                elif spec.boundary is Boundary.PERIODIC:
                    ham += bilinear(x, y % spec.n_sites, j, mat)
            density += bilinear(x, x, j, SIGMA_Y)
        ham += (-spec.coupling_sq / (2 * a)) * (density @ density)
    return ham


def fermionic_permutation_unitary(n_modes: int, perm: dict[int, int]) -> np.ndarray:
    """U with U c_k U+ = c_perm[k], including fermionic reordering signs."""
    dim = 1 << n_modes
    unitary = np.zeros((dim, dim))
    for i in range(dim):
        occupied = [q for q in range(n_modes) if (i >> (n_modes - 1 - q)) & 1]
        moved = [perm[q] for q in occupied]
        sign = 1
        for a in range(len(moved)):
            for b in range(a + 1, len(moved)):
                if moved[a] > moved[b]:
                    sign = -sign
        j = 0
        for q in moved:
            j |= 1 << (n_modes - 1 - q)
        unitary[j, i] = sign
    return unitary


def free_fermion_correlations(one_body: np.ndarray) -> np.ndarray:
    """<c_mu c+_nu> in the filled-negative-mode ground state of a quadratic H."""
    evals, evecs = np.linalg.eigh(one_body)
    filled = evals < 0
    cdag_c = (evecs[:, filled] @ evecs[:, filled].conj().T).T   # <c+_mu c_nu>
    return np.eye(len(evals), dtype=complex) - cdag_c.T


def taylor_evolve(matrix: np.ndarray, time: float, state: np.ndarray, terms: int = 60) -> np.ndarray:
    """exp(-iHt)|state> by the truncated power series."""
    out = state.astype(complex).copy()
    term = state.astype(complex).copy()
    for k in range(1, terms):
        term = (-1j * time / k) * (matrix @ term)
        out = out + term
    return out
