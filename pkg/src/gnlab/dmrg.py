"""Two-site DMRG ground-state search with a variance-based stopping rule.

The run stops when the convergence measure

    epsilon = (|<H^2>| - |<H>|^2) / |<H>|^2

drops below the configured goal, or when the bond-dimension cap is reached
and the energy has stalled.  <H^2> is evaluated by applying the operator to
the state a second time (zip-up application with discarded weight 1e-14),
never by approximating the square.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import lanczos_lowest
from .mps import (
    MatrixProductOperator,
    MatrixProductState,
    apply_mpo,
    mps_overlap,
    truncated_svd,
)


class EnergyIncreaseError(RuntimeError):
    """A sweep raised the energy beyond tolerance, which signals a bug."""


class DegenerateEnergyError(ValueError):
    """|<H>| is too small for the relative variance measure."""


@dataclass(frozen=True)
class DmrgReport:
    energy: float
    epsilon: float
    sweeps: int
    max_bond: int
    converged: bool
    energy_history: tuple[float, ...] = ()

    def csv_row(self, n_sites: int) -> str:
        return f"{n_sites},{self.energy!r},{self.epsilon!r},{self.sweeps},{self.max_bond}"

    @staticmethod
    def csv_header() -> str:
        return "N,energy,epsilon,sweeps,max_bond"


def epsilon_measure(state: MatrixProductState, mpo: MatrixProductOperator,
                    discarded_weight: float = 1e-14) -> float:
    """Relative energy variance of `state` with respect to `mpo`.

    Returns (|<H^2>| - |<H>|^2) / |<H>|^2 with <H^2> = ||H psi||^2 from a
    second operator application.  Raises DegenerateEnergyError when |<H>|
    falls below 1e-12; shift the operator by a constant in that case.
    """
    phi = apply_mpo(mpo, state, discarded_weight=discarded_weight)
    energy = mps_overlap(state, phi)
    if abs(energy) < 1e-12:
        raise DegenerateEnergyError(
            "|<H>| < 1e-12: shift the operator by a constant before measuring epsilon"
        )
    h_sq = float(np.linalg.norm(phi.tensors[phi.center].reshape(-1)) ** 2)
    eps = (abs(h_sq) - abs(energy) ** 2) / abs(energy) ** 2
    if eps < -1e-9:
        raise RuntimeError(f"variance came out significantly negative: {eps}")
    return max(eps, 0.0)


# -- environments -------------------------------------------------------------


def _grow_left(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    tmp = np.tensordot(env, a, axes=([2], [0]))              # (bra, wb, p_in, rket)
    tmp = np.tensordot(tmp, w, axes=([1, 2], [0, 2]))        # (bra, rket, p_out, w2)
    out = np.tensordot(a.conj(), tmp, axes=([0, 1], [0, 2]))  # (rbra, rket, w2)
    return out.transpose(0, 2, 1)                            # (rbra, w2, rket)


def _grow_right(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    tmp = np.tensordot(a, env, axes=([2], [2]))              # (lket, p_in, bra, wb)
    tmp = np.tensordot(w, tmp, axes=([3, 2], [3, 1]))        # (wl, p_out, lket, bra)
    out = np.tensordot(tmp, a.conj(), axes=([1, 3], [1, 2]))  # (wl, lket, lbra)
    return out.transpose(2, 0, 1)                            # (lbra, wl, lket)


def _two_site_matvec(lenv, w1, w2, renv):
    def matvec(vec: np.ndarray) -> np.ndarray:
        v = vec.reshape(lenv.shape[2], w1.shape[2], w2.shape[2], renv.shape[2])
        x = np.tensordot(lenv, v, axes=([2], [0]))             # (bra, wb, p, q, rk)
        x = np.tensordot(x, w1, axes=([1, 2], [0, 2]))         # (bra, q, rk, p_o, w2)
        x = np.tensordot(x, w2, axes=([4, 1], [0, 2]))         # (bra, rk, p_o, q_o, w3)
        x = np.tensordot(x, renv, axes=([4, 1], [1, 2]))       # (bra, p_o, q_o, rbra)
        return x.reshape(-1)

    return matvec


def dmrg_ground_state(
    mpo: MatrixProductOperator,
    epsilon_goal: float,
    max_bond: int,
    seed: int,
    max_sweeps: int = 40,
    discarded_weight: float = 1e-12,
    warmup_bond: int = 8,
    krylov_dim: int = 16,
    energy_rise_tol: float = 1e-8,
) -> tuple[MatrixProductState, DmrgReport]:
    """Two-site sweeps from a seeded random bond-2 state until epsilon converges.

    Deterministic given `seed`.  Raises EnergyIncreaseError if the energy
    rises across a sweep by more than `energy_rise_tol * (1 + |E|)`.
    """
    if epsilon_goal <= 0:
        raise ValueError("epsilon_goal must be positive")
    if max_bond < 2:
        raise ValueError("max_bond must be at least 2")
    n = mpo.n_sites
    if n < 2:
        raise ValueError("two-site sweeps need at least two sites")
    psi = MatrixProductState.random(mpo.phys_dims, bond_dim=2, seed=seed)
    psi.canonicalize(0)
    psi.normalize()

    right_envs: list[np.ndarray | None] = [None] * (n + 1)
    right_envs[n] = np.ones((1, 1, 1), dtype=complex)
    for k in range(n - 1, 1, -1):
        right_envs[k] = _grow_right(right_envs[k + 1], psi.tensors[k], mpo.tensors[k])
    left_envs: list[np.ndarray | None] = [None] * (n + 1)
    left_envs[0] = np.ones((1, 1, 1), dtype=complex)

    energy = float("inf")
    eps = float("inf")
    sweeps_done = 0
    converged = False
    history: list[float] = []

    def optimize_bond(k: int, cap: int):
        theta = np.tensordot(psi.tensors[k], psi.tensors[k + 1], axes=([2], [0]))
        shape = theta.shape
        matvec = _two_site_matvec(left_envs[k], mpo.tensors[k], mpo.tensors[k + 1], right_envs[k + 2])
        dim = theta.size
        e_loc, vec = lanczos_lowest(
            matvec,
            theta.reshape(-1),
            tol=1e-12,
            max_restarts=4,
            krylov_dim=min(krylov_dim, dim),
            strict=False,
        )
        theta = vec.reshape(shape)
        dl, d1, d2, dr = shape
        u, s, vh = truncated_svd(theta.reshape(dl * d1, d2 * dr), cap, discarded_weight)
        s = s / np.linalg.norm(s)
        return e_loc, u, s, vh, (dl, d1, d2, dr)

    for sweep in range(1, max_sweeps + 1):
        cap = min(warmup_bond, max_bond) if sweep == 1 else max_bond
        e_last = energy
        # left-to-right
        for k in range(n - 1):
            e_loc, u, s, vh, (dl, d1, d2, dr) = optimize_bond(k, cap)
            chi = len(s)
            psi.tensors[k] = u.reshape(dl, d1, chi)
            psi.tensors[k + 1] = (s[:, None] * vh).reshape(chi, d2, dr)
            psi.center = k + 1
            left_envs[k + 1] = _grow_left(left_envs[k], psi.tensors[k], mpo.tensors[k])
        # right-to-left
        for k in range(n - 2, -1, -1):
            e_loc, u, s, vh, (dl, d1, d2, dr) = optimize_bond(k, cap)
            chi = len(s)
            psi.tensors[k + 1] = vh.reshape(chi, d2, dr)
            psi.tensors[k] = (u * s[None, :]).reshape(dl, d1, chi)
            psi.center = k
            right_envs[k + 1] = _grow_right(right_envs[k + 2], psi.tensors[k + 1], mpo.tensors[k + 1])
        energy = float(e_loc)
        sweeps_done = sweep
        history.append(energy)
        if np.isfinite(e_last) and energy > e_last + energy_rise_tol * (1.0 + abs(e_last)):
            raise EnergyIncreaseError(
                f"energy rose from {e_last} to {energy} across sweep {sweep}"
            )
        psi.normalize()
        eps = epsilon_measure(psi, mpo)
        if eps < epsilon_goal:
            converged = True
            break
        at_cap = max(psi.bond_dims) >= max_bond
        if at_cap and np.isfinite(e_last) and abs(energy - e_last) <= 1e-13 * (1.0 + abs(energy)):
            converged = True   # bond cap reached and energy stalled
            break

    report = DmrgReport(
        energy=energy,
        epsilon=eps,
        sweeps=sweeps_done,
        max_bond=max(psi.bond_dims),
        converged=converged,
        energy_history=tuple(history),
    )
    return psi, report
