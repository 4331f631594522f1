"""Matrix product states and operators over grouped qubit sites.

Site convention: qubits are grouped in pairs (the two spinor components of
one flavor), so one tensor-network site carries physical dimension 4 and
"adding a lattice site" appends one tensor.  MPS tensors have index order
(left bond, physical, right bond); MPO tensors (left bond, bra physical,
ket physical, right bond).  Site 0 is the most significant block of the
dense basis index, matching the qubit-0-leftmost convention of the Pauli
layer, so dense vectors and networks can be compared directly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pauli import PauliSumOperator

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

QUBITS_PER_SITE = 2

_DENSE_GUARD = 1 << 22


def grouped_dims(n_qubits: int, group: int = QUBITS_PER_SITE) -> tuple[int, ...]:
    if n_qubits % group != 0:
        raise ValueError(f"{n_qubits} qubits cannot be grouped in blocks of {group}")
    return tuple([2**group] * (n_qubits // group))


def _site_operator(letters: str) -> np.ndarray:
    mat = _PAULI_MATS[letters[0]]
    for ch in letters[1:]:
        mat = np.kron(mat, _PAULI_MATS[ch])
    return mat


def truncated_svd(
    matrix: np.ndarray,
    max_bond: int | None,
    discarded_weight: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD keeping the smallest rank whose discarded tail weight stays below
    `discarded_weight` (relative to the total squared norm), capped at `max_bond`."""
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    total = float(np.sum(s**2))
    if total == 0.0:
        return u[:, :1], s[:1], vh[:1]
    keep = len(s)
    tail = 0.0
    for i in range(len(s) - 1, 0, -1):
        tail += float(s[i] ** 2)
        if tail > discarded_weight * total:
            break
        keep = i
    if max_bond is not None:
        keep = min(keep, max_bond)
    keep = max(keep, 1)
    return u[:, :keep], s[:keep], vh[:keep]


class MatrixProductState:
    """Open-boundary MPS with a tracked orthogonality center."""

    def __init__(self, tensors: list[np.ndarray], center: int = 0):
        if not tensors:
            raise ValueError("an MPS needs at least one tensor")
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.center = center
        self._validate()

    def _validate(self) -> None:
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("edge bond dimensions must be 1")
        for k in range(len(self.tensors) - 1):
            if self.tensors[k].shape[2] != self.tensors[k + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {k} and {k + 1}")
        if not 0 <= self.center < len(self.tensors):
            raise ValueError("orthogonality center out of range")

    # -- structure ----------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Bond dimensions including the trivial edges: length n_sites + 1."""
        return tuple([1] + [t.shape[2] for t in self.tensors])

    def copy(self) -> "MatrixProductState":
        return MatrixProductState([t.copy() for t in self.tensors], self.center)

    # -- construction ---------------------------------------------------------

    @classmethod
    def random(cls, phys_dims: tuple[int, ...], bond_dim: int, seed: int) -> "MatrixProductState":
        rng = np.random.default_rng(seed)
        n = len(phys_dims)
        tensors = []
        left = 1
        for k, d in enumerate(phys_dims):
            right = 1 if k == n - 1 else min(bond_dim, left * d)
            t = rng.standard_normal((left, d, right)) + 1j * rng.standard_normal((left, d, right))
            tensors.append(t)
            left = right
        mps = cls(tensors, center=0)
        mps.canonicalize(0)
        mps.normalize()
        return mps

    @classmethod
    def product_state(cls, vectors: list[np.ndarray]) -> "MatrixProductState":
        tensors = [np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in vectors]
        return cls(tensors, center=0)

    @classmethod
    def from_dense(
        cls,
        vector: np.ndarray,
        phys_dims: tuple[int, ...],
        max_bond: int | None = None,
        cutoff: float = 0.0,
    ) -> "MatrixProductState":
        """Exact (up to `cutoff`) MPS factorization of a dense state vector."""
        total = int(np.prod(phys_dims))
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        if vec.shape[0] != total:
            raise ValueError(f"vector length {vec.shape[0]} does not match dims {phys_dims}")
        tensors = []
        rest = vec.reshape(1, total)
        left = 1
        for k, d in enumerate(phys_dims[:-1]):
            m = rest.reshape(left * d, -1)
            u, s, vh = np.linalg.svd(m, full_matrices=False)
            keep = int(np.sum(s > max(cutoff, 5e-16) * s[0])) if s[0] > 0 else 1
            if max_bond is not None:
                keep = min(keep, max_bond)
            keep = max(keep, 1)
            tensors.append(u[:, :keep].reshape(left, d, keep))
            rest = (s[:keep, None] * vh[:keep]).reshape(keep, -1)
            left = keep
        tensors.append(rest.reshape(left, phys_dims[-1], 1))
        return cls(tensors, center=len(phys_dims) - 1)

    def to_dense(self) -> np.ndarray:
        total = int(np.prod(self.phys_dims))
        if total > _DENSE_GUARD:
            raise ValueError(f"dense conversion of dimension {total} refused")
        acc = self.tensors[0]
        for t in self.tensors[1:]:
            acc = np.tensordot(acc, t, axes=([2], [0]))
            acc = acc.reshape(1, -1, t.shape[2])
        return acc.reshape(-1)

    # -- gauge ----------------------------------------------------------------

    def _push_right(self, k: int) -> None:
        dl, d, dr = self.tensors[k].shape
        q, r = np.linalg.qr(self.tensors[k].reshape(dl * d, dr))
        self.tensors[k] = q.reshape(dl, d, q.shape[1])
        self.tensors[k + 1] = np.tensordot(r, self.tensors[k + 1], axes=([1], [0]))

    def _push_left(self, k: int) -> None:
        dl, d, dr = self.tensors[k].shape
        q, r = np.linalg.qr(self.tensors[k].reshape(dl, d * dr).conj().T)
        self.tensors[k] = q.conj().T.reshape(q.shape[1], d, dr)
        self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], r.conj().T, axes=([2], [0]))

    def canonicalize(self, center: int = 0) -> None:
        """Left-orthonormalize sites < center and right-orthonormalize > center."""
        for k in range(center):
            self._push_right(k)
        for k in range(self.n_sites - 1, center, -1):
            self._push_left(k)
        self.center = center

    def move_center_to(self, k: int) -> None:
        while self.center < k:
            self._push_right(self.center)
            self.center += 1
        while self.center > k:
            self._push_left(self.center)
            self.center -= 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def normalize(self) -> None:
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero state")
        self.tensors[self.center] = self.tensors[self.center] / nrm

    def schmidt_values(self, bond: int) -> np.ndarray:
        """Singular values across the bond between sites bond-1 and bond."""
        if not 1 <= bond <= self.n_sites - 1:
            raise ValueError("bond index out of range")
        work = self.copy()
        work.move_center_to(bond - 1)
        dl, d, dr = work.tensors[bond - 1].shape
        s = np.linalg.svd(work.tensors[bond - 1].reshape(dl * d, dr), compute_uv=False)
        return s

    # -- persistence ------------------------------------------------------------

    _MAGIC = b"GNMPS001"

    def save(self, path: str | Path) -> None:
        """Binary container: magic, uint32 n_sites and center, per-site uint32
        (left, phys, right) dims, then row-major complex128 payloads
        (little-endian float64 pairs)."""
        with open(path, "wb") as fh:
            fh.write(self._MAGIC)
            fh.write(struct.pack("<II", self.n_sites, self.center))
            for t in self.tensors:
                fh.write(struct.pack("<III", *t.shape))
            for t in self.tensors:
                fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "MatrixProductState":
        with open(path, "rb") as fh:
            magic = fh.read(len(cls._MAGIC))
            if magic != cls._MAGIC:
                raise ValueError(f"{path}: not an MPS checkpoint")
            n_sites, center = struct.unpack("<II", fh.read(8))
            shapes = [struct.unpack("<III", fh.read(12)) for _ in range(n_sites)]
            tensors = []
            for shape in shapes:
                count = shape[0] * shape[1] * shape[2]
                buf = fh.read(16 * count)
                tensors.append(np.frombuffer(buf, dtype="<c16").reshape(shape).astype(complex))
        return cls(tensors, center=center)


def mps_overlap(a: MatrixProductState, b: MatrixProductState) -> complex:
    """Exact contraction <a|b>."""
    if a.phys_dims != b.phys_dims:
        raise ValueError(f"size mismatch: {a.phys_dims} vs {b.phys_dims}")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        tmp = np.tensordot(env, tb, axes=([1], [0]))          # (abond, p, rb)
        env = np.tensordot(ta.conj(), tmp, axes=([0, 1], [0, 1]))  # (ra, rb)
    return complex(env[0, 0])


def append_site(state: MatrixProductState, pad: np.ndarray) -> MatrixProductState:
    """Tensor-product `pad` onto the right edge with bond dimension 1.

    The pad may span several grouped sites (length a power of the last
    physical dimension); it is factorized exactly in that case.
    """
    pad = np.asarray(pad, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(pad) - 1.0) > 1e-10:
        raise ValueError("pad state must be normalized")
    d = state.phys_dims[-1]
    n_new = 0
    length = len(pad)
    while length > 1:
        if length % d != 0:
            raise ValueError(f"pad length {len(pad)} is not a power of the site dimension {d}")
        length //= d
        n_new += 1
    if n_new == 0:
        raise ValueError("pad must cover at least one site")
    pad_mps = MatrixProductState.from_dense(pad, tuple([d] * n_new))
    return MatrixProductState([t.copy() for t in state.tensors] + pad_mps.tensors, state.center)


def pauli_sum_expectation(state: MatrixProductState, op: PauliSumOperator,
                          group: int = QUBITS_PER_SITE) -> complex:
    """<state|op|state> by per-term transfer contraction."""
    if op.n_qubits != group * state.n_sites:
        raise ValueError("operator size does not match the state")
    total = 0j
    for coeff, string in op.terms:
        env = np.ones((1, 1), dtype=complex)
        for k, t in enumerate(state.tensors):
            site_op = _site_operator(string[group * k: group * (k + 1)])
            tmp = np.tensordot(env, t, axes=([1], [0]))            # (bl, p_in, r)
            tmp = np.tensordot(site_op, tmp, axes=([1], [1]))      # (p_out, bl, r)
            env = np.tensordot(t.conj(), tmp, axes=([0, 1], [1, 0]))  # (rbra, rket)
        total += coeff * env[0, 0]
    return complex(total)


# ---------------------------------------------------------------------------
# Matrix product operators
# ---------------------------------------------------------------------------


@dataclass
class MatrixProductOperator:
    """MPO tensors with index order (left, bra physical, ket physical, right)."""

    tensors: list[np.ndarray]

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return tuple([1] + [t.shape[3] for t in self.tensors])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)

    def to_matrix(self) -> np.ndarray:
        total = int(np.prod(self.phys_dims))
        if total > 1 << 12:
            raise ValueError("dense MPO conversion refused at this size")
        acc = self.tensors[0]
        for t in self.tensors[1:]:
            acc = np.tensordot(acc, t, axes=([3], [0]))
            bl, po, pi, qo, qi, br = acc.shape
            acc = acc.transpose(0, 1, 3, 2, 4, 5).reshape(bl, po * qo, pi * qi, br)
        return acc[0, :, :, 0]


class MpoRangeError(ValueError):
    """A Pauli term spans more sites than the configured locality range."""


def compile_mpo(
    op: PauliSumOperator,
    group: int = QUBITS_PER_SITE,
    max_span: int = 8,
) -> MatrixProductOperator:
    """Exact MPO of a geometrically local Pauli sum.

    Built as a term automaton (idle channel, one intermediate channel per
    term crossing each bond, done channel), then compressed by merging
    exactly parallel rows and columns.  The bond dimension is of the order
    of the number of distinct coupling channels crossing a bond.
    """
    dims = grouped_dims(op.n_qubits, group)
    n_sites = len(dims)
    d = dims[0]

    supports = []
    site_ops = []
    for coeff, string in op.terms:
        active = [k for k in range(n_sites)
                  if any(ch != "I" for ch in string[group * k: group * (k + 1)])]
        lo, hi = (active[0], active[-1]) if active else (0, 0)
        if hi - lo + 1 > max_span:
            raise MpoRangeError(
                f"term {string} spans {hi - lo + 1} sites, beyond the configured range {max_span}"
            )
        supports.append((lo, hi))
        ops = {k: _site_operator(string[group * k: group * (k + 1)]) for k in range(lo, hi + 1)}
        ops[lo] = coeff * ops[lo]
        site_ops.append(ops)

    # channel layout per bond: 0 = idle, 1 = done, then one per crossing term
    crossing: list[dict[int, int]] = []
    for b in range(n_sites + 1):
        layout = {}
        for t, (lo, hi) in enumerate(supports):
            if lo < b <= hi:
                layout[t] = 2 + len(layout)
        crossing.append(layout)

    tensors = []
    for k in range(n_sites):
        dl = 2 + len(crossing[k])
        dr = 2 + len(crossing[k + 1])
        w = np.zeros((dl, d, d, dr), dtype=complex)
        w[0, :, :, 0] = np.eye(d)
        w[1, :, :, 1] = np.eye(d)
        for t, (lo, hi) in enumerate(supports):
            if not lo <= k <= hi:
                continue
            row = 0 if k == lo else crossing[k][t]
            col = 1 if k == hi else crossing[k + 1][t]
            w[row, :, :, col] += site_ops[t][k]
        tensors.append(w)

    tensors[0] = tensors[0][0:1]
    tensors[-1] = tensors[-1][:, :, :, 1:2]
    _deparallelize(tensors)
    return MatrixProductOperator(tensors)


def _merge_columns(m: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Return (kept, transfer) with m = kept @ transfer and no parallel columns."""
    rows, cols = m.shape
    kept: list[np.ndarray] = []
    transfer = np.zeros((cols, cols), dtype=complex)
    scale = np.max(np.abs(m)) or 1.0
    for j in range(cols):
        col = m[:, j]
        nrm = np.linalg.norm(col)
        if nrm <= tol * scale:
            continue
        merged = False
        for i, ref in enumerate(kept):
            lam = np.vdot(ref, col) / np.vdot(ref, ref)
            if np.linalg.norm(col - lam * ref) <= tol * nrm:
                transfer[i, j] = lam
                merged = True
                break
        if not merged:
            kept.append(col)
            transfer[len(kept) - 1, j] = 1.0
    if not kept:
        kept.append(np.zeros(rows, dtype=complex))
    k = len(kept)
    return np.stack(kept, axis=1), transfer[:k]


def _deparallelize(tensors: list[np.ndarray]) -> None:
    # left-to-right: merge parallel columns, absorb transfer into the right
    for k in range(len(tensors) - 1):
        dl, d, d2, dr = tensors[k].shape
        kept, transfer = _merge_columns(tensors[k].reshape(dl * d * d2, dr))
        tensors[k] = kept.reshape(dl, d, d2, kept.shape[1])
        tensors[k + 1] = np.tensordot(transfer, tensors[k + 1], axes=([1], [0]))
    # right-to-left: merge parallel rows symmetrically
    for k in range(len(tensors) - 1, 0, -1):
        dl, d, d2, dr = tensors[k].shape
        kept, transfer = _merge_columns(tensors[k].reshape(dl, d * d2 * dr).T)
        tensors[k] = kept.T.reshape(kept.shape[1], d, d2, dr)
        tensors[k - 1] = np.tensordot(tensors[k - 1], transfer.T, axes=([3], [0]))


def expectation_value(state: MatrixProductState, mpo: MatrixProductOperator) -> complex:
    """<state|mpo|state> by a single transfer sweep."""
    if state.phys_dims != mpo.phys_dims:
        raise ValueError("state and operator dimensions differ")
    env = np.ones((1, 1, 1), dtype=complex)   # (bra, mpo, ket)
    for t, w in zip(state.tensors, mpo.tensors):
        tmp = np.tensordot(env, t, axes=([2], [0]))            # (bra, w, p_in, rket)
        tmp = np.tensordot(tmp, w, axes=([1, 2], [0, 2]))      # (bra, rket, p_out, w2)
        env = np.tensordot(t.conj(), tmp, axes=([0, 1], [0, 2]))  # (rbra, rket, w2)
        env = env.transpose(0, 2, 1)
    return complex(env[0, 0, 0])


def apply_mpo(
    mpo: MatrixProductOperator,
    state: MatrixProductState,
    discarded_weight: float = 1e-14,
    max_bond: int | None = None,
) -> MatrixProductState:
    """mpo |state> as an MPS, compressed on the fly (zip-up sweep).

    The result is left-orthonormal except at the last site, so its norm is
    the Frobenius norm of the final tensor.
    """
    if state.phys_dims != mpo.phys_dims:
        raise ValueError("state and operator dimensions differ")
    n = state.n_sites
    tensors: list[np.ndarray] = []
    rem = np.ones((1, 1, 1), dtype=complex)   # (new bond, mpo bond, mps bond)
    for k in range(n):
        t, w = state.tensors[k], mpo.tensors[k]
        x = np.tensordot(rem, t, axes=([2], [0]))          # (nb, wb, p_in, r)
        x = np.tensordot(x, w, axes=([1, 2], [0, 2]))      # (nb, r, p_out, w2)
        x = x.transpose(0, 2, 3, 1)                        # (nb, p_out, w2, r)
        nb, d, w2, r = x.shape
        if k == n - 1:
            tensors.append(x.reshape(nb, d, w2 * r))
            break
        u, s, vh = truncated_svd(x.reshape(nb * d, w2 * r), max_bond, discarded_weight)
        tensors.append(u.reshape(nb, d, u.shape[1]))
        rem = (s[:, None] * vh).reshape(u.shape[1], w2, r)
    return MatrixProductState(tensors, center=n - 1)
