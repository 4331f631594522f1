"""Weighted sums of Pauli strings: the common operator currency.

A Pauli string is a fixed-length word over {I, X, Y, Z}, one letter per
qubit, with qubit 0 the leftmost letter (most significant bit of the
computational-basis index).  Operators are stored canonically: terms
sorted lexicographically by string, duplicate strings merged, and
coefficients with |c| <= COEFF_DROP_TOL discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Literal

import numpy as np

PAULI_CHARS = "IXYZ"

# Coefficients at or below this magnitude are dropped during canonicalization.
COEFF_DROP_TOL = 1e-14

# Single-qubit products: (a, b) -> (phase, c) with a*b = phase*c.
_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


def _mul_strings(a: str, b: str) -> tuple[complex, str]:
    phase: complex = 1
    out = []
    for ca, cb in zip(a, b):
        p, c = _MUL[(ca, cb)]
        phase *= p
        out.append(c)
    return phase, "".join(out)


def _canonical(n_qubits: int, raw: Iterable[tuple[complex, str]]) -> tuple[tuple[complex, str], ...]:
    acc: dict[str, complex] = {}
    for coeff, string in raw:
        if len(string) != n_qubits:
            raise ValueError(f"string {string!r} has length {len(string)}, expected {n_qubits}")
        if any(ch not in PAULI_CHARS for ch in string):
            raise ValueError(f"invalid Pauli letter in {string!r}")
        acc[string] = acc.get(string, 0j) + complex(coeff)
    return tuple(
        (acc[s], s) for s in sorted(acc) if abs(acc[s]) > COEFF_DROP_TOL
    )


@dataclass(frozen=True)
class PauliSumOperator:
    """Canonicalized weighted sum of Pauli strings on `n_qubits` qubits.

    Coefficients are complex internally; Hermitian operators carry real
    coefficients (see `is_hermitian`).  Instances are immutable values.
    """

    n_qubits: int
    terms: tuple[tuple[complex, str], ...]

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[complex, str]]) -> "PauliSumOperator":
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        return cls(n_qubits, _canonical(n_qubits, terms))

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSumOperator":
        return cls.from_terms(n_qubits, [])

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSumOperator":
        return cls.from_terms(n_qubits, [(coeff, "I" * n_qubits)])

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "PauliSumOperator") -> "PauliSumOperator":
        self._check_compatible(other)
        return PauliSumOperator.from_terms(self.n_qubits, (*self.terms, *other.terms))

    def __sub__(self, other: "PauliSumOperator") -> "PauliSumOperator":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "PauliSumOperator":
        return PauliSumOperator.from_terms(
            self.n_qubits, ((scalar * c, s) for c, s in self.terms)
        )

    def __mul__(self, other: "PauliSumOperator") -> "PauliSumOperator":
        """Operator product, expanded term by term through the Pauli algebra."""
        if isinstance(other, (int, float, complex)):
            return self.__rmul__(other)
        self._check_compatible(other)
        raw = []
        for ca, sa in self.terms:
            for cb, sb in other.terms:
                phase, s = _mul_strings(sa, sb)
                raw.append((ca * cb * phase, s))
        return PauliSumOperator.from_terms(self.n_qubits, raw)

    def __neg__(self) -> "PauliSumOperator":
        return (-1.0) * self

    def dagger(self) -> "PauliSumOperator":
        return PauliSumOperator.from_terms(
            self.n_qubits, ((np.conj(c), s) for c, s in self.terms)
        )

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c, _ in self.terms)

    def hermitized(self, tol: float = 1e-10) -> "PauliSumOperator":
        """Drop imaginary coefficient parts; raise if any exceed `tol`."""
        bad = max((abs(c.imag) for c, _ in self.terms), default=0.0)
        if bad > tol:
            raise ValueError(f"operator is not Hermitian: max imaginary coefficient {bad:.3e}")
        return PauliSumOperator.from_terms(self.n_qubits, ((c.real, s) for c, s in self.terms))

    def _check_compatible(self, other: "PauliSumOperator") -> None:
        if self.n_qubits != other.n_qubits:
            raise ValueError(
                f"qubit-count mismatch: {self.n_qubits} vs {other.n_qubits}"
            )

    # -- structure ----------------------------------------------------------

    def __iter__(self) -> Iterator[tuple[complex, str]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def max_weight(self) -> int:
        """Largest number of non-identity letters in any term."""
        return max((sum(ch != "I" for ch in s) for _, s in self.terms), default=0)

    def identity_coefficient(self) -> complex:
        ident = "I" * self.n_qubits
        for c, s in self.terms:
            if s == ident:
                return c
        return 0j

    def coefficient_one_norm(self, include_identity: bool = False) -> float:
        """Sum of |coefficients|; bounds the spectral radius of H - c_I."""
        ident = "I" * self.n_qubits
        return float(
            sum(abs(c) for c, s in self.terms if include_identity or s != ident)
        )

    def support(self, term_index: int) -> tuple[int, int]:
        """(first, last) non-identity qubit of a term; identity maps to (0, 0)."""
        s = self.terms[term_index][1]
        qubits = [q for q, ch in enumerate(s) if ch != "I"]
        if not qubits:
            return (0, 0)
        return (qubits[0], qubits[-1])

    def permute_qubits(self, mapping: list[int]) -> "PauliSumOperator":
        """Relabel qubits: letter at qubit q moves to qubit mapping[q]."""
        if sorted(mapping) != list(range(self.n_qubits)):
            raise ValueError("mapping must be a permutation of all qubit indices")
        raw = []
        for c, s in self.terms:
            out = ["I"] * self.n_qubits
            for q, ch in enumerate(s):
                out[mapping[q]] = ch
            raw.append((c, "".join(out)))
        return PauliSumOperator.from_terms(self.n_qubits, raw)

    # -- action on state vectors --------------------------------------------

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Matrix-free action on a dense state vector of length 2**n_qubits."""
        dim = 1 << self.n_qubits
        if state.shape != (dim,):
            raise ValueError(f"state has shape {state.shape}, expected ({dim},)")
        out = np.zeros(dim, dtype=complex)
        for coeff, string in self.terms:
            perm, phase = compile_string_action(self.n_qubits, string)
            out[perm] += (coeff * phase) * state
        return out

    def expectation(self, state: np.ndarray) -> complex:
        return complex(np.vdot(state, self.apply(state)))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; one non-zero per term per column, O(terms * 2**n)."""
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim)
        for coeff, string in self.terms:
            perm, phase = compile_string_action(self.n_qubits, string)
            mat[perm, cols] += coeff * phase
        return mat

    # -- plain-text exchange format ------------------------------------------

    def to_text(self) -> str:
        """One term per line, "coefficient<TAB>string"; Hermitian input required."""
        herm = self.hermitized()
        lines = [f"{c.real!r}\t{s}" for c, s in herm.terms]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSumOperator":
        raw = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                coeff_str, string = line.split("\t")
            except ValueError as exc:
                raise ValueError(f"line {lineno}: expected 'coefficient<TAB>string'") from exc
            raw.append((float(coeff_str), string.strip()))
        if not raw and n_qubits is None:
            raise ValueError("empty operator text and no qubit count supplied")
        n = n_qubits if n_qubits is not None else len(raw[0][1])
        return cls.from_terms(n, raw)


# Per-process cache of compiled string actions, keyed by (n_qubits, string).
_ACTION_CACHE: dict[tuple[int, str], tuple[np.ndarray, np.ndarray]] = {}
_ACTION_CACHE_MAX = 4096


def compile_string_action(n_qubits: int, string: str) -> tuple[np.ndarray, np.ndarray]:
    """Compile a Pauli string to (perm, phase): P|i> = phase[i] |perm[i]>."""
    key = (n_qubits, string)
    hit = _ACTION_CACHE.get(key)
    if hit is not None:
        return hit
    dim = 1 << n_qubits
    idx = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for q, ch in enumerate(string):
        if ch == "I":
            continue
        bit = (idx >> (n_qubits - 1 - q)) & 1
        if ch == "X":
            flip |= 1 << (n_qubits - 1 - q)
        elif ch == "Y":
            flip |= 1 << (n_qubits - 1 - q)
            phase = phase * (1j * (1 - 2 * bit))
        elif ch == "Z":
            phase = phase * (1 - 2 * bit)
    perm = idx ^ flip
    if len(_ACTION_CACHE) >= _ACTION_CACHE_MAX:
        _ACTION_CACHE.clear()
    _ACTION_CACHE[key] = (perm, phase)
    return perm, phase


def jordan_wigner(
    mode_index: int,
    kind: Literal["create", "annihilate"],
    n_modes: int,
) -> PauliSumOperator:
    """Jordan-Wigner image of a single fermionic ladder operator.

    Z letters on all modes below `mode_index`, (X -+ iY)/2 on the mode
    itself: `create` takes (X - iY)/2, `annihilate` takes (X + iY)/2.
    The result has complex coefficients; Hermitian combinations are formed
    by composing these images through the Pauli algebra.
    """
    if not 0 <= mode_index < n_modes:
        raise ValueError(f"mode_index {mode_index} out of range for {n_modes} modes")
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    z_head = "Z" * mode_index
    tail = "I" * (n_modes - mode_index - 1)
    sign = -1j if kind == "create" else 1j
    return PauliSumOperator.from_terms(
        n_modes,
        [
            (0.5, z_head + "X" + tail),
            (0.5 * sign, z_head + "Y" + tail),
        ],
    )
