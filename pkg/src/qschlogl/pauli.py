"""Pauli-string expansion of Hermitian operators, term ordering and truncation."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DomainError

LABELS = "IXYZ"
DROP_TOLERANCE = 1e-12


def pauli_action(string: str) -> tuple[int, np.ndarray]:
    """Return ``(xmask, phase)`` with ``P|j> = phase[j] |j ^ xmask>``.

    The last character of ``string`` acts on qubit 0.
    """
    n = len(string)
    idx = np.arange(2**n)
    xmask = 0
    phase = np.ones(2**n, dtype=complex)
    for q, label in enumerate(reversed(string)):
        bit = (idx >> q) & 1
        if label == "X":
            xmask |= 1 << q
        elif label == "Y":
            xmask |= 1 << q
            phase *= 1j * (1 - 2 * bit)
        elif label == "Z":
            phase *= 1 - 2 * bit
        elif label != "I":
            raise DomainError(f"invalid Pauli label {label!r} in {string!r}")
    return xmask, phase


def pauli_matrix(string: str) -> np.ndarray:
    xmask, phase = pauli_action(string)
    dim = phase.size
    m = np.zeros((dim, dim), dtype=complex)
    j = np.arange(dim)
    m[j ^ xmask, j] = phase
    return m


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: str

    def __post_init__(self):
        if not self.string or any(c not in LABELS for c in self.string):
            raise DomainError(f"invalid Pauli string {self.string!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))


class Ordering(enum.Enum):
    DEFAULT = "default"
    POSITIVE_FIRST = "positive-first"
    MAGNITUDE = "magnitude"
    OPTIMIZED = "optimized"


@dataclass(frozen=True, eq=False)
class PauliSum:
    n_qubits: int
    terms: tuple[PauliTerm, ...]
    ordering: Ordering = Ordering.DEFAULT

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if any(len(t.string) != self.n_qubits for t in terms):
            raise DomainError(f"every Pauli string must have length {self.n_qubits}")
        strings = [t.string for t in terms]
        if len(set(strings)) != len(strings):
            raise DomainError("duplicate Pauli strings in sum")

    @classmethod
    def from_dict(cls, coeffs: dict[str, float], ordering: Ordering = Ordering.DEFAULT) -> "PauliSum":
        if not coeffs:
            raise DomainError("empty Pauli sum needs an explicit qubit count")
        n = len(next(iter(coeffs)))
        return cls(n, tuple(PauliTerm(c, s) for s, c in coeffs.items()), ordering)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=float)

    @property
    def strings(self) -> list[str]:
        return [t.string for t in self.terms]

    def as_dict(self) -> dict[str, float]:
        return {t.string: t.coefficient for t in self.terms}

    def one_norm(self) -> float:
        return float(np.abs(self.coefficients).sum())

    @cached_property
    def _actions(self) -> tuple[np.ndarray, np.ndarray]:
        dim = 2**self.n_qubits
        if not self.terms:
            return np.zeros((0, dim), dtype=np.int64), np.zeros((0, dim), dtype=complex)
        masks, phases = zip(*(pauli_action(t.string) for t in self.terms))
        j = np.arange(dim)
        return np.array([j ^ m for m in masks]), np.array(phases)

    def term_expectations(self, psi: np.ndarray) -> np.ndarray:
        """``<psi|P_j|psi>`` for every term (real for Hermitian strings)."""
        flipped, phases = self._actions
        return np.real(np.sum(np.conj(psi[flipped]) * phases * psi[None, :], axis=1))

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        m = np.zeros((dim, dim), dtype=complex)
        j = np.arange(dim)
        flipped, phases = self._actions
        for c, rows, ph in zip(self.coefficients, flipped, phases):
            m[rows, j] += c * ph
        return m

    def to_text(self) -> str:
        return "".join(f"{t.coefficient:.17g} {t.string}\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str, ordering: Ordering = Ordering.DEFAULT) -> "PauliSum":
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DomainError(f"line {lineno}: expected 'COEFF STRING', got {line!r}")
            terms.append(PauliTerm(float(parts[0]), parts[1]))
        if not terms:
            raise DomainError("no Pauli terms found")
        return cls(len(terms[0].string), tuple(terms), ordering)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PauliSum":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def canonical_strings(n_qubits: int) -> Iterable[str]:
    """Lexicographic over I<X<Y<Z, leftmost (most significant) qubit first."""
    return ("".join(p) for p in itertools.product(LABELS, repeat=n_qubits))


def decompose(hamiltonian, drop_tolerance: float = DROP_TOLERANCE) -> PauliSum:
    """Expand ``H = sum_j c_j P_j`` with ``c_j = tr(P_j H) / 2**n``."""
    m = np.asarray(getattr(hamiltonian, "entries", hamiltonian))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"operator must be square, got shape {m.shape}")
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise DomainError(f"operator dimension {dim} is not a power of two")
    j = np.arange(dim)
    terms = []
    for string in canonical_strings(n):
        xmask, phase = pauli_action(string)
        # tr(P H) = sum_j P[j^x, j] H[j, j^x]
        c = np.sum(phase * m[j, j ^ xmask]) / dim
        if abs(c.real) > drop_tolerance:
            terms.append(PauliTerm(c.real, string))
    return PauliSum(n, tuple(terms), Ordering.DEFAULT)


def constant_state_expectations(p: PauliSum) -> np.ndarray:
    """Per-term expectation against the uniform superposition."""
    dim = 2**p.n_qubits
    return p.term_expectations(np.full(dim, dim**-0.5, dtype=complex))


def sort_terms(p: PauliSum, strategy: Ordering | str, tolerance: float = 1e-12) -> PauliSum:
    """Reorder (or, for OPTIMIZED, filter) the terms of ``p``.

    Ties are broken by canonical string order so results are deterministic.
    """
    strategy = Ordering(strategy)
    rank = {s: i for i, s in enumerate(canonical_strings(p.n_qubits))}
    terms = list(p.terms)
    if strategy is Ordering.DEFAULT:
        terms.sort(key=lambda t: rank[t.string])
    elif strategy is Ordering.POSITIVE_FIRST:
        terms.sort(key=lambda t: (-t.coefficient, rank[t.string]))
    elif strategy is Ordering.MAGNITUDE:
        terms.sort(key=lambda t: (-abs(t.coefficient), rank[t.string]))
    else:
        ev = constant_state_expectations(p)
        terms = [t for t, e in zip(terms, ev) if abs(e) > tolerance]
    return replace(p, terms=tuple(terms), ordering=strategy)


def truncate(p: PauliSum, keep: int) -> PauliSum:
    """Keep the first ``keep`` terms in the current order."""
    if int(keep) != keep or not 1 <= keep <= len(p):
        raise DomainError(f"keep must be in 1..{len(p)}, got {keep!r}")
    return replace(p, terms=p.terms[: int(keep)])
