"""Hermitian surrogates of the (non-Hermitian) generator."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .qsim import StateVector

HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-10
UNITARY_ATOL = 1e-10


class OperatorKind(enum.Enum):
    BLOCK_EMBEDDING = "block-embedding"
    SEMI_POSITIVE_DEFINITE = "semi-positive-definite"
    GENERIC = "generic"


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    entries: np.ndarray
    kind: OperatorKind = OperatorKind.GENERIC

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"operator must be square, got shape {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_ATOL * scale:
            raise DomainError("operator is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.kind is OperatorKind.SEMI_POSITIVE_DEFINITE:
            low = np.linalg.eigvalsh(m)[0] if m.size else 0.0
            if low < -PSD_ATOL * scale:
                raise DomainError(f"operator has negative eigenvalue {low:.3g}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    entries: np.ndarray

    def __post_init__(self):
        u = np.array(self.entries, dtype=complex)
        if np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])) > UNITARY_ATOL:
            raise DomainError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "entries", u)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def block_embed(q, pad: bool = True) -> HermitianOperator:
    """``[[0, Q], [Q^†, 0]]``; its non-negative eigenvalues are the singular values of Q.

    With ``pad`` the result is zero-padded to a power-of-two dimension.
    """
    m = np.asarray(q, dtype=complex)
    d = m.shape[0]
    size = 2 * d
    out = np.zeros((_next_pow2(size) if pad else size,) * 2, dtype=complex)
    out[:d, d:size] = m
    out[d:size, :d] = m.conj().T
    return HermitianOperator(out, OperatorKind.BLOCK_EMBEDDING)


def spd_form(q) -> HermitianOperator:
    """``Q Q^†``: eigenvalues are the squared singular values of Q.

    When the columns of Q sum to exactly zero (any generator built here), the
    uniform vector is an exact null vector of ``Q Q^†``. The product is then
    snapped to a fixed-point grid about 2**-48 below its largest entry and the
    diagonal is set to minus the off-diagonal row sums, so that property
    survives rounding instead of leaving an ``eps * |Q|**2`` residual.
    """
    m = np.asarray(getattr(q, "entries", q))
    spd = m @ m.conj().T
    spd = 0.5 * (spd + spd.conj().T)
    if np.isrealobj(m) and spd.any() and not np.any(m.sum(axis=0)):
        quantum = 2.0 ** (math.frexp(np.abs(spd).max())[1] - 49)
        spd = np.round(spd / quantum) * quantum
        np.fill_diagonal(spd, 0.0)
        np.fill_diagonal(spd, -spd.sum(axis=1))
    return HermitianOperator(spd.astype(complex), OperatorKind.SEMI_POSITIVE_DEFINITE)


def constant_vector(n_qubits: int, normalization: str = "l2") -> np.ndarray:
    """Uniform vector of length ``2**n_qubits``.

    ``"l2"`` gives unit Euclidean norm; ``"literal"`` gives entries ``1/2**n``
    (unit sum), which is not a valid quantum state for ``n >= 1``.
    """
    if n_qubits < 1:
        raise DomainError("n_qubits must be >= 1")
    dim = 2**n_qubits
    if normalization == "l2":
        return np.full(dim, dim**-0.5)
    if normalization == "literal":
        return np.full(dim, 1.0 / dim)
    raise DomainError(f"unknown normalization {normalization!r}")


def constant_state(n_qubits: int) -> StateVector:
    """Uniform superposition; the zeromode of every ``spd_form`` of a generator."""
    return StateVector(constant_vector(n_qubits))


def unitary_of(hamiltonian) -> UnitaryOperator:
    """``exp(-i H)`` through the Hermitian eigendecomposition of ``H``."""
    m = np.asarray(getattr(hamiltonian, "entries", hamiltonian), dtype=complex)
    w, v = np.linalg.eigh(m)
    return UnitaryOperator((v * np.exp(-1j * w)) @ v.conj().T)


def write_complex_csv(path: str | Path, matrix, header: str | None = None) -> None:
    """Row-major; each entry written as two columns ``re,im`` (17 significant digits)."""
    m = np.asarray(matrix, dtype=complex)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        for row in m:
            cells = []
            for v in row:
                cells += [f"{v.real:.17g}", f"{v.imag:.17g}"]
            w.writerow(cells)


def read_complex_csv(path: str | Path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    data = np.array([[float(v) for v in r] for r in rows])
    return data[:, 0::2] + 1j * data[:, 1::2]
