"""Exact dense reference solutions and comparison metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import AmbiguityError, DomainError, SolverError

MAX_DIM = 4096
ZERO_TOL = 1e-8
RESIDUAL_RTOL = 1e-9
NEGATIVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Full spectrum sorted by ``|λ|`` ascending (ties: real part ascending).

    ``right_vectors[:, i]`` and ``left_vectors[:, i]`` belong to ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    singular_values: np.ndarray
    hermitian: bool

    @property
    def lambda0(self) -> complex:
        return self.eigenvalues[0]

    @property
    def lambda1(self) -> complex:
        return self.eigenvalues[1]


@dataclass(frozen=True)
class ComparisonMetrics:
    rmsd: float
    r_squared: float
    abs_errors: tuple[float, ...]
    pct_errors: tuple[float, ...]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = vectors.copy()
    for i in range(out.shape[1]):
        col = out[:, i]
        k = np.argmax(np.abs(col))
        if col[k] != 0:
            out[:, i] = col * (np.abs(col[k]) / col[k])
    return out


def _order(eigenvalues: np.ndarray) -> np.ndarray:
    return np.lexsort((eigenvalues.real, np.abs(eigenvalues)))


def diagonalize(matrix) -> SpectralResult:
    m = np.asarray(getattr(matrix, "entries", matrix))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"matrix must be square, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise DomainError(f"dimension {m.shape[0]} exceeds dense limit {MAX_DIM}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    hermitian = bool(np.allclose(m, m.conj().T, rtol=0, atol=1e-12 * scale))
    try:
        if hermitian:
            w, right = scipy.linalg.eigh(m)
            left = right
        else:
            w, left, right = scipy.linalg.eig(m, left=True, right=True)
        sv = scipy.linalg.svdvals(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"dense eigensolver failed: {exc}") from exc

    order = _order(np.asarray(w, dtype=complex))
    w = w[order]
    right = _fix_signs(right[:, order])
    left = right if hermitian else _fix_signs(left[:, order])
    residual = np.linalg.norm(m @ right - right * w, axis=0).max(initial=0.0)
    if not np.isfinite(residual) or residual > RESIDUAL_RTOL * scale * max(1, m.shape[0]):
        raise SolverError(f"eigen-residual {residual:.3g} too large", residual=float(residual))
    return SpectralResult(
        eigenvalues=np.asarray(w, dtype=float if hermitian else complex),
        right_vectors=right,
        left_vectors=left,
        singular_values=np.sort(sv),
        hermitian=hermitian,
    )


def zeromode(q, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Stationary distribution: the zero-eigenvalue right eigenvector, summing to 1."""
    spec = diagonalize(q)
    nulls = np.flatnonzero(np.abs(spec.eigenvalues) <= zero_tol)
    if nulls.size == 0:
        raise SolverError(f"no eigenvalue within {zero_tol:g} of zero; smallest is {spec.eigenvalues[0]:.3g}")
    if nulls.size > 1:
        raise AmbiguityError(f"zero eigenspace has dimension {nulls.size} (tolerance {zero_tol:g})")
    v = np.real(spec.right_vectors[:, nulls[0]])
    v = v / v.sum()
    if v.min() < -NEGATIVE_TOL:
        raise SolverError(f"zeromode has negative entry {v.min():.3g}")
    v = np.clip(v, 0.0, None)
    return v / v.sum()


def propagate(q, p0: Sequence[float], t: float, renormalize: bool = True) -> np.ndarray:
    """``P(t) = sum_i c_i v_i exp(λ_i t)`` from the eigen-expansion of Q."""
    if t < 0:
        raise DomainError("time must be non-negative")
    p0 = np.asarray(p0, dtype=float)
    if abs(p0.sum() - 1) > 1e-9:
        raise DomainError("initial distribution must sum to 1")
    spec = diagonalize(q)
    r = spec.right_vectors
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > 1e12:
        raise SolverError(f"generator is numerically defective (eigenvector condition {cond:.3g})")
    c = np.linalg.solve(r, p0.astype(complex))
    p = np.real(r @ (c * np.exp(spec.eigenvalues * t)))
    if renormalize:
        p = p / p.sum()
    return p


def rmsd(reference: Sequence[float], estimate: Sequence[float]) -> float:
    ref, est = _pair(reference, estimate)
    return float(np.sqrt(np.mean((ref - est) ** 2)))


def r_squared(reference: Sequence[float], estimate: Sequence[float]) -> float:
    """Coefficient of determination with the reference mean in the denominator."""
    ref, est = _pair(reference, estimate)
    ss_tot = np.sum((ref - ref.mean()) ** 2)
    if ss_tot == 0:
        raise DomainError("R² undefined: reference values have zero variance")
    return float(1 - np.sum((ref - est) ** 2) / ss_tot)


def _pair(reference, estimate) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(reference, dtype=float).reshape(-1)
    est = np.asarray(estimate, dtype=float).reshape(-1)
    if ref.size == 0 or ref.size != est.size:
        raise DomainError(f"need equal non-empty lengths, got {ref.size} and {est.size}")
    return ref, est


def compare(reference: Sequence[float], estimate: Sequence[float]) -> ComparisonMetrics:
    ref, est = _pair(reference, estimate)
    err = np.abs(ref - est)
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = np.where(err == 0, 0.0, 100 * err / np.abs(ref))
    return ComparisonMetrics(
        rmsd=rmsd(ref, est),
        r_squared=r_squared(ref, est),
        abs_errors=tuple(err.tolist()),
        pct_errors=tuple(pct.tolist()),
    )


def transition_timescale(lambda1: float) -> float:
    """Aggregate relaxation time ``1/|λ1|`` between the metastable states."""
    if lambda1 == 0:
        raise DomainError("λ1 = 0 has no finite timescale")
    return 1.0 / abs(lambda1)


def nonhermitian_lambda1(q) -> float:
    """``|λ1|`` of the generator itself."""
    return float(abs(diagonalize(q).eigenvalues[1]))


def hermitian_lambda1(q) -> float:
    """Square root of the second-smallest eigenvalue of ``Q Q^†``.

    Evaluated as the second-smallest singular value of Q, which is the same
    number without squaring the condition of the problem.
    """
    m = np.asarray(getattr(q, "entries", q))
    return float(np.sort(scipy.linalg.svdvals(m))[1])


def local_maxima(p: Sequence[float], floor: float = 1e-10) -> list[int]:
    """Indices of strict local maxima (boundaries included) above ``floor * max(p)``."""
    p = np.asarray(p, dtype=float)
    cut = floor * p.max()
    peaks = []
    for i in range(p.size):
        left = i == 0 or p[i] > p[i - 1]
        right = i == p.size - 1 or p[i] > p[i + 1]
        if left and right and p[i] > cut:
            peaks.append(i)
    return peaks


def write_spectrum_csv(path: str | Path, values, header: str | None = None) -> None:
    """Columns ``index,re,im``."""
    values = np.asarray(values, dtype=complex)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(values):
            w.writerow([i, f"{v.real:.17g}", f"{v.imag:.17g}"])


def write_vector_csv(path: str | Path, values, header: str | None = None, column: str = "value") -> None:
    """Columns ``index,<column>``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["index", column])
        for i, v in enumerate(np.asarray(values, dtype=float)):
            w.writerow([i, f"{v:.17g}"])
