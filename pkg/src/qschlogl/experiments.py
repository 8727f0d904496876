"""Per-point computations behind the volume sweep and the Pauli truncation study."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .cme import SchloglSystem, build_generator
from .errors import DomainError
from .hermitize import spd_form
from .oracle import diagonalize, hermitian_lambda1, r_squared, rmsd
from .pauli import Ordering, decompose, sort_terms, truncate
from .qsim import AnsatzSpec
from .variational import VQDConfig, vqd

LAMBDA0_EXACT_ATOL = 1e-6
LAMBDA1_EXACT_PCT = 0.005  # rounds to 0.00 at two decimals


def volume_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid; ``stop`` is kept when it lies on the grid within roundoff."""
    if step <= 0:
        raise DomainError("volume step must be positive")
    if start <= 0:
        raise DomainError("volumes must be positive")
    if stop < start:
        raise DomainError("volume grid is empty (stop < start)")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


@dataclass(frozen=True)
class SweepRow:
    volume: float
    lambda0: float
    lambda1_nonhermitian: float
    lambda1_hermitian: float
    lambda1_vqd: float = math.nan
    vqd_abs_error: float = math.nan
    vqd_rel_error: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def sweep_point(sys: SchloglSystem, ansatz: AnsatzSpec | None = None, cfg: VQDConfig | None = None) -> SweepRow:
    """Eigenvalue magnitudes at one volume.

    With an ansatz, VQD runs on ``Q Q^†`` and its level-1 estimate is reported
    as a square root so it sits on the same scale as the Hermitian column.
    """
    q = build_generator(sys)
    spec = diagonalize(q)
    herm = hermitian_lambda1(q)
    row = dict(
        volume=sys.volume,
        lambda0=float(abs(spec.lambda0)),
        lambda1_nonhermitian=float(abs(spec.lambda1)),
        lambda1_hermitian=herm,
    )
    if ansatz is not None:
        if q.dim != 2**ansatz.n_qubits:
            raise DomainError(f"VQD on {ansatz.n_qubits} qubits needs N_trunc = {2**ansatz.n_qubits - 1}")
        report = vqd(decompose(spd_form(q)), ansatz, cfg or VQDConfig(k=2))
        est = math.sqrt(max(report.eigenvalue_estimates[1], 0.0))
        row.update(lambda1_vqd=est, vqd_abs_error=abs(est - herm), vqd_rel_error=abs(est - herm) / herm)
    return SweepRow(**row)


def sweep_metrics(rows: Sequence[SweepRow]) -> dict:
    """Agreement of the Hermitian λ1 with the non-Hermitian reference over the sweep."""
    ref = [r.lambda1_nonhermitian for r in rows]
    est = [r.lambda1_hermitian for r in rows]
    out = {"rmsd": rmsd(ref, est), "r_squared": r_squared(ref, est), "points": len(rows)}
    vqd_err = [r.vqd_rel_error for r in rows if not math.isnan(r.vqd_rel_error)]
    if vqd_err:
        out["vqd_max_rel_error"] = max(vqd_err)
    return out


@dataclass(frozen=True)
class TruncationRow:
    strategy: str
    keep: int
    n_terms: int
    lambda0: float
    lambda1: float
    lambda0_abs_error: float
    lambda1_pct_error: float

    @property
    def lambda0_exact(self) -> bool:
        return self.lambda0_abs_error <= LAMBDA0_EXACT_ATOL

    @property
    def lambda1_exact(self) -> bool:
        return self.lambda1_pct_error < LAMBDA1_EXACT_PCT

    def as_dict(self) -> dict:
        return asdict(self)


def truncation_study(
    sys: SchloglSystem,
    strategies: Iterable[Ordering | str] = tuple(Ordering),
    keeps: Iterable[int] | None = None,
    ansatz: AnsatzSpec | None = None,
    cfg: VQDConfig | None = None,
) -> list[TruncationRow]:
    """λ0 and λ1 of truncated Pauli expansions of ``Q Q^†`` against the full operator.

    Without an ansatz the truncated operator is diagonalized exactly, which is
    what a fully converged VQD on it would return. Keeps larger than a
    strategy's term count are skipped.
    """
    full = spd_form(build_generator(sys))
    ref = np.linalg.eigvalsh(full.entries)
    p = decompose(full)
    rows = []
    for strategy in strategies:
        ordered = sort_terms(p, strategy)
        ks = range(1, len(ordered) + 1) if keeps is None else [k for k in keeps if 1 <= k <= len(ordered)]
        for keep in ks:
            t = truncate(ordered, keep)
            if ansatz is None:
                lam = np.linalg.eigvalsh(t.to_matrix())[:2]
            else:
                lam = vqd(t, ansatz, cfg or VQDConfig(k=2)).eigenvalue_estimates[:2]
            rows.append(
                TruncationRow(
                    strategy=ordered.ordering.value,
                    keep=keep,
                    n_terms=len(p),
                    lambda0=float(lam[0]),
                    lambda1=float(lam[1]),
                    lambda0_abs_error=float(abs(lam[0] - ref[0])),
                    lambda1_pct_error=float(100 * abs(lam[1] - ref[1]) / abs(ref[1])),
                )
            )
    return rows


def minimal_exact_depth(rows: Sequence[TruncationRow], strategy: Ordering | str, level: int) -> int | None:
    """Smallest ``keep`` at which ``level`` (0 or 1) is exact for ``strategy``."""
    name = Ordering(strategy).value
    hits = [r.keep for r in rows if r.strategy == name and (r.lambda0_exact if level == 0 else r.lambda1_exact)]
    return min(hits) if hits else None
