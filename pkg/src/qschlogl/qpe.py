"""Quantum phase estimation of the eigenphases of a unitary.

Register layout: query qubits ``0..m-1`` hold the eigenstate register,
precision qubits ``m..m+p-1`` hold the phase with qubit ``m + j`` read as
bit ``j``. An eigenvalue ``exp(2πiφ)`` of U is read out as ``k ≈ φ·2**p``;
for ``U = exp(-iH)`` the eigenvalue of H is ``λ = -2πφ`` folded to ``(-π, π]``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, EstimationError
from .hermitize import UnitaryOperator
from .qsim import Circuit, StateVector, controlled_unitary, h, sample

DEFAULT_SHOTS = 500_000
FLOOR_FACTOR = 4
PROB_CUTOFF = 1e-15  # roundoff-level outcomes are left out of noiseless histograms

_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class QPEConfig:
    """``shots=None`` selects the noiseless mode (exact outcome probabilities)."""

    precision_qubits: int = 7
    query_qubits: int | None = None
    shots: int | None = DEFAULT_SHOTS
    seed: int = 0
    input_state: StateVector | None = None

    def __post_init__(self):
        if self.precision_qubits < 1:
            raise DomainError("precision_qubits must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise DomainError("shots must be >= 1")
        if self.query_qubits is not None and self.query_qubits < 1:
            raise DomainError("query_qubits must be >= 1")

    @property
    def noiseless(self) -> bool:
        return self.shots is None


@dataclass(frozen=True)
class QPEResult:
    """``phase_histogram`` maps ``k / 2**p`` to counts (probabilities when noiseless)."""

    phase_histogram: dict[float, float]
    phase: float
    lambda_unitary: complex
    lambda_schlogl: float
    precision_qubits: int
    shots: int | None

    @property
    def resolution(self) -> float:
        return 2 * math.pi / 2**self.precision_qubits

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "lambda_schlogl": self.lambda_schlogl,
            "lambda_unitary": {"re": self.lambda_unitary.real, "im": self.lambda_unitary.imag},
            "precision_qubits": self.precision_qubits,
            "shots": self.shots,
            "resolution": self.resolution,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_histogram_csv(self, path: str | Path, header: str | None = None) -> None:
        """Columns ``phase,counts`` in ascending phase order."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if header:
                for line in header.splitlines():
                    fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["phase", "counts"])
            for phase in sorted(self.phase_histogram):
                c = self.phase_histogram[phase]
                w.writerow([f"{phase:.17g}", c if isinstance(c, int) else f"{c:.17g}"])


def phase_to_eigenvalue(phase: float) -> float:
    """``λ = -2π·phase`` folded into ``(-π, π]``."""
    if not 0 <= phase < 1:
        raise DomainError(f"phase must lie in [0, 1), got {phase}")
    lam = -2 * math.pi * phase
    lam = math.remainder(lam, 2 * math.pi)
    if lam <= -math.pi:
        lam += 2 * math.pi
    return lam + 0.0  # no negative zero


def inverse_qft(qubits: list[int]) -> list:
    """Inverse QFT on ``qubits`` (``qubits[0]`` least significant), built from H and controlled phases."""
    ops = []
    p = len(qubits)
    for a in range(p // 2):
        ops.append(controlled_unitary(_SWAP, (qubits[a], qubits[p - 1 - a])))
    for j in range(p):
        for k in range(j):
            angle = -math.pi / 2 ** (j - k)
            ops.append(controlled_unitary(np.diag([1, np.exp(1j * angle)]), (qubits[j],), (qubits[k],)))
        ops.append(h(qubits[j]))
    return ops


def qpe_circuit(u, precision_qubits: int) -> Circuit:
    """Hadamards, controlled ``U**(2**j)`` by repeated squaring, inverse QFT."""
    mat = np.asarray(getattr(u, "entries", u), dtype=complex)
    m = mat.shape[0].bit_length() - 1
    prec = list(range(m, m + precision_qubits))
    circ = Circuit(m + precision_qubits)
    for q in prec:
        circ.append(h(q))
    power = mat
    for j, q in enumerate(prec):
        circ.append(controlled_unitary(power, tuple(range(m)), (q,)))
        if j + 1 < precision_qubits:
            power = power @ power
    circ.extend(inverse_qft(prec))
    return circ


def _select(histogram: np.ndarray, floor: float, p: int) -> int:
    """Above-floor outcome whose folded λ is smallest in magnitude; ties go to positive λ."""
    candidates = np.flatnonzero(histogram >= floor)
    if candidates.size == 0:
        return -1
    lams = [phase_to_eigenvalue(k / 2**p) for k in candidates]
    best = min(range(len(lams)), key=lambda i: (round(abs(lams[i]), 12), -lams[i]))
    return int(candidates[best])


def qpe_run(u, cfg: QPEConfig | None = None) -> QPEResult:
    """Estimate the smallest-magnitude eigenvalue of H for ``U = exp(-iH)``."""
    cfg = cfg or QPEConfig()
    if not isinstance(u, UnitaryOperator):
        u = UnitaryOperator(u)
    dim = u.dim
    m = dim.bit_length() - 1
    if dim < 2 or 1 << m != dim:
        raise DomainError(f"unitary dimension {dim} is not a power of two")
    if cfg.query_qubits is not None and cfg.query_qubits != m:
        raise DomainError(f"query_qubits={cfg.query_qubits} but U acts on {m} qubits")
    p = cfg.precision_qubits

    if cfg.input_state is None:
        query = np.full(dim, dim**-0.5, dtype=complex)
    else:
        if cfg.input_state.n_qubits != m:
            raise DomainError("input state qubit count does not match U")
        query = np.asarray(cfg.input_state.amplitudes)
    psi0 = np.zeros(2 ** (m + p), dtype=complex)
    psi0[:dim] = query

    out = qpe_circuit(u, p).evolve(None, psi0)
    probs = (np.abs(out) ** 2).reshape(2**p, dim).sum(axis=1)
    probs = probs / probs.sum()

    if cfg.noiseless:
        hist = probs
        floor = FLOOR_FACTOR / 2**p
        histogram = {k / 2**p: float(v) for k, v in enumerate(hist) if v > PROB_CUTOFF}
    else:
        counts = sample(StateVector(np.sqrt(probs).astype(complex)), cfg.shots, cfg.seed)
        hist = np.zeros(2**p)
        for k, c in counts.items():
            hist[k] = c
        floor = FLOOR_FACTOR * cfg.shots / 2**p
        histogram = {k / 2**p: int(c) for k, c in sorted(counts.items())}

    k = _select(hist, floor, p)
    if k < 0:
        raise EstimationError(f"no outcome reaches the noise floor {floor:.4g}", histogram=histogram)
    phase = k / 2**p
    lam = phase_to_eigenvalue(phase)
    return QPEResult(
        phase_histogram=histogram,
        phase=phase,
        lambda_unitary=complex(math.cos(lam), -math.sin(lam) + 0.0),
        lambda_schlogl=lam,
        precision_qubits=p,
        shots=cfg.shots,
    )
