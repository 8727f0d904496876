"""Variational SVD and the steady-state pipeline built on it.

Two RY-RZ ansätze ``U_L(α)`` and ``U_R(β)`` act on basis states ``|i>``.
Maximizing ``sum_i w_i Re <i|U_L^† M U_R|i>`` with strictly descending
weights drives column ``i`` of each unitary to the ``i``-th singular pair.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import optim
from .cme import SchloglSystem, build_generator
from .errors import DomainError, NullSpaceNotFound
from .hermitize import block_embed, unitary_of
from .oracle import rmsd, zeromode
from .qpe import QPEConfig, QPEResult, qpe_run
from .qsim import AnsatzSpec, Rotation, build_ansatz

DEFAULT_WEIGHTS = (24.0, 21.0, 18.0, 15.0, 12.0, 9.0, 6.0, 3.0)
NULL_TOL = 0.1


class PlateauWarning(RuntimeWarning):
    """The loss was still moving when the iteration budget ran out."""


@dataclass(frozen=True)
class VQSVDConfig:
    rank: int = 8
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    learning_rate: float = 0.02
    iterations: int = 200
    circuit_depth: int = 55
    seed: int = 0

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if self.rank < 1:
            raise DomainError("rank must be >= 1")
        if len(w) != self.rank:
            raise DomainError(f"need {self.rank} weights, got {len(w)}")
        if any(x <= 0 for x in w) or any(a <= b for a, b in zip(w, w[1:])):
            raise DomainError("weights must be positive and strictly descending")
        if self.iterations < 1 or self.circuit_depth < 1 or self.learning_rate <= 0:
            raise DomainError("iterations, circuit_depth and learning_rate must be positive")

    def ansatz(self, n_qubits: int) -> AnsatzSpec:
        """``circuit_depth`` RY-RZ layers joined by CNOT chains (at least two layers)."""
        return AnsatzSpec(n_qubits, reps=max(1, self.circuit_depth - 1), rotation=Rotation.RY_RZ)


@dataclass
class SVDResult:
    singular_values: np.ndarray
    left_states: np.ndarray  # columns
    right_states: np.ndarray  # columns
    loss: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    converged: bool = True


def vqsvd_decompose(m, cfg: VQSVDConfig | None = None) -> SVDResult:
    """Top-``rank`` singular triplets of ``m``, values sorted descending.

    ``loss`` is the maximized weighted objective, which tends to
    ``sum_i w_i σ_i`` at convergence.
    """
    cfg = cfg or VQSVDConfig()
    m = np.asarray(m, dtype=complex)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if m.shape != (dim, dim) or dim < 2 or 1 << n != dim:
        raise DomainError(f"matrix must be square with power-of-two dimension, got {m.shape}")
    if cfg.rank > dim:
        raise DomainError(f"rank {cfg.rank} exceeds dimension {dim}")

    spec = cfg.ansatz(n)
    left, right = build_ansatz(spec), build_ansatz(spec)
    p = spec.num_parameters
    basis = np.eye(dim, dtype=complex)[:, : cfg.rank]
    w = np.array(cfg.weights)

    def fun_grad(x):
        a, b, gamma = x[:p], x[p : 2 * p], x[2 * p]
        phase = np.exp(1j * gamma)
        psi = left.evolve(a, basis)
        phi = right.evolve(b, basis)
        mphi = phase * (m @ phi)
        overlaps = np.einsum("ib,ib->b", psi.conj(), mphi)
        loss = float(np.sum(w * overlaps.real))
        # Re<psi|M phi> = Re<M phi|psi> so both halves share one adjoint routine
        ga = left.adjoint_gradient(a, basis, mphi * w)
        gb = right.adjoint_gradient(b, basis, np.conj(phase) * (m.conj().T @ psi) * w)
        gg = -float(np.sum(w * overlaps.imag))
        return -loss, -np.concatenate([ga, gb, [gg]])

    # RY, RZ and CNOT only reach SU(2**n); the classical phase γ on the right
    # factor lets U_L^† M U_R be real and positive when det M is not
    x0 = np.append(np.random.default_rng(cfg.seed).uniform(-np.pi, np.pi, 2 * p), 0.0)
    res = optim.adam(fun_grad, x0, learning_rate=cfg.learning_rate, max_iters=cfg.iterations)
    tail = [c for _, c in res.trace[-10:]]
    converged = len(tail) < 2 or abs(tail[-1] - tail[0]) <= 1e-3 * max(1.0, abs(tail[-1]))
    if not converged:
        warnings.warn("VQSVD loss still changing at the iteration limit; returning best point", PlateauWarning)

    a, b, gamma = res.x[:p], res.x[p : 2 * p], res.x[2 * p]
    psi = left.evolve(a, basis)
    phi = np.exp(1j * gamma) * right.evolve(b, basis)
    values = np.real(np.einsum("ib,ib->b", psi.conj(), m @ phi))
    order = np.argsort(-values, kind="stable")
    return SVDResult(
        singular_values=values[order],
        left_states=psi[:, order],
        right_states=phi[:, order],
        loss=-res.fun,
        trace=[(i, -c) for i, c in res.trace],
        converged=converged,
    )


@dataclass
class ZeromodeReport:
    zeromode: np.ndarray
    oracle: np.ndarray
    rmsd_vs_oracle: float
    qh_expectation: float
    recovered_state: np.ndarray
    lambda_min: float
    singular_values: np.ndarray
    qpe: QPEResult | None = None

    @property
    def rmsd_percent(self) -> float:
        return 100.0 * self.rmsd_vs_oracle

    def to_dict(self) -> dict:
        return {
            "zeromode": self.zeromode.tolist(),
            "oracle": self.oracle.tolist(),
            "rmsd": self.rmsd_vs_oracle,
            "rmsd_percent": self.rmsd_percent,
            "qh_expectation": self.qh_expectation,
            "lambda_min": self.lambda_min,
            "singular_values": self.singular_values.tolist(),
            "qpe": None if self.qpe is None else self.qpe.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_csv(self, path: str | Path, header: str | None = None) -> None:
        """Columns ``index,probability,oracle``."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if header:
                for line in header.splitlines():
                    fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["index", "probability", "oracle"])
            for i, (p, o) in enumerate(zip(self.zeromode, self.oracle)):
                w.writerow([i, f"{p:.17g}", f"{o:.17g}"])


def right_half_distribution(state: np.ndarray, half: int) -> np.ndarray:
    """Drop the first ``half`` amplitudes, take magnitudes, normalize to unit sum."""
    tail = np.abs(np.asarray(state)[half : 2 * half])
    total = tail.sum()
    if total == 0:
        raise NullSpaceNotFound("recovered state has no weight on the retained half")
    return tail / total


def null_combination(vectors: np.ndarray, half: int) -> np.ndarray:
    """Unit combination of the columns of ``vectors`` with maximal weight in ``[half, 2*half)``.

    The embedding has a two-dimensional null space: the uniform vector on the
    first half and the zeromode on the second. Only the latter is wanted.
    """
    sel = vectors[half : 2 * half]
    gram = sel.conj().T @ sel
    _, evecs = np.linalg.eigh(gram)
    v = vectors @ evecs[:, -1]
    return v / np.linalg.norm(v)


def steady_state_pipeline(
    sys: SchloglSystem,
    qpe_cfg: QPEConfig | None = None,
    svd_cfg: VQSVDConfig | None = None,
) -> ZeromodeReport:
    """Steady state from QPE (for λ_min) followed by VQSVD of ``U - exp(-iλ_min) I``."""
    q = build_generator(sys)
    d = q.dim
    qh = block_embed(q)
    u = unitary_of(qh)
    dim = u.dim
    qpe_cfg = qpe_cfg or QPEConfig()
    svd_cfg = svd_cfg or VQSVDConfig(rank=min(len(DEFAULT_WEIGHTS), dim), weights=DEFAULT_WEIGHTS[: min(8, dim)])

    qpe = qpe_run(u, qpe_cfg)
    m = u.entries - np.exp(-1j * qpe.lambda_schlogl) * np.eye(dim)
    svd = vqsvd_decompose(m, svd_cfg)

    smallest = float(svd.singular_values[-1])
    if smallest > NULL_TOL:
        raise NullSpaceNotFound(f"smallest VQSVD singular value {smallest:.3g} exceeds {NULL_TOL:g}")
    near_null = svd.right_states[:, svd.singular_values <= NULL_TOL]
    state = null_combination(near_null, d)
    probs = right_half_distribution(state, d)
    oracle = zeromode(q)
    return ZeromodeReport(
        zeromode=probs,
        oracle=oracle,
        rmsd_vs_oracle=rmsd(oracle, probs),
        qh_expectation=float(np.real(np.vdot(state, qh.entries @ state))),
        recovered_state=state,
        lambda_min=qpe.lambda_schlogl,
        singular_values=svd.singular_values,
        qpe=qpe,
    )
