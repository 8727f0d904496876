"""Variational eigensolvers: VQE for the ground level, VQD for excited levels.

VQD finds level ``x`` by minimizing

    E(θ) + sum_i beta_i |<psi_i|psi(θ)>|^2

with the states of the earlier levels frozen. ``vqd_exact0`` skips level 0
for operators of the form ``Q Q^†`` built from a generator, whose zero
eigenvector is known in closed form (the uniform superposition).
"""

from __future__ import annotations

import csv
import enum
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import optim
from .errors import DomainError
from .hermitize import constant_vector
from .pauli import PauliSum
from .qsim import AnsatzSpec, Circuit, StateVector, build_ansatz

SHIFT = np.pi / 2
FD_STEP = 1e-5
EXACT0_GUARD = 1e-6


class Optimizer(enum.Enum):
    QUASI_NEWTON_BOUNDED = "l-bfgs-b"
    ADAM = "adam"


class GradientMode(enum.Enum):
    PARAMETER_SHIFT = "parameter-shift"
    CENTRAL_DIFFERENCE = "central-difference"


class Init(enum.Enum):
    RANDOM = "random"
    CONSTANT_STATE_EXACT = "constant-state-exact"


class MaxItersWarning(RuntimeWarning):
    """An optimizer stopped at its iteration cap; the best point so far is returned."""


@dataclass(frozen=True)
class VQDConfig:
    k: int = 2
    betas: tuple[float, ...] | None = None
    optimizer: Optimizer = Optimizer.QUASI_NEWTON_BOUNDED
    max_iters: int = 5000
    gradient: GradientMode = GradientMode.PARAMETER_SHIFT
    seed: int = 0
    init: Init = Init.RANDOM
    ftol: float = 1e-9
    gtol: float = 1e-7
    learning_rate: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        object.__setattr__(self, "gradient", GradientMode(self.gradient))
        object.__setattr__(self, "init", Init(self.init))
        if self.k < 1:
            raise DomainError("k must be >= 1")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.betas is not None:
            betas = tuple(float(b) for b in self.betas)
            if len(betas) != self.k - 1:
                raise DomainError(f"need k-1 = {self.k - 1} betas, got {len(betas)}")
            if any(b <= 0 for b in betas):
                raise DomainError("betas must be positive")
            object.__setattr__(self, "betas", betas)

    def resolved_betas(self, p: PauliSum) -> tuple[float, ...]:
        """Explicit betas, or ``2 * sum|c_j|`` for every level (exceeds the spectral spread)."""
        if self.betas is not None:
            return self.betas
        return (2.0 * p.one_norm(),) * (self.k - 1)


@dataclass
class VQDReport:
    eigenvalue_estimates: list[float] = field(default_factory=list)
    optimal_parameters: list[np.ndarray | None] = field(default_factory=list)
    states: list[StateVector] = field(default_factory=list)
    iteration_trace: list[list[tuple[int, float]]] = field(default_factory=list)
    iters_used: list[int] = field(default_factory=list)
    status: list[str] = field(default_factory=list)
    analytic_levels: tuple[int, ...] = ()

    @property
    def total_iterations(self) -> int:
        return sum(self.iters_used)

    def running_best(self, level: int) -> list[float]:
        """Non-increasing envelope of the cost trace of ``level``."""
        return np.minimum.accumulate([c for _, c in self.iteration_trace[level]]).tolist()

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalue_estimates,
            "parameters": [None if p is None else p.tolist() for p in self.optimal_parameters],
            "iters_used": self.iters_used,
            "status": self.status,
            "analytic_levels": list(self.analytic_levels),
            "traces": [[[i, c] for i, c in tr] for tr in self.iteration_trace],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_trace_csv(self, path: str | Path, header: str | None = None) -> None:
        """Columns ``level,iteration,cost``."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if header:
                for line in header.splitlines():
                    fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["level", "iteration", "cost"])
            for level, tr in enumerate(self.iteration_trace):
                for i, c in tr:
                    w.writerow([level, i, f"{c:.17g}"])


class Objective:
    """Penalized energy of an ansatz circuit started from ``|0...0>``."""

    def __init__(self, p: PauliSum, circuit: Circuit, penalties: Sequence[tuple[float, np.ndarray]] = ()):
        if circuit.n_qubits != p.n_qubits:
            raise DomainError(f"circuit has {circuit.n_qubits} qubits, operator has {p.n_qubits}")
        self.circuit = circuit
        self.n_params = circuit.num_parameters
        counts = np.bincount([op.param for _, op in circuit.parameterized_ops()], minlength=self.n_params)
        if np.any(counts != 1):
            raise DomainError("each parameter must drive exactly one rotation gate")
        self.matrix = p.to_matrix()
        self.penalties = [(float(b), np.asarray(v, dtype=complex)) for b, v in penalties]
        self.psi0 = np.zeros(2**p.n_qubits, dtype=complex)
        self.psi0[0] = 1.0

    def energies(self, psi: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ib,ij,jb->b", psi.conj(), self.matrix, psi))

    def costs(self, thetas: np.ndarray) -> np.ndarray:
        psi = self.circuit.evolve_batch(thetas, self.psi0)
        total = self.energies(psi)
        for beta, v in self.penalties:
            total = total + beta * np.abs(v.conj() @ psi) ** 2
        return total

    def value_and_gradient(self, theta: np.ndarray, mode: GradientMode) -> tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        step = SHIFT if mode is GradientMode.PARAMETER_SHIFT else FD_STEP
        eye = np.eye(self.n_params) * step
        batch = np.vstack([theta[None, :], theta + eye, theta - eye])
        c = self.costs(batch)
        plus, minus = c[1 : 1 + self.n_params], c[1 + self.n_params :]
        if mode is GradientMode.PARAMETER_SHIFT:
            grad = 0.5 * (plus - minus)
        else:
            grad = (plus - minus) / (2 * FD_STEP)
        return float(c[0]), grad

    def state(self, theta: np.ndarray) -> StateVector:
        return StateVector(self.circuit.evolve_batch(theta, self.psi0)[:, 0], normalize=True)


def gradient(
    p: PauliSum,
    circuit: Circuit,
    theta: Sequence[float],
    mode: GradientMode | str = GradientMode.PARAMETER_SHIFT,
    penalties: Sequence[tuple[float, np.ndarray]] = (),
) -> np.ndarray:
    """Gradient of the (optionally penalized) energy with respect to ``theta``."""
    return Objective(p, circuit, penalties).value_and_gradient(np.asarray(theta), GradientMode(mode))[1]


def _minimize(obj: Objective, x0: np.ndarray, cfg: VQDConfig) -> optim.OptimResult:
    def fg(x):
        return obj.value_and_gradient(x, cfg.gradient)

    if cfg.optimizer is Optimizer.QUASI_NEWTON_BOUNDED:
        res = optim.lbfgsb(fg, x0, max_iters=cfg.max_iters, ftol=cfg.ftol, gtol=cfg.gtol)
    else:
        res = optim.adam(
            fg, x0, learning_rate=cfg.learning_rate, max_iters=cfg.max_iters, ftol=cfg.ftol, gtol=cfg.gtol
        )
    if not res.converged:
        warnings.warn(f"optimizer hit max_iters={cfg.max_iters}; returning best point", MaxItersWarning)
    return res


def _initial_point(cfg: VQDConfig, level: int, n_params: int) -> np.ndarray:
    return np.random.default_rng([cfg.seed, level]).uniform(-np.pi, np.pi, n_params)


def _optimize_level(
    p: PauliSum, circuit: Circuit, cfg: VQDConfig, level: int, frozen: list[tuple[float, StateVector]], report: VQDReport
) -> None:
    obj = Objective(p, circuit, [(b, s.amplitudes) for b, s in frozen])
    res = _minimize(obj, _initial_point(cfg, level, obj.n_params), cfg)
    state = obj.state(res.x)
    energy = float(obj.energies(state.amplitudes[:, None])[0])
    report.eigenvalue_estimates.append(energy)
    report.optimal_parameters.append(res.x)
    report.states.append(state)
    report.iteration_trace.append(res.trace)
    report.iters_used.append(res.nfev)
    report.status.append(res.status)


def _check(p: PauliSum, ansatz: AnsatzSpec) -> Circuit:
    if ansatz.n_qubits != p.n_qubits:
        raise DomainError(f"ansatz has {ansatz.n_qubits} qubits, operator has {p.n_qubits}")
    if not len(p):
        raise DomainError("operator has no Pauli terms")
    return build_ansatz(ansatz)


def vqe_ground(p: PauliSum, ansatz: AnsatzSpec, cfg: VQDConfig | None = None) -> tuple[float, np.ndarray, StateVector]:
    """Minimize ``<psi(θ)|H|psi(θ)>``; returns (energy, parameters, state)."""
    cfg = cfg or VQDConfig(k=1)
    report = VQDReport()
    _optimize_level(p, _check(p, ansatz), cfg, 0, [], report)
    return report.eigenvalue_estimates[0], report.optimal_parameters[0], report.states[0]


def vqd(p: PauliSum, ansatz: AnsatzSpec, cfg: VQDConfig | None = None) -> VQDReport:
    """Lowest ``cfg.k`` eigenvalues by sequential deflation."""
    cfg = cfg or VQDConfig()
    if cfg.init is Init.CONSTANT_STATE_EXACT:
        return vqd_exact0(p, ansatz, cfg)
    circuit = _check(p, ansatz)
    betas = cfg.resolved_betas(p)
    report = VQDReport()
    for level in range(cfg.k):
        frozen = list(zip(betas, report.states))
        _optimize_level(p, circuit, cfg, level, frozen, report)
    return report


def vqd_exact0(p: PauliSum, ansatz: AnsatzSpec, cfg: VQDConfig | None = None) -> VQDReport:
    """VQD with level 0 fixed to ``(0, uniform state)``; only levels >= 1 are optimized."""
    cfg = cfg or VQDConfig(init=Init.CONSTANT_STATE_EXACT)
    circuit = _check(p, ansatz)
    w0 = StateVector(constant_vector(p.n_qubits))
    e0 = float(p.term_expectations(w0.amplitudes) @ p.coefficients)
    if abs(e0) > EXACT0_GUARD:
        raise DomainError(
            f"<w0|H|w0> = {e0:.3g} exceeds {EXACT0_GUARD:g}; the uniform state is not a zero "
            "eigenvector, so this operator is not of the form Q Q^† for a generator Q"
        )
    betas = cfg.resolved_betas(p)
    report = VQDReport(
        eigenvalue_estimates=[0.0],
        optimal_parameters=[None],
        states=[w0],
        iteration_trace=[[]],
        iters_used=[0],
        status=["analytic"],
        analytic_levels=(0,),
    )
    for level in range(1, cfg.k):
        frozen = list(zip(betas, report.states))
        _optimize_level(p, circuit, cfg, level, frozen, report)
    return report
