"""Minimizers used by the variational algorithms.

Both drivers count one iteration per joint cost+gradient evaluation and stop
when consecutive costs differ by less than ``ftol`` or the gradient norm
drops below ``gtol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.optimize

from .errors import SolverError

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool
    trace: list[tuple[int, float]] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max_iters"


class _BudgetExhausted(Exception):
    pass


class _Recorder:
    def __init__(self, fun_grad: FunGrad, max_evals: int):
        self.fun_grad = fun_grad
        self.max_evals = max_evals
        self.trace: list[tuple[int, float]] = []
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self.last_grad_norm = math.inf

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        if len(self.trace) >= self.max_evals:
            raise _BudgetExhausted
        f, g = self.fun_grad(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise SolverError(f"cost became non-finite at evaluation {len(self.trace) + 1}")
        self.trace.append((len(self.trace) + 1, float(f)))
        if f < self.best_f:
            self.best_f, self.best_x = float(f), np.array(x, copy=True)
        self.last_grad_norm = float(np.linalg.norm(g))
        return f, g


def lbfgsb(
    fun_grad: FunGrad,
    x0: np.ndarray,
    bounds: tuple[float, float] | None = None,
    max_iters: int = 1000,
    ftol: float = 1e-9,
    gtol: float = 1e-7,
) -> OptimResult:
    """Bounded limited-memory quasi-Newton minimization."""
    rec = _Recorder(fun_grad, max_iters)
    prev = [math.inf]
    hit = [False]

    def callback(intermediate_result):
        f = intermediate_result.fun
        if abs(prev[0] - f) < ftol or rec.last_grad_norm < gtol:
            hit[0] = True
            raise StopIteration
        prev[0] = f

    try:
        res = scipy.optimize.minimize(
            rec,
            np.asarray(x0, dtype=float),
            jac=True,
            method="L-BFGS-B",
            bounds=None if bounds is None else [bounds] * len(x0),
            callback=callback,
            # scipy's own limits sit above ours so the recorder decides when to stop
            options=dict(maxfun=max_iters + 1, maxiter=max_iters + 1, ftol=1e-15, gtol=gtol),
        )
        converged = hit[0] or res.success
    except _BudgetExhausted:
        converged = False
    return OptimResult(rec.best_x, rec.best_f, len(rec.trace), bool(converged), rec.trace)


def adam(
    fun_grad: FunGrad,
    x0: np.ndarray,
    learning_rate: float = 0.02,
    max_iters: int = 200,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    ftol: float = 0.0,
    gtol: float = 0.0,
) -> OptimResult:
    """Plain Adam; returns the best point visited."""
    rec = _Recorder(fun_grad, max_iters)
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    prev = math.inf
    converged = False
    for t in range(1, max_iters + 1):
        f, g = rec(x)
        if abs(prev - f) < ftol or rec.last_grad_norm < gtol:
            converged = True
            break
        prev = f
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**t)
        vhat = v / (1 - beta2**t)
        x = x - learning_rate * mhat / (np.sqrt(vhat) + eps)
    return OptimResult(rec.best_x, rec.best_f, len(rec.trace), converged, rec.trace)
