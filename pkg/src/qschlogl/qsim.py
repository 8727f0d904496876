"""Dense statevector simulator.

Basis ordering: qubit 0 is the least significant bit of the basis index, so
``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_k << k)``. Pauli strings are
written with the leftmost character acting on the most significant qubit.

Gates act on arrays of shape ``(2**n,)`` or ``(2**n, batch)``; the batched
form evolves many input states (e.g. every basis state) in one pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

NORM_ATOL = 1e-10
UNITARY_ATOL = 1e-10


class StateVector:
    """Unit-norm complex amplitude vector over ``n_qubits`` qubits."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes, *, normalize: bool = False):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        size = amps.size
        n = size.bit_length() - 1
        if size < 2 or 1 << n != size:
            raise DomainError(f"state length must be a power of two >= 2, got {size}")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_ATOL:
            raise DomainError(f"state norm {norm:.3g} differs from 1")
        amps.setflags(write=False)
        self.n_qubits = n
        self.amplitudes = amps

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.round(self.amplitudes, 6)!r})"


# ---------------------------------------------------------------- gates

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


# generators: d/dθ R(θ) = -i/2 · G · R(θ)
_GENERATORS = {
    "ry": np.array([[0, -1j], [1j, 0]]),
    "rz": np.diag([1.0 + 0j, -1.0]),
}
_ROTATIONS = {"ry": ry_matrix, "rz": rz_matrix}


def _ry_stack(thetas: np.ndarray) -> np.ndarray:
    c, s = np.cos(thetas / 2), np.sin(thetas / 2)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2).astype(complex)


def _rz_stack(thetas: np.ndarray) -> np.ndarray:
    out = np.zeros((thetas.size, 2, 2), dtype=complex)
    out[:, 0, 0] = np.exp(-0.5j * thetas)
    out[:, 1, 1] = np.exp(0.5j * thetas)
    return out


_ROTATION_STACKS = {"ry": _ry_stack, "rz": _rz_stack}


@dataclass(frozen=True, eq=False)
class Operation:
    """One gate application.

    ``param`` indexes the circuit parameter vector for rotations; ``angle`` is
    used instead when the rotation is fixed. ``matrix`` is the dense payload
    of a (controlled) unitary acting on ``targets`` with ``targets[0]`` as the
    least significant bit of the payload index.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    param: int | None = None
    angle: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def gate_matrix(self, params: Sequence[float] | None = None) -> np.ndarray:
        if self.kind in _ROTATIONS:
            if self.param is not None:
                if params is None:
                    raise DomainError(f"{self.kind} gate needs parameter {self.param}")
                theta = params[self.param]
            else:
                theta = self.angle
            return _ROTATIONS[self.kind](theta)
        if self.kind in ("x", "cnot"):
            return _X
        if self.kind == "h":
            return _H
        return self.matrix

    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def describe(self) -> str:
        if self.kind in _ROTATIONS:
            arg = f"θ[{self.param}]" if self.param is not None else f"{self.angle:.6g}"
            return f"{self.kind.upper()}({arg}) q{self.targets[0]}"
        if self.kind == "cnot":
            return f"CNOT q{self.controls[0]} -> q{self.targets[0]}"
        if self.kind in ("x", "h"):
            return f"{self.kind.upper()} q{self.targets[0]}"
        d = self.matrix.shape[0]
        ctrl = ",".join(f"q{c}" for c in self.controls) or "-"
        tgt = ",".join(f"q{t}" for t in self.targets)
        return f"U[{d}x{d}] controls={ctrl} targets={tgt}"


def ry(qubit: int, theta: float | None = None, param: int | None = None) -> Operation:
    return Operation("ry", (qubit,), param=param, angle=theta)


def rz(qubit: int, theta: float | None = None, param: int | None = None) -> Operation:
    return Operation("rz", (qubit,), param=param, angle=theta)


def x(qubit: int) -> Operation:
    return Operation("x", (qubit,))


def h(qubit: int) -> Operation:
    return Operation("h", (qubit,))


def cnot(control: int, target: int) -> Operation:
    if control == target:
        raise DomainError("CNOT control and target must differ")
    return Operation("cnot", (target,), controls=(control,))


def controlled_unitary(matrix, targets: Sequence[int], controls: Sequence[int] = ()) -> Operation:
    """Dense unitary on ``targets``, applied only where every control is 1."""
    u = np.array(matrix, dtype=complex)
    targets, controls = tuple(targets), tuple(controls)
    if u.shape != (2 ** len(targets),) * 2:
        raise DomainError(f"payload shape {u.shape} does not match {len(targets)} target qubits")
    if not np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=UNITARY_ATOL, rtol=0):
        raise DomainError("controlled-unitary payload is not unitary")
    if set(targets) & set(controls) or len(set(targets)) != len(targets):
        raise DomainError("targets and controls must be distinct qubits")
    return Operation("cu", targets, controls=controls, matrix=u)


@lru_cache(maxsize=512)
def _blocks(n: int, targets: tuple[int, ...], controls: tuple[int, ...]) -> np.ndarray:
    """Index matrix ``(R, 2**k)``: row r lists the amplitudes one gate mixes."""
    idx = np.arange(2**n)
    tmask = sum(1 << t for t in targets)
    cmask = sum(1 << c for c in controls)
    bases = idx[((idx & tmask) == 0) & ((idx & cmask) == cmask)]
    offsets = np.zeros(2 ** len(targets), dtype=np.int64)
    for j in range(offsets.size):
        for bit, t in enumerate(targets):
            if j >> bit & 1:
                offsets[j] |= 1 << t
    out = bases[:, None] | offsets[None, :]
    out.setflags(write=False)
    return out


def _apply_single(psi: np.ndarray, u: np.ndarray, n: int, q: int) -> np.ndarray:
    """Uncontrolled one-qubit gate via a reshaped view (no index gathering)."""
    view = psi.reshape(1 << (n - q - 1), 2, 1 << q, -1)
    out = np.einsum("ts,hslb->htlb", u, view)
    return out.reshape(psi.shape)


def _apply_matrix(psi: np.ndarray, u: np.ndarray, n: int, targets, controls=()) -> np.ndarray:
    if len(targets) == 1 and not controls:
        return _apply_single(psi, u, n, targets[0])
    blocks = _blocks(n, tuple(targets), tuple(controls))
    out = psi.copy()
    sub = psi[blocks]  # (R, 2**k, ...)
    out[blocks] = np.einsum("ts,rs...->rt...", u, sub)
    return out


def _check_qubits(op: Operation, n: int) -> None:
    for q in op.qubits():
        if not 0 <= q < n:
            raise DomainError(f"qubit index {q} out of range for {n} qubits")


def apply_op(psi: np.ndarray, op: Operation, n: int, params: Sequence[float] | None = None) -> np.ndarray:
    """Apply ``op`` to a raw (possibly batched) amplitude array."""
    return _apply_matrix(psi, op.gate_matrix(params), n, op.targets, op.controls)


def apply_gate(state: StateVector, op: Operation, params: Sequence[float] | None = None) -> StateVector:
    _check_qubits(op, state.n_qubits)
    out = apply_op(np.asarray(state.amplitudes), op, state.n_qubits, params)
    return StateVector(out, normalize=True)


# ---------------------------------------------------------------- circuits


@dataclass
class Circuit:
    n_qubits: int
    ops: list[Operation] = field(default_factory=list)

    def append(self, op: Operation) -> "Circuit":
        _check_qubits(op, self.n_qubits)
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[Operation]) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    @property
    def num_parameters(self) -> int:
        idx = [op.param for op in self.ops if op.param is not None]
        if not idx:
            return 0
        if sorted(set(idx)) != list(range(max(idx) + 1)):
            raise DomainError("parameter indices must be dense 0..P-1")
        return max(idx) + 1

    def parameterized_ops(self) -> list[tuple[int, Operation]]:
        return [(i, op) for i, op in enumerate(self.ops) if op.param is not None]

    def evolve(self, params: Sequence[float] | None, psi: np.ndarray) -> np.ndarray:
        """Run on a raw amplitude array (shape ``(2**n,)`` or ``(2**n, B)``)."""
        n = self.n_qubits
        for op in self.ops:
            psi = _apply_matrix(psi, op.gate_matrix(params), n, op.targets, op.controls)
        return psi

    def evolve_batch(self, params: np.ndarray, psi0: np.ndarray) -> np.ndarray:
        """Run ``B`` parameter vectors (rows of ``params``) from one input state.

        Returns amplitudes of shape ``(2**n, B)``.
        """
        params = np.atleast_2d(np.asarray(params, dtype=float))
        n = self.n_qubits
        psi = np.repeat(np.asarray(psi0, dtype=complex)[:, None], params.shape[0], axis=1)
        for op in self.ops:
            if op.param is None:
                psi = _apply_matrix(psi, op.gate_matrix(), n, op.targets, op.controls)
                continue
            mats = _ROTATION_STACKS[op.kind](params[:, op.param])
            blocks = _blocks(n, op.targets, op.controls)
            out = psi.copy()
            out[blocks] = np.einsum("bts,rsb->rtb", mats, psi[blocks])
            psi = out
        return psi

    def adjoint_gradient(self, params: Sequence[float], psi_in: np.ndarray, lam_out: np.ndarray) -> np.ndarray:
        """Gradient of ``Re sum_b <lam_out[:, b]| U(θ) |psi_in[:, b]>`` by reverse-mode sweep.

        ``lam_out`` must not depend on θ. Cost is two circuit passes regardless of P.
        """
        n = self.n_qubits
        params = np.asarray(params, dtype=float)
        phi = self.evolve(params, np.asarray(psi_in, dtype=complex))
        lam = np.asarray(lam_out, dtype=complex)
        grad = np.zeros(self.num_parameters)
        for op in reversed(self.ops):
            u = op.gate_matrix(params)
            if op.param is not None:
                # d/dθ R(θ) = -i/2 G R(θ); phi is the state just after this gate
                dphi = _apply_matrix(phi, -0.5j * _GENERATORS[op.kind], n, op.targets, op.controls)
                grad[op.param] += np.real(np.vdot(lam, dphi))
            udag = u.conj().T
            phi = _apply_matrix(phi, udag, n, op.targets, op.controls)
            lam = _apply_matrix(lam, udag, n, op.targets, op.controls)
        return grad

    def run(self, params: Sequence[float] | None = None, initial: StateVector | None = None) -> StateVector:
        if params is not None and len(params) != self.num_parameters:
            raise DomainError(f"expected {self.num_parameters} parameters, got {len(params)}")
        psi0 = np.zeros(2**self.n_qubits, dtype=complex)
        if initial is None:
            psi0[0] = 1.0
        else:
            if initial.n_qubits != self.n_qubits:
                raise DomainError("initial state qubit count does not match circuit")
            psi0 = np.array(initial.amplitudes)
        return StateVector(self.evolve(params, psi0), normalize=True)

    def unitary(self, params: Sequence[float] | None = None) -> np.ndarray:
        return self.evolve(params, np.eye(2**self.n_qubits, dtype=complex))

    def __str__(self) -> str:
        lines = [f"circuit on {self.n_qubits} qubits, {self.num_parameters} parameters"]
        lines += [op.describe() for op in self.ops]
        return "\n".join(lines)


class Rotation(enum.Enum):
    RY = "ry"
    RY_RZ = "ry_rz"


@dataclass(frozen=True)
class AnsatzSpec:
    """Two-local ansatz: rotation layer, linear CNOT chain, repeated ``reps`` times,
    closed by a final rotation layer."""

    n_qubits: int
    reps: int = 1
    rotation: Rotation = Rotation.RY
    entanglement: str = "linear"

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DomainError("ansatz needs at least one qubit")
        if self.reps < 1:
            raise DomainError("ansatz reps must be >= 1")
        if self.entanglement != "linear":
            raise DomainError(f"unsupported entanglement {self.entanglement!r}")
        object.__setattr__(self, "rotation", Rotation(self.rotation))

    @property
    def num_parameters(self) -> int:
        per_layer = self.n_qubits * (2 if self.rotation is Rotation.RY_RZ else 1)
        return per_layer * (self.reps + 1)


def build_ansatz(spec: AnsatzSpec) -> Circuit:
    circ = Circuit(spec.n_qubits)
    k = 0
    for layer in range(spec.reps + 1):
        for q in range(spec.n_qubits):
            circ.append(ry(q, param=k))
            k += 1
        if spec.rotation is Rotation.RY_RZ:
            for q in range(spec.n_qubits):
                circ.append(rz(q, param=k))
                k += 1
        if layer < spec.reps:
            for q in range(spec.n_qubits - 1):
                circ.append(cnot(q, q + 1))
    return circ


# ---------------------------------------------------------------- measurement


def overlap(a: StateVector, b: StateVector) -> complex:
    """Inner product ``<a|b>``."""
    if a.n_qubits != b.n_qubits:
        raise DomainError("overlap of states with different qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(state: StateVector, pauli_sum) -> float:
    """Exact ``<state| sum_j c_j P_j |state>``."""
    if state.n_qubits != pauli_sum.n_qubits:
        raise DomainError(f"state has {state.n_qubits} qubits, operator has {pauli_sum.n_qubits}")
    return float(np.real(pauli_sum.term_expectations(state.amplitudes) @ pauli_sum.coefficients))


def sample(state: StateVector, shots: int, seed: int | None = None) -> dict[int, int]:
    """Multinomial draw of computational-basis outcomes; zero-count outcomes omitted."""
    if shots < 1:
        raise DomainError("shots must be >= 1")
    p = state.probabilities()
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return {int(i): int(c) for i, c in enumerate(counts) if c}
