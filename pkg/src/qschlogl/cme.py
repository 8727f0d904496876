"""Truncated chemical master equation of the Schlögl reaction network.

The network is

    A + 2X <-> 3X   (k1 forward, k2 backward)
         B <-> X    (k3 forward, k4 backward)

with the pump species A and B held at fixed concentrations ``a`` and ``b``.
The number of X molecules performs a birth-death walk on ``0..n_trunc``; the
generator ``Q`` acts on column probability vectors, ``dP/dt = Q P``, so the
entry ``Q[i, j]`` is the rate of the jump ``j -> i``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import DomainError

EQUILIBRIUM_RTOL = 1e-12


@dataclass(frozen=True)
class SchloglSystem:
    k1: float
    k2: float
    k3: float
    k4: float
    a: float
    b: float
    volume: float
    n_trunc: int

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4", "a", "b"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be a finite non-negative number, got {value!r}")
        if not math.isfinite(self.volume) or self.volume <= 0:
            raise DomainError(f"V (volume) must be positive, got {self.volume!r}")
        if int(self.n_trunc) != self.n_trunc or self.n_trunc < 1:
            raise DomainError(f"N_trunc must be an integer >= 1, got {self.n_trunc!r}")
        object.__setattr__(self, "n_trunc", int(self.n_trunc))

    @property
    def dim(self) -> int:
        return self.n_trunc + 1

    @property
    def balance_ratio(self) -> float:
        """Forward/backward flux ratio ``k1 k4 a / (k2 k3 b)``."""
        den = self.k2 * self.k3 * self.b
        num = self.k1 * self.k4 * self.a
        if den == 0:
            return math.inf if num > 0 else math.nan
        return num / den

    def is_equilibrium(self) -> bool:
        """True when chemical detailed balance holds (ratio equal to one)."""
        return math.isclose(self.balance_ratio, 1.0, rel_tol=EQUILIBRIUM_RTOL, abs_tol=0.0)

    def with_volume(self, volume: float) -> "SchloglSystem":
        return replace(self, volume=volume)

    def with_n_trunc(self, n_trunc: int) -> "SchloglSystem":
        return replace(self, n_trunc=n_trunc)

    def for_qubits(self, n_qubits: int) -> "SchloglSystem":
        """Truncate so the generator fills exactly ``2**n_qubits`` states."""
        if n_qubits < 1:
            raise DomainError("n_qubits must be >= 1")
        return replace(self, n_trunc=2**n_qubits - 1)

    def to_mapping(self) -> dict[str, float]:
        out = asdict(self)
        out["V"] = out.pop("volume")
        out["N_trunc"] = out.pop("n_trunc")
        return out


_RATES = dict(k1=3.0, k2=0.6, k3=0.25, k4=2.95)

PRESETS: dict[str, dict[str, float]] = {
    "monostable": dict(_RATES, a=0.5, b=29.5),
    "bistable": dict(_RATES, a=1.0, b=1.0),
}

# config keys accepted on input -> dataclass field
_ALIASES = {"V": "volume", "N_trunc": "n_trunc", "volume": "volume", "n_trunc": "n_trunc"}


def preset(name: str, volume: float = 1.0, n_trunc: int = 3) -> SchloglSystem:
    """Named parameter set; the pump parameters select mono- or bistability."""
    try:
        params = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return SchloglSystem(volume=volume, n_trunc=n_trunc, **params)


def system_from_mapping(data: Mapping[str, Any]) -> SchloglSystem:
    """Build a system from ``k1..k4, a, b, V, N_trunc`` keys.

    A ``preset`` key supplies defaults that the explicit keys override.
    """
    values: dict[str, Any] = {"volume": 1.0, "n_trunc": 3}
    if "preset" in data and data["preset"] is not None:
        name = data["preset"]
        if name not in PRESETS:
            raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[name])
    known = {f.name for f in fields(SchloglSystem)}
    for key, value in data.items():
        if key == "preset":
            continue
        field_name = _ALIASES.get(key, key)
        if field_name not in known:
            raise DomainError(f"unknown system parameter {key!r}")
        values[field_name] = value
    missing = known - values.keys()
    if missing:
        raise DomainError(f"missing system parameters: {sorted(missing)}")
    try:
        values = {k: (int(v) if k == "n_trunc" and float(v).is_integer() else float(v)) for k, v in values.items()}
    except (TypeError, ValueError) as exc:
        raise DomainError(f"non-numeric system parameter: {exc}") from None
    return SchloglSystem(**values)


def load_system(path: str | Path) -> SchloglSystem:
    with open(path, encoding="utf-8") as fh:
        return system_from_mapping(json.load(fh))


def _check_state(sys: SchloglSystem, n: int) -> None:
    if int(n) != n or not 0 <= n <= sys.n_trunc:
        raise DomainError(f"state index {n!r} outside 0..{sys.n_trunc}")


def birth_rate(sys: SchloglSystem, n: int) -> float:
    """Propensity of ``n -> n+1``; zero at the truncation boundary."""
    _check_state(sys, n)
    if n == sys.n_trunc:
        return 0.0
    return sys.a * sys.k1 * n * (n - 1) / sys.volume + sys.b * sys.k3 * sys.volume


def death_rate(sys: SchloglSystem, n: int) -> float:
    """Propensity of ``n -> n-1``."""
    _check_state(sys, n)
    return n * sys.k4 + sys.k2 * n * (n - 1) * (n - 2) / sys.volume**2


def birth_rates(sys: SchloglSystem) -> np.ndarray:
    n = np.arange(sys.dim, dtype=float)
    kappa = sys.a * sys.k1 * n * (n - 1) / sys.volume + sys.b * sys.k3 * sys.volume
    kappa[-1] = 0.0
    return kappa


def death_rates(sys: SchloglSystem) -> np.ndarray:
    n = np.arange(sys.dim, dtype=float)
    return n * sys.k4 + sys.k2 * n * (n - 1) * (n - 2) / sys.volume**2


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Dense generator with ``entries[i, j]`` the rate of ``j -> i``."""

    entries: np.ndarray
    system: SchloglSystem | None = None

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"generator must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def _fix_diagonal(m: np.ndarray) -> np.ndarray:
    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, -m.sum(axis=0))
    return m


def build_generator(sys: SchloglSystem) -> GeneratorMatrix:
    """Tridiagonal generator of dimension ``n_trunc + 1``.

    Diagonals are the negated column sums of the off-diagonal rates, so every
    column sums to zero regardless of the boundary convention.
    """
    kappa = birth_rates(sys).copy()
    mu = death_rates(sys).copy()
    _exact_pair_sums(kappa, mu)
    m = np.diag(kappa[:-1], -1) + np.diag(mu[1:], 1)
    return GeneratorMatrix(_fix_diagonal(m), sys)


def _exact_pair_sums(kappa: np.ndarray, mu: np.ndarray) -> None:
    """Nudge the smaller rate of each column by at most one ulp of the column total
    so that ``kappa[n] + mu[n]`` is exact; the column sum is then exactly zero in
    any summation order.

    Fast2Sum: with ``|a| <= |b|`` and ``s = fl(a + b)``, ``s - b`` is exact.
    """
    s = kappa + mu
    small_k = kappa <= mu
    kappa[small_k] = s[small_k] - mu[small_k]
    mu[~small_k] = s[~small_k] - kappa[~small_k]


def pad_generator(q: GeneratorMatrix | np.ndarray, dim: int | None = None) -> GeneratorMatrix:
    """Zero-pad to ``dim`` (default: next power of two); padded states are inert."""
    m = np.asarray(q, dtype=float)
    size = m.shape[0]
    target = dim if dim is not None else 1 << max(0, (size - 1).bit_length())
    if target < size:
        raise DomainError(f"cannot pad dimension {size} down to {target}")
    out = np.zeros((target, target))
    out[:size, :size] = m
    return GeneratorMatrix(_fix_diagonal(out), getattr(q, "system", None))


def deterministic_rhs(sys: SchloglSystem, x: float) -> float:
    """Mass-action rate law ``dx/dt`` of the deterministic model."""
    if x < 0:
        raise DomainError(f"concentration must be non-negative, got {x!r}")
    return sys.k1 * sys.a * x**2 - sys.k2 * x**3 - sys.k4 * x + sys.k3 * sys.b


def fixed_points(sys: SchloglSystem) -> np.ndarray:
    """Non-negative real roots of the deterministic rate law, ascending."""
    roots = np.roots([-sys.k2, sys.k1 * sys.a, -sys.k4, sys.k3 * sys.b])
    real = roots[np.abs(roots.imag) < 1e-9].real
    return np.sort(real[real >= 0])


def write_matrix_csv(path: str | Path, matrix: np.ndarray, header: str | None = None) -> None:
    """Dense real matrix, row-major, 17 significant digits."""
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        for row in m:
            w.writerow([f"{v:.17g}" for v in row])


def read_matrix_csv(path: str | Path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    return np.array([[float(v) for v in r] for r in rows])
