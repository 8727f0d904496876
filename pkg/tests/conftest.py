import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from qschlogl.cme import SchloglSystem

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

rates = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
positive = st.floats(min_value=0.05, max_value=50.0, allow_nan=False)


@st.composite
def systems(draw, max_trunc: int = 15):
    return SchloglSystem(
        k1=draw(rates),
        k2=draw(rates),
        k3=draw(positive),
        k4=draw(positive),
        a=draw(rates),
        b=draw(positive),
        volume=draw(positive),
        n_trunc=draw(st.integers(min_value=1, max_value=max_trunc)),
    )


def random_system(rng: np.random.Generator, n_trunc: int) -> SchloglSystem:
    """Generic system: positive birth and death rates so the zero eigenvalue is simple."""
    return SchloglSystem(
        k1=rng.uniform(0, 5),
        k2=rng.uniform(0, 2),
        k3=rng.uniform(0.05, 2),
        k4=rng.uniform(0.5, 5),
        a=rng.uniform(0, 2),
        b=rng.uniform(0.2, 30),
        volume=rng.uniform(0.2, 10),
        n_trunc=n_trunc,
    )


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def random_state(rng: np.random.Generator, n_qubits: int) -> np.ndarray:
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# criterion number -> list of (label, passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(passed for _, passed, _ in checks)
        failed = [f"{label} ({detail})" for label, passed, detail in checks if not passed]
        summary = "; ".join(failed) if failed else "; ".join(detail for _, _, detail in checks)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {summary}")
