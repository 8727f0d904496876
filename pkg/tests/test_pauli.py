import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian
from qschlogl.cme import build_generator, preset
from qschlogl.errors import DomainError
from qschlogl.hermitize import spd_form
from qschlogl.pauli import (
    Ordering,
    PauliSum,
    PauliTerm,
    canonical_strings,
    decompose,
    pauli_matrix,
    sort_terms,
    truncate,
)

X = np.array([[0, 1], [1, 0]])
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1, -1])


def test_single_qubit_examples():
    assert decompose(np.eye(2)).as_dict() == {"I": 1.0}
    assert decompose(np.diag([1.0, -1.0])).as_dict() == {"Z": 1.0}


def test_string_order_convention():
    # leftmost label acts on the most significant qubit
    np.testing.assert_array_equal(pauli_matrix("ZI"), np.kron(Z, np.eye(2)))
    np.testing.assert_array_equal(pauli_matrix("XY"), np.kron(X, Y))
    assert list(canonical_strings(1)) == ["I", "X", "Y", "Z"]
    assert list(canonical_strings(2))[:5] == ["II", "IX", "IY", "IZ", "XI"]


def test_term_counts_for_schlogl_operators():
    two = decompose(spd_form(build_generator(preset("bistable", volume=8.5, n_trunc=3))))
    three = decompose(spd_form(build_generator(preset("bistable", volume=8.5, n_trunc=7))))
    assert len(two) == 10
    assert len(three) == 28


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_roundtrip_random_hermitian(rng, n):
    for _ in range(5):
        h = random_hermitian(rng, 2**n)
        p = decompose(h)
        assert len(p) <= 4**n
        np.testing.assert_allclose(p.to_matrix(), h, atol=1e-10)


def test_coefficients_are_real(rng):
    h = random_hermitian(rng, 8)
    for s in canonical_strings(3):
        c = np.trace(pauli_matrix(s) @ h) / 8
        assert abs(c.imag) <= 1e-12


def test_sorting_examples():
    p = PauliSum.from_dict({"X": -2.0, "Y": 3.0, "Z": 1.0})
    assert list(sort_terms(p, Ordering.POSITIVE_FIRST).coefficients) == [3, 1, -2]
    assert list(sort_terms(p, "magnitude").coefficients) == [3, -2, 1]
    assert sort_terms(p, "default").strings == ["X", "Y", "Z"]


def test_magnitude_ties_use_canonical_order():
    p = PauliSum.from_dict({"Z": 1.0, "X": -1.0, "Y": 1.0})
    assert sort_terms(p, Ordering.MAGNITUDE).strings == ["X", "Y", "Z"]


def test_optimized_sort_three_qubit():
    full = spd_form(build_generator(preset("bistable", volume=8.5, n_trunc=7)))
    opt = sort_terms(decompose(full), Ordering.OPTIMIZED)
    assert len(opt) == 6
    assert abs(np.linalg.eigvalsh(opt.to_matrix())[0]) <= 1e-6


def test_default_keep_six_two_qubit():
    full = spd_form(build_generator(preset("bistable", volume=8.5, n_trunc=3)))
    t = truncate(sort_terms(decompose(full), "default"), 6)
    assert abs(np.linalg.eigvalsh(t.to_matrix())[0]) <= 1e-6


def test_half_truncation_keeps_constant_state_zeromode():
    # The first half of the canonical order is the strings whose leading label is I or X;
    # their sum has the uniform vector in its kernel whenever the full operator does.
    for n_trunc in (3, 7, 15):
        full = spd_form(build_generator(preset("bistable", volume=8.5, n_trunc=n_trunc)))
        p = sort_terms(decompose(full), "default")
        w0 = np.full(full.dim, full.dim**-0.5)
        half = PauliSum(p.n_qubits, tuple(t for t in p.terms if t.string[0] in "IX"))
        assert np.linalg.norm(half.to_matrix() @ w0) <= 1e-9


def test_truncate():
    p = PauliSum.from_dict({"X": -2.0, "Y": 3.0, "Z": 1.0})
    assert truncate(p, 3).as_dict() == p.as_dict()
    assert truncate(p, 1).strings == ["X"]
    for bad in (0, 4, 1.5):
        with pytest.raises(DomainError):
            truncate(p, bad)


def test_invalid_terms():
    with pytest.raises(DomainError):
        PauliTerm(1.0, "XA")
    with pytest.raises(DomainError):
        PauliSum(2, (PauliTerm(1, "XX"), PauliTerm(2, "XX")))
    with pytest.raises(DomainError):
        PauliSum(2, (PauliTerm(1, "X"),))
    with pytest.raises(DomainError):
        decompose(np.eye(3))


def test_text_roundtrip(tmp_path, rng):
    p = decompose(random_hermitian(rng, 4))
    p.save(tmp_path / "h.txt")
    q = PauliSum.load(tmp_path / "h.txt")
    assert q.as_dict() == p.as_dict()


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=16, max_size=16))
def test_roundtrip_property(coeffs):
    strings = ["".join(s) for s in itertools.product("IXYZ", repeat=2)]
    h = sum(c * pauli_matrix(s) for c, s in zip(coeffs, strings))
    np.testing.assert_allclose(decompose(h).to_matrix(), h, atol=1e-10)
