import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qschlogl.cme import build_generator, preset
from qschlogl.errors import DomainError, EstimationError
from qschlogl.hermitize import block_embed, unitary_of
from qschlogl.qpe import QPEConfig, inverse_qft, phase_to_eigenvalue, qpe_run
from qschlogl.qsim import Circuit, StateVector


def phase_gate(phi):
    return np.diag([1, np.exp(2j * np.pi * phi)])


def test_exact_phase_example():
    for p in (2, 3, 7):
        res = qpe_run(phase_gate(0.25), QPEConfig(precision_qubits=p, shots=None, input_state=StateVector.basis(1, 1)))
        assert res.phase == 0.25
        assert res.phase_histogram == {0.25: pytest.approx(1.0, abs=1e-12)}
        assert res.lambda_schlogl == pytest.approx(-math.pi / 2)
        assert abs(res.lambda_unitary) == pytest.approx(1.0, abs=1e-9)


def test_exact_phase_with_shots_is_deterministic():
    cfg = QPEConfig(precision_qubits=4, shots=1000, input_state=StateVector.basis(1, 1))
    res = qpe_run(phase_gate(3 / 16), cfg)
    assert res.phase_histogram == {3 / 16: 1000}
    assert sum(res.phase_histogram.values()) == 1000


def test_phase_to_eigenvalue():
    assert phase_to_eigenvalue(0) == 0.0
    assert math.copysign(1, phase_to_eigenvalue(0)) == 1
    assert phase_to_eigenvalue(0.5) == pytest.approx(math.pi)
    assert phase_to_eigenvalue(0.25) == pytest.approx(-math.pi / 2)
    assert phase_to_eigenvalue(0.75) == pytest.approx(math.pi / 2)
    with pytest.raises(DomainError):
        phase_to_eigenvalue(1.0)


def test_resolution():
    res = qpe_run(phase_gate(0.0), QPEConfig(shots=None, input_state=StateVector.basis(1, 0)))
    assert res.resolution == pytest.approx(0.0491, abs=1e-4)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_inverse_qft_matches_inverse_dft(p):
    u = Circuit(p).extend(inverse_qft(list(range(p)))).unitary()
    d = 2**p
    k, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    np.testing.assert_allclose(u, np.exp(-2j * np.pi * j * k / d) / math.sqrt(d), atol=1e-12)


@given(st.floats(0.0, 0.999))
def test_nearest_grid_point_captures_kernel_weight(phi):
    p = 5
    res = qpe_run(phase_gate(phi), QPEConfig(precision_qubits=p, shots=None, input_state=StateVector.basis(1, 1)))
    k = round(phi * 2**p) % 2**p
    assert res.phase_histogram.get(k / 2**p, 0.0) >= 4 / math.pi**2 - 1e-9


def test_below_floor_raises_with_histogram():
    # phase halfway between grid points: best outcome carries ~0.41 < 4/2**3
    with pytest.raises(EstimationError) as err:
        qpe_run(phase_gate(1 / 16), QPEConfig(precision_qubits=3, shots=None, input_state=StateVector.basis(1, 1)))
    assert err.value.histogram


def test_schlogl_anchor_within_one_quantum():
    for volume in (1.1, 5.5, 10.5):
        q = build_generator(preset("bistable", volume=volume, n_trunc=3))
        u = unitary_of(block_embed(q))
        sigma_min = np.linalg.svd(q.entries, compute_uv=False).min()
        for cfg in (QPEConfig(shots=None), QPEConfig(seed=2)):
            res = qpe_run(u, cfg)
            assert abs(res.lambda_schlogl - sigma_min) <= res.resolution
        assert sum(res.phase_histogram.values()) == 500_000


def test_seeded_runs_repeat():
    u = unitary_of(block_embed(build_generator(preset("bistable", volume=1.1, n_trunc=3))))
    a = qpe_run(u, QPEConfig(shots=20_000, seed=9))
    b = qpe_run(u, QPEConfig(shots=20_000, seed=9))
    assert a.phase_histogram == b.phase_histogram


def test_config_validation():
    with pytest.raises(DomainError):
        QPEConfig(precision_qubits=0)
    with pytest.raises(DomainError):
        QPEConfig(shots=0)
    with pytest.raises(DomainError):
        qpe_run(np.eye(4), QPEConfig(query_qubits=3))
    with pytest.raises(DomainError):
        qpe_run(np.diag([1.0, 2.0]))


def test_histogram_csv(tmp_path):
    res = qpe_run(phase_gate(0.25), QPEConfig(precision_qubits=2, shots=10, input_state=StateVector.basis(1, 1)))
    res.write_histogram_csv(tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines() == ["phase,counts", "0.25,10"]
    assert res.to_dict()["lambda_unitary"]["im"] == pytest.approx(1.0)


def test_uniform_input_histogram_matches_kernel_sum():
    q = build_generator(preset("bistable", volume=5.5, n_trunc=3))
    hm = block_embed(q).entries
    w, v = np.linalg.eigh(hm)
    p = 6
    d = 2**p
    weights = np.abs(v.conj().T @ np.full(8, 8**-0.5)) ** 2
    phis = (-w / (2 * np.pi)) % 1.0
    k = np.arange(d)
    expected = np.zeros(d)
    for wt, phi in zip(weights, phis):
        amp = np.exp(2j * np.pi * np.outer(np.arange(d), phi - k / d)).sum(axis=0) / d
        expected += wt * np.abs(amp) ** 2
    res = qpe_run(unitary_of(hm), QPEConfig(precision_qubits=p, shots=None))
    got = np.array([res.phase_histogram.get(j / d, 0.0) for j in k])
    np.testing.assert_allclose(got, expected, atol=1e-12)
