import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qschlogl.cme import build_generator, preset
from qschlogl.errors import DomainError
from qschlogl.hermitize import constant_vector, spd_form
from qschlogl.pauli import PauliSum, decompose
from qschlogl.qsim import AnsatzSpec, build_ansatz
from qschlogl.variational import (
    GradientMode,
    Init,
    MaxItersWarning,
    Objective,
    VQDConfig,
    gradient,
    vqd,
    vqd_exact0,
    vqe_ground,
)


def spd_sum(n_qubits, volume=8.5, kind="bistable"):
    return decompose(spd_form(build_generator(preset(kind, volume=volume, n_trunc=2**n_qubits - 1))))


def test_one_qubit_ground():
    p = PauliSum.from_dict({"I": 1.6, "Z": -1.6})
    energy, params, state = vqe_ground(p, AnsatzSpec(1, reps=1))
    assert abs(energy) <= 1e-6
    assert params.shape == (2,)
    assert abs(np.linalg.norm(state.amplitudes) - 1) <= 1e-10


def test_two_qubit_ground_is_zero():
    energy, _, _ = vqe_ground(spd_sum(2, volume=1.0), AnsatzSpec(2, reps=1))
    assert abs(energy) <= 1e-6


def test_identity_cost_is_constant(rng):
    p = PauliSum.from_dict({"II": 1.0})
    obj = Objective(p, build_ansatz(AnsatzSpec(2, reps=1)))
    np.testing.assert_allclose(obj.costs(rng.uniform(-np.pi, np.pi, (20, 4))), 1.0, atol=1e-12)


def test_constant_hamiltonian_has_zero_gradient(rng):
    circ = build_ansatz(AnsatzSpec(3, reps=2))
    g = gradient(PauliSum.from_dict({"III": 2.5}), circ, rng.uniform(-3, 3, circ.num_parameters))
    assert np.abs(g).max() <= 1e-12


@settings(max_examples=25)
@given(st.integers(0, 2**31), st.sampled_from([(2, 1), (3, 2), (4, 4)]))
def test_parameter_shift_matches_finite_difference(seed, shape):
    n, reps = shape
    rng = np.random.default_rng(seed)
    p = spd_sum(n, volume=float(rng.uniform(0.5, 20)))
    circ = build_ansatz(AnsatzSpec(n, reps=reps))
    theta = rng.uniform(-np.pi, np.pi, circ.num_parameters)
    w0 = constant_vector(n)
    penalties = [(2 * p.one_norm(), w0)]
    ps = gradient(p, circ, theta, "parameter-shift", penalties)
    fd = gradient(p, circ, theta, "central-difference", penalties)
    scale = max(1.0, np.abs(ps).max())
    assert np.abs(ps - fd).max() <= 1e-6 * scale


def test_vqd_levels_match_oracle():
    for n, reps in ((2, 1), (3, 2)):
        p = spd_sum(n)
        ref = np.linalg.eigvalsh(p.to_matrix())
        report = vqd(p, AnsatzSpec(n, reps=reps), VQDConfig(k=2))
        assert abs(report.eigenvalue_estimates[0] - ref[0]) <= 1e-6
        assert report.eigenvalue_estimates[1] == pytest.approx(ref[1], rel=1e-4)
        assert abs(np.vdot(report.states[0].amplitudes, report.states[1].amplitudes)) <= 1e-3
        for s in report.states:
            assert abs(np.linalg.norm(s.amplitudes) - 1) <= 1e-10


def test_gradient_vanishes_at_converged_minimum():
    # the default |Δcost| rule can stop with a gradient norm of a few 1e-5 when costs are O(1e3),
    # so the minimum is polished with the gradient criterion alone
    for n, reps in ((2, 1), (3, 2)):
        p = spd_sum(n)
        _, theta, _ = vqe_ground(p, AnsatzSpec(n, reps=reps), VQDConfig(k=1, ftol=0.0))
        g = gradient(p, build_ansatz(AnsatzSpec(n, reps=reps)), theta)
        assert np.linalg.norm(g) <= 1e-5


def test_variational_bound_and_envelope():
    p = spd_sum(3)
    ref = np.linalg.eigvalsh(p.to_matrix())
    report = vqd(p, AnsatzSpec(3, reps=2), VQDConfig(k=2, seed=3))
    for level, trace in enumerate(report.iteration_trace):
        costs = np.array([c for _, c in trace])
        assert costs.min() >= ref[0] - 1e-9
        env = report.running_best(level)
        assert all(b <= a for a, b in zip(env, env[1:]))
        assert [i for i, _ in trace] == list(range(1, len(trace) + 1))
    assert report.iters_used == [len(t) for t in report.iteration_trace]


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.floats(0.5, 20.0))
def test_deflated_cost_bounded_by_lambda1(seed, volume):
    # with the exact ground state as penalty vector and beta = 2 sum|c| > spread
    rng = np.random.default_rng(seed)
    p = spd_sum(3, volume=volume)
    w, v = np.linalg.eigh(p.to_matrix())
    beta = VQDConfig().resolved_betas(p)[0]
    assert beta > w[-1] - w[0]
    obj = Objective(p, build_ansatz(AnsatzSpec(3, reps=2)), [(beta, v[:, 0])])
    costs = obj.costs(rng.uniform(-np.pi, np.pi, (200, obj.n_params)))
    assert costs.min() >= w[1] - 1e-9


def test_deflated_minimization_stays_above_lambda1():
    from qschlogl import optim

    p = spd_sum(3)
    w, v = np.linalg.eigh(p.to_matrix())
    obj = Objective(p, build_ansatz(AnsatzSpec(3, reps=2)), [(VQDConfig().resolved_betas(p)[0], v[:, 0])])
    x0 = np.random.default_rng(5).uniform(-np.pi, np.pi, obj.n_params)
    res = optim.lbfgsb(lambda x: obj.value_and_gradient(x, GradientMode.PARAMETER_SHIFT), x0, max_iters=5000)
    assert min(c for _, c in res.trace) >= w[1] - 1e-9
    assert res.fun == pytest.approx(w[1], rel=1e-6)


def test_exact0_level_zero_is_analytic():
    p = spd_sum(2)
    report = vqd_exact0(p, AnsatzSpec(2, reps=1), VQDConfig(k=2, init=Init.CONSTANT_STATE_EXACT))
    assert report.eigenvalue_estimates[0] == 0.0
    np.testing.assert_array_equal(report.states[0].amplitudes, constant_vector(2))
    assert report.iters_used[0] == 0 and report.status[0] == "analytic"
    assert report.analytic_levels == (0,)
    ref = np.linalg.eigvalsh(p.to_matrix())[1]
    assert abs(report.eigenvalue_estimates[1] - ref) <= 1e-6 * max(1.0, ref)


def test_vqd_dispatches_exact0():
    p = spd_sum(2)
    report = vqd(p, AnsatzSpec(2, reps=1), VQDConfig(init="constant-state-exact"))
    assert report.status[0] == "analytic"


def test_exact0_rejects_non_generator_operator():
    with pytest.raises(DomainError):
        vqd_exact0(PauliSum.from_dict({"II": 1.0, "ZZ": 0.5}), AnsatzSpec(2, reps=1))


def test_matched_seed_starts():
    # both variants start level 1 from the same point, so the exact0 saving is level 0's cost
    p = spd_sum(2)
    plain = vqd(p, AnsatzSpec(2, reps=1), VQDConfig(seed=4))
    exact = vqd_exact0(p, AnsatzSpec(2, reps=1), VQDConfig(seed=4, init="constant-state-exact"))
    assert exact.iters_used[0] == 0
    assert exact.total_iterations < plain.total_iterations


def test_max_iters_warning():
    with pytest.warns(MaxItersWarning):
        report = vqd(spd_sum(3), AnsatzSpec(3, reps=2), VQDConfig(k=1, max_iters=3))
    assert report.status == ["max_iters"]
    assert report.iters_used == [3]


def test_adam_optimizer_runs():
    p = PauliSum.from_dict({"I": 1.6, "Z": -1.6})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxItersWarning)
        energy, _, _ = vqe_ground(p, AnsatzSpec(1, reps=1), VQDConfig(k=1, optimizer="adam", max_iters=500))
    assert energy <= 1e-3


def test_config_validation():
    with pytest.raises(DomainError):
        VQDConfig(k=0)
    with pytest.raises(DomainError):
        VQDConfig(k=3, betas=(1.0,))
    with pytest.raises(DomainError):
        VQDConfig(k=2, betas=(-1.0,))
    with pytest.raises(ValueError):
        VQDConfig(gradient="spsa")
    with pytest.raises(DomainError):
        vqd(spd_sum(2), AnsatzSpec(3, reps=1))
    assert VQDConfig(k=3).resolved_betas(PauliSum.from_dict({"Z": -2.0})) == (4.0, 4.0)


def test_report_serialization(tmp_path):
    report = vqd(spd_sum(2), AnsatzSpec(2, reps=1))
    d = report.to_dict()
    assert len(d["eigenvalues"]) == 2 and len(d["traces"]) == 2
    report.write_trace_csv(tmp_path / "t.csv", header="h")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[1] == "level,iteration,cost"
    assert len(lines) == 2 + report.total_iterations
