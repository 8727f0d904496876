import math

import numpy as np
import pytest

from qschlogl.cme import preset
from qschlogl.errors import DomainError
from qschlogl.experiments import (
    minimal_exact_depth,
    sweep_metrics,
    sweep_point,
    truncation_study,
    volume_grid,
)
from qschlogl.pauli import Ordering
from qschlogl.qsim import AnsatzSpec


def test_volume_grid():
    assert volume_grid(0.1, 20.1, 1.0)[-1] == pytest.approx(20.1)
    assert len(volume_grid(0.1, 20.1, 1.0)) == 21
    assert volume_grid(1, 1, 0.5) == [1]
    for args in ((2, 1, 1), (0, 1, 0.5), (1, 2, 0)):
        with pytest.raises(DomainError):
            volume_grid(*args)


def test_sweep_point_without_vqd():
    row = sweep_point(preset("bistable", volume=1.0, n_trunc=1))
    assert row.lambda0 == pytest.approx(0.0, abs=1e-12)
    assert row.lambda1_nonhermitian == pytest.approx(3.2)
    # singular values of the 2x2 generator: 0 and sqrt(2)*|(0.25, 2.95)|
    assert row.lambda1_hermitian == pytest.approx(math.sqrt(2 * (0.25**2 + 2.95**2)))
    assert math.isnan(row.lambda1_vqd)


def test_sweep_point_with_vqd_matches_hermitian_column():
    for volume in (0.5, 8.5, 20.0):
        row = sweep_point(preset("bistable", volume=volume, n_trunc=3), AnsatzSpec(2, reps=1))
        assert row.vqd_rel_error <= 1e-4
    with pytest.raises(DomainError):
        sweep_point(preset("bistable", n_trunc=4), AnsatzSpec(2, reps=1))


def test_sweep_metrics():
    rows = [sweep_point(preset("bistable", volume=v, n_trunc=31)) for v in (0.5, 2.0, 5.0)]
    m = sweep_metrics(rows)
    assert m["points"] == 3 and m["rmsd"] >= 0
    assert "vqd_max_rel_error" not in m


def test_full_keep_is_exact():
    for n_trunc in (3, 7):
        rows = truncation_study(preset("bistable", volume=8.5, n_trunc=n_trunc), keeps=[10 if n_trunc == 3 else 28])
        for r in rows:
            if r.keep == r.n_terms:
                assert r.lambda0_exact and r.lambda1_exact


def test_truncation_reference_cells():
    two = truncation_study(preset("bistable", volume=8.5, n_trunc=3))
    three = truncation_study(preset("bistable", volume=8.5, n_trunc=7))
    assert minimal_exact_depth(two, Ordering.DEFAULT, 0) == 6
    assert minimal_exact_depth(three, "optimized", 0) == 6
    mag24 = next(r for r in three if r.strategy == "magnitude" and r.keep == 24)
    assert mag24.lambda1_pct_error == pytest.approx(1.29, abs=0.05)
    # keeps beyond an ordering's length are skipped
    assert max(r.keep for r in three if r.strategy == "optimized") == 6
    assert {r.n_terms for r in three} == {28}


def test_truncation_with_vqd_agrees_with_exact():
    sys = preset("bistable", volume=8.5, n_trunc=3)
    exact = truncation_study(sys, ["default"], [6, 10])
    varia = truncation_study(sys, ["default"], [6, 10], ansatz=AnsatzSpec(2, reps=1))
    for a, b in zip(exact, varia):
        assert b.lambda0 == pytest.approx(a.lambda0, abs=1e-6)
        assert b.lambda1 == pytest.approx(a.lambda1, rel=1e-4)


def test_minimal_exact_depth_none():
    assert minimal_exact_depth([], "default", 1) is None
