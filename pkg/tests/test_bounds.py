import json
import math

import numpy as np
import pytest

from nodalspec.bounds import (
    REPORT_COLUMNS,
    BoundUndefinedError,
    cor1_rhs,
    energy_ratio,
    geometric_times,
    smoothed_nodal_measure,
    thm1_rhs,
    thm2_rhs,
    verify_cor1,
    verify_thm1,
    verify_thm2,
)
from nodalspec.grid import Field, TorusGrid
from nodalspec.harness.generators import cosine_field
from nodalspec.nodal import ResolutionError
from tests.frozen import COR1_SINGLE, THM1_COS8, THM1_UNIT_E2, THM2_COS8

LAM8 = 4 * math.pi**2 * 64


def test_thm1_rhs_values():
    assert thm1_rhs(1.0, 1.0, math.e**2, 1) == pytest.approx(THM1_UNIT_E2, rel=1e-14)
    assert thm1_rhs(2 / math.pi, 1.0, LAM8, 2) == pytest.approx(THM1_COS8, rel=1e-14)
    assert thm1_rhs(1e-12, 1.0, LAM8, 2) < 1e-15


def test_thm2_rhs_values():
    assert thm2_rhs(1.0, 1.0, 100.0) == pytest.approx(10.0, rel=1e-15)
    assert thm2_rhs(2 / math.pi, 1.0, LAM8) == pytest.approx(THM2_COS8, rel=1e-14)
    assert thm2_rhs(1e-9, 1.0, LAM8) < 1e-6


@pytest.mark.parametrize("fn", [lambda lam: thm1_rhs(1, 1, lam, 2), lambda lam: thm2_rhs(1, 1, lam)])
@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_small_lambda_is_undefined(fn, lam):
    with pytest.raises(BoundUndefinedError):
        fn(lam)


def test_cor1_rhs_values():
    assert cor1_rhs([1.0], [4 * math.pi**2], [math.sqrt(2)], 2, 0.1) == pytest.approx(COR1_SINGLE, rel=1e-14)
    assert energy_ratio([1.0, 1.0]) == 0.5
    assert energy_ratio([1.0, 0.0, 0.0]) == 1.0
    assert energy_ratio([-2.0, 2.0, 2.0, -2.0]) == 0.25
    with pytest.raises(BoundUndefinedError):
        cor1_rhs([1.0, 1.0], [0.0, 4.0], [1.0, 1.0], 2)
    with pytest.raises(ValueError):
        cor1_rhs([1.0], [4.0, 5.0], [1.0], 2)
    with pytest.raises(ValueError):
        cor1_rhs([1.0], [4.0], [1.0], 2, eps=0.0)


def test_verify_thm1_cos8():
    f = cosine_field(TorusGrid(2, 512), 8)
    r = verify_thm1(f)
    assert r.theorem_id == "Thm1" and r.hypothesis_pass is None
    assert r.lam == pytest.approx(LAM8, rel=1e-15)
    assert r.measured_measure == pytest.approx(16.0, rel=1e-3)
    assert r.l1 == pytest.approx(2 / math.pi, abs=1e-3)
    assert r.rhs_value == pytest.approx(thm1_rhs(r.l1, r.linf, r.lam, 2), rel=1e-15)
    assert r.ratio == pytest.approx(16.0 / THM1_COS8, rel=2e-3)


def test_verify_thm1_low_frequency():
    r = verify_thm1(cosine_field(TorusGrid(2, 128), 1))
    assert r.lam == pytest.approx(4 * math.pi**2)
    assert r.measured_measure == pytest.approx(2.0, rel=1e-3)
    assert r.ratio >= 1


def test_verify_thm2_cos8():
    f = cosine_field(TorusGrid(2, 512), 8)
    r = verify_thm2(f, c_reg=2.5)
    assert r.hypothesis_pass is True
    assert 1.9 <= r.params["c_fit"] <= 2.1
    assert not r.params["eps_floor_applied"]
    assert r.params["eps"][0] == pytest.approx(1 / 512)
    assert r.params["eps"][-1] == pytest.approx(math.log(r.linf / r.l1) / math.sqrt(r.lam))
    assert r.ratio == pytest.approx(16.0 / THM2_COS8, rel=2e-3)


def test_verify_thm2_collapsed_range():
    # a near square wave has l1 close to linf, so the range falls below one spacing
    g = TorusGrid(2, 64)
    f = Field.from_function(g, lambda x, y: np.tanh(40 * np.cos(2 * np.pi * x)))
    r = verify_thm2(f)
    assert r.params["eps_floor_applied"]
    assert r.params["eps"] == [g.spacing]
    with pytest.raises(ResolutionError):
        verify_thm2(f, strict=True)


@pytest.mark.parametrize("alpha", [7.0, -0.3])
def test_verdicts_are_scale_invariant(alpha):
    f = cosine_field(TorusGrid(2, 128), 3) + cosine_field(TorusGrid(2, 128), 5, axis=1) * 0.4
    g = f * alpha
    for verify in (verify_thm1, verify_thm2):
        a, b = verify(f), verify(g)
        assert a.lam == b.lam
        assert a.measured_measure == b.measured_measure
        assert a.ratio == pytest.approx(b.ratio, rel=1e-12)
        assert a.hypothesis_pass == b.hypothesis_pass
        assert b.l1 == pytest.approx(abs(alpha) * a.l1, rel=1e-12)


def test_verify_cor1_single_and_pair():
    g = TorusGrid(2, 256)
    r = verify_cor1(g, [(1.0, (1, 0), "cos")])
    assert r.rhs_value == pytest.approx(COR1_SINGLE, rel=1e-14)
    assert r.measured_measure == pytest.approx(2.0, rel=1e-3)
    assert r.params["chain_holds"]
    pair = verify_cor1(g, [(1.0, (1, 0), "cos"), (-1.0, (0, 1), "cos")])
    assert pair.params["energy_ratio"] == 0.5
    assert pair.params["pair_bound_conjectured"] == pytest.approx(2 * math.pi)
    assert pair.params["sum_a2"] == pytest.approx(pair.params["l2_squared"], rel=1e-12)


def test_report_serialization():
    r = verify_thm1(cosine_field(TorusGrid(2, 64), 2))
    row = r.to_row()
    assert tuple(row) == REPORT_COLUMNS
    assert json.loads(row["params"]) == {"dim": 2, "N": 64}
    back = json.loads(r.to_json())
    assert back["theorem_id"] == "Thm1" and back["ratio"] == r.ratio


def test_geometric_times():
    assert geometric_times(1e-3, 3) == [1e-3, 5e-4, 2.5e-4, 1.25e-4]


def test_smoothed_measure_of_eigenfunction_is_constant():
    f = cosine_field(TorusGrid(1, 1024), 4)
    pairs, low = smoothed_nodal_measure(f, geometric_times(1e-3, 5))
    assert [m for _, m in pairs] == [8] * 6 and low == 8


def test_smoothed_measure_of_mixture():
    g = TorusGrid(1, 4096)
    f = cosine_field(g, 1) + cosine_field(g, 6)
    ts = [0.02, 0.01, 0.005, 1e-3, 1e-4]
    pairs, low = smoothed_nodal_measure(f, ts)
    # dense slice oracle for each smoothed field
    xs = (np.arange(100_000) + 0.5) / 100_000
    for t, m in pairs:
        v = sum(math.exp(-4 * math.pi**2 * k * k * t) * np.cos(2 * np.pi * k * xs) for k in (1, 6))
        assert m == np.count_nonzero(np.sign(v) != np.sign(np.roll(v, -1)))
    assert pairs[0][1] == 2 and pairs[-1][1] == 10 and low == 2


def test_smoothed_measure_of_positive_field():
    g = TorusGrid(2, 64)
    f = Field.from_function(g, lambda x, y: 1.5 + np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y))
    pairs, low = smoothed_nodal_measure(f, geometric_times(1e-3, 3))
    assert low == 0 and all(m == 0 for _, m in pairs)


def test_smoothed_measure_rejects_bad_times():
    f = cosine_field(TorusGrid(1, 64), 1)
    with pytest.raises(ValueError):
        smoothed_nodal_measure(f, [1e-3, 2e-3])
    with pytest.raises(ValueError):
        smoothed_nodal_measure(f, [1e-3, 0.0])
