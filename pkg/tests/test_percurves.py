import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifcc.cubic import CubicParam
from bifcc.params import green_minus, green_plus
from bifcc.percurves import (PerSpec, aberth, cluster_roots, equidist_potential, involution_partner,
                             per_value, per_value_dv, sample_curve, total_degree_check,
                             v_roots_on_line, write_curve_csv)
from bifcc.params import marking_involution


def test_per_value_examples():
    assert per_value(PerSpec("plus", 1, 0), CubicParam(2, 5)) == 3
    assert per_value(PerSpec("plus", 2, 1), CubicParam(1, -2)) == 0
    assert per_value(PerSpec("minus", 1, 0), CubicParam(1, -5)) == 0
    c, v = 0.3 - 0.2j, 1.1 + 0.4j
    assert per_value(PerSpec("minus", 1, 0), CubicParam(c, v)) == pytest.approx(v + 4 * c ** 3 + c)


def test_perspec_validation():
    with pytest.raises(ValueError):
        PerSpec("plus", 0)
    with pytest.raises(ValueError):
        PerSpec("plus", 2, 2)
    assert str(PerSpec("minus", 3, 1)) == "Per-(3,1)"
    assert involution_partner(PerSpec("plus", 2, 1)) == PerSpec("minus", 2, 1)


def test_per_value_dv_matches_difference():
    s = PerSpec("plus", 3, 1)
    p = CubicParam(0.4 + 0.1j, -0.3 + 0.2j)
    val, dv = per_value_dv(s, p)
    h = 1e-6
    fd = (per_value(s, CubicParam(p.c, p.v + h)) - per_value(s, CubicParam(p.c, p.v - h))) / (2 * h)
    assert val == per_value(s, p)
    assert dv == pytest.approx(fd, rel=1e-7)


def test_per_value_overflow_is_infinite():
    assert math.isinf(per_value(PerSpec("plus", 12, 0), CubicParam(10, 0)).real)


def test_v_roots_examples():
    assert v_roots_on_line(PerSpec("plus", 1, 0), 0.7 - 2j) == [pytest.approx(0.7 - 2j)]
    assert v_roots_on_line(PerSpec("minus", 1, 0), 1) == [pytest.approx(-5)]
    roots = v_roots_on_line(PerSpec("plus", 2, 0), 1)
    # (v-1)^2 (v+2) + v - 1 = v^3 - 2v + 1 = (v - 1)(v^2 + v - 1)
    want = sorted(np.roots([1, 0, -2, 1]), key=lambda z: z.real)
    assert len(roots) == 3
    for a, b in zip(sorted(roots, key=lambda z: z.real), want):
        assert a == pytest.approx(b, abs=1e-10)


def test_multiplicity_reported():
    # Per+(2,1) at c0=1: (v-c)^2 (v+2c) has a double root at v=c
    groups = v_roots_on_line(PerSpec("plus", 2, 1), 1, with_multiplicity=True)
    mult = {round(z.real, 6): m for z, m in groups}
    assert mult == {1.0: 2, -2.0: 1}
    assert cluster_roots([1, 1 + 1e-9, 3]) == [(pytest.approx(1), 2), (3, 1)]


@settings(max_examples=50)
@given(st.integers(1, 4), st.sampled_from(["plus", "minus"]),
       st.complex_numbers(min_magnitude=0.1, max_magnitude=1.5, allow_nan=False, allow_infinity=False))
def test_root_count_is_three_power(n, sign, c0):
    s = PerSpec(sign, n, 0)
    roots = v_roots_on_line(s, c0)
    assert len(roots) == 3 ** (n - 1)
    scale = max(1.0, max(abs(r) for r in roots)) ** (3 ** (n - 1))
    for r in roots:
        assert abs(per_value(s, CubicParam(c0, r))) < 1e-6 * scale


@pytest.mark.parametrize("s, want", [(PerSpec("plus", 1), 1), (PerSpec("minus", 1), 3),
                                     (PerSpec("plus", 2), 3), (PerSpec("minus", 2), 9),
                                     (PerSpec("plus", 3), 9)])
def test_total_degree(s, want):
    assert total_degree_check(s) == want


def test_equidist_examples():
    p = CubicParam(10, 0)
    assert abs(equidist_potential(PerSpec("plus", 8), p) - green_plus(p).value) < 1e-3
    assert abs(equidist_potential(PerSpec("minus", 8), p) - 2.7647) < 1e-3
    assert equidist_potential(PerSpec("plus", 1), CubicParam(10, 10)) == -math.inf


def test_equidist_error_decays_like_three_power():
    p = CubicParam(1.2, 0.5j)
    g = green_plus(p).value
    ns = range(1, 11)
    errs = [abs(equidist_potential(PerSpec("plus", n), p) - g) for n in ns]
    assert max(e * 3.0 ** n for e, n in zip(errs, ns)) < 1
    assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))


def test_equidist_minus_far_escape():
    p = CubicParam(3, 400)
    g = green_minus(p).value
    assert abs(equidist_potential(PerSpec("minus", 10), p) - g) < 1e-4


@settings(max_examples=40)
@given(st.integers(1, 8), st.integers(0, 30))
def test_aberth_against_numpy(deg, seed):
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
    coeffs[0] = 1.0
    mine = aberth(coeffs)
    ref = np.roots(coeffs)
    assert len(mine) == deg
    for r in ref:
        assert np.min(np.abs(mine - r)) < 1e-7 * max(1, abs(r))


def test_sample_curve_examples():
    pts = sample_curve(PerSpec("plus", 1), (-1, 1, -1, 1), 5)
    assert len(pts) == 25 and all(p.v == pytest.approx(p.c) for p in pts)
    pts = sample_curve(PerSpec("minus", 1), [0, 1])
    assert [(p.c, p.v) for p in pts] == [(0, pytest.approx(0)), (1, pytest.approx(-5))]
    pts = sample_curve(PerSpec("plus", 2, 1), [1])
    assert any(abs(p.v + 2) < 1e-8 for p in pts)
    s = PerSpec("plus", 3)
    for p in sample_curve(s, (-1, 1, -1, 1), 4):
        assert abs(per_value(s, p)) < 1e-8


def test_involution_maps_curves():
    s = PerSpec("plus", 2)
    for p in sample_curve(s, [0.3 + 0.2j, -0.5j]):
        q = marking_involution(p)
        assert abs(per_value(involution_partner(s), q)) < 1e-7


def test_curve_csv(tmp_path):
    s = PerSpec("plus", 2)
    path = write_curve_csv(s, sample_curve(s, [0.5]), tmp_path / "c.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "sign,n,k,re_c,im_c,re_v,im_v,residual"
    assert len(lines) == 4
