import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bifcc.cubic import CubicParam
from bifcc.errors import DegenerateError, DomainError
from bifcc.params import (LocusClass, classify_codes, classify_locus, from_near_infinity,
                          green_minus, green_pm_array, green_plus, lyapunov, marking_involution,
                          near_infinity_coords, phi_minus, phi_minus_array, phi_minus_near)
from bifcc.wringing import TWO_23


def test_green_values():
    assert green_plus(CubicParam(0, 0)).value == 0 == green_minus(CubicParam(0, 0)).value
    p = CubicParam(10, 0)
    assert green_minus(p).value == pytest.approx(2.7647, abs=1e-4)
    assert green_plus(p).value == pytest.approx(0.8446, abs=1e-4)


def test_lyapunov():
    assert lyapunov(CubicParam(0, 0)) == pytest.approx(math.log(3))
    assert lyapunov(CubicParam(10, 0)) == pytest.approx(4.7079, abs=1e-4)
    p = CubicParam(10, 10)
    assert lyapunov(p) == pytest.approx(math.log(3) + green_minus(p).value)


def test_involution_examples():
    assert marking_involution(CubicParam(1, 0)) == CubicParam(-1, 4)
    p = CubicParam(10, 0)
    assert green_plus(marking_involution(p)).value == pytest.approx(green_minus(p).value, abs=1e-9)


@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
def test_involution_swaps_greens(c, v):
    p = CubicParam(c, v)
    q = marking_involution(p)
    assert green_plus(q).value == pytest.approx(green_minus(p).value, abs=1e-9)
    assert green_minus(q).value == pytest.approx(green_plus(p).value, abs=1e-9)
    back = marking_involution(q)
    assert back.c == p.c
    assert abs(back.v - p.v) <= 8 * 2.0 ** -52 * (abs(v) + 4 * abs(c) ** 3)


@pytest.mark.parametrize("p, want", [
    (CubicParam(0, 0), LocusClass.C), (CubicParam(10, 10), LocusClass.C_PLUS_ONLY),
    (CubicParam(10, 0), LocusClass.SHIFT), (CubicParam(-10, 4010), LocusClass.C_MINUS_ONLY)])
def test_classify(p, want):
    assert classify_locus(p) is want


def test_classify_codes_match_scalar():
    c = np.array([0, 10, 10, -10], dtype=complex)
    v = np.array([0, 10, 0, 4010], dtype=complex)
    assert classify_codes(c, v).tolist() == [0, 1, 3, 2]


def test_greens_continuous_along_segment():
    ts = np.linspace(0, 1, 2001)
    c = 0.6 + 0.3j + 0.4 * ts
    v = 0.2 + 0j * ts
    gp, gm, _, _ = green_pm_array(c, v)
    assert np.max(np.abs(np.diff(gp))) < 0.02 and np.max(np.abs(np.diff(gm))) < 0.02


def test_phi_minus_examples():
    val = phi_minus(CubicParam(10, 0)).value
    assert val.real == pytest.approx(15.8738, abs=5e-4) and abs(val.imag) < 1e-9
    big = phi_minus(CubicParam(1000, 0)).value
    assert abs(big / (TWO_23 * 1000) - 1) < 2e-3
    p = CubicParam(10, 10)
    assert abs(phi_minus(p).value) == pytest.approx(math.exp(green_minus(p).value), rel=1e-9)


def test_phi_minus_power_level_used_beyond_principal_domain():
    # +c escapes faster than -c here, so a root of a power is taken
    p = CubicParam(3, -100)
    assert green_plus(p).value > green_minus(p).value
    res = phi_minus(p)
    assert res.power_level >= 1
    assert abs(res.value) == pytest.approx(math.exp(green_minus(p).value), rel=1e-9)


def test_phi_minus_near_agrees_with_continuation():
    p = CubicParam(3, -100)
    ref = phi_minus(p).value
    assert phi_minus_near(p, ref * 1.001).value == pytest.approx(ref, rel=1e-12)


def test_phi_minus_domain_error():
    with pytest.raises(DomainError):
        phi_minus(CubicParam(0, 0))


def test_phi_minus_array_principal():
    vals = phi_minus_array(np.array([10, 20j]), np.array([0, 0]))
    assert vals[0] == pytest.approx(phi_minus(CubicParam(10, 0)).value)


def test_near_infinity():
    assert near_infinity_coords(CubicParam(10, 0)) == (0.1, 0)
    assert near_infinity_coords(CubicParam(2, 6)) == (0.5, 3)
    p = from_near_infinity(0.001, 0.2)
    assert p.c == pytest.approx(1000) and p.v == pytest.approx(200)
    with pytest.raises(DegenerateError):
        near_infinity_coords(CubicParam(0, 1))


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_near_infinity_round_trip(c, v):
    q = from_near_infinity(*near_infinity_coords(CubicParam(c, v)))
    assert abs(q.c - c) <= 4 * 2.0 ** -52 * abs(c) * 2
    assert abs(q.v - v) <= 4 * 2.0 ** -52 * (abs(v) + 1e-300) * 4


def test_closure_at_infinity_directions():
    from bifcc.percurves import PerSpec, sample_curve
    pts = sample_curve(PerSpec("plus", 2, 0), (30, 40, 30, 40), 4)
    ratios = [p.v / p.c for p in pts]
    assert all(min(abs(r - 1), abs(r + 2)) < 0.1 for r in ratios)
