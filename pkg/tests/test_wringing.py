import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bifcc.cubic import CubicParam
from bifcc.errors import DomainError
from bifcc.params import green_minus, phi_minus
from bifcc.percurves import PerSpec, per_value, sample_curve
from bifcc.wringing import (TWO_23, WringU, charts_min_distance, g_u, s_path, scaling_residual,
                            t_path, trace_leaf, transversal_disk, wring_compose, wring_identity,
                            y_grid)

reals = st.floats(-5, 5, allow_nan=False)
pos = st.floats(0.1, 5, allow_nan=False)
us = st.builds(WringU, pos, reals)
outside = st.complex_numbers(min_magnitude=1.01, max_magnitude=50, allow_nan=False, allow_infinity=False)


def test_compose_example():
    assert complex(wring_compose(WringU(2, 1), WringU(3, 2))) == 6 + 5j
    assert WringU(2, 1) * WringU(3, 2) == WringU(6, 5)


def test_rejects_left_half_plane():
    with pytest.raises(DomainError):
        WringU(0, 1)


@given(us)
def test_identity(u):
    one = wring_identity()
    assert u * one == u and one * u == u


@given(us, us, us)
def test_associative(a, b, c):
    x, y = complex((a * b) * c), complex(a * (b * c))
    assert abs(x - y) <= 4 * 2.0 ** -52 * max(1.0, abs(x))


def test_g_u_examples():
    assert g_u(wring_identity(), 2 - 3j) == 2 - 3j
    assert g_u(WringU(2), 3) == pytest.approx(9)
    e2 = math.exp(2)
    assert g_u(WringU(1, 1), e2) == pytest.approx(e2 * cmath.exp(2j))
    with pytest.raises(DomainError):
        g_u(WringU(2), 0.5j)


@given(us, us, outside)
def test_action_law(a, b, z):
    lhs = g_u(a * b, z)
    rhs = g_u(a, g_u(b, z))
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@given(us, outside)
def test_commutes_with_cubing(u, z):
    if abs(z) ** (3 * u.s) > 1e250:
        return
    lhs = g_u(u, z ** 3)
    rhs = g_u(u, z) ** 3
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_trace_on_per_plus_one():
    base = CubicParam(10, 10)
    tr = trace_leaf(base, s_path(2.0, 20), "per-plus-1")
    assert len(tr.steps) == 20
    assert all(abs(step.p.v - step.p.c) < 1e-9 for step in tr.steps)
    assert scaling_residual(tr) < 1e-6
    assert tr.steps[-1].u == WringU(2.0)


def test_identity_path_stays_put():
    base = CubicParam(10, 10)
    tr = trace_leaf(base, [wring_identity()] * 3, "per-plus-1")
    for step in tr.steps:
        assert step.p.c == pytest.approx(base.c, abs=1e-12) and step.p.v == pytest.approx(base.v, abs=1e-12)
        assert step.residual_phi == pytest.approx(0, abs=1e-9)


def test_rotation_keeps_modulus():
    base = CubicParam(10, 10)
    tr = trace_leaf(base, t_path(0.5, 10), "per-plus-1")
    r0 = abs(phi_minus(base).value)
    for step in tr.steps:
        assert abs(abs(phi_minus(step.p).value) - r0) < 1e-8 * r0


def test_leaf_action_compatibility():
    base = CubicParam(10, 10)
    direct = trace_leaf(base, s_path(2.0, 10), "per-plus-1").steps[-1].p
    mid = trace_leaf(base, s_path(1.5, 10), "per-plus-1").steps[-1].p
    via = trace_leaf(mid, s_path(4.0 / 3.0, 10), "per-plus-1").steps[-1].p
    assert abs(direct.c - via.c) < 1e-7 * abs(direct.c)
    assert abs(direct.v - via.v) < 1e-7 * abs(direct.v)


def test_superattracting_invariance_along_leaf():
    s = PerSpec("plus", 2)
    base = next(p for p in sample_curve(s, [8.0]) if green_minus(p).value > green_minus(CubicParam(8, 8)).value / 2)
    tr = trace_leaf(base, s_path(1.5, 10), "per-plus-2")
    for step in tr.steps:
        assert abs(per_value(s, step.p)) < 1e-8 * max(1.0, abs(step.p.c)) ** 3


def test_trace_csv(tmp_path):
    tr = trace_leaf(CubicParam(10, 10), s_path(1.2, 3), "per-plus-1")
    path = tr.write_csv(tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "s,t,re_c,im_c,re_v,im_v,residual_phi,residual_inv"
    assert len(lines) == 4


def test_transversal_near_infinity():
    k = TWO_23 * 1000
    t = transversal_disk(k, resolution=9)
    assert t.success_rate == 1.0
    centre = t.xs[4, 4]
    assert t.ys[4, 4] == 0
    assert abs(centre - 1e-3) < 2e-5
    c, v = t.params()
    for ci, vi in zip(c[t.ok], v[t.ok]):
        assert abs(phi_minus(CubicParam(ci, vi)).value - k) < 1e-8 * abs(k)
    assert np.isfinite(t.lipschitz())


def test_transversal_charts_disjoint():
    a = transversal_disk(TWO_23 * 1000, resolution=9)
    b = transversal_disk(TWO_23 * 1500, resolution=9)
    assert charts_min_distance(a, b) > 0


def test_transversal_k_min():
    with pytest.raises(DomainError):
        transversal_disk(10.0)


def test_transversal_csv(tmp_path):
    t = transversal_disk(TWO_23 * 1000, ys=y_grid(3.0, 4))
    lines = t.write_csv(tmp_path / "x.csv").read_text().splitlines()
    assert lines[0] == "re_y,im_y,re_x,im_x"
    assert len(lines) == 17
