import math
from fractions import Fraction

import numpy as np
import pytest

from bifcc.bifmeasure import (MAX_CELLS, _newton, classify, default_pairs, homotopy_solve,
                              intersection_total, max_green, misiurewicz_solve,
                              mu_bif_grid_estimate, mu_bif_intersection_estimate, orbit_jet,
                              window_around, write_candidates_csv)
from bifcc.cubic import CubicParam
from bifcc.errors import DomainError
from bifcc.params import green_minus, green_plus, marking_involution

SQ = 1 / math.sqrt(2)


@pytest.fixture(scope="module")
def report_2121():
    return misiurewicz_solve(2, 1, 2, 1, region=(-2, 2, -2, 2))


def _near(cands, c, v, tol=1e-8):
    return [m for m in cands if abs(m.p.c - c) < tol and abs(m.p.v - v) < tol]


@pytest.mark.parametrize("sign, n, k", [(1, 3, 1), (-1, 2, 0), (1, 1, 0)])
def test_orbit_jet_partials(sign, n, k):
    c, v = 0.3 + 0.2j, -0.4 + 0.1j
    f, fc, fv = orbit_jet(c, v, sign, n, k)
    h = 1e-6
    dc = (orbit_jet(c + h, v, sign, n, k)[0] - orbit_jet(c - h, v, sign, n, k)[0]) / (2 * h)
    dv = (orbit_jet(c, v + h, sign, n, k)[0] - orbit_jet(c, v - h, sign, n, k)[0]) / (2 * h)
    assert fc == pytest.approx(dc, rel=1e-7, abs=1e-9)
    assert fv == pytest.approx(dv, rel=1e-7, abs=1e-9)


def test_misiurewicz_2121(report_2121):
    hit = _near(report_2121.candidates, 1, -2)
    assert len(hit) == 1
    m = hit[0]
    assert m.strict == (True, True) and m.is_misiurewicz
    assert m.plus_multiplier == pytest.approx(9) and m.minus_multiplier == pytest.approx(9)
    half = _near(report_2121.candidates, 0.5, -1)
    assert half and half[0].strict == (True, False)
    assert half[0] in report_2121.filtered
    assert _near(report_2121.misiurewicz, -1, 2)


def test_candidates_are_newton_fixed_points(report_2121):
    for m in report_2121.candidates:
        assert max(m.residuals) < 1e-9
        c, v, ok, _ = _newton(m.p.c, m.p.v, m.spec, max_iter=1)
        assert abs(c - m.p.c) < 1e-9 and abs(v - m.p.v) < 1e-9


def test_strict_points_have_bounded_orbits(report_2121):
    for m in report_2121.misiurewicz:
        # a repelling landing cycle amplifies rounding until the orbit escapes
        assert green_plus(m.p).value < 1e-12 and green_minus(m.p).value < 1e-12
        assert abs(m.plus_multiplier) > 1 and abs(m.minus_multiplier) > 1


def test_involution_symmetry(report_2121):
    for m in report_2121.candidates:
        q = marking_involution(m.p)
        other = classify(q, (2, 1, 2, 1))
        assert max(other.residuals) < 1e-8
        assert other.strict == m.strict[::-1]


def test_one_zero_one_zero():
    rep = misiurewicz_solve(1, 0, 1, 0)
    got = sorted((m.p.c for m in rep.candidates), key=lambda z: z.imag)
    assert got == [pytest.approx(-1j * SQ), pytest.approx(0, abs=1e-12), pytest.approx(1j * SQ)]
    assert not rep.misiurewicz
    assert [m.degenerate for m in rep.candidates if abs(m.p.c) < 1e-9] == [True]


def test_solve_guards():
    with pytest.raises(DomainError):
        misiurewicz_solve(5, 0, 4, 0)
    with pytest.raises(ValueError):
        misiurewicz_solve(2, 2, 1, 0)


def test_homotopy_method_agrees():
    grid = misiurewicz_solve(2, 1, 1, 0)
    hom = misiurewicz_solve(2, 1, 1, 0, method="homotopy")
    key = lambda rep: sorted((round(m.p.c.real, 7), round(m.p.c.imag, 7)) for m in rep.candidates)
    assert key(grid) == key(hom)


def test_candidates_csv(tmp_path, report_2121):
    path = write_candidates_csv(report_2121.candidates, tmp_path / "m.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("re_c,im_c,re_v,im_v")
    assert len(lines) == len(report_2121.candidates) + 1


def test_homotopy_counts_roots_with_multiplicity():
    res = homotopy_solve((2, 1, 1, 0))
    assert res.paths == res.bezout == 3 * 3
    assert sum(p.multiplicity for p in res.points) == res.paths


@pytest.mark.parametrize("plus, minus", [((1, 0), (1, 0)), ((2, 0), (2, 0)), ((2, 1), (2, 1))])
def test_pair_totals_reach_cap(plus, minus):
    pt = intersection_total(plus, minus)
    assert pt.total == pytest.approx(1 / 3, abs=1e-12)
    assert pt.total <= pt.cap * (1 + 1e-12)
    assert pt.weight == Fraction(1, 3 ** (plus[0] + minus[0]))


def test_pair_one_zero_three_points():
    pt = intersection_total((1, 0), (1, 0))
    assert pt.count == 3 and len(pt.points) == 3
    assert pt.degenerate_count == 1
    assert pt.total_without_degenerate == pytest.approx(2 / 9)


def test_pair_mixed_within_bounds():
    pt = intersection_total((1, 0), (2, 1))
    assert 0.30 <= pt.total <= 0.34


def test_estimate_and_empty_region():
    est = mu_bif_intersection_estimate(2)
    assert [p.plus for p in est.pairs] == [(1, 0), (2, 0)]
    assert est.total == pytest.approx(1 / 3)
    assert mu_bif_intersection_estimate(2, region=(1, -1, 0, 1)).total == 0
    local = mu_bif_intersection_estimate(1, region=(-0.1, 0.1, -0.1, 0.1))
    assert local.total == pytest.approx(1 / 9)
    assert default_pairs(3)[-1] == ((3, 0), (3, 0))
    with pytest.raises(DomainError):
        mu_bif_intersection_estimate(5)


def test_max_green_examples():
    assert max_green(CubicParam(0, 0)) == 0
    assert max_green(CubicParam(10, 0)) == pytest.approx(2.7647, abs=1e-4)
    p = CubicParam(10, 10)
    assert max_green(p) == green_minus(p).value


def _grid_potential(fn):
    def pot(cw, vw, n):
        axes = [np.linspace(cw[0], cw[1], n), np.linspace(cw[2], cw[3], n),
                np.linspace(vw[0], vw[1], n), np.linspace(vw[2], vw[3], n)]
        a, b, x, y = np.meshgrid(*axes, indexing="ij")
        return fn(a + 1j * b, x + 1j * y)
    return pot


def _rho(z):
    # dd^c of log(1 + |z|^2)/2 has density 1/(pi (1 + |z|^2)^2)
    return 1.0 / (math.pi * (1.0 + np.abs(z) ** 2) ** 2)


@pytest.mark.parametrize("lam", [0.0, 0.6 - 0.3j])
def test_monge_ampere_against_quadrature(lam):
    # u = a(c + lam v) + a(v): (dd^c u)^2 = 2 dd^c a ^ dd^c a pulled back by a unit-Jacobian shear
    r = 24
    pot = _grid_potential(lambda c, v: 0.5 * np.log1p(np.abs(c + lam * v) ** 2)
                          + 0.5 * np.log1p(np.abs(v) ** 2))
    est = mu_bif_grid_estimate((-1, 1, -1, 1), (-1, 1, -1, 1), r, 0, potential=pot)
    w = 1 + 1 / (r - 1)
    t, wt = np.polynomial.legendre.leggauss(40)
    t, wt = t * w, wt * w
    a, b, x, y = np.meshgrid(t, t, t, t, indexing="ij")
    weights = np.einsum("i,j,k,l->ijkl", wt, wt, wt, wt)
    v = x + 1j * y
    ref = float((weights * 2 * _rho(a + 1j * b + lam * v) * _rho(v)).sum())
    assert est.total == pytest.approx(ref, rel=5e-3)
    assert est.clamped_mass == 0


def test_pluriharmonic_potential_has_no_mass():
    pot = _grid_potential(lambda c, v: np.log(np.abs(c + 2)) + (v * c).real)
    est = mu_bif_grid_estimate((-1, 1, -1, 1), (-1, 1, -1, 1), 16, 1, potential=pot)
    assert est.total < 1e-10


def test_grid_escape_side_and_interior():
    esc = mu_bif_grid_estimate(window_around(10, 0.5), window_around(10, 0.5), 16)
    assert esc.total < 1e-3
    inner = mu_bif_grid_estimate(window_around(0, 0.1), window_around(0, 0.1), 16)
    assert inner.total == 0


def test_grid_guards():
    with pytest.raises(ValueError):
        mu_bif_grid_estimate((-1, 1, -1, 1), (-1, 1, -1, 1), 8)
    with pytest.raises(MemoryError):
        mu_bif_grid_estimate((-1, 1, -1, 1), (-1, 1, -1, 1), 65)
    assert 64 ** 4 == MAX_CELLS
