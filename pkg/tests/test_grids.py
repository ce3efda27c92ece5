import math

import numpy as np
import pytest

from bifcc.grids import (GridField, laplacian_density, read_csv, read_pgm, sample_grid,
                         write_csv, write_pgm)


def test_constant_field_has_no_mass():
    g = sample_grid((-1, 1, -1, 1), 32, lambda c, v: np.ones(c.shape))
    d = laplacian_density(g)
    assert d.total() == 0.0


def test_fundamental_solution_unit_mass():
    a = 0.0123 + 0.0071j
    g = sample_grid((-1, 1, -1, 1), 201, lambda c, v: np.log(np.abs(c - a)))
    d = laplacian_density(g)
    assert d.meta["signed_total"] == pytest.approx(1.0, abs=1e-3)
    assert d.total() == pytest.approx(d.meta["signed_total"] - d.meta["clamped_mass"])
    far = np.abs(g.coords() - a) > 0.1
    assert np.max(np.abs(d.values[far])) < 1e-3


def test_tplus_density_sits_on_the_locus():
    # G+ is pluriharmonic off the bounded locus, so mass in the escape region is noise
    g = sample_grid((-2, 2, -2, 2), 128, "Gplus")
    d = laplacian_density(g)
    assert d.total() > 0.1
    assert d.values[g.values > 0.1].sum() < 2e-3 * d.total()


def test_resolution_guard_and_empty_region():
    with pytest.raises(ValueError):
        sample_grid((-1, 1, -1, 1), 4, "Gplus")
    with pytest.raises(ValueError):
        sample_grid((1, -1, -1, 1), 16, "Gplus")


def test_gridfield_shape_checked():
    with pytest.raises(ValueError):
        GridField(0j, (1.0, 1.0), (3, 2), np.zeros((3, 2)))


def test_pgm_round_trip(tmp_path):
    g = sample_grid((-2, 2, -1, 1), (40, 20), "maxG", "v-plane", 0.5)
    path = write_pgm(g, tmp_path / "g.pgm")
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n40 20\n65535\n")
    h = read_pgm(path)
    span = g.values.max() - g.values.min()
    assert np.max(np.abs(h.values - g.values)) <= span / 65535 + 1e-12
    side = (tmp_path / "g.pgm.json").read_text()
    assert '"min"' in side and '"region"' in side


def test_csv_round_trip(tmp_path):
    g = sample_grid((-2, 2, -2, 2), 16, "lyapunov")
    path = write_csv(g, tmp_path / "g.csv")
    assert path.read_text().splitlines()[0] == "x,y,value"
    h = read_csv(path)
    assert np.array_equal(h.values, g.values)
    assert h.total() == g.total()


def test_lyapunov_field_floor():
    g = sample_grid((-2, 2, -2, 2), 16, "lyapunov")
    assert g.values.min() >= math.log(3) - 1e-15
