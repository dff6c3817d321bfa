import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ltavg.model import OscillatorParams
from ltavg.sweep import (boundary_curve, boundary_from_grid, boundary_to_csv, compare, count_tongues,
                         extract_boundary, grid_from_csv, grid_from_labels, grid_to_csv, refine_boundary,
                         refine_edge_gamma, run_sweep, to_svg, validate_settings)

MATHIEU = OscillatorParams(r=0.0, g=0.0)


@pytest.fixture(scope="module")
def floquet_grid():
    return run_sweep(OscillatorParams(), (-3, 3), (0, 1), 30, 20, "floquet-general")


def disc_labels(n=12):
    g = np.linspace(-1, 1, n)
    G, Hh = np.meshgrid(g, g)
    return g, g, np.where(G**2 + Hh**2 < 0.5, "Unstable", "Stable")


def test_grid_shape_and_counts(floquet_grid):
    assert floquet_grid.shape == (20, 30)
    c = floquet_grid.counts()
    assert sum(c.values()) == 600 and c["Unstable"] > 0
    assert np.all(floquet_grid.labels()[0] == "Stable")  # h = 0 row


def test_csv_roundtrip_and_determinism(floquet_grid):
    text = grid_to_csv(floquet_grid)
    assert text == grid_to_csv(floquet_grid)
    again = grid_from_csv(text)
    assert np.array_equal(again.labels(), floquet_grid.labels())
    assert grid_to_csv(again) == text


def test_sweep_is_reproducible():
    # strong damping keeps the stable runs short
    base = OscillatorParams(g=0.2)
    a = run_sweep(base, (1.5, 2.5), (0, 0.6), 4, 3, "dns", {"n_ic": 1, "horizon_periods": 50})
    b = run_sweep(base, (1.5, 2.5), (0, 0.6), 4, 3, "dns", {"n_ic": 1, "horizon_periods": 50})
    assert grid_to_csv(a) == grid_to_csv(b)


def test_closed_boundary_around_disc():
    g, h, lab = disc_labels()
    lines = extract_boundary(grid_from_labels(g, h, lab))
    assert len(lines) == 1 and lines[0].closed
    r = np.hypot(*lines[0].vertices.T)
    assert np.all(np.abs(r - np.sqrt(0.5)) < 0.2)


def test_boundary_rejects_indeterminate():
    g, h, lab = disc_labels(5)
    lab[2, 2] = "Indeterminate"
    with pytest.raises(ValueError):
        extract_boundary(grid_from_labels(g, h, lab))


def test_refine_boundary_callable():
    h = refine_boundary(MATHIEU, 0.0, 0.0, 1.0, lambda p: "Unstable" if p.h > 0.37 else "Stable", tol_h=1e-4)
    assert abs(h - 0.37) < 1e-4
    with pytest.raises(ValueError):
        refine_boundary(MATHIEU, 0.0, 0.5, 1.0, lambda p: "Unstable")


def test_mathieu_edge():
    hi = refine_edge_gamma(MATHIEU, 0.2, 2.0, 2.5, "floquet-simplified")
    lo = refine_edge_gamma(MATHIEU, 0.2, 2.0, 1.5, "floquet-simplified")
    assert abs((hi - lo) - 0.2) < 0.02
    with pytest.raises(ValueError):
        refine_edge_gamma(MATHIEU, 0.2, 1.5, 2.5, "floquet-simplified")


def test_boundary_curve_and_tongues():
    gam = np.linspace(1.6, 2.4, 9)
    hb = boundary_curve(MATHIEU, gam, "floquet-simplified", tol_h=1e-3)
    assert np.argmin(hb) == 4 and hb[4] < 0.01
    assert count_tongues(gam, hb) == 1
    two = np.r_[hb, hb]
    assert count_tongues(np.r_[gam, gam + 1], two) == 2
    assert count_tongues(gam, np.full(9, np.inf)) == 0


def test_boundary_from_grid(floquet_grid):
    hb = boundary_from_grid(floquet_grid)
    assert hb.shape == (30,) and np.all(hb > 0)


def test_compare_subset():
    g, h, lab = disc_labels()
    a = grid_from_labels(g, h, lab)
    rep = compare(a, a)
    assert rep.subset_exceptions == [] and rep.disagreements() == []
    lab2 = lab.copy()
    lab2[6, 6] = "Stable"
    rep = compare(a, grid_from_labels(g, h, lab2))
    assert len(rep.subset_exceptions) == 1 and rep.boundary_exceptions == 1


def test_svg_and_boundary_csv():
    g, h, lab = disc_labels()
    grid = grid_from_labels(g, h, lab)
    lines = extract_boundary(grid)
    root = ET.fromstring(to_svg(grid, lines, markers=[(0.0, 0.0, "Unstable")], title="disc"))
    assert root.get("width") == "800" and root.get("height") == "600"
    csv = boundary_to_csv(lines).splitlines()
    assert csv[0] == "polyline_id,vertex_index,gamma,h" and len(csv) == 1 + len(lines[0])


def test_settings_validation():
    with pytest.raises(ValueError):
        validate_settings("sos", {"bogus": 1})
    with pytest.raises(ValueError):
        validate_settings("nope", {})
    with pytest.raises(TypeError):
        validate_settings("dns", {"bogus": 1})
