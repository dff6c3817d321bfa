import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltavg.floquet import (classify_floquet, decouple, general_determinant, max_growth_monodromy,
                           monodromy, monodromy_full, roots, simplified_determinant)
from ltavg.model import OscillatorParams, linear_matrices


def test_degrees():
    p = OscillatorParams(gamma=2.0, h=0.2)
    assert general_determinant(p).degree == 12
    assert simplified_determinant(p).degree == 4
    assert len(roots(general_determinant(p)).mu_roots) == 12


def test_roots_are_roots():
    det = general_determinant(OscillatorParams(gamma=1.7, h=0.4))
    spectrum = roots(det)
    assert spectrum.residual < 1e-9
    assert np.all(np.abs(det(spectrum.mu_roots)) <= 1e-8 * np.max(np.abs(det.coeffs)))


def test_undriven_growth_is_damping():
    p = OscillatorParams(gamma=1.0, h=0.0)
    exact = np.max(np.linalg.eigvals(linear_matrices(p)[0]).real)
    assert np.isclose(roots(general_determinant(p)).max_growth, exact, atol=1e-12)
    assert np.isclose(max_growth_monodromy(p), exact, atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.0, 0.05), st.floats(0.0, 0.3), st.floats(0.0, 0.05),
       st.sampled_from([-1, 1]))
def test_hill_matches_monodromy_small_drive(gamma, h, r, g, sgn):
    p = OscillatorParams(gamma=sgn * gamma, h=h, r=r, g=g)
    assert abs(roots(general_determinant(p)).max_growth - max_growth_monodromy(p)) < 1e-4


def test_monodromy_branches_agree_with_full():
    p = OscillatorParams(gamma=2.0, h=0.3)
    m4 = monodromy_full(p).growth
    assert np.isclose(max(monodromy(p, s).growth for s in (1, -1)), m4, atol=1e-7)


def test_phi_nonzero():
    p = OscillatorParams(gamma=2.0, h=0.3, phi=np.pi / 2)
    with pytest.raises(ValueError):
        decouple(p)
    assert np.isfinite(max_growth_monodromy(p))


def test_mathieu_tongue_center():
    p = OscillatorParams(gamma=2.0, h=0.3, r=0.0, g=0.0)
    assert roots(simplified_determinant(p)).unstable
    assert classify_floquet(p, "monodromy").label == "Unstable"
    assert classify_floquet(p.with_(gamma=1.5), "simplified").label == "Stable"


def test_prefactor_shift():
    p = OscillatorParams(gamma=1.2, h=0.1)
    a = roots(general_determinant(p)).max_growth
    b = roots(general_determinant(p), prefactor=True).max_growth
    assert np.isclose(a - b, p.g * p.omega0 / 2)


def test_bad_variant():
    with pytest.raises(ValueError):
        classify_floquet(OscillatorParams(), "nope")
