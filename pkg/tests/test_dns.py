import numpy as np
import pytest

from ltavg.dns import (DnsSettings, classify_dns, envelopes, integrate, oscillator_rhs, periodic_rhs,
                       random_ics, simulate, time_average)
from ltavg.model import OscillatorParams, build_system


def sho(t, y):
    return np.stack([y[..., 1], -y[..., 0]], axis=-1)


def test_harmonic_period():
    tr = integrate(sho, [1.0, 0.0], 2 * np.pi)
    assert np.abs(tr.final - [1.0, 0.0]).max() < 1e-7


def test_fixed_step_order():
    errs = [np.abs(integrate(sho, [1.0, 0.0], 2 * np.pi, fixed_step=2 * np.pi / n).final - [1, 0]).max()
            for n in (20, 40)]
    assert errs[0] / errs[1] >= 16


def test_dense_output():
    T = 2 * np.pi * 20
    tr = integrate(sho, [1.0, 0.0], T, dense=True)
    t = np.linspace(0, T, 777)
    assert np.abs(tr.sample(t)[:, 0] - np.cos(t)).max() < 1e-6
    with pytest.raises(ValueError):
        tr.sample([T + 1])


def test_time_average():
    tr = integrate(sho, [1.0, 0.0], 2 * np.pi * 50, dense=True)
    assert abs(time_average(tr, lambda s: s[..., 0] ** 2) - 0.5) < 1e-4


def test_ensembles_and_complex():
    ics = np.array([[1.0, 0.0], [0.0, 2.0]])
    tr = integrate(sho, ics, np.pi / 2)
    assert np.allclose(tr.final, [[0, -1], [2, 0]], atol=1e-7)
    trc = integrate(lambda t, y: 1j * y, np.array([1.0 + 0j]), np.pi)
    assert np.allclose(trc.final, [-1.0], atol=1e-7)


def test_blow_up_detection():
    tr = integrate(lambda t, y: y, [1.0], 100.0, blow_up=1e6)
    assert tr.status == "blow_up" and abs(tr.blow_up - np.log(1e6)) < 0.1


def test_input_validation():
    with pytest.raises(ValueError):
        integrate(sho, [np.nan, 0.0], 1.0)
    with pytest.raises(ValueError):
        integrate(sho, [1.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        integrate(sho, [1.0, 0.0], 1.0, rel_tol=0)


def test_polynomial_and_explicit_fields_agree(rng):
    p = OscillatorParams(gamma=1.3, h=0.5, phi=0.7)
    ic = rng.normal(size=4)
    a = simulate(p, ic, 30.0).final
    b = integrate(periodic_rhs(p), ic, 30.0).final
    c = integrate(build_system(p), np.r_[ic, 0.0, 1.0], 30.0).final
    assert np.allclose(a[:4], b, atol=1e-6) and np.allclose(c[:4], b, atol=1e-6)
    assert np.allclose(integrate(oscillator_rhs(p), np.r_[ic, 0, 1], 30.0).final[:4], b, atol=1e-6)


def test_seeded_ics_reproducible():
    assert np.array_equal(random_ics(3, 7), random_ics(3, 7))
    assert not np.array_equal(random_ics(3, 7), random_ics(3, 8))


@pytest.mark.parametrize("gamma,h,label", [(2.0, 0.3, "Unstable"), (1.0, 0.0, "Stable")])
def test_classify(gamma, h, label):
    v, tr = classify_dns(OscillatorParams(gamma=gamma, h=h), settings=DnsSettings(n_ic=2))
    assert v.label == label and v.method == "dns"


def test_envelopes_monotone():
    tr = simulate(OscillatorParams(gamma=2.0, h=0.3), random_ics(1, 0)[0], 50.0)
    e1, e2 = envelopes(tr)
    assert np.all(np.diff(e1) >= 0) and np.all(np.diff(e2) >= 0)
