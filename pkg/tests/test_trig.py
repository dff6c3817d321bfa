import numpy as np

from ltavg import trig
from ltavg.poly import Polynomial

th = np.linspace(0, 2 * np.pi, 17)


def rand(rng, d):
    return rng.normal(size=trig.size(d))


def test_mul_evaluates_pointwise(rng):
    for da, db in [(0, 2), (1, 1), (3, 2)]:
        a, b = rand(rng, da), rand(rng, db)
        c = trig.mul(a, b)
        assert trig.degree_of(len(c)) == da + db
        assert np.allclose(trig.evaluate(c, th), trig.evaluate(a, th) * trig.evaluate(b, th))


def test_derivative(rng):
    a = rand(rng, 3)
    eps = 1e-6
    fd = (trig.evaluate(a, th + eps) - trig.evaluate(a, th - eps)) / (2 * eps)
    assert np.allclose(trig.evaluate(trig.derivative(a), th), fd, atol=1e-6)


def test_samples_roundtrip(rng):
    a = rand(rng, 4)
    vals = trig.evaluate(a, np.linspace(0, 2 * np.pi, 32, endpoint=False))
    assert np.allclose(trig.from_samples(vals, 4), a)


def test_clock_poly_roundtrip(rng):
    a = rand(rng, 3)
    p = trig.to_poly(a, 2, 0, 1)
    assert np.allclose(trig.from_clock_poly(p, 0, 1), trig.pad(a, p.degree))
    pts = np.stack([np.sin(th), np.cos(th)], axis=-1)
    assert np.allclose(p(pts), trig.evaluate(a, th))


def test_circle_reduction():
    s, c = (Polynomial.variable(i, 2) for i in range(2))
    one = trig.from_clock_poly(s * s + c * c, 0, 1)
    assert np.allclose(one, trig.pad(np.array([1.0]), 2))


def test_layout_helpers():
    assert trig.mode(0) == ("c", 0) and trig.mode(3) == ("c", 2) and trig.mode(4) == ("s", 2)
    for i in range(9):
        assert trig.index(*trig.mode(i)) == i
