"""Trigonometric polynomials on the clock circle x3 = sin(theta), x4 = cos(theta).

A polynomial in (x3, x4) restricted to the unit circle is a trigonometric
polynomial of the same degree. Coefficient vectors use the layout
``[1, cos t, sin t, cos 2t, sin 2t, ...]``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .poly import Polynomial


def size(degree: int) -> int:
    return 2 * degree + 1


def degree_of(n: int) -> int:
    return (n - 1) // 2


def mode(idx: int) -> tuple:
    """('c' | 's', frequency) for a layout index."""
    if idx == 0:
        return ("c", 0)
    k = (idx + 1) // 2
    return ("c", k) if idx % 2 == 1 else ("s", k)


def index(kind: str, k: int) -> int:
    if k == 0:
        if kind != "c":
            raise ValueError("sin(0) is not a basis element")
        return 0
    return 2 * k - 1 if kind == "c" else 2 * k


@lru_cache(maxsize=None)
def product(ia: int, ib: int) -> tuple:
    """Expansion of basis_a * basis_b as ((index, coeff), ...)."""
    ka, p = mode(ia)
    kb, q = mode(ib)
    out: dict = {}

    def put(kind, n, c):
        if n < 0:
            n = -n
            if kind == "s":
                c = -c
        if kind == "s" and n == 0:
            return
        i = index(kind, n)
        out[i] = out.get(i, 0.0) + c

    if ka == "c" and kb == "c":
        put("c", p - q, 0.5)
        put("c", p + q, 0.5)
    elif ka == "s" and kb == "s":
        put("c", p - q, 0.5)
        put("c", p + q, -0.5)
    elif ka == "c" and kb == "s":
        put("s", p + q, 0.5)
        put("s", p - q, -0.5)
    else:
        put("s", p + q, 0.5)
        put("s", p - q, 0.5)
    return tuple((i, c) for i, c in sorted(out.items()) if c != 0.0)


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of trig polynomials; either argument may carry trailing axes.

    ``a`` has shape (na,) or (na, ...) and ``b`` has shape (nb,); the result
    has length size(deg a + deg b) along the first axis.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da, db = degree_of(a.shape[0]), degree_of(b.shape[0])
    out = np.zeros((size(da + db),) + a.shape[1:])
    for j in np.flatnonzero(b):
        for i in range(a.shape[0]):
            for k, c in product(i, int(j)):
                out[k] += c * b[j] * a[i]
    return out


def derivative(a: np.ndarray) -> np.ndarray:
    """d/dtheta, applied along the first axis."""
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    for k in range(1, degree_of(a.shape[0]) + 1):
        ic, is_ = index("c", k), index("s", k)
        out[is_] += -k * a[ic]
        out[ic] += k * a[is_]
    return out


def pad(a: np.ndarray, degree: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    n = size(degree)
    if a.shape[0] > n:
        if np.any(np.abs(a[n:]) > 1e-12):
            raise ValueError("cannot truncate a trig polynomial with nonzero high modes")
        return a[:n]
    out = np.zeros((n,) + a.shape[1:])
    out[: a.shape[0]] = a
    return out


def evaluate(a: np.ndarray, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.full(theta.shape, a[0], dtype=float)
    for k in range(1, degree_of(len(a)) + 1):
        out = out + a[index("c", k)] * np.cos(k * theta) + a[index("s", k)] * np.sin(k * theta)
    return out


def from_samples(values: np.ndarray, degree: int) -> np.ndarray:
    """Trig coefficients from samples at theta_n = 2 pi n / N (N > 2*degree)."""
    N = len(values)
    F = np.fft.rfft(values) / N
    out = np.zeros(size(degree))
    out[0] = F[0].real
    for k in range(1, degree + 1):
        out[index("c", k)] = 2 * F[k].real
        out[index("s", k)] = -2 * F[k].imag
    return out


def from_clock_poly(p: Polynomial, sin_var: int = 0, cos_var: int = 1) -> np.ndarray:
    """Restriction of a polynomial in the clock variables to the circle."""
    d = max(p.degree, 0)
    N = 2 * d + 2
    theta = 2 * np.pi * np.arange(N) / N
    pts = np.zeros((N, p.nvars))
    pts[:, sin_var] = np.sin(theta)
    pts[:, cos_var] = np.cos(theta)
    vals = p.evaluate(pts) if not p.is_zero() else np.zeros(N)
    out = from_samples(np.atleast_1d(vals), d)
    out[np.abs(out) < 1e-14] = 0.0
    return out


def basis_polys(degree: int, nvars: int, sin_var: int, cos_var: int) -> list:
    """Polynomials in (x3, x4) equal to the basis functions on the circle.

    cos(k t) = T_k(x4) and sin(k t) = x3 * U_{k-1}(x4).
    """
    one = Polynomial.constant(1.0, nvars)
    s = Polynomial.variable(sin_var, nvars)
    c = Polynomial.variable(cos_var, nvars)
    T = [one, c]
    Uc = [one, c * 2.0]
    for k in range(2, degree + 1):
        T.append(c * T[-1] * 2.0 - T[-2])
        Uc.append(c * Uc[-1] * 2.0 - Uc[-2])
    out = [one]
    for k in range(1, degree + 1):
        out.append(T[k])
        out.append(s * Uc[k - 1])
    return out


def to_poly(a: np.ndarray, nvars: int, sin_var: int, cos_var: int) -> Polynomial:
    polys = basis_polys(degree_of(len(a)), nvars, sin_var, cos_var)
    out = Polynomial.zero(nvars)
    for coeff, p in zip(a, polys):
        if coeff != 0.0:
            out = out + p * float(coeff)
    return out
