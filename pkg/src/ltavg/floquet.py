"""Floquet analysis of the oscillator pair.

For phi = 0 the complex coordinates x+- = x1 +- i x2 decouple the pair into
two damped Mathieu equations with complex loss g +- i r. Writing
x = exp(-i mu t) sum_n A_n exp(i n gamma t) and truncating to n in {-1, 0, 1}
gives a Hill determinant whose roots mu are the characteristic exponents.
Since |exp(-i mu t)| = exp(Im(mu) t), a root with Im(mu) > 0 is growing.

Monodromy matrices integrated with :mod:`dns` serve as the exact reference.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .model import OscillatorParams
from .dns import integrate, periodic_rhs

UNSTABLE_TOL = 1e-9
_PHI_TOL = 1e-12


@dataclass(frozen=True)
class Branch:
    """One decoupled equation x'' + w0 (g + i s r) x' + w0^2 (1 + h sin(gamma t)) x = 0."""

    sign: int
    loss: complex
    omega0: float
    h: float
    gamma: float


def _require_phi0(p: OscillatorParams) -> None:
    if abs(p.phi) > _PHI_TOL:
        raise ValueError("the decoupled Floquet analysis only covers phi = 0; use monodromy_full")


def decouple(p: OscillatorParams) -> tuple:
    _require_phi0(p)
    return tuple(Branch(s, complex(p.g, s * p.r), p.omega0, p.h, p.gamma) for s in (1, -1))


@dataclass
class HillDeterminant:
    """Characteristic polynomial in mu, stored as factors.

    Coefficients are in ascending powers of mu. ``coeffs`` is the product of
    all ``factors``; roots are computed per factor for accuracy.
    """

    variant: str
    factors: list
    params: OscillatorParams

    @property
    def coeffs(self) -> np.ndarray:
        out = np.array([1.0 + 0j])
        for f in self.factors:
            out = P.polymul(out, f)
        return out

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, mu):
        return P.polyval(mu, self.coeffs)


def _d_poly(n: int, b: Branch) -> np.ndarray:
    """D_n(mu) = w^2 - (n gamma - mu)^2 + i w c (n gamma - mu), ascending in mu."""
    w, c, g = b.omega0, b.loss, b.gamma
    ng = n * g
    return np.array(
        [w * w - ng * ng + 1j * w * c * ng, 2 * ng - 1j * w * c, -1.0], dtype=complex
    )


def branch_determinant(b: Branch) -> np.ndarray:
    """det of the tridiagonal 3x3 Hill matrix for one branch (degree 6)."""
    a2 = (1j * b.h * b.omega0**2 / 2) ** 2  # product of the two off-diagonal entries is -a^2
    Dm, D0, Dp = (_d_poly(n, b) for n in (-1, 0, 1))
    # [[Dm, a, 0], [-a, D0, a], [0, -a, Dp]]
    out = P.polymul(P.polymul(Dm, D0), Dp)
    return P.polyadd(out, a2 * P.polyadd(Dm, Dp))


def general_determinant(p: OscillatorParams) -> HillDeterminant:
    return HillDeterminant("General", [branch_determinant(b) for b in decouple(p)], p)


def simplified_determinant(p: OscillatorParams) -> HillDeterminant:
    """(w^2 - (gamma - mu)^2)(w^2 - mu^2) - h^2 w^4 / 4 with r = g = 0."""
    w, g, h = p.omega0, p.gamma, p.h
    f1 = np.array([w * w - g * g, 2 * g, -1.0])
    f0 = np.array([w * w, 0.0, -1.0])
    q = P.polysub(P.polymul(f1, f0), [h * h * w**4 / 4])
    return HillDeterminant("Simplified", [q.astype(complex)], p)


@dataclass
class FloquetSpectrum:
    mu_roots: np.ndarray
    growth_rates: np.ndarray
    max_growth: float
    variant: str
    residual: float = 0.0

    @property
    def unstable(self) -> bool:
        return self.max_growth > UNSTABLE_TOL

    @property
    def label(self) -> str:
        return "Unstable" if self.unstable else "Stable"

    def record(self) -> dict:
        return {
            "variant": self.variant,
            "roots": [[float(z.real), float(z.imag)] for z in self.mu_roots],
            "growth_rates": [float(s) for s in self.growth_rates],
            "max_growth": float(self.max_growth),
            "label": self.label,
        }

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)


def _polish(c: np.ndarray, z: np.ndarray, steps: int = 3) -> np.ndarray:
    dc = P.polyder(c)
    for _ in range(steps):
        d = P.polyval(z, dc)
        ok = np.abs(d) > 1e-300
        z = np.where(ok, z - P.polyval(z, c) / np.where(ok, d, 1.0), z)
    return z


def roots(det: HillDeterminant, prefactor: bool = False) -> FloquetSpectrum:
    """Characteristic exponents via companion-matrix eigenvalues.

    The growth rate of each root is Im(mu). With ``prefactor=True`` the
    additional -g w0 / 2 shift is applied; that is only correct when the
    determinant was built for the undamped y-equation, not for the damped
    x-equation used here (kept for comparison).
    """
    out = []
    for f in det.factors:
        f = np.trim_zeros(np.asarray(f, dtype=complex), "b")
        if len(f) < 2:
            continue
        lead = f[-1]
        if abs(lead) < 1e-300:
            raise ArithmeticError("leading coefficient underflow")
        z = np.linalg.eigvals(P.polycompanion(f)) if len(f) > 2 else np.array([-f[0] / f[1]])
        out.append(_polish(f, z))
    mu = np.concatenate(out) if out else np.zeros(0, dtype=complex)
    order = np.lexsort((mu.imag, mu.real))
    mu = mu[order]
    sigma = mu.imag.copy()
    if prefactor:
        sigma -= det.params.g * det.params.omega0 / 2
    c = det.coeffs
    res = float(np.max(np.abs(P.polyval(mu, c)), initial=0.0) / np.max(np.abs(c)))
    return FloquetSpectrum(mu, sigma, float(np.max(sigma, initial=-np.inf)), det.variant, res)


# ---------------------------------------------------------------------------
# monodromy oracles


@dataclass
class MonodromySpectrum:
    multipliers: np.ndarray
    period: float
    growth: float
    branch: int | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def unstable(self) -> bool:
        return self.growth > UNSTABLE_TOL


def _fundamental(f, n, T, rel_tol, abs_tol, dtype=float):
    # row k of the ensemble is the k-th column of the fundamental matrix
    tr = integrate(f, np.eye(n, dtype=dtype), T, rel_tol, abs_tol, store=False, blow_up=np.inf)
    if tr.status != "ok":
        raise RuntimeError(f"monodromy integration failed: {tr.status}")
    return tr.final.T


def monodromy(p: OscillatorParams, branch: int = 1, rel_tol: float = 1e-10, abs_tol: float = 1e-12) -> MonodromySpectrum:
    """Monodromy of y'' + w^2 [1 - c^2/4 + h sin(gamma t)] y = 0, c = g +- i r.

    The x-growth rate is ln|lambda|_max / T - g w0 / 2 because
    x = y exp(-c w0 t / 2).
    """
    _require_phi0(p)
    if p.gamma == 0:
        raise ValueError("monodromy needs gamma != 0")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    w, h, gam = p.omega0, p.h, p.gamma
    c = complex(p.g, branch * p.r)
    k = 1 - c * c / 4

    def f(t, y):
        return np.stack([y[..., 1], -(w * w) * (k + h * np.sin(gam * t)) * y[..., 0]], axis=-1)

    T = 2 * np.pi / abs(gam)
    M = _fundamental(f, 2, T, rel_tol, abs_tol, complex)
    lam = np.linalg.eigvals(M)
    growth = float(np.max(np.log(np.abs(lam))) / T - p.g * w / 2)
    return MonodromySpectrum(lam, T, growth, branch, M)


def monodromy_full(p: OscillatorParams, rel_tol: float = 1e-10, abs_tol: float = 1e-12) -> MonodromySpectrum:
    """Monodromy of the real 4-state system; valid for every phi."""
    if p.gamma == 0:
        raise ValueError("monodromy needs gamma != 0")
    T = 2 * np.pi / abs(p.gamma)
    M = _fundamental(periodic_rhs(p), 4, T, rel_tol, abs_tol)
    lam = np.linalg.eigvals(M)
    return MonodromySpectrum(lam, T, float(np.max(np.log(np.abs(lam))) / T), None, M)


def max_growth_monodromy(p: OscillatorParams, **kw) -> float:
    if abs(p.phi) <= _PHI_TOL:
        return max(monodromy(p, s, **kw).growth for s in (1, -1))
    return monodromy_full(p, **kw).growth


def classify_floquet(p: OscillatorParams, variant: str = "general"):
    from .bound import Verdict

    t0 = time.perf_counter()
    if variant in ("general", "floquet-general"):
        spectrum, method = roots(general_determinant(p)), "floquet-general"
    elif variant in ("simplified", "floquet-simplified"):
        spectrum, method = roots(simplified_determinant(p)), "floquet-simplified"
    elif variant == "monodromy":
        if p.gamma == 0:
            # constant coefficients: the eigenvalues of the state matrix decide
            from .model import linear_matrices

            A0, hs, hc = linear_matrices(p)
            g = float(np.max(np.linalg.eigvals(A0 + hc).real))
        else:
            g = max_growth_monodromy(p)
        label = "Unstable" if g > UNSTABLE_TOL else "Stable"
        return Verdict(label, None, "monodromy", None, time.perf_counter() - t0, {"max_growth": g})
    else:
        raise ValueError(f"unknown Floquet variant {variant!r}")
    return Verdict(spectrum.label, None, method, None, time.perf_counter() - t0, {"max_growth": spectrum.max_growth})
