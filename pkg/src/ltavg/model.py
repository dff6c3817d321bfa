"""The parametrically driven pair of coupled oscillators as a polynomial system.

The drive ``sin(gamma*t +/- phi/2)`` is replaced by two clock variables on the
unit circle, ``x3 = sin(gamma*t)`` and ``x4 = cos(gamma*t)``, so the vector
field becomes autonomous and polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace
from math import cos, sin, sqrt

import numpy as np

from .poly import Polynomial, lie_derivative

STATE_NAMES = ("x1", "x2", "y1", "y2", "x3", "x4")


@dataclass(frozen=True)
class OscillatorParams:
    omega0: float = 1.0
    g: float = 0.01
    r: float = 0.2
    h: float = 0.0
    gamma: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if not 0.0 <= self.h <= 1.0:
            raise ValueError(f"h must lie in [0, 1], got {self.h}")
        if self.g < 0:
            raise ValueError(f"g must be non-negative, got {self.g}")
        if self.r < 0:
            raise ValueError(
                f"r must be non-negative, got {self.r}; a negative r only swaps the oscillators"
            )
        for name in ("omega0", "g", "r", "h", "gamma", "phi"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def with_(self, **changes) -> "OscillatorParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def is_reduced(self) -> bool:
        """Drive vanishes identically, so no clock variables are needed."""
        return self.gamma == 0.0 and self.phi == 0.0


@dataclass(frozen=True)
class PolySystem:
    """Autonomous polynomial vector field with algebraic invariants.

    ``state_vars`` are the variables in which the field is linear (the
    oscillator coordinates); ``clock_vars`` is the (sin, cos) pair or empty.
    """

    nvars: int
    field: tuple
    constraints: tuple = ()
    state_names: tuple = ()
    state_vars: tuple = ()
    clock_vars: tuple = ()
    clock_rate: float = 0.0

    def __post_init__(self):
        if len(self.field) != self.nvars:
            raise ValueError("field length must equal nvars")
        for p in self.field + self.constraints:
            if p.nvars != self.nvars:
                raise ValueError("all polynomials must share nvars")

    def lie(self, V: Polynomial) -> Polynomial:
        return lie_derivative(V, list(self.field))

    def check_constraints(self, n_points: int = 20, seed: int = 0, tol: float = 1e-10) -> bool:
        """Constraints must be conserved along the flow (checked at random points)."""
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-1.0, 1.0, size=(n_points, self.nvars))
        for c in self.constraints:
            dc = self.lie(c)
            if dc.is_zero():
                continue
            if np.max(np.abs(dc.evaluate(pts))) > tol * max(1.0, dc.max_abs_coeff()):
                return False
        return True


def drive_weights(phi: float) -> tuple:
    """(sin-weight, cos-weight) of the drive on each oscillator.

    sin(gamma t + phi/2) = x3 cos(phi/2) + x4 sin(phi/2), and the opposite
    sign on the x4 term for the second oscillator.
    """
    c, s = cos(phi / 2.0), sin(phi / 2.0)
    return (c, s), (c, -s)


def build_system(p: OscillatorParams) -> PolySystem:
    """Autonomised first-order system in (x1, x2, y1, y2[, x3, x4])."""
    w0 = p.omega0
    reduced = p.is_reduced
    n = 4 if reduced else 6
    X = [Polynomial.variable(i, n) for i in range(n)]
    x1, x2, y1, y2 = X[:4]
    k = w0 * w0
    if reduced:
        drive1 = drive2 = Polynomial.zero(n)
    else:
        x3, x4 = X[4], X[5]
        (a1, b1), (a2, b2) = drive_weights(p.phi)
        drive1 = x3 * a1 + x4 * b1
        drive2 = x3 * a2 + x4 * b2
    one = Polynomial.constant(1.0, n)
    field_ = [
        y1,
        y2,
        -(one + drive1 * p.h) * x1 * k - y1 * (w0 * p.g) + y2 * (w0 * p.r),
        -(one + drive2 * p.h) * x2 * k - y2 * (w0 * p.g) - y1 * (w0 * p.r),
    ]
    if reduced:
        return PolySystem(
            nvars=4,
            field=tuple(field_),
            state_names=STATE_NAMES[:4],
            state_vars=(0, 1, 2, 3),
        )
    field_ += [X[5] * p.gamma, X[4] * (-p.gamma)]
    circle = X[4] * X[4] + X[5] * X[5] - 1.0
    return PolySystem(
        nvars=6,
        field=tuple(field_),
        constraints=(circle,),
        state_names=STATE_NAMES,
        state_vars=(0, 1, 2, 3),
        clock_vars=(4, 5),
        clock_rate=p.gamma,
    )


def build_phi(nvars: int = 6) -> Polynomial:
    """Summed squared amplitudes x1^2 + x2^2."""
    x1 = Polynomial.variable(0, nvars)
    x2 = Polynomial.variable(1, nvars)
    return x1 * x1 + x2 * x2


def resonance_frequencies(p: OscillatorParams) -> tuple:
    """(2*Omega_r, 2*Omega_r - omega0*r, 2*Omega_r + omega0*r)."""
    arg = 1.0 + (p.r**2 - p.g**2) / 4.0
    if arg <= 0:
        raise ValueError("r^2 - g^2 must exceed -4")
    omega_r = p.omega0 * sqrt(arg)
    return (2 * omega_r, 2 * omega_r - p.omega0 * p.r, 2 * omega_r + p.omega0 * p.r)


def linear_matrices(p: OscillatorParams):
    """State matrix split A(t) = A0 + h*(sin(gamma t)*As + cos(gamma t)*Ac).

    Used by the simulators that integrate the oscillators without clock
    variables; the ordering is (x1, x2, y1, y2).
    """
    w0 = p.omega0
    k = w0 * w0
    A0 = np.array(
        [
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [-k, 0, -w0 * p.g, w0 * p.r],
            [0, -k, -w0 * p.r, -w0 * p.g],
        ],
        dtype=float,
    )
    (a1, b1), (a2, b2) = drive_weights(p.phi)
    As = np.zeros((4, 4))
    Ac = np.zeros((4, 4))
    As[2, 0], As[3, 1] = -k * a1, -k * a2
    Ac[2, 0], Ac[3, 1] = -k * b1, -k * b2
    return A0, p.h * As, p.h * Ac
