"""Direct numerical simulation with an adaptive Dormand-Prince 5(4) pair.

The integrator accepts any ``f(t, y)`` that works on arrays of shape
``(..., d)``, real or complex, so ensembles of initial conditions and
fundamental matrices are integrated in one pass.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import OscillatorParams, PolySystem, linear_matrices
from .poly import CompiledField, Polynomial

BLOW_UP = 1e8

# Dormand-Prince coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)  # b5 - b4
# continuous extension, y(t + th*h) = y + h * sum_k K_k * (P[k] @ [th, th^2, th^3, th^4])
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


class IntegrationError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Accepted steps of an integration.

    ``states`` has shape (len(times), *state_shape). ``stages`` keeps the
    stage derivatives of each step for dense output (None when not stored).
    """

    times: np.ndarray
    states: np.ndarray
    blow_up: float | None = None
    status: str = "ok"
    nfev: int = 0
    stages: np.ndarray | None = field(default=None, repr=False)
    names: tuple = ()

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def sample(self, t) -> np.ndarray:
        """Dense output at times inside the integrated span."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.stages is None:
            raise ValueError("trajectory was integrated without dense output")
        T = self.times
        if np.any(t < T[0] - 1e-12) or np.any(t > T[-1] + 1e-12):
            raise ValueError("sample times outside the integrated span")
        idx = np.clip(np.searchsorted(T, t, side="right") - 1, 0, len(T) - 2)
        h = T[idx + 1] - T[idx]
        th = (t - T[idx]) / h
        powers = np.stack([th, th**2, th**3, th**4], axis=-1)  # (n, 4)
        Q = np.einsum("nk...,kp->np...", self.stages[idx], _P)  # (n, 4, ...)
        incr = np.einsum("np...,np->n...", Q, powers)
        hs = h.reshape((-1,) + (1,) * (incr.ndim - 1))
        return self.states[idx] + hs * incr

    def to_csv(self, names=None) -> str:
        names = list(names or self.names or [f"s{i}" for i in range(self.states.shape[-1])])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + names)
        S = self.states.reshape(len(self.times), -1) if self.states.ndim > 2 else self.states
        for t, s in zip(self.times, S):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in np.real(s)])
        return buf.getvalue()


def _as_rhs(system) -> Callable:
    if isinstance(system, PolySystem):
        F = CompiledField.from_polys(list(system.field))
        return lambda t, y: F(y)
    if callable(system):
        return system
    raise TypeError("system must be a PolySystem or a callable f(t, y)")


def integrate(
    system,
    ic,
    t_end: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    t0: float = 0.0,
    h0: float | None = None,
    max_step: float = np.inf,
    blow_up: float = BLOW_UP,
    store: bool = True,
    dense: bool = False,
    max_steps: int = 10_000_000,
    fixed_step: float | None = None,
) -> Trajectory:
    """Integrate from ``t0`` to ``t_end``.

    The error norm is the RMS over all components of all ensemble members.
    Integration stops early when any component exceeds ``blow_up`` in
    modulus; a step-size underflow ends with status ``"step_underflow"``.
    With ``fixed_step`` the controller is off and every step is accepted
    (the last one is shortened to land on ``t_end``).
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    f = _as_rhs(system)
    y = np.array(ic, dtype=complex if np.iscomplexobj(ic) else float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial condition must be finite")
    t = float(t0)
    span = float(t_end) - t
    if span < 0:
        raise ValueError("t_end must not precede t0")
    times, states, stages = [t], [y.copy()], []
    K = np.empty((7,) + y.shape, dtype=y.dtype)
    K[0] = f(t, y)
    nfev = 1

    def err_norm(e, y_old, y_new):
        sc = abs_tol + rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
        return float(np.sqrt(np.mean(np.abs(e / sc) ** 2)))

    if fixed_step is not None:
        if not fixed_step > 0:
            raise ValueError("fixed_step must be positive")
        h = float(fixed_step)
    elif h0 is None:
        # standard starting-step heuristic
        sc = abs_tol + rel_tol * np.abs(y)
        d0 = np.sqrt(np.mean(np.abs(y / sc) ** 2))
        d1 = np.sqrt(np.mean(np.abs(K[0] / sc) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = y + h * K[0]
        d2 = np.sqrt(np.mean(np.abs((f(t + h, y1) - K[0]) / sc) ** 2)) / h
        nfev += 1
        h1 = max(1e-6, h * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
        h = min(100 * h, h1)
    else:
        h = float(h0)
    h = min(h, max_step, span) if span > 0 else 0.0

    status, blow = "ok", None
    err_prev = 1e-4
    safety, beta = 0.9, 0.04
    alpha = 0.2 - 0.75 * beta
    steps = 0
    while t < t_end and span > 0:
        if steps >= max_steps:
            status = "step_limit"
            break
        h = min(h, t_end - t, max_step)
        if h < 1e-14 * max(1.0, abs(t)):
            status = "step_underflow"
            break
        for s in range(1, 7):
            dy = sum(a * K[j] for j, a in enumerate(_A[s]) if a != 0.0)
            K[s] = f(t + _C[s] * h, y + h * dy)
        nfev += 6
        y_new = y + h * np.tensordot(_B, K, axes=1)
        err = err_norm(h * np.tensordot(_E, K, axes=1), y, y_new)
        if fixed_step is not None:
            err = 0.0 if np.all(np.isfinite(y_new)) else np.inf
        if not np.isfinite(err):
            if fixed_step is not None:
                status, blow = "blow_up", t + h
                break
            h *= 0.2
            continue
        if err <= 1.0:
            if store and dense:
                stages.append(K.copy())
            t = t + h
            y = y_new
            K[0] = K[6]  # first-same-as-last
            steps += 1
            if store:
                times.append(t)
                states.append(y.copy())
            if fixed_step is not None:
                h = float(fixed_step)
            else:
                fac = safety * err_prev**beta / max(err, 1e-10) ** alpha
                h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
            if np.max(np.abs(y)) > blow_up:
                status, blow = "blow_up", t
                break
        else:
            h *= max(0.2, safety * err ** (-0.2))
    if not store:
        times, states = [times[0], t], [states[0], y.copy()]
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        blow_up=blow,
        status=status,
        nfev=nfev,
        stages=np.array(stages) if (store and dense and stages) else None,
    )


# ---------------------------------------------------------------------------
# oscillator right-hand sides


def oscillator_rhs(p: OscillatorParams) -> Callable:
    """Field of the 6-state system (x1, x2, y1, y2, x3, x4) on arrays (..., 6)."""
    A0, hs, hc = linear_matrices(p)
    g = p.gamma

    def f(t, y):
        z = y[..., :4]
        s, c = y[..., 4:5], y[..., 5:6]
        dz = z @ A0.T + s * (z @ hs.T) + c * (z @ hc.T)
        return np.concatenate([dz, g * c, -g * s], axis=-1)

    return f


def periodic_rhs(p: OscillatorParams) -> Callable:
    """The 4-state linear system with the drive as explicit functions of t."""
    A0, hs, hc = linear_matrices(p)
    g = p.gamma

    def f(t, z):
        A = A0 + np.sin(g * t) * hs + np.cos(g * t) * hc
        return z @ A.T

    return f


def simulate(p: OscillatorParams, ic, t_end: float, rel_tol=1e-8, abs_tol=1e-10, dense=True, **kw) -> Trajectory:
    """Integrate the oscillator from a 4-state (clock starts at (0, 1)) or 6-state ic."""
    ic = np.asarray(ic, dtype=float)
    if ic.shape[-1] == 4:
        clock = np.zeros(ic.shape[:-1] + (2,))
        clock[..., 1] = 1.0
        ic = np.concatenate([ic, clock], axis=-1)
    tr = integrate(oscillator_rhs(p), ic, t_end, rel_tol, abs_tol, dense=dense, **kw)
    tr.names = ("x1", "x2", "y1", "y2", "x3", "x4")
    return tr


def random_ics(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n, 4))


def amplitude(states: np.ndarray) -> np.ndarray:
    """sqrt(x1^2 + x2^2) per sample and ensemble member."""
    return np.sqrt(states[..., 0] ** 2 + states[..., 1] ** 2)


def envelopes(tr: Trajectory) -> tuple:
    """Running maxima of |x1| and |x2|."""
    e1 = np.maximum.accumulate(np.abs(tr.states[..., 0]), axis=0)
    e2 = np.maximum.accumulate(np.abs(tr.states[..., 1]), axis=0)
    return e1, e2


def window_amplitudes(tr: Trajectory, fraction: float = 0.1) -> tuple:
    """Max amplitude over the first and last ``fraction`` of the time span."""
    t = tr.times
    T0, T1 = t[0], t[-1]
    w = fraction * (T1 - T0)
    A = amplitude(tr.states)
    start = A[t <= T0 + w].max(axis=0)
    end = A[t >= T1 - w].max(axis=0)
    return start, end


def time_average(tr: Trajectory, quantity, window_fraction: float = 1.0, samples_per_step: int = 8) -> float:
    """Trapezoidal average of ``quantity`` over the trailing window.

    ``quantity`` is a Polynomial in the state or a callable on state arrays.
    Dense output is used when available so the quadrature resolves each step.
    """
    if tr.blow_up is not None:
        raise ValueError("trajectory blew up: the average is unbounded")
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    q = quantity.evaluate if isinstance(quantity, Polynomial) else quantity
    T0, T1 = tr.times[0], tr.times[-1]
    if T1 == T0:
        return float(np.mean(q(tr.states[0])))
    a = T1 - window_fraction * (T1 - T0)
    if tr.stages is not None:
        n = max(1000, samples_per_step * len(tr.times))
        ts = np.linspace(a, T1, n + 1)
        vals = q(np.real(tr.sample(ts)))
    else:
        ts = tr.times[tr.times >= a]
        vals = q(np.real(tr.states[tr.times >= a]))
    vals = np.asarray(vals, dtype=float)
    if vals.ndim > 1:
        vals = vals.mean(axis=tuple(range(1, vals.ndim)))
    return float(np.trapezoid(vals, ts) / (ts[-1] - ts[0]))


@dataclass
class DnsSettings:
    n_ic: int = 3
    seed: int = 0
    horizon_periods: float = 200.0
    max_extensions: int = 4
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    window_fraction: float = 0.1
    grow_ratio: float = 10.0
    decay_ratio: float = 1e-3


def classify_dns(p: OscillatorParams, n_ic: int | None = None, horizon: float | None = None,
                 settings: DnsSettings | None = None):
    """Stable / Unstable / Indeterminate from a seeded ensemble of trajectories.

    When neither ratio test is decisive the horizon is doubled, continuing
    from the current state, up to ``max_extensions`` times.
    """
    from .bound import Verdict

    s = settings or DnsSettings()
    n = s.n_ic if n_ic is None else n_ic
    if n < 1:
        raise ValueError("n_ic must be at least 1")
    T = horizon if horizon is not None else s.horizon_periods * 2 * np.pi / p.omega0
    t0 = time.perf_counter()
    tr = simulate(p, random_ics(n, s.seed), T, s.rel_tol, s.abs_tol, dense=False)
    label = "Indeterminate"
    for ext in range(s.max_extensions + 1):
        if tr.blow_up is not None:
            label = "Unstable"
            break
        A0, A1 = window_amplitudes(tr, s.window_fraction)
        A0 = np.maximum(A0, 1e-300)
        ratio = A1 / A0
        if np.any(ratio >= s.grow_ratio):
            label = "Unstable"
            break
        if np.all(ratio <= s.decay_ratio):
            label = "Stable"
            break
        if ext == s.max_extensions or tr.status != "ok":
            break
        span = tr.times[-1] - tr.times[0]
        more = integrate(oscillator_rhs(p), tr.final, tr.times[-1] + span, s.rel_tol, s.abs_tol,
                         t0=tr.times[-1])
        tr = Trajectory(
            np.concatenate([tr.times, more.times[1:]]),
            np.concatenate([tr.states, more.states[1:]]),
            more.blow_up, more.status, tr.nfev + more.nfev, names=tr.names,
        )
    v = Verdict(label, None, "dns", None, time.perf_counter() - t0)
    v.extra = {"horizon": float(tr.times[-1]), "blow_up": tr.blow_up}
    return v, tr
