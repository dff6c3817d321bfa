"""Per-point stability verdicts from the auxiliary-function bound.

For a linear, time-periodic system the maximal long-time average of
x1^2 + x2^2 is either 0 (every trajectory decays) or infinite, so the SOS
bound is read as a classifier: a small certified U means Stable, and the
absence of any finite certificate after degree escalation means Unstable.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

from .model import OscillatorParams
from .sdp import SolverSettings, Status
from .sos import solve_bound

LABELS = ("Stable", "Unstable", "Indeterminate")
METHODS = ("sos", "floquet-general", "floquet-simplified", "dns", "monodromy")


@dataclass
class Verdict:
    label: str
    bound_value: float | None = None
    method: str = "sos"
    degrees_used: tuple | None = None
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def stable(self) -> bool:
        return self.label == "Stable"

    @property
    def unstable(self) -> bool:
        return self.label == "Unstable"

    def record(self, params: OscillatorParams | None = None) -> dict:
        out = {
            "label": self.label,
            "U": self.bound_value,
            "method": self.method,
            "degrees": list(self.degrees_used) if self.degrees_used else None,
            "wall_time": self.wall_time,
        }
        if params is not None:
            out["params"] = params.as_dict()
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self, params: OscillatorParams | None = None) -> str:
        return json.dumps(self.record(params), sort_keys=True, default=float)


@dataclass
class BoundPolicy:
    stable_threshold: float = 1e-3
    blowup_threshold: float = 1e3
    dV_max: int = 10
    formulation: str = "structured"
    multiplier: str = "free"
    aux_lower_bound: bool = True
    backend: str = "builtin"
    solver: SolverSettings = field(default_factory=SolverSettings)


def classify(params: OscillatorParams, dV: int = 8, dS: int | None = None, policy: BoundPolicy | None = None) -> Verdict:
    """Assemble, solve and classify, escalating dV by 2 up to ``dV_max``.

    Escalation happens on infeasibility, numerical trouble and on a finite but
    inconclusive U. Infeasibility at the last degree gives Unstable; a U above
    the blow-up threshold at the last degree also counts as Unstable, anything
    else exhausted is Indeterminate.
    """
    pol = policy or BoundPolicy()
    if dV < 2 or dV % 2:
        raise ValueError(f"dV must be an even integer >= 2, got {dV}")
    t0 = time.perf_counter()
    history = []
    d = dV
    last = None
    while True:
        ds = (d - 2) if dS is None else dS + (d - dV)
        try:
            res = solve_bound(
                params, d, ds, pol.solver, pol.backend,
                formulation=pol.formulation, multiplier=pol.multiplier,
                aux_lower_bound=pol.aux_lower_bound,
            )
            status, U = res.status, res.U
        except (ValueError, RuntimeError) as exc:  # dimension cap, backend failures
            status, U = Status.NUMERICAL_TROUBLE, None
            history.append({"dV": d, "status": "error", "detail": str(exc)})
        else:
            history.append({"dV": d, "status": status.value, "U": U, "iterations": res.solution.iterations})
        last = (status, U, d, ds)
        if status is Status.OPTIMAL and U is not None and U <= pol.stable_threshold:
            return Verdict("Stable", U, "sos", (d, ds), time.perf_counter() - t0, {"history": history})
        if d + 2 > pol.dV_max:
            break
        d += 2
    status, U, d, ds = last
    if status in (Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE):
        label = "Unstable"
    elif status is Status.OPTIMAL and U is not None and U >= pol.blowup_threshold:
        label = "Unstable"
    else:
        label = "Indeterminate"
    return Verdict(label, U, "sos", (d, ds), time.perf_counter() - t0, {"history": history})


def bound_curve(params_list, dV: int = 8, dS: int | None = None, policy: BoundPolicy | None = None) -> list:
    if not params_list:
        raise ValueError("params_list must be nonempty")
    return [classify(p, dV, dS, policy) for p in params_list]


def write_records(verdicts, params_list, stream) -> None:
    """One JSON object per line."""
    for v, p in zip(verdicts, params_list):
        stream.write(v.to_json(p) + "\n")
