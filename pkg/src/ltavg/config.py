"""Run configuration: JSON file values overridden by command-line flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, asdict

from .dns import DnsSettings
from .model import OscillatorParams
from .sdp import SolverSettings


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    omega0: float = 1.0
    g: float = 0.01
    r: float = 0.2
    phi: float = 0.0
    gamma: float | None = None
    h: float | None = None
    gamma_range: tuple = (-3.0, 3.0)
    h_range: tuple = (0.0, 1.0)
    mesh: tuple = (80, 80)
    method: str = "sos"
    variant: str = "general"
    dV: int = 8
    dS: int | None = None
    dV_max: int = 10
    stable_threshold: float = 1e-3
    blowup_threshold: float = 1e3
    formulation: str = "structured"
    solver: dict = field(default_factory=dict)
    dns: dict = field(default_factory=dict)
    tiebreak: bool = True
    refine_tol: float | None = None
    out: str = "."
    seed: int = 0
    timing: bool = False

    def validate(self) -> "RunConfig":
        try:
            SolverSettings(**self.solver)
        except TypeError as exc:
            raise ConfigError(f"invalid solver settings: {exc}") from None
        try:
            DnsSettings(**self.dns)
        except TypeError as exc:
            raise ConfigError(f"invalid dns settings: {exc}") from None
        if self.dV < 2 or self.dV % 2:
            raise ConfigError("dV must be an even integer >= 2")
        if self.dV_max < self.dV:
            raise ConfigError("dV_max must be >= dV")
        if len(self.mesh) != 2 or min(self.mesh) < 2:
            raise ConfigError("mesh needs two sizes >= 2")
        for name in ("gamma_range", "h_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ConfigError(f"{name} is empty: [{lo}, {hi}]")
        self.base_params()
        return self

    def base_params(self) -> OscillatorParams:
        try:
            return OscillatorParams(omega0=self.omega0, g=self.g, r=self.r, phi=self.phi,
                                    gamma=self.gamma or 0.0, h=self.h or 0.0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def point(self) -> OscillatorParams:
        if self.gamma is None or self.h is None:
            raise ConfigError("--gamma and --h are required")
        return self.base_params()

    def sos_settings(self) -> dict:
        out = {"dV": self.dV, "dS": self.dS, "dV_max": self.dV_max,
               "stable_threshold": self.stable_threshold, "blowup_threshold": self.blowup_threshold,
               "formulation": self.formulation}
        out.update(self.solver)
        return out

    def dns_settings(self) -> dict:
        return {"seed": self.seed, **self.dns}

    def method_settings(self, method: str) -> dict:
        if method == "sos":
            return self.sos_settings()
        if method == "dns":
            return self.dns_settings()
        return {}

    def as_dict(self) -> dict:
        return asdict(self)


_TUPLES = {"gamma_range", "h_range", "mesh"}


def from_dict(data: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    data = {k: tuple(v) if k in _TUPLES and v is not None else v for k, v in data.items()}
    return RunConfig(**data)


def load(path: str | None, overrides: dict | None = None) -> RunConfig:
    """File values first, then non-None ``overrides``."""
    data: dict = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    return from_dict(data).validate()
