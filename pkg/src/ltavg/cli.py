"""Command-line entry point ``ltavg``.

Exit codes: 0 Stable (or success), 2 Unstable, 3 Indeterminate, 1 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load

EXIT = {"Stable": 0, "Unstable": 2, "Indeterminate": 3}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--omega0", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def _point(p, required=True):
    p.add_argument("--gamma", type=float, required=required)
    p.add_argument("--h", type=float, required=required)


def _degrees(p):
    p.add_argument("--dv", dest="dV", type=int)
    p.add_argument("--ds", dest="dS", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ltavg", description="Stability of parametrically driven coupled oscillators.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    b = sub.add_parser("bound", help="SOS bound and verdict at one point")
    _common(b)
    _point(b)
    _degrees(b)

    f = sub.add_parser("floquet", help="Hill-determinant spectrum at one point")
    _common(f)
    _point(f)
    f.add_argument("--variant", choices=["general", "simplified", "monodromy"])

    d = sub.add_parser("dns", help="direct simulation verdict at one point")
    _common(d)
    _point(d)

    s = sub.add_parser("sweep", help="classify a (gamma, h) mesh")
    _common(s)
    _degrees(s)
    s.add_argument("--method", help="method or comma-separated list")
    s.add_argument("--mesh", type=int, nargs=2, metavar=("NX", "NY"))
    s.add_argument("--gamma-range", dest="gamma_range", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--h-range", dest="h_range", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--variant", help=argparse.SUPPRESS)
    s.add_argument("--timing", action="store_true", default=None, help="write wall times into the CSV")

    t = sub.add_parser("selftest", help="quick property battery")
    _common(t)
    return ap


def _overrides(ns) -> dict:
    out = {}
    for k, v in vars(ns).items():
        if k in ("command", "config"):
            continue
        if isinstance(v, list):
            v = tuple(v)
        out[k] = v
    return out


def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def cmd_bound(cfg: RunConfig) -> int:
    from .bound import BoundPolicy, classify
    from .sdp import SolverSettings

    p = cfg.point()
    pol = BoundPolicy(stable_threshold=cfg.stable_threshold, blowup_threshold=cfg.blowup_threshold,
                      dV_max=max(cfg.dV_max, cfg.dV), formulation=cfg.formulation,
                      solver=SolverSettings(**cfg.solver))
    v = classify(p, cfg.dV, cfg.dS, pol)
    text = v.to_json(p)
    print(text)
    if cfg.out != ".":
        _write(cfg, "bound.json", text + "\n")
    return EXIT[v.label]


def cmd_floquet(cfg: RunConfig) -> int:
    from .floquet import classify_floquet, general_determinant, roots, simplified_determinant

    p = cfg.point()
    if cfg.variant == "general":
        rec = roots(general_determinant(p)).record()
    elif cfg.variant == "simplified":
        rec = roots(simplified_determinant(p)).record()
    elif cfg.variant == "monodromy":
        v = classify_floquet(p, "monodromy")
        rec = {"variant": "monodromy", "max_growth": v.extra["max_growth"], "label": v.label}
    else:
        raise ConfigError(f"invalid variant {cfg.variant!r}")
    rec["params"] = p.as_dict()
    text = json.dumps(rec, sort_keys=True)
    print(text)
    if cfg.out != ".":
        _write(cfg, "floquet.json", text + "\n")
    return EXIT[rec["label"]]


def cmd_dns(cfg: RunConfig) -> int:
    from .dns import DnsSettings, classify_dns

    p = cfg.point()
    v, tr = classify_dns(p, settings=DnsSettings(**cfg.dns_settings()))
    print(v.to_json(p))
    if cfg.out != ".":
        _write(cfg, "trajectory.csv", tr.to_csv())
    return EXIT[v.label]


def cmd_sweep(cfg: RunConfig) -> int:
    from .sweep import (SWEEP_METHODS, boundary_to_csv, compare, extract_boundary, grid_to_csv,
                        run_sweep, to_svg)

    methods = [m.strip() for m in cfg.method.split(",") if m.strip()]
    alias = {"general": "floquet-general", "simplified": "floquet-simplified"}
    methods = [alias.get(m, m) for m in methods]
    if not methods or any(m not in SWEEP_METHODS for m in methods):
        raise ConfigError(f"methods must be chosen from {SWEEP_METHODS}")
    nx, ny = cfg.mesh
    base = cfg.base_params()
    grids = []
    for m in methods:
        tb = cfg.dns_settings() if cfg.tiebreak else False
        grid = run_sweep(base, cfg.gamma_range, cfg.h_range, nx, ny, m, cfg.method_settings(m), tiebreak=tb)
        grids.append(grid)
        _write(cfg, f"sweep_{m}.csv", grid_to_csv(grid, timing=cfg.timing))
        masked = grid
        lab = grid.labels()
        if np.any(lab == "Indeterminate"):
            print(f"{m}: {int(np.sum(lab == 'Indeterminate'))} Indeterminate cells masked as Stable",
                  file=sys.stderr)
            from .sweep import grid_from_labels

            masked = grid_from_labels(grid.gamma_axis, grid.h_axis,
                                      np.where(lab == "Indeterminate", "Stable", lab), m, base)
        lines = extract_boundary(masked, cfg.refine_tol, cfg.method_settings(m))
        _write(cfg, f"boundary_{m}.csv", boundary_to_csv(lines))
        _write(cfg, f"boundary_{m}.svg", to_svg(masked, lines, title=m))
        print(json.dumps({"method": m, "counts": grid.counts(), "polylines": len(lines)}, sort_keys=True))
    if len(grids) == 2:
        rep = compare(grids[0], grids[1])
        rows = ["gamma,h,label_a,label_b"]
        for (la, lb), pts in sorted(rep.cells.items()):
            if la != lb:
                rows += [f"{g!r},{h!r},{la},{lb}" for g, h in pts]
        _write(cfg, "disagreement.csv", "\n".join(rows) + "\n")
        print(json.dumps({"subset_exceptions": len(rep.subset_exceptions),
                          "subset_denominator": rep.subset_denominator,
                          "boundary_exceptions": rep.boundary_exceptions}, sort_keys=True))
    return 0


def selftest(cfg: RunConfig, stream=sys.stdout) -> bool:
    """Fast property checks; returns True when all pass."""
    from .dns import DnsSettings, classify_dns
    from .floquet import general_determinant, max_growth_monodromy, roots
    from .model import OscillatorParams
    from .poly import Polynomial
    from .sdp import SolverSettings, Status, random_feasible_problem, solve, verify_kkt
    from .sos import global_upper_bound

    settings = SolverSettings(**cfg.solver)
    results = []

    rng = np.random.default_rng(cfg.seed)
    ok = True
    for _ in range(20):
        prob = random_feasible_problem(rng)
        sol = solve(prob, settings)
        ok &= sol.status is Status.OPTIMAL and verify_kkt(prob, sol).passed
    results.append(("sdp random KKT battery", bool(ok)))

    x = Polynomial.variable(0, 1)
    U, _ = global_upper_bound(2 * x * x - x**4, settings=settings)
    results.append(("univariate SOS bound = 1", U is not None and abs(U - 1) <= 1e-6))

    ok = True
    for g, h in ((2.01, 0.05), (-1.4, 0.03), (0.9, 0.04)):
        p = OscillatorParams(gamma=g, h=h)
        ok &= abs(roots(general_determinant(p)).max_growth - max_growth_monodromy(p)) <= 1e-3
    results.append(("Hill vs monodromy", bool(ok)))

    p = OscillatorParams(gamma=-1.0, h=0.65)
    ds = DnsSettings(**cfg.dns_settings())
    a = classify_dns(p, settings=ds)[0].label
    b = classify_dns(p, settings=ds)[0].label
    results.append(("seeded DNS reproducible", a == b == "Unstable"))

    from .bound import BoundPolicy, classify

    v = classify(OscillatorParams(gamma=1.0, h=0.0), 4, policy=BoundPolicy(solver=settings))
    results.append(("undriven point certified Stable", v.label == "Stable"))

    for name, passed in results:
        stream.write(f"{'PASS' if passed else 'FAIL'}  {name}\n")
    return all(p for _, p in results)


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = load(ns.config, _overrides(ns))
        if ns.command == "bound":
            return cmd_bound(cfg)
        if ns.command == "floquet":
            return cmd_floquet(cfg)
        if ns.command == "dns":
            return cmd_dns(cfg)
        if ns.command == "sweep":
            return cmd_sweep(cfg)
        if ns.command == "selftest":
            return 0 if selftest(cfg) else 1
    except (ConfigError, ValueError) as exc:
        print(f"ltavg: error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
