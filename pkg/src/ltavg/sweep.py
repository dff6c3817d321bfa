"""Parameter sweeps over (gamma, h), boundary extraction and method comparison."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np
from scipy.signal import find_peaks

from .bound import BoundPolicy, Verdict, classify
from .dns import DnsSettings, classify_dns
from .floquet import classify_floquet
from .model import OscillatorParams
from .sdp import SolverSettings

SWEEP_METHODS = ("sos", "floquet-general", "floquet-simplified", "dns", "monodromy")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("LTAVG_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# per-point dispatch


def _check_keys(settings: dict, allowed: set, what: str) -> None:
    bad = set(settings) - allowed
    if bad:
        raise ValueError(f"unknown {what} settings: {sorted(bad)}")


def _policy(settings: dict) -> tuple:
    allowed = {f.name for f in fields(BoundPolicy)} | {"dV", "dS"} | {f.name for f in fields(SolverSettings)}
    _check_keys(settings, allowed, "sos")
    s = dict(settings)
    dV = int(s.pop("dV", 8))
    dS = s.pop("dS", None)
    solver_keys = {f.name for f in fields(SolverSettings)}
    solver = SolverSettings(**{k: s.pop(k) for k in list(s) if k in solver_keys})
    pol = BoundPolicy(**s, solver=solver) if "solver" not in s else BoundPolicy(**s)
    if dV < 2 or dV % 2:
        raise ValueError("dV must be an even integer >= 2")
    return dV, dS, pol


def validate_settings(method: str, settings: dict | None) -> None:
    settings = settings or {}
    if method not in SWEEP_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {SWEEP_METHODS}")
    if method == "sos":
        _policy(settings)
    elif method == "dns":
        DnsSettings(**settings)
    else:
        _check_keys(settings, set(), method)


def classify_point(params: OscillatorParams, method: str, settings: dict | None = None) -> Verdict:
    settings = settings or {}
    if method == "sos":
        dV, dS, pol = _policy(settings)
        return classify(params, dV, dS, pol)
    if method == "dns":
        return classify_dns(params, settings=DnsSettings(**settings))[0]
    if method in ("floquet-general", "floquet-simplified", "monodromy"):
        return classify_floquet(params, method.replace("floquet-", ""))
    raise ValueError(f"unknown method {method!r}")


def _task(args):
    params, method, settings, tiebreak = args
    v = classify_point(params, method, settings)
    if tiebreak and v.label == "Indeterminate" and method != "dns":
        d = classify_point(params, "dns", tiebreak if isinstance(tiebreak, dict) else {})
        d.extra = {**d.extra, "tiebreak_of": method, "original": v.record()}
        v = d
    return v


def _map(fn, items, workers):
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (8 * workers))))


# ---------------------------------------------------------------------------
# grids


@dataclass
class SweepGrid:
    """Verdicts on a (gamma, h) mesh; ``verdicts[i][j]`` is at (gamma_axis[j], h_axis[i])."""

    gamma_axis: np.ndarray
    h_axis: np.ndarray
    verdicts: list
    method: str
    params_base: OscillatorParams
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.gamma_axis = np.asarray(self.gamma_axis, dtype=float)
        self.h_axis = np.asarray(self.h_axis, dtype=float)
        if len(self.verdicts) != len(self.h_axis) or any(len(r) != len(self.gamma_axis) for r in self.verdicts):
            raise ValueError("verdict matrix does not match the axes")
        for ax in (self.gamma_axis, self.h_axis):
            if len(ax) > 1 and np.any(np.diff(ax) <= 0):
                raise ValueError("axes must be strictly increasing")

    @property
    def shape(self) -> tuple:
        return (len(self.h_axis), len(self.gamma_axis))

    def labels(self) -> np.ndarray:
        return np.array([[v.label for v in row] for row in self.verdicts])

    def unstable_mask(self) -> np.ndarray:
        return self.labels() == "Unstable"

    def stable_mask(self) -> np.ndarray:
        return self.labels() == "Stable"

    def counts(self) -> dict:
        lab, n = np.unique(self.labels(), return_counts=True)
        return {str(k): int(c) for k, c in zip(lab, n)}

    def params_at(self, i: int, j: int) -> OscillatorParams:
        return self.params_base.with_(gamma=float(self.gamma_axis[j]), h=float(self.h_axis[i]))


def make_axes(gamma_range, h_range, nx: int, ny: int) -> tuple:
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must be at least 2")
    g0, g1 = map(float, gamma_range)
    h0, h1 = map(float, h_range)
    if not (g1 > g0 and h1 > h0):
        raise ValueError("ranges must be increasing")
    if h0 < 0 or h1 > 1:
        raise ValueError("h range must lie in [0, 1]")
    return np.linspace(g0, g1, nx), np.linspace(h0, h1, ny)


def run_sweep(
    base: OscillatorParams,
    gamma_range=(-3.0, 3.0),
    h_range=(0.0, 1.0),
    nx: int = 80,
    ny: int = 80,
    method: str = "sos",
    method_settings: dict | None = None,
    tiebreak: bool | dict = True,
    workers: int | None = None,
) -> SweepGrid:
    """Classify every mesh point; Indeterminate cells get one DNS tiebreak."""
    settings = dict(method_settings or {})
    validate_settings(method, settings)
    gax, hax = make_axes(gamma_range, h_range, nx, ny)
    pts = [base.with_(gamma=float(g), h=float(h)) for h in hax for g in gax]
    items = [(p, method, settings, tiebreak) for p in pts]
    flat = _map(_task, items, workers or worker_count())
    rows = [flat[i * nx:(i + 1) * nx] for i in range(ny)]
    return SweepGrid(gax, hax, rows, method, base, settings)


def grid_from_labels(gamma_axis, h_axis, labels, method="sos", base=None) -> SweepGrid:
    """Build a grid from a label matrix (rows follow h_axis)."""
    rows = [[Verdict(str(l), method=method) for l in row] for row in labels]
    return SweepGrid(gamma_axis, h_axis, rows, method, base or OscillatorParams())


# ---------------------------------------------------------------------------
# boundaries


@dataclass
class BoundaryPolyline:
    vertices: np.ndarray  # (n, 2) columns gamma, h
    closed: bool = False

    def __len__(self):
        return len(self.vertices)


# marching squares, corners ordered (0,0) (0,1) (1,1) (1,0) in (row, col);
# edges: 0 bottom (row i), 1 right (col j+1), 2 top (row i+1), 3 left (col j)
_CASES = {
    0: [], 15: [],
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    8: [(2, 3)], 7: [(2, 3)],
    3: [(3, 1)], 12: [(3, 1)],
    6: [(0, 2)], 9: [(0, 2)],
}


def _edge_id(i, j, e):
    if e == 0:
        return ("g", i, j)  # edge along gamma on row i between cols j, j+1
    if e == 2:
        return ("g", i + 1, j)
    if e == 1:
        return ("h", i, j + 1)  # edge along h on col j+1 between rows i, i+1
    return ("h", i, j)


def extract_boundary(grid: SweepGrid, refine_tol: float | None = None, refine_settings: dict | None = None) -> list:
    """Marching squares on the binary Unstable field.

    Vertices sit at edge midpoints; with ``refine_tol`` the crossings on
    h-edges are located by bisection with the grid's method.
    """
    lab = grid.labels()
    if np.any(lab == "Indeterminate"):
        raise ValueError("grid has Indeterminate cells; resolve or mask them first")
    U = (lab == "Unstable").astype(int)
    ny, nx = U.shape
    gax, hax = grid.gamma_axis, grid.h_axis
    segs = []
    for i in range(ny - 1):
        for j in range(nx - 1):
            code = U[i, j] | (U[i, j + 1] << 1) | (U[i + 1, j + 1] << 2) | (U[i + 1, j] << 3)
            if code in (5, 10):
                centre = (U[i, j] + U[i, j + 1] + U[i + 1, j + 1] + U[i + 1, j]) / 4.0
                # saddle: join the unstable corners when the centre counts as unstable
                if code == 5:
                    pairs = [(0, 1), (2, 3)] if centre >= 0.5 else [(3, 0), (1, 2)]
                else:
                    pairs = [(3, 0), (1, 2)] if centre >= 0.5 else [(0, 1), (2, 3)]
            else:
                pairs = _CASES[code]
            for a, b in pairs:
                segs.append((_edge_id(i, j, a), _edge_id(i, j, b)))

    cache: dict = {}

    def point(eid):
        if eid in cache:
            return cache[eid]
        kind, i, j = eid
        if kind == "g":
            pt = (0.5 * (gax[j] + gax[j + 1]), hax[i])
        else:
            lo, hi = hax[i], hax[i + 1]
            h = 0.5 * (lo + hi)
            if refine_tol is not None and U[i, j] != U[i + 1, j]:
                p = grid.params_base.with_(gamma=float(gax[j]))
                if U[i, j] == 0:
                    h = refine_boundary(p, float(gax[j]), lo, hi, grid.method, refine_tol,
                                        refine_settings or grid.settings, check=False)
                else:
                    h = refine_boundary(p, float(gax[j]), hi, lo, grid.method, refine_tol,
                                        refine_settings or grid.settings, check=False)
            pt = (gax[j], h)
        cache[eid] = pt
        return pt

    adj: dict = {}
    for k, (a, b) in enumerate(segs):
        adj.setdefault(a, []).append(k)
        adj.setdefault(b, []).append(k)
    used = [False] * len(segs)

    def walk(start_edge, k0):
        chain = [start_edge]
        cur, k = start_edge, k0
        while k is not None:
            used[k] = True
            a, b = segs[k]
            nxt = b if a == cur else a
            chain.append(nxt)
            cur = nxt
            k = next((m for m in adj[cur] if not used[m]), None)
        return chain

    lines = []
    # open chains start at edges with a single incident segment (grid border)
    for e, ks in sorted(adj.items(), key=lambda kv: kv[0]):
        if len(ks) == 1 and not used[ks[0]]:
            ch = walk(e, ks[0])
            lines.append(BoundaryPolyline(np.array([point(x) for x in ch]), False))
    for k in range(len(segs)):
        if not used[k]:
            ch = walk(segs[k][0], k)
            lines.append(BoundaryPolyline(np.array([point(x) for x in ch]), ch[0] == ch[-1]))
    return lines


def refine_boundary(
    base: OscillatorParams,
    gamma: float,
    h_lo: float,
    h_hi: float,
    method="floquet-general",
    tol_h: float = 1e-3,
    settings: dict | None = None,
    check: bool = True,
) -> float:
    """Bisection in h at fixed gamma between a Stable h_lo and an Unstable h_hi.

    ``method`` is a sweep method name or a callable returning a label or a
    Verdict for an :class:`OscillatorParams`.
    """
    def lab(h):
        p = base.with_(gamma=float(gamma), h=float(h))
        out = method(p) if callable(method) else classify_point(p, method, settings)
        return out.label if isinstance(out, Verdict) else str(out)

    if check:
        if lab(h_lo) != "Stable":
            raise ValueError(f"bracket invalid: h_lo={h_lo} is not Stable")
        if lab(h_hi) != "Unstable":
            raise ValueError(f"bracket invalid: h_hi={h_hi} is not Unstable")
    lo, hi = float(h_lo), float(h_hi)
    while abs(hi - lo) > tol_h:
        mid = 0.5 * (lo + hi)
        if lab(mid) == "Unstable":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def refine_edge_gamma(base: OscillatorParams, h: float, g_in: float, g_out: float, method="floquet-general",
                      tol: float = 1e-4, settings: dict | None = None) -> float:
    """Bisection in gamma at fixed h between an Unstable g_in and a Stable g_out."""
    def unstable(g):
        return classify_point(base.with_(gamma=float(g), h=float(h)), method, settings).label == "Unstable"

    if not unstable(g_in) or unstable(g_out):
        raise ValueError("bracket invalid: g_in must be Unstable and g_out Stable")
    a, b = float(g_in), float(g_out)
    while abs(b - a) > tol:
        m = 0.5 * (a + b)
        if unstable(m):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def boundary_curve(
    base: OscillatorParams,
    gammas,
    method: str = "sos",
    settings: dict | None = None,
    h_max: float = 1.0,
    tol_h: float = 1e-2,
    workers: int | None = None,
) -> np.ndarray:
    """Lowest unstable h per gamma by bisection on [0, h_max]; inf where h_max is stable."""
    items = [(base, float(g), method, settings or {}, h_max, tol_h) for g in gammas]
    return np.array(_map(_curve_task, items, workers or worker_count()))


def _curve_task(args):
    base, g, method, settings, h_max, tol_h = args
    top = classify_point(base.with_(gamma=g, h=h_max), method, settings).label
    if top != "Unstable":
        return np.inf
    return refine_boundary(base, g, 0.0, h_max, method, tol_h, settings, check=False)


def boundary_from_grid(grid: SweepGrid) -> np.ndarray:
    """Lowest unstable h in each gamma column (inf when the column is stable)."""
    U = grid.unstable_mask()
    out = np.full(U.shape[1], np.inf)
    for j in range(U.shape[1]):
        rows = np.flatnonzero(U[:, j])
        if rows.size:
            out[j] = grid.h_axis[rows[0]]
    return out


def count_tongues(gammas, h_boundary, window=None, h_threshold: float = 0.5, prominence: float = 0.02) -> int:
    """Distinct local minima of the boundary curve below ``h_threshold``."""
    g = np.asarray(gammas, dtype=float)
    hb = np.asarray(h_boundary, dtype=float)
    if window is not None:
        sel = (g >= window[0]) & (g <= window[1])
        g, hb = g[sel], hb[sel]
    cap = max(1.0, float(np.nanmax(hb[np.isfinite(hb)], initial=1.0))) + 1.0
    y = np.where(np.isfinite(hb), hb, cap)
    padded = np.concatenate([[cap], y, [cap]])
    peaks, _ = find_peaks(-padded, prominence=prominence)
    return int(np.sum(padded[peaks] < h_threshold))


# ---------------------------------------------------------------------------
# comparison


@dataclass
class CompareReport:
    counts: dict
    cells: dict
    subset_exceptions: list
    subset_denominator: int
    boundary_exceptions: int

    @property
    def exception_ratio(self) -> float:
        return len(self.subset_exceptions) / max(1, self.subset_denominator)

    @property
    def interior_exception_ratio(self) -> float:
        """Exceptions not adjacent to a label change in either grid."""
        return (len(self.subset_exceptions) - self.boundary_exceptions) / max(1, self.subset_denominator)

    def disagreements(self) -> list:
        return [c for k, v in self.cells.items() if k[0] != k[1] for c in v]


def _near_boundary(mask: np.ndarray, i: int, j: int) -> bool:
    ny, nx = mask.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            a, b = i + di, j + dj
            if 0 <= a < ny and 0 <= b < nx and mask[a, b] != mask[i, j]:
                return True
    return False


def compare(grid_a: SweepGrid, grid_b: SweepGrid, subset: str = "Unstable") -> CompareReport:
    """Label cross-table plus the check that A's ``subset`` cells are ``subset`` in B."""
    if grid_a.shape != grid_b.shape or not (
        np.allclose(grid_a.gamma_axis, grid_b.gamma_axis) and np.allclose(grid_a.h_axis, grid_b.h_axis)
    ):
        raise ValueError("grids have different axes")
    la, lb = grid_a.labels(), grid_b.labels()
    counts: dict = {}
    cells: dict = {}
    for i in range(la.shape[0]):
        for j in range(la.shape[1]):
            key = (str(la[i, j]), str(lb[i, j]))
            counts[key] = counts.get(key, 0) + 1
            cells.setdefault(key, []).append((float(grid_a.gamma_axis[j]), float(grid_a.h_axis[i])))
    ma, mb = la == subset, lb == subset
    exc = [(i, j) for i, j in zip(*np.nonzero(ma & ~mb))]
    nb = sum(1 for i, j in exc if _near_boundary(ma, i, j) or _near_boundary(mb, i, j))
    pts = [(float(grid_a.gamma_axis[j]), float(grid_a.h_axis[i])) for i, j in exc]
    return CompareReport(counts, cells, pts, int(ma.sum()), nb)


# ---------------------------------------------------------------------------
# output


CSV_FIELDS = ("gamma", "h", "label", "U", "method", "dV", "dS", "wall_time")


def grid_to_csv(grid: SweepGrid, timing: bool = False) -> str:
    """Row-major (h outer, gamma inner). ``wall_time`` is blank unless ``timing``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for i, h in enumerate(grid.h_axis):
        for j, g in enumerate(grid.gamma_axis):
            v = grid.verdicts[i][j]
            dv, ds = v.degrees_used if v.degrees_used else ("", "")
            w.writerow([
                repr(float(g)), repr(float(h)), v.label,
                "" if v.bound_value is None else repr(float(v.bound_value)),
                v.method, dv, "" if ds is None else ds,
                repr(float(v.wall_time)) if timing else "",
            ])
    return buf.getvalue()


def grid_from_csv(text: str, base: OscillatorParams | None = None) -> SweepGrid:
    rows = list(csv.DictReader(io.StringIO(text)))
    gax = sorted({float(r["gamma"]) for r in rows})
    hax = sorted({float(r["h"]) for r in rows})
    gi = {g: k for k, g in enumerate(gax)}
    hi = {h: k for k, h in enumerate(hax)}
    V = [[None] * len(gax) for _ in hax]
    method = rows[0]["method"] if rows else "sos"
    for r in rows:
        deg = (int(r["dV"]), int(r["dS"]) if r["dS"] else None) if r["dV"] else None
        V[hi[float(r["h"])]][gi[float(r["gamma"])]] = Verdict(
            r["label"], float(r["U"]) if r["U"] else None, r["method"], deg,
            float(r["wall_time"]) if r["wall_time"] else 0.0,
        )
    return SweepGrid(gax, hax, V, method, base or OscillatorParams())


def boundary_to_csv(lines: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["polyline_id", "vertex_index", "gamma", "h"])
    for k, ln in enumerate(lines):
        for m, (g, h) in enumerate(ln.vertices):
            w.writerow([k, m, repr(float(g)), repr(float(h))])
    return buf.getvalue()


def to_svg(grid: SweepGrid, lines: list, markers=None, title: str = "") -> str:
    """800x600 drawing: axis box, boundary polylines, optional (gamma, h, label) markers."""
    W, H, L, R, T, B = 800, 600, 70, 20, 30, 50
    g0, g1 = float(grid.gamma_axis[0]), float(grid.gamma_axis[-1])
    h0, h1 = float(grid.h_axis[0]), float(grid.h_axis[-1])

    def X(g):
        return L + (g - g0) / (g1 - g0) * (W - L - R)

    def Y(h):
        return H - B - (h - h0) / (h1 - h0) * (H - T - B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<rect x="{L}" y="{T}" width="{W - L - R}" height="{H - T - B}" fill="none" stroke="black"/>']
    U = grid.unstable_mask()
    dx = (W - L - R) / max(1, len(grid.gamma_axis) - 1)
    dy = (H - T - B) / max(1, len(grid.h_axis) - 1)
    for i, h in enumerate(grid.h_axis):
        for j, g in enumerate(grid.gamma_axis):
            if U[i, j]:
                out.append(f'<rect x="{X(g) - dx / 2:.2f}" y="{Y(h) - dy / 2:.2f}" width="{dx:.2f}" '
                           f'height="{dy:.2f}" fill="#f4c7c3" stroke="none"/>')
    for ln in lines:
        pts = " ".join(f"{X(g):.2f},{Y(h):.2f}" for g, h in ln.vertices)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    for k in range(5):
        g = g0 + k * (g1 - g0) / 4
        h = h0 + k * (h1 - h0) / 4
        out.append(f'<text x="{X(g):.1f}" y="{H - B + 18}" font-size="12" text-anchor="middle">{g:.2f}</text>')
        out.append(f'<text x="{L - 8}" y="{Y(h) + 4:.1f}" font-size="12" text-anchor="end">{h:.2f}</text>')
    out.append(f'<text x="{(W + L - R) / 2}" y="{H - 12}" font-size="14" text-anchor="middle">gamma</text>')
    out.append(f'<text x="18" y="{(H - B + T) / 2}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 18 {(H - B + T) / 2})">h</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="20" font-size="14" text-anchor="middle">{title}</text>')
    for g, h, label in markers or []:
        if label == "Stable":
            out.append(f'<circle cx="{X(g):.2f}" cy="{Y(h):.2f}" r="5" fill="none" stroke="blue"/>')
        else:
            x, y = X(g), Y(h)
            out.append(f'<path d="M{x - 5:.2f},{y - 5:.2f} L{x + 5:.2f},{y + 5:.2f} M{x - 5:.2f},{y + 5:.2f} '
                       f'L{x + 5:.2f},{y - 5:.2f}" stroke="red"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
