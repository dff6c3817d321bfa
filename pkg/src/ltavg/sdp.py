"""Dense primal-dual interior-point solver for small semidefinite programs.

Problem form::

    minimize    c_f . u + sum_k <C_k, X_k>
    subject to  A_f u + sum_k A_k(X_k) = b,   X_k PSD,   u free.

Free variables are eliminated by an orthogonal change of the equality rows,
and the remaining standard-form problem is embedded in a homogeneous
self-dual model so that infeasibility is reported as a certificate rather
than as a timeout. Search directions use Nesterov-Todd scaling and a
Mehrotra predictor-corrector.
"""

from __future__ import annotations

import io
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, TextIO

import numpy as np
from scipy import linalg as sla

logger = logging.getLogger(__name__)


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    NUMERICAL_TROUBLE = "NumericalTrouble"
    ITERATION_LIMIT = "IterationLimit"


class SdpError(ValueError):
    """Malformed problem data or a violated solver precondition."""


@dataclass
class SdpProblem:
    """Sparse problem data.

    Each equality row and the objective are stored as triplets. A block entry
    ``(row, i, j, v)`` with ``i <= j`` contributes ``v * X[i, j]`` to the row,
    so off-diagonal entries are counted once.
    """

    n_free: int
    block_dims: list
    b: np.ndarray
    free_entries: list = field(default_factory=list)  # (row, var, value)
    block_entries: list = field(default_factory=list)  # per block: list of (row, i, j, value)
    c_free: np.ndarray | None = None
    c_block_entries: list = field(default_factory=list)  # per block: list of (i, j, value)
    free_names: list = field(default_factory=list)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.c_free is None:
            self.c_free = np.zeros(self.n_free)
        self.c_free = np.asarray(self.c_free, dtype=float)
        nb = len(self.block_dims)
        while len(self.block_entries) < nb:
            self.block_entries.append([])
        while len(self.c_block_entries) < nb:
            self.c_block_entries.append([])

    @property
    def n_rows(self) -> int:
        return len(self.b)

    def validate(self) -> None:
        m = self.n_rows
        for row, var, _ in self.free_entries:
            if not (0 <= row < m and 0 <= var < self.n_free):
                raise SdpError(f"free entry ({row}, {var}) references an undeclared variable")
        for k, (n, entries) in enumerate(zip(self.block_dims, self.block_entries)):
            for row, i, j, _ in entries:
                if not (0 <= row < m and 0 <= i <= j < n):
                    raise SdpError(f"block {k} entry ({row}, {i}, {j}) out of range")
        for k, (n, entries) in enumerate(zip(self.block_dims, self.c_block_entries)):
            for i, j, _ in entries:
                if not 0 <= i <= j < n:
                    raise SdpError(f"objective entry ({i}, {j}) of block {k} out of range")

    # -- dense views -------------------------------------------------
    def free_matrix(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_free))
        for row, var, v in self.free_entries:
            A[row, var] += v
        return A

    def block_matrices(self, k: int) -> np.ndarray:
        """Symmetric matrices A_row for block k, shape (m, n, n)."""
        n = self.block_dims[k]
        A = np.zeros((self.n_rows, n, n))
        for row, i, j, v in self.block_entries[k]:
            if i == j:
                A[row, i, i] += v
            else:
                A[row, i, j] += 0.5 * v
                A[row, j, i] += 0.5 * v
        return A

    def objective_matrix(self, k: int) -> np.ndarray:
        n = self.block_dims[k]
        C = np.zeros((n, n))
        for i, j, v in self.c_block_entries[k]:
            if i == j:
                C[i, i] += v
            else:
                C[i, j] += 0.5 * v
                C[j, i] += 0.5 * v
        return C

    def data_norm(self) -> float:
        vals = [np.max(np.abs(self.b), initial=0.0), np.max(np.abs(self.c_free), initial=0.0)]
        vals += [abs(v) for *_, v in self.free_entries]
        for entries in self.block_entries:
            vals += [abs(e[-1]) for e in entries]
        for entries in self.c_block_entries:
            vals += [abs(e[-1]) for e in entries]
        return float(max(vals, default=0.0))

    def scaled(self, objective_factor: float) -> "SdpProblem":
        return SdpProblem(
            n_free=self.n_free,
            block_dims=list(self.block_dims),
            b=self.b.copy(),
            free_entries=list(self.free_entries),
            block_entries=[list(e) for e in self.block_entries],
            c_free=self.c_free * objective_factor,
            c_block_entries=[[(i, j, v * objective_factor) for i, j, v in e] for e in self.c_block_entries],
            free_names=list(self.free_names),
        )


@dataclass
class SolverSettings:
    max_iter: int = 200
    step_fraction: float = 0.99
    feas_tol: float = 1e-9
    gap_tol: float = 1e-8
    infeas_tol: float = 1e-8
    dim_cap: int = 600
    # acceptance thresholds for reporting Optimal
    report_feas_tol: float = 1e-8
    report_gap_tol: float = 1e-7


@dataclass
class SdpSolution:
    status: Status
    objective: float
    dual_objective: float
    free: np.ndarray
    X: list
    y: np.ndarray
    S: list
    residuals: dict
    iterations: int
    certificate: np.ndarray | None = None
    wall_time: float = 0.0

    @property
    def gram_blocks(self) -> list:
        return self.X


# ---------------------------------------------------------------------------
# backend registry

_BACKENDS: dict = {}


def register_backend(name: str, fn: Callable) -> None:
    """Make an alternative solver available under ``solve(..., backend=name)``."""
    _BACKENDS[name] = fn


def solve(problem: SdpProblem, settings: SolverSettings | None = None, backend: str = "builtin") -> SdpSolution:
    settings = settings or SolverSettings()
    if backend == "builtin":
        return _solve_builtin(problem, settings)
    try:
        fn = _BACKENDS[backend]
    except KeyError:
        raise SdpError(f"unknown SDP backend {backend!r}") from None
    return fn(problem, settings)


# ---------------------------------------------------------------------------
# linear algebra helpers


def _sym(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _nt_scaling(X, S):
    """R with R^{-1} X R^{-T} = R^T S R = diag(lam)."""
    Lx = np.linalg.cholesky(X)
    Ls = np.linalg.cholesky(S)
    U, lam, Vh = np.linalg.svd(Ls.T @ Lx)
    R = Lx @ Vh.T / np.sqrt(lam)
    Rinv = (np.sqrt(lam)[:, None] * Vh) @ sla.solve_triangular(Lx, np.eye(len(lam)), lower=True)
    return R, Rinv, lam


def _max_step(lam, D):
    """Largest alpha with diag(lam) + alpha*D PSD (inf if unbounded)."""
    s = 1.0 / np.sqrt(lam)
    E = np.linalg.eigvalsh(_sym(s[:, None] * D * s[None, :]))
    m = E[0]
    return np.inf if m >= 0 else -1.0 / m


class _Reduced:
    """Standard-form data after free-variable and redundant-row elimination."""

    def __init__(self, problem: SdpProblem):
        self.problem = problem
        self.dims = list(problem.block_dims)
        self.offsets = np.cumsum([0] + [n * n for n in self.dims])
        m = problem.n_rows
        b = problem.b
        A_X = np.zeros((m, self.offsets[-1]))
        for k, n in enumerate(self.dims):
            A_X[:, self.offsets[k]:self.offsets[k + 1]] = problem.block_matrices(k).reshape(m, n * n)
        c_X = np.concatenate([problem.objective_matrix(k).ravel() for k in range(len(self.dims))]) \
            if self.dims else np.zeros(0)
        A_f = problem.free_matrix()
        c_f = problem.c_free
        self.A_X, self.c_X, self.A_f = A_X, c_X, A_f
        self.unbounded_free = False
        self.const = 0.0
        self.w = np.zeros(m)
        if problem.n_free:
            U, s, Vt = np.linalg.svd(A_f, full_matrices=True)
            tol = max(A_f.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
            r = int(np.sum(s > tol))
            Ur, sr, Vr = U[:, :r], s[:r], Vt[:r]
            resid = c_f - Vr.T @ (Vr @ c_f)
            if np.linalg.norm(resid) > 1e-9 * (1.0 + np.linalg.norm(c_f)):
                self.unbounded_free = True
            self.w = Ur @ ((Vr @ c_f) / sr)
            self.Q2 = U[:, r:]
            self._free_solve = (Ur, sr, Vr)
        else:
            self.Q2 = np.eye(m)
            self._free_solve = None
        A2 = self.Q2.T @ A_X
        b2 = self.Q2.T @ b
        self.c = c_X - A_X.T @ self.w
        self.const = float(self.w @ b)
        if A2.shape[0]:
            U2, s2, Vt2 = np.linalg.svd(A2, full_matrices=False)
            tol = max(A2.shape) * np.finfo(float).eps * (s2[0] if s2.size else 0.0) * 10
            r2 = int(np.sum(s2 > max(tol, 1e-12)))
        else:
            U2, s2, Vt2, r2 = np.zeros((0, 0)), np.zeros(0), np.zeros((0, A2.shape[1])), 0
        self.U2r = U2[:, :r2]
        self.s2 = s2[:r2]
        self.A = Vt2[:r2]
        self.b = (self.U2r.T @ b2) / self.s2 if r2 else np.zeros(0)
        resid_b = b2 - self.U2r @ (self.U2r.T @ b2) if r2 else b2
        self.inconsistent = np.linalg.norm(resid_b) > 1e-9 * (1.0 + np.linalg.norm(b2))
        self._resid_b = resid_b

    def split(self, v):
        return [v[self.offsets[k]:self.offsets[k + 1]].reshape(n, n) for k, n in enumerate(self.dims)]

    def join(self, blocks):
        return np.concatenate([B.ravel() for B in blocks]) if blocks else np.zeros(0)

    def lift_y(self, y_red):
        """Reduced multipliers -> multipliers of the original rows (w excluded)."""
        y2 = self.U2r @ (y_red / self.s2) if len(y_red) else np.zeros(self.Q2.shape[1])
        return self.Q2 @ y2

    def recover_free(self, x_vec):
        if self._free_solve is None:
            return np.zeros(0)
        Ur, sr, Vr = self._free_solve
        rhs = self.problem.b - self.A_X @ x_vec
        return Vr.T @ ((Ur.T @ rhs) / sr)


def _solution_residuals(problem: SdpProblem, u, X, y):
    """Residuals of the original problem, recomputed from its data only."""
    m = problem.n_rows
    Ax = problem.free_matrix() @ u if problem.n_free else np.zeros(m)
    S = []
    pobj = float(problem.c_free @ u) if problem.n_free else 0.0
    for k in range(len(problem.block_dims)):
        Ak = problem.block_matrices(k)
        Ck = problem.objective_matrix(k)
        Ax = Ax + np.einsum("mij,ij->m", Ak, X[k])
        S.append(_sym(Ck - np.einsum("m,mij->ij", y, Ak)))
        pobj += float(np.sum(Ck * X[k]))
    dobj = float(problem.b @ y)
    rp = np.max(np.abs(Ax - problem.b), initial=0.0)
    rf = np.max(np.abs(problem.c_free - problem.free_matrix().T @ y), initial=0.0) if problem.n_free else 0.0
    return Ax, S, pobj, dobj, rp, rf


def _solve_builtin(problem: SdpProblem, settings: SolverSettings) -> SdpSolution:
    t0 = time.perf_counter()
    problem.validate()
    if sum(problem.block_dims) > settings.dim_cap:
        raise SdpError(
            f"total PSD dimension {sum(problem.block_dims)} exceeds cap {settings.dim_cap}"
        )
    red = _Reduced(problem)
    dims = red.dims
    nu = sum(dims)
    m = problem.n_rows

    def finish(status, Xb, y_full, Sb, iters, cert=None, u=None):
        if u is None:
            u = red.recover_free(red.join(Xb)) if Xb else np.zeros(problem.n_free)
        _, S_chk, pobj, dobj, rp, rf = _solution_residuals(problem, u, Xb, y_full)
        scale = 1.0 + problem.data_norm()
        dres = max(
            [rf] + [float(np.max(np.abs(Sa - Sc), initial=0.0)) for Sa, Sc in zip(Sb, S_chk)]
        )
        gap = abs(pobj - dobj)
        rel_gap = gap / (1.0 + abs(pobj) + abs(dobj))
        residuals = {
            "primal": rp / scale,
            "dual": dres / scale,
            "gap": gap,
            "rel_gap": rel_gap,
        }
        if status is Status.OPTIMAL and not (
            residuals["primal"] <= settings.report_feas_tol
            and residuals["dual"] <= settings.report_feas_tol
            and rel_gap <= settings.report_gap_tol
        ):
            status = Status.NUMERICAL_TROUBLE
        sol = SdpSolution(
            status=status,
            objective=pobj,
            dual_objective=dobj,
            free=u,
            X=Xb,
            y=y_full,
            S=S_chk,
            residuals=residuals,
            iterations=iters,
            certificate=cert,
            wall_time=time.perf_counter() - t0,
        )
        logger.debug("sdp %s after %d iterations: %s", status.value, iters, residuals)
        return sol

    if red.inconsistent:
        # equality rows alone are inconsistent: y with A^T y = 0, b^T y > 0
        y2 = red._resid_b
        cert = red.Q2 @ y2
        cert = cert / float(problem.b @ cert)
        Xb = [np.zeros((n, n)) for n in dims]
        return finish(Status.PRIMAL_INFEASIBLE, Xb, cert, [np.zeros((n, n)) for n in dims], 0, cert=cert,
                      u=np.zeros(problem.n_free))

    A, b, c = red.A, red.b, red.c
    mr = A.shape[0]
    A_blocks = [A[:, red.offsets[k]:red.offsets[k + 1]].reshape(mr, n, n) for k, n in enumerate(dims)]
    c_blocks = red.split(c)
    X = [np.eye(n) for n in dims]
    S = [np.eye(n) for n in dims]
    y = np.zeros(mr)
    tau, kappa = 1.0, 1.0
    nb = max(1.0, np.linalg.norm(b))
    nc = max(1.0, np.linalg.norm(c))

    def A_op(blocks):
        out = np.zeros(mr)
        for Ab, B in zip(A_blocks, blocks):
            out += Ab.reshape(mr, B.size) @ B.ravel()
        return out

    def AT_op(v):
        return [np.einsum("m,mij->ij", v, Ab) for Ab in A_blocks]

    def inner(P, Q):
        return float(sum(np.sum(p * q) for p, q in zip(P, Q)))

    status = Status.ITERATION_LIMIT
    it = 0
    small_steps = 0
    hist: list = []
    for it in range(settings.max_iter + 1):
        ATy = AT_op(y)
        r_p = b * tau - A_op(X)
        r_d = [ATy[k] + S[k] - c_blocks[k] * tau for k in range(len(dims))]
        cx = inner(c_blocks, X)
        by = float(b @ y)
        r_g = kappa + cx - by
        mu = (inner(X, S) + tau * kappa) / (nu + 1)
        if not (np.isfinite(mu) and np.isfinite(tau) and mu < 1e100):
            status = Status.NUMERICAL_TROUBLE
            break

        pres = np.linalg.norm(r_p) / tau / nb
        dres = np.sqrt(sum(np.sum(R * R) for R in r_d)) / tau / nc
        gap = abs(cx - by) / tau
        rel_gap = gap / (1.0 + abs(cx + tau * 0) / tau + abs(by) / tau)
        logger.debug("it %3d pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e mu %.2e",
                     it, pres, dres, rel_gap, tau, kappa, mu)
        if pres <= settings.feas_tol and dres <= settings.feas_tol and rel_gap <= settings.gap_tol:
            status = Status.OPTIMAL
            break
        # round-off floor: stop once nothing improves and let the
        # original-space residual check decide
        hist.append((max(pres, dres, rel_gap), tau))
        if len(hist) > 6 and hist[-1][0] > 0.5 * min(h for h, _ in hist[:-5]) and tau > 0.5 * hist[-6][1]:
            close = pres <= 100 * settings.feas_tol and dres <= 100 * settings.feas_tol
            status = Status.OPTIMAL if close and rel_gap <= 100 * settings.gap_tol else Status.NUMERICAL_TROUBLE
            break
        if by > 0:
            pinf = np.sqrt(sum(np.sum((ATy[k] + S[k]) ** 2) for k in range(len(dims)))) / by
            if pinf <= settings.infeas_tol:
                status = Status.PRIMAL_INFEASIBLE
                break
        if cx < 0:
            dinf = np.linalg.norm(A_op(X)) / (-cx)
            if dinf <= settings.infeas_tol:
                status = Status.DUAL_INFEASIBLE
                break
        if it == settings.max_iter:
            status = Status.ITERATION_LIMIT
            break

        try:
            scal = [_nt_scaling(Xk, Sk) for Xk, Sk in zip(X, S)]
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_TROUBLE
            break
        Ws = [R @ R.T for R, _, _ in scal]
        M = np.zeros((mr, mr))
        for Ab, W in zip(A_blocks, Ws):
            T = W @ Ab @ W
            M += Ab.reshape(mr, W.size) @ T.reshape(mr, W.size).T
        M = _sym(M)
        if not np.all(np.isfinite(M)):
            status = Status.NUMERICAL_TROUBLE
            break
        try:
            cho = sla.cho_factor(M + 1e-14 * np.trace(M) / max(mr, 1) * np.eye(mr), lower=True)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            status = Status.NUMERICAL_TROUBLE
            break
        Wc = [W @ Ck @ W for W, Ck in zip(Ws, c_blocks)]
        AWc = A_op(Wc)
        cWc = inner(c_blocks, Wc)
        h1 = AWc + b
        bm = b - AWc
        q2 = sla.cho_solve(cho, h1)
        Wrd = [W @ Rk @ W for W, Rk in zip(Ws, r_d)]
        AWrd = A_op(Wrd)
        cWrd = inner(c_blocks, Wrd)

        def direction(rc, r_tau, eta):
            RqR = []
            for (R, _, lam), rck in zip(scal, rc):
                q = 2.0 * rck / (lam[:, None] + lam[None, :])
                RqR.append(R @ q @ R.T)
            rhs1 = eta * r_p - A_op(RqR) - eta * AWrd
            p = sla.cho_solve(cho, rhs1)
            num = eta * r_g + inner(c_blocks, RqR) + eta * cWrd + r_tau / tau - bm @ p
            den = bm @ q2 + cWc + kappa / tau
            dtau = num / den
            dy = p + q2 * dtau
            ATdy = AT_op(dy)
            dS = [-ATdy[k] + c_blocks[k] * dtau - eta * r_d[k] for k in range(len(dims))]
            dX = [RqR[k] - Ws[k] @ dS[k] @ Ws[k] for k in range(len(dims))]
            dkappa = (r_tau - kappa * dtau) / tau
            return dX, dy, dS, dtau, dkappa

        def scaled(dX, dS):
            dxs, dss = [], []
            for (R, Rinv, _), dXk, dSk in zip(scal, dX, dS):
                dxs.append(_sym(Rinv @ dXk @ Rinv.T))
                dss.append(_sym(R.T @ dSk @ R))
            return dxs, dss

        def step_length(dxs, dss, dtau, dkappa):
            a = np.inf
            for (_, _, lam), dx_, ds_ in zip(scal, dxs, dss):
                a = min(a, _max_step(lam, dx_), _max_step(lam, ds_))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        # predictor
        rc_aff = [-np.diag(lam**2) for _, _, lam in scal]
        dX, dy, dS, dtau, dkappa = direction(rc_aff, -tau * kappa, 1.0)
        dxs, dss = scaled(dX, dS)
        a_aff = min(1.0, step_length(dxs, dss, dtau, dkappa))
        sigma = (1.0 - a_aff) ** 3
        # corrector
        rc = []
        for (_, _, lam), dx_, ds_ in zip(scal, dxs, dss):
            jord = 0.5 * (dx_ @ ds_ + ds_ @ dx_)
            rc.append(sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - jord)
        r_tau = sigma * mu - tau * kappa - dtau * dkappa
        dX, dy, dS, dtau, dkappa = direction(rc, r_tau, 1.0 - sigma)
        dxs, dss = scaled(dX, dS)
        alpha = min(1.0, settings.step_fraction * step_length(dxs, dss, dtau, dkappa))
        if not np.isfinite(alpha) or alpha < 1e-10:
            small_steps += 1
            if small_steps >= 3:
                status = Status.NUMERICAL_TROUBLE
                break
        X = [_sym(X[k] + alpha * dX[k]) for k in range(len(dims))]
        S = [_sym(S[k] + alpha * dS[k]) for k in range(len(dims))]
        y = y + alpha * dy
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    if status is Status.PRIMAL_INFEASIBLE:
        cert = red.lift_y(y)
        denom = float(problem.b @ cert)
        cert = cert / denom if denom != 0 else cert
        Xb = [np.zeros((n, n)) for n in dims]
        _, S_chk, *_ = _solution_residuals(problem, np.zeros(problem.n_free), Xb, cert)
        sol = finish(status, Xb, cert, S_chk, it, cert=cert, u=np.zeros(problem.n_free))
        lhs_min = min((float(np.linalg.eigvalsh(-(Sc - problem.objective_matrix(k)))[0])
                       for k, Sc in enumerate(S_chk)), default=0.0)
        free_res = float(np.max(np.abs(problem.free_matrix().T @ cert), initial=0.0)) if problem.n_free else 0.0
        sol.residuals["certificate"] = max(free_res, max(0.0, -lhs_min))
        return sol
    if status is Status.DUAL_INFEASIBLE:
        Xb = [Xk / tau for Xk in X]
        return finish(status, Xb, red.w + red.lift_y(y / tau), [Sk / tau for Sk in S], it)
    Xb = [Xk / tau for Xk in X]
    y_full = red.w + red.lift_y(y / tau)
    Sb = [Sk / tau for Sk in S]
    if red.unbounded_free and status is Status.OPTIMAL:
        status = Status.DUAL_INFEASIBLE
    return finish(status, Xb, y_full, Sb, it)


# ---------------------------------------------------------------------------
# KKT verification


@dataclass
class KktReport:
    primal: float
    dual: float
    rel_gap: float
    complementarity: float
    min_eig_X: float
    min_eig_S: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_kkt(
    problem: SdpProblem,
    solution: SdpSolution,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-7,
    eig_tol: float = 1e-7,
) -> KktReport:
    """Residuals of a claimed optimum recomputed from the problem data alone.

    The dual slack is rebuilt as ``C - A^T y`` rather than taken from the
    solver, so a solution only passes if its multipliers actually certify it.
    """
    u, X, y = solution.free, solution.X, solution.y
    _, S, pobj, dobj, rp, rf = _solution_residuals(problem, u, X, y)
    scale = 1.0 + problem.data_norm()
    min_x = min((float(np.linalg.eigvalsh(_sym(Xk))[0]) for Xk in X), default=0.0)
    min_s = min((float(np.linalg.eigvalsh(Sk)[0]) for Sk in S), default=0.0)
    comp = abs(sum(float(np.sum(Xk * Sk)) for Xk, Sk in zip(X, S)))
    rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    size = 1.0 + abs(pobj) + abs(dobj)
    passed = (
        rp / scale <= feas_tol
        and rf / scale <= feas_tol
        and rel_gap <= gap_tol
        and min_x >= -eig_tol * size
        and min_s >= -eig_tol * size
        and comp <= gap_tol * size
    )
    return KktReport(rp / scale, rf / scale, rel_gap, comp, min_x, min_s, bool(passed))


# ---------------------------------------------------------------------------
# plain-text sparse interchange format

_HEADER = "# ltavg sparse sdp v1"


def write_sparse(problem: SdpProblem, stream: TextIO | None = None) -> str:
    """Serialise to the line format ``kind row block i j value``.

    ``block`` 0 denotes the free scalars (``i`` is the variable index, ``j``
    is 0); blocks and indices are otherwise 1-based. Objective lines use row 0,
    constraint lines rows 1..m.
    """
    out = io.StringIO() if stream is None else stream
    out.write(_HEADER + "\n")
    out.write(f"nfree {problem.n_free}\n")
    out.write("blocks " + " ".join(str(n) for n in problem.block_dims) + "\n")
    out.write(f"nrows {problem.n_rows}\n")
    for row, v in enumerate(problem.b):
        if v != 0:
            out.write(f"b {row + 1} {float(v)!r}\n")
    for var, v in enumerate(problem.c_free):
        if v != 0:
            out.write(f"e 0 0 {var + 1} 0 {float(v)!r}\n")
    for k, entries in enumerate(problem.c_block_entries):
        for i, j, v in entries:
            out.write(f"e 0 {k + 1} {i + 1} {j + 1} {float(v)!r}\n")
    for row, var, v in problem.free_entries:
        out.write(f"e {row + 1} 0 {var + 1} 0 {float(v)!r}\n")
    for k, entries in enumerate(problem.block_entries):
        for row, i, j, v in entries:
            out.write(f"e {row + 1} {k + 1} {i + 1} {j + 1} {float(v)!r}\n")
    return out.getvalue() if stream is None else ""


def read_sparse(text: str | TextIO) -> SdpProblem:
    lines = text.splitlines() if isinstance(text, str) else text.read().splitlines()
    if not lines or lines[0].strip() != _HEADER:
        raise SdpError("missing sparse sdp header")
    n_free = 0
    dims: list = []
    m = 0
    b = None
    free_entries, c_free_entries = [], []
    block_entries: list = []
    c_block_entries: list = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        key = parts[0]
        if key == "nfree":
            n_free = int(parts[1])
        elif key == "blocks":
            dims = [int(p) for p in parts[1:]]
            block_entries = [[] for _ in dims]
            c_block_entries = [[] for _ in dims]
        elif key == "nrows":
            m = int(parts[1])
            b = np.zeros(m)
        elif key == "b":
            b[int(parts[1]) - 1] = float(parts[2])
        elif key == "e":
            row, blk, i, j = (int(p) for p in parts[1:5])
            v = float(parts[5])
            if blk == 0:
                if row == 0:
                    c_free_entries.append((i - 1, v))
                else:
                    free_entries.append((row - 1, i - 1, v))
            elif row == 0:
                c_block_entries[blk - 1].append((i - 1, j - 1, v))
            else:
                block_entries[blk - 1].append((row - 1, i - 1, j - 1, v))
        else:
            raise SdpError(f"line {ln}: unknown record {key!r}")
    c_free = np.zeros(n_free)
    for var, v in c_free_entries:
        c_free[var] += v
    prob = SdpProblem(
        n_free=n_free,
        block_dims=dims,
        b=b if b is not None else np.zeros(0),
        free_entries=free_entries,
        block_entries=block_entries,
        c_free=c_free,
        c_block_entries=c_block_entries,
    )
    prob.validate()
    return prob


def random_feasible_problem(rng: np.random.Generator, max_blocks: int = 3, max_dim: int = 20,
                            max_rows: int = 50, max_free: int = 3) -> SdpProblem:
    """Random problem with a strictly feasible primal-dual pair built in.

    b = A(X0) + Af u0 and C = A^T y0 + S0 with X0, S0 positive definite, so
    the optimum exists and is attained.
    """
    dims = [int(rng.integers(1, max_dim + 1)) for _ in range(int(rng.integers(1, max_blocks + 1)))]
    m = int(rng.integers(1, max_rows + 1))
    nf = int(rng.integers(0, max_free + 1))

    def pd(n):
        G = rng.standard_normal((n, n))
        return G @ G.T / n + 0.1 * np.eye(n)

    X0 = [pd(n) for n in dims]
    S0 = [pd(n) for n in dims]
    u0 = rng.standard_normal(nf)
    y0 = rng.standard_normal(m)
    Af = rng.standard_normal((m, nf))
    b = Af @ u0
    entries = []
    for k, n in enumerate(dims):
        ents = []
        iu = np.triu_indices(n)
        mult = np.where(iu[0] == iu[1], 1.0, 2.0)
        for row in range(m):
            A = rng.standard_normal((n, n))
            A = (A + A.T) / 2
            ents += [(row, int(i), int(j), float(v)) for i, j, v in zip(*iu, A[iu] * mult)]
            b[row] += np.sum(A * X0[k])
        entries.append(ents)
    prob = SdpProblem(
        n_free=nf, block_dims=dims, b=b,
        free_entries=[(r, v, float(Af[r, v])) for r in range(m) for v in range(nf)],
        block_entries=entries, c_free=Af.T @ y0,
    )
    for k, n in enumerate(dims):
        C = np.einsum("m,mij->ij", y0, prob.block_matrices(k)) + S0[k]
        iu = np.triu_indices(n)
        mult = np.where(iu[0] == iu[1], 1.0, 2.0)
        prob.c_block_entries[k] = [(int(i), int(j), float(v)) for i, j, v in zip(*iu, C[iu] * mult)]
    return prob
