"""Sum-of-squares compilation of the auxiliary-function bound.

The bound ``Phi_bar <= U`` holds whenever some auxiliary function V makes
``U - Phi - f.grad(V)`` nonnegative on the invariant set. Replacing
nonnegativity by membership in the SOS cone gives a semidefinite program in
U, the coefficients of V, the multiplier coefficients and the Gram matrices.

Two assemblers are provided:

* the monomial formulation works for any :class:`PolySystem` and follows the
  textbook construction (one row per monomial, free S-procedure multiplier);
* the structured formulation handles fields that are linear in the state
  with a periodic clock. V is a quadratic form with trigonometric
  coefficients, and the clock constraint is used exactly by working in the
  quotient ring modulo ``x3^2 + x4^2 - 1``. It is much smaller and is the
  default for the oscillator.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from math import ceil
from typing import Sequence

import numpy as np

from . import trig
from .model import OscillatorParams, PolySystem, build_phi, build_system
from .poly import MonomialBasis, Polynomial, basis, grlex_key
from .sdp import SdpProblem, SdpSolution, SolverSettings, Status, solve


# ---------------------------------------------------------------------------
# affine polynomial expressions and the problem builder


@dataclass
class AffinePoly:
    """``const + sum_k u_k * parts[k]`` where the u_k are decision variables."""

    nvars: int
    const: Polynomial
    parts: dict = field(default_factory=dict)

    @classmethod
    def from_poly(cls, p: Polynomial) -> "AffinePoly":
        return cls(p.nvars, p, {})

    @property
    def degree(self) -> int:
        return max([self.const.degree] + [p.degree for p in self.parts.values()])

    def monomials(self) -> set:
        out = set(self.const.terms)
        for p in self.parts.values():
            out |= set(p.terms)
        return out

    def add_term(self, var: int, p: Polynomial) -> None:
        if var in self.parts:
            self.parts[var] = self.parts[var] + p
        else:
            self.parts[var] = p

    def __add__(self, other: "AffinePoly") -> "AffinePoly":
        out = AffinePoly(self.nvars, self.const + other.const, dict(self.parts))
        for k, p in other.parts.items():
            out.add_term(k, p)
        return out

    def evaluate_coeffs(self, u: np.ndarray) -> Polynomial:
        out = self.const
        for k, p in self.parts.items():
            out = out + p * float(u[k])
        return out


class ProblemBuilder:
    """Accumulates free variables, PSD blocks and equality rows."""

    def __init__(self):
        self.free_names: list = []
        self.block_dims: list = []
        self.block_labels: list = []
        self.free_entries: list = []
        self.block_entries: list = []
        self.b: list = []
        self.c_free: dict = {}

    def add_free(self, name: str) -> int:
        self.free_names.append(name)
        return len(self.free_names) - 1

    def add_block(self, dim: int, labels=None) -> int:
        self.block_dims.append(int(dim))
        self.block_labels.append(labels)
        self.block_entries.append([])
        return len(self.block_dims) - 1

    def add_row(self, free: dict, block: Sequence, rhs: float) -> int:
        r = len(self.b)
        for var, v in free.items():
            if v != 0.0:
                self.free_entries.append((r, var, float(v)))
        for blk, i, j, v in block:
            if v != 0.0:
                if i > j:
                    i, j = j, i
                self.block_entries[blk].append((r, i, j, float(v)))
        self.b.append(float(rhs))
        return r

    def minimize(self, var: int, coeff: float = 1.0) -> None:
        self.c_free[var] = self.c_free.get(var, 0.0) + coeff

    @property
    def n_rows(self) -> int:
        return len(self.b)

    def build(self) -> SdpProblem:
        c = np.zeros(len(self.free_names))
        for k, v in self.c_free.items():
            c[k] = v
        prob = SdpProblem(
            n_free=len(self.free_names),
            block_dims=list(self.block_dims),
            b=np.array(self.b),
            free_entries=list(self.free_entries),
            block_entries=[list(e) for e in self.block_entries],
            c_free=c,
            free_names=list(self.free_names),
        )
        prob.validate()
        return prob


def _gram_products(bases: Sequence[MonomialBasis]):
    """monomial -> list of (block offset index, i, j, multiplicity)."""
    table: dict = {}
    for k, B in enumerate(bases):
        ents = B.entries
        for i in range(len(ents)):
            for j in range(i, len(ents)):
                m = tuple(a + b for a, b in zip(ents[i], ents[j]))
                table.setdefault(m, []).append((k, i, j, 1.0 if i == j else 2.0))
    return table


def gram_parameterize(builder: ProblemBuilder, expr: AffinePoly, bases, name: str = "sos") -> list:
    """Constrain ``expr`` to equal ``sum_k b_k^T G_k b_k`` with every G_k PSD.

    Adds one block per basis and one equality row per monomial. Returns the
    new block indices.
    """
    if isinstance(bases, MonomialBasis):
        bases = [bases]
    top = max(B.max_degree for B in bases)
    if expr.degree > 2 * top:
        raise ValueError(
            f"expression degree {expr.degree} exceeds twice the basis degree {top}"
        )
    blocks = [builder.add_block(len(B), labels=B) for B in bases]
    table = _gram_products(bases)
    monos = sorted(set(table) | expr.monomials(), key=grlex_key)
    for m in monos:
        free = {k: -p.coeff(m) for k, p in expr.parts.items() if p.coeff(m) != 0.0}
        ents = [(blocks[k], i, j, mult) for k, i, j, mult in table.get(m, [])]
        builder.add_row(free, ents, expr.const.coeff(m))
    return blocks


# ---------------------------------------------------------------------------
# certificates


@dataclass
class GramCertificate:
    """PSD Gram blocks together with the polynomial they certify.

    ``target`` and ``reconstruction`` map coefficient keys (monomials, or
    (state monomial, trig mode) pairs in the structured formulation) to
    values. ``target`` is recomputed from the decoded U, V, S by plain
    polynomial arithmetic, independent of the equality rows.
    """

    name: str
    blocks: list
    bases: list
    target: dict
    reconstruction: dict

    def residual(self) -> float:
        keys = set(self.target) | set(self.reconstruction)
        return max(
            (abs(self.target.get(k, 0.0) - self.reconstruction.get(k, 0.0)) for k in keys),
            default=0.0,
        )

    def min_eigenvalue(self) -> float:
        return min((float(np.linalg.eigvalsh(G)[0]) for G in self.blocks if G.size), default=0.0)

    def is_valid(self, coeff_tol: float = 1e-6, eig_tol: float = 1e-7) -> bool:
        return self.residual() <= coeff_tol and self.min_eigenvalue() >= -eig_tol


def _monomial_reconstruction(blocks, bases) -> dict:
    out: dict = {}
    for G, B in zip(blocks, bases):
        for k, (i, j, mult) in enumerate(
            (i, j, 1.0 if i == j else 2.0) for i in range(len(B)) for j in range(i, len(B))
        ):
            m = tuple(a + b for a, b in zip(B.entries[i], B.entries[j]))
            out[m] = out.get(m, 0.0) + mult * G[i, j]
    return out


def certify_sos(p: Polynomial, B: MonomialBasis | None = None, settings: SolverSettings | None = None):
    """Search for a Gram matrix proving ``p`` is SOS; None when infeasible."""
    if B is None:
        B = basis(p.nvars, max(ceil(p.degree / 2), 0))
    bld = ProblemBuilder()
    gram_parameterize(bld, AffinePoly.from_poly(p), B)
    sol = solve(bld.build(), settings)
    if sol.status is not Status.OPTIMAL:
        return None
    G = [Xk for Xk in sol.X]
    return GramCertificate("sos", G, [B], dict(p.terms), _monomial_reconstruction(G, [B]))


def global_upper_bound(p: Polynomial, degree: int | None = None, settings: SolverSettings | None = None):
    """Smallest U with ``U - p`` SOS, which upper-bounds max p."""
    d = degree if degree is not None else max(ceil(p.degree / 2), 0)
    bld = ProblemBuilder()
    u = bld.add_free("U")
    bld.minimize(u)
    one = Polynomial.constant(1.0, p.nvars)
    gram_parameterize(bld, AffinePoly(p.nvars, -p, {u: one}), basis(p.nvars, d))
    sol = solve(bld.build(), settings)
    return sol.objective if sol.status is Status.OPTIMAL else None, sol


# ---------------------------------------------------------------------------
# the bounding program


@dataclass
class SosProgram:
    """Data of the auxiliary-function program before compilation.

    ``multiplier`` is ``"free"`` (sign-unconstrained S) or ``"sos"``.
    ``aux_lower_bound`` additionally requires V to be SOS modulo the
    constraints, which rules out indefinite auxiliary functions.
    """

    system: PolySystem
    phi: Polynomial
    aux_degree: int
    multiplier_degree: int | None = None
    multiplier: str = "free"
    aux_lower_bound: bool = True
    parity_vars: tuple | None = None
    symmetry_warning: bool = False
    objective_scalar: str = "U"

    def __post_init__(self):
        if self.aux_degree < 2 or self.aux_degree % 2:
            raise ValueError(f"aux_degree must be an even integer >= 2, got {self.aux_degree}")
        if self.multiplier_degree is None:
            self.multiplier_degree = self.aux_degree - 2
        if self.multiplier not in ("free", "sos"):
            raise ValueError("multiplier must be 'free' or 'sos'")
        if self.phi.nvars != self.system.nvars:
            raise ValueError("phi and system dimension mismatch")

    @property
    def field_degree(self) -> int:
        return max((p.degree for p in self.system.field), default=0)

    def certified_degree(self) -> int:
        d = max(self.aux_degree + self.field_degree - 1, self.phi.degree)
        for c in self.system.constraints:
            d = max(d, self.multiplier_degree + c.degree)
        return d


def _is_equivariant(system: PolySystem, phi: Polynomial, odd_vars) -> bool:
    signs = [-1 if i in odd_vars else 1 for i in range(system.nvars)]
    for i, f in enumerate(system.field):
        expect = f.scale(signs[i])
        if f.substitute_signs(signs) != expect:
            return False
    if phi.substitute_signs(signs) != phi:
        return False
    return all(c.substitute_signs(signs) == c for c in system.constraints)


def symmetry_reduce(program: SosProgram) -> SosProgram:
    """Restrict to functions even in the state variables when that is exact."""
    odd = tuple(program.system.state_vars) or tuple(range(program.system.nvars))
    if not _is_equivariant(program.system, program.phi, odd):
        warnings.warn("system is not equivariant under state negation; no reduction applied")
        out = SosProgram(**{**program.__dict__})
        out.symmetry_warning = True
        return out
    out = SosProgram(**{**program.__dict__})
    out.parity_vars = odd
    return out


@dataclass
class SosResult:
    status: Status
    U: float | None
    V: Polynomial | None
    S: list
    certificates: list
    solution: SdpSolution
    formulation: str
    sizes: dict

    @property
    def feasible(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class AssembledSos:
    """A compiled SDP plus what is needed to decode its solution."""

    problem: SdpProblem
    formulation: str
    decode_fn: object = field(repr=False)
    sizes: dict = field(default_factory=dict)

    def decode(self, sol: SdpSolution) -> SosResult:
        return self.decode_fn(sol)

    def solve(self, settings: SolverSettings | None = None, backend: str = "builtin") -> SosResult:
        return self.decode(solve(self.problem, settings, backend))


def _multiplier_basis(nv, d, mask):
    return basis(nv, d, parity_mask=mask, parity=0) if mask else basis(nv, d)


def _gram_bases(nv, d, mask):
    if mask:
        return [basis(nv, d, parity_mask=mask, parity=0), basis(nv, d, parity_mask=mask, parity=1)]
    return [basis(nv, d)]


def assemble_program(program: SosProgram) -> AssembledSos:
    """Monomial formulation: one equality row per monomial of each SOS constraint."""
    sysm, nv, mask = program.system, program.system.nvars, program.parity_vars
    dV, dS = program.aux_degree, program.multiplier_degree
    bld = ProblemBuilder()
    u = bld.add_free("U")
    bld.minimize(u)
    one = Polynomial.constant(1.0, nv)

    v_monos = [m for m in _multiplier_basis(nv, dV, mask).entries if sum(m) > 0]
    v_vars = [bld.add_free(f"V{m}") for m in v_monos]
    E = AffinePoly(nv, -program.phi, {u: one})
    for var, m in zip(v_vars, v_monos):
        E.add_term(var, -sysm.lie(Polynomial.monomial(m)))

    s_vars = []
    s_monos = _multiplier_basis(nv, dS, mask).entries if sysm.constraints else ()
    for c in sysm.constraints:
        vs = [bld.add_free(f"S{m}") for m in s_monos]
        s_vars.append(vs)
        for var, m in zip(vs, s_monos):
            E.add_term(var, Polynomial.monomial(m) * (-c))

    k = ceil(program.certified_degree() / 2)
    e_bases = _gram_bases(nv, k, mask)
    e_blocks = gram_parameterize(bld, E, e_bases, "E")

    s_blocks = []
    if program.multiplier == "sos":
        for vs in s_vars:
            Sx = AffinePoly(nv, Polynomial.zero(nv), {})
            for var, m in zip(vs, s_monos):
                Sx.add_term(var, -Polynomial.monomial(m))
            s_blocks.append(gram_parameterize(bld, Sx, _gram_bases(nv, dS // 2, mask), "S"))

    t_vars = []
    p_blocks = []
    if program.aux_lower_bound:
        Vx = AffinePoly(nv, Polynomial.zero(nv), {})
        for var, m in zip(v_vars, v_monos):
            Vx.add_term(var, Polynomial.monomial(m))
        t_monos = _multiplier_basis(nv, dV - 2, mask).entries if sysm.constraints else ()
        for c in sysm.constraints:
            vs = [bld.add_free(f"T{m}") for m in t_monos]
            t_vars.append(vs)
            for var, m in zip(vs, t_monos):
                Vx.add_term(var, Polynomial.monomial(m) * (-c))
        p_blocks = gram_parameterize(bld, Vx, _gram_bases(nv, dV // 2, mask), "V")

    prob = bld.build()
    sizes = {"rows": prob.n_rows, "free": prob.n_free, "blocks": list(prob.block_dims)}

    def poly_of(vals, monos):
        return Polynomial({m: float(x) for m, x in zip(monos, vals)}, nv)

    def decode(sol: SdpSolution) -> SosResult:
        if sol.status is not Status.OPTIMAL:
            return SosResult(sol.status, None, None, [], [], sol, "monomial", sizes)
        x = sol.free
        U = float(x[u])
        V = poly_of(x[v_vars], v_monos)
        S = [poly_of(x[vs], s_monos) for vs in s_vars]
        T = [poly_of(x[vs], t_monos) for vs in t_vars]
        target = one * U - program.phi - sysm.lie(V)
        for Sk, c in zip(S, sysm.constraints):
            target = target + Sk * (-c)
        G = [sol.X[b] for b in e_blocks]
        certs = [GramCertificate("E", G, e_bases, target.terms, _monomial_reconstruction(G, e_bases))]
        if p_blocks:
            vt = V
            for Tk, c in zip(T, sysm.constraints):
                vt = vt + Tk * (-c)
            Gp = [sol.X[b] for b in p_blocks]
            pb = _gram_bases(nv, dV // 2, mask)
            certs.append(GramCertificate("V", Gp, pb, vt.terms, _monomial_reconstruction(Gp, pb)))
        return SosResult(sol.status, U, V, S, certs, sol, "monomial", sizes)

    return AssembledSos(prob, "monomial", decode, sizes)


# ---------------------------------------------------------------------------
# structured formulation for fields linear in the state with a periodic clock


@dataclass
class LinearPeriodicForm:
    """``dz/dt = A(theta) z``, ``dtheta/dt = rate`` and ``Phi = z^T Q(theta) z``.

    A and Q hold trig coefficient vectors on their last axis; Q is symmetric.
    """

    A: np.ndarray
    Q: np.ndarray
    rate: float
    state_vars: tuple
    clock_vars: tuple
    nvars: int


def _split_state(mono, state_vars):
    return tuple(mono[i] for i in state_vars)


def _clock_part(p: Polynomial, state_vars, zexp, clock_vars):
    """Coefficient of the state monomial ``zexp`` as a polynomial in the clock."""
    terms = {}
    for m, c in p.terms.items():
        if _split_state(m, state_vars) == zexp:
            cm = [0] * p.nvars
            for i in clock_vars:
                cm[i] = m[i]
            terms[tuple(cm)] = terms.get(tuple(cm), 0.0) + c
    return Polynomial(terms, p.nvars)


def _to_trig(p: Polynomial, clock_vars) -> np.ndarray:
    if not clock_vars:
        return np.array([p.coeff((0,) * p.nvars)])
    return trig.from_clock_poly(p, clock_vars[0], clock_vars[1])


def linear_periodic_form(system: PolySystem, phi: Polynomial) -> LinearPeriodicForm:
    """Recognise the structured form; raises ValueError when it does not apply."""
    sv, cv, nv = tuple(system.state_vars), tuple(system.clock_vars), system.nvars
    n = len(sv)
    if not sv:
        raise ValueError("structured formulation needs declared state variables")
    if cv:
        s, c = cv
        X = [Polynomial.variable(i, nv) for i in range(nv)]
        w = system.clock_rate
        if system.field[s] != X[c] * w or system.field[c] != X[s] * (-w):
            raise ValueError("clock variables must rotate uniformly")
        circle = X[s] * X[s] + X[c] * X[c] - 1.0
        if tuple(system.constraints) not in ((circle,), (-circle,)):
            raise ValueError("the only constraint must be the clock circle")
    elif system.constraints:
        raise ValueError("constraints without clock variables are not supported")

    units = [tuple(1 if k == j else 0 for k in range(n)) for j in range(n)]
    blocks = []
    for i in sv:
        f = system.field[i]
        if any(sum(_split_state(m, sv)) != 1 for m in f.terms):
            raise ValueError("field must be linear in the state variables")
        blocks.append([_to_trig(_clock_part(f, sv, u, cv), cv) for u in units])
    deg = max(trig.degree_of(len(a)) for row in blocks for a in row)
    A = np.array([[trig.pad(a, deg) for a in row] for row in blocks])

    if any(sum(_split_state(m, sv)) != 2 for m in phi.terms):
        raise ValueError("Phi must be a quadratic form in the state variables")
    qs = {}
    for i in range(n):
        for j in range(i, n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            qs[i, j] = _to_trig(_clock_part(phi, sv, tuple(e), cv), cv)
    qd = max(trig.degree_of(len(a)) for a in qs.values())
    Q = np.zeros((n, n, trig.size(qd)))
    for (i, j), a in qs.items():
        a = trig.pad(a, qd)
        if i == j:
            Q[i, i] = a
        else:
            Q[i, j] = Q[j, i] = 0.5 * a
    return LinearPeriodicForm(A, Q, system.clock_rate if cv else 0.0, sv, cv, nv)


def _tmul_affine(aff: np.ndarray, num: np.ndarray) -> np.ndarray:
    """(trig x vars) affine array times a numeric trig polynomial."""
    return trig.mul(aff, num)


def _grow(a: np.ndarray, deg: int) -> np.ndarray:
    return trig.pad(a, deg)


def assemble_structured(form: LinearPeriodicForm, dV: int, aux_lower_bound: bool = True) -> AssembledSos:
    if dV < 2 or dV % 2:
        raise ValueError(f"dV must be an even integer >= 2, got {dV}")
    n = form.A.shape[0]
    clock = bool(form.clock_vars)
    KV = dV - 2 if clock else 0
    KA = trig.degree_of(form.A.shape[-1])
    KQ = trig.degree_of(form.Q.shape[-1])
    KE = max(KV + KA, KQ)
    kE = ceil(KE / 2)
    kP = KV // 2
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    TV = trig.size(KV)

    bld = ProblemBuilder()
    u = bld.add_free("U")
    bld.minimize(u)
    p_var = {}
    for i, j in pairs:
        for t in range(TV):
            kind, k = trig.mode(t)
            p_var[i, j, t] = bld.add_free(f"P[{i},{j}]{kind}{k}")
    nfree = len(bld.free_names)

    # affine trig arrays: shape (T, 1 + nfree); column 0 is the constant
    def zero(deg):
        return np.zeros((trig.size(deg), 1 + nfree))

    P = [[None] * n for _ in range(n)]
    for i, j in pairs:
        a = zero(KV)
        for t in range(TV):
            a[t, 1 + p_var[i, j, t]] = 1.0 if i == j else 0.5
        P[i][j] = P[j][i] = a

    # M = -Q - rate * P' - (A^T P + P A)
    M = [[None] * n for _ in range(n)]
    for i, j in pairs:
        acc = zero(KE)
        q = _grow(form.Q[i, j], KE)
        acc[:, 0] -= q
        if clock and form.rate != 0.0:
            acc -= form.rate * _grow(trig.derivative(P[i][j]), KE)
        for k in range(n):
            if np.any(form.A[k, i]):
                acc -= _grow(_tmul_affine(P[k][j], form.A[k, i]), KE)
            if np.any(form.A[k, j]):
                acc -= _grow(_tmul_affine(P[i][k], form.A[k, j]), KE)
        M[i][j] = acc
    # coefficient of z_i z_j in E
    Ecoef = {(i, j): (M[i][j] if i == j else 2.0 * M[i][j]) for i, j in pairs}

    TE = trig.size(kE)
    e_labels = [(i, t) for i in range(n) for t in range(TE)]
    b_odd = bld.add_block(len(e_labels), labels=e_labels)
    b_even = bld.add_block(1, labels=[None])

    def gram_rows(labels, blk, kmax):
        rows: dict = {}
        for p in range(len(labels)):
            i, a = labels[p]
            for q in range(p, len(labels)):
                j, b = labels[q]
                mult = 1.0 if p == q else 2.0
                key = (min(i, j), max(i, j))
                for t, c in trig.product(a, b):
                    rows.setdefault((key, t), []).append((blk, p, q, mult * c))
        return rows

    rows = gram_rows(e_labels, b_odd, kE)
    keys = set(rows)
    for pr in pairs:
        for t in range(trig.size(KE)):
            if np.any(Ecoef[pr][t]):
                keys.add((pr, t))
    for key in sorted(keys):
        pr, t = key
        coef = Ecoef[pr][t] if t < trig.size(KE) else np.zeros(1 + nfree)
        free = {k: -coef[1 + k] for k in range(nfree) if coef[1 + k] != 0.0}
        bld.add_row(free, rows.get(key, []), coef[0])
    bld.add_row({u: -1.0}, [(b_even, 0, 0, 1.0)], 0.0)

    p_labels = []
    b_pos = None
    if aux_lower_bound:
        TP = trig.size(kP)
        p_labels = [(i, t) for i in range(n) for t in range(TP)]
        b_pos = bld.add_block(len(p_labels), labels=p_labels)
        prow = gram_rows(p_labels, b_pos, kP)
        for pr in pairs:
            for t in range(TV):
                bld.add_row({p_var[pr[0], pr[1], t]: -1.0}, prow.get((pr, t), []), 0.0)
        assert all(key[1] < TV for key in prow)

    prob = bld.build()
    sizes = {"rows": prob.n_rows, "free": prob.n_free, "blocks": list(prob.block_dims)}
    sv, cv, nv = form.state_vars, form.clock_vars, form.nvars

    def decode(sol: SdpSolution) -> SosResult:
        if sol.status is not Status.OPTIMAL:
            return SosResult(sol.status, None, None, [], [], sol, "structured", sizes)
        x = sol.free
        U = float(x[u])
        coeffs = {pr: np.array([x[p_var[pr[0], pr[1], t]] for t in range(TV)]) for pr in pairs}
        V = Polynomial.zero(nv)
        for (i, j), a in coeffs.items():
            zz = Polynomial.variable(sv[i], nv) * Polynomial.variable(sv[j], nv)
            tp = trig.to_poly(a, nv, *cv) if clock else Polynomial.constant(float(a[0]), nv)
            V = V + zz * tp
        certs = []
        G = sol.X[b_odd]
        Ge = sol.X[b_even]
        recon: dict = {}
        for (key, t), ents in rows.items():
            recon[key, t] = sum(v * G[p, q] for _, p, q, v in ents)
        recon["const"] = float(Ge[0, 0])
        certs.append(
            GramCertificate("E", [G, Ge], [e_labels, [None]], {}, recon)
        )
        if b_pos is not None:
            Gp = sol.X[b_pos]
            prec = {}
            for (key, t), ents in prow.items():
                prec[key, t] = sum(v * Gp[p, q] for _, p, q, v in ents)
            certs.append(GramCertificate("V", [Gp], [p_labels], {}, prec))
        res = SosResult(sol.status, U, V, [], certs, sol, "structured", sizes)
        _fill_structured_targets(res, form)
        return res

    return AssembledSos(prob, "structured", decode, sizes)


def _quotient_coeffs(p: Polynomial, form: LinearPeriodicForm) -> dict:
    """Coefficients of ``p`` modulo the clock circle as {(pair, mode): value}."""
    sv, cv = form.state_vars, form.clock_vars
    n = len(sv)
    out = {}
    zexps = {_split_state(m, sv) for m in p.terms}
    for ze in zexps:
        cp = _clock_part(p, sv, ze, cv)
        a = _to_trig(cp, cv)
        if sum(ze) == 0:
            for t, v in enumerate(a):
                if v != 0.0:
                    out["const" if t == 0 else ("const", t)] = float(v)
            continue
        idx = [k for k in range(n) for _ in range(ze[k])]
        key = tuple(idx) if len(idx) != 2 else (idx[0], idx[1])
        for t, v in enumerate(a):
            if v != 0.0:
                out[key, t] = float(v)
    return out


def _fill_structured_targets(res: SosResult, form: LinearPeriodicForm) -> None:
    """Recompute the certified polynomials from U and V by polynomial arithmetic."""
    system = system_from_form(form)
    phi = phi_from_form(form)
    E = Polynomial.constant(res.U, form.nvars) - phi - system.lie(res.V)
    res.certificates[0].target = _quotient_coeffs(E, form)
    if len(res.certificates) > 1:
        res.certificates[1].target = _quotient_coeffs(res.V, form)


def system_from_form(form: LinearPeriodicForm) -> PolySystem:
    nv, sv, cv = form.nvars, form.state_vars, form.clock_vars
    X = [Polynomial.variable(i, nv) for i in range(nv)]

    def tp(a):
        if cv:
            return trig.to_poly(a, nv, *cv)
        return Polynomial.constant(float(a[0]), nv)

    field_ = [Polynomial.zero(nv) for _ in range(nv)]
    for i, si in enumerate(sv):
        for j, sj in enumerate(sv):
            if np.any(form.A[i, j]):
                field_[si] = field_[si] + tp(form.A[i, j]) * X[sj]
    cons = ()
    if cv:
        s, c = cv
        field_[s] = X[c] * form.rate
        field_[c] = X[s] * (-form.rate)
        cons = (X[s] * X[s] + X[c] * X[c] - 1.0,)
    return PolySystem(nv, tuple(field_), cons, state_vars=sv, clock_vars=cv, clock_rate=form.rate)


def phi_from_form(form: LinearPeriodicForm) -> Polynomial:
    nv, sv, cv = form.nvars, form.state_vars, form.clock_vars
    X = [Polynomial.variable(i, nv) for i in range(nv)]
    out = Polynomial.zero(nv)
    n = len(sv)
    for i in range(n):
        for j in range(n):
            a = form.Q[i, j]
            if np.any(a):
                t = trig.to_poly(a, nv, *cv) if cv else Polynomial.constant(float(a[0]), nv)
                out = out + t * X[sv[i]] * X[sv[j]]
    return out


# ---------------------------------------------------------------------------
# oscillator entry point


def default_multiplier_degree(dV: int) -> int:
    return dV - 2


def assemble(
    params: OscillatorParams,
    dV: int,
    dS: int | None = None,
    formulation: str = "structured",
    multiplier: str = "free",
    aux_lower_bound: bool = True,
) -> AssembledSos:
    """Compile the bounding program for one parameter point.

    ``dS`` only affects the monomial formulation; in the structured one the
    multiplier is eliminated exactly by the quotient construction.
    """
    if dV < 2 or dV % 2:
        raise ValueError(f"dV must be an even integer >= 2, got {dV}")
    dS = default_multiplier_degree(dV) if dS is None else dS
    system = build_system(params)
    phi = build_phi(system.nvars)
    if formulation == "structured":
        if multiplier != "free":
            raise ValueError("the structured formulation has no explicit multiplier; use 'monomial'")
        out = assemble_structured(linear_periodic_form(system, phi), dV, aux_lower_bound)
    elif formulation == "monomial":
        prog = SosProgram(system, phi, dV, dS, multiplier=multiplier, aux_lower_bound=aux_lower_bound)
        out = assemble_program(symmetry_reduce(prog))
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    out.sizes["dV"], out.sizes["dS"] = dV, dS
    return out


def solve_bound(
    params: OscillatorParams,
    dV: int,
    dS: int | None = None,
    settings: SolverSettings | None = None,
    backend: str = "builtin",
    **kw,
) -> SosResult:
    t0 = time.perf_counter()
    res = assemble(params, dV, dS, **kw).solve(settings, backend)
    res.sizes["wall_time"] = time.perf_counter() - t0
    return res


def pointwise_check(res: SosResult, system: PolySystem, phi: Polynomial, n_points: int = 10_000, seed: int = 0) -> float:
    """Minimum of ``U - Phi - f.grad(V)`` over random points of the invariant set.

    State coordinates are drawn from [-1, 1]; clock coordinates lie on the
    unit circle. The value is relative to the largest coefficient involved.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(n_points, system.nvars))
    if system.clock_vars:
        th = rng.uniform(0, 2 * np.pi, n_points)
        pts[:, system.clock_vars[0]] = np.sin(th)
        pts[:, system.clock_vars[1]] = np.cos(th)
    E = Polynomial.constant(res.U, system.nvars) - phi - system.lie(res.V)
    return float(np.min(E.evaluate(pts)))
