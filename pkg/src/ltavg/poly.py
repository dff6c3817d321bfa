"""Sparse multivariate polynomials with real coefficients.

Monomials are exponent tuples; a :class:`Polynomial` maps monomials to
coefficients. Every ordering that leaks into a matrix layout uses graded
lexicographic order so layouts are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE_TOL = 1e-14

Monomial = tuple


def grlex_key(mono: Monomial):
    """Sort key: ascending total degree, then x1 > x2 > ... within a degree."""
    return (sum(mono), tuple(-e for e in mono))


def _prune(terms: Mapping[Monomial, float]) -> dict:
    return {m: float(c) for m, c in terms.items() if abs(c) > PRUNE_TOL}


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("_terms", "_nvars")

    def __init__(self, terms: Mapping[Monomial, float] | None, nvars: int):
        terms = terms or {}
        for m in terms:
            if len(m) != nvars:
                raise ValueError(f"monomial {m} does not have {nvars} exponents")
            if any(e < 0 for e in m):
                raise ValueError(f"negative exponent in {m}")
        self._terms = _prune({tuple(int(e) for e in m): c for m, c in terms.items()})
        self._nvars = int(nvars)

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, value: float, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: value}, nvars)

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars)

    @classmethod
    def variable(cls, index: int, nvars: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[index] = 1
        return cls({tuple(mono): 1.0}, nvars)

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff: float = 1.0) -> "Polynomial":
        return cls({tuple(exponents): coeff}, len(exponents))

    # -- basic accessors ---------------------------------------------
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def coeff(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    def monomials(self) -> list:
        return sorted(self._terms, key=grlex_key)

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((sum(m) for m in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    # -- arithmetic ---------------------------------------------------
    def _check(self, other: "Polynomial") -> None:
        if self._nvars != other._nvars:
            raise ValueError(
                f"dimension mismatch: {self._nvars} vs {other._nvars} variables"
            )

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(float(other), self._nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial(out, self._nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()}, self._nvars)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial(out, self._nvars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(1.0, self._nvars)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._nvars == other._nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self._nvars, frozenset(self._terms.items())))

    def scale(self, a: float) -> "Polynomial":
        return Polynomial({m: a * c for m, c in self._terms.items()}, self._nvars)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # -- calculus -----------------------------------------------------
    def partial(self, var_index: int) -> "Polynomial":
        if not 0 <= var_index < self._nvars:
            raise IndexError(f"variable index {var_index} out of range")
        out: dict = {}
        for m, c in self._terms.items():
            e = m[var_index]
            if e == 0:
                continue
            dm = list(m)
            dm[var_index] = e - 1
            dm = tuple(dm)
            out[dm] = out.get(dm, 0.0) + c * e
        return Polynomial(out, self._nvars)

    def __call__(self, point) -> float:
        return self.evaluate(point)

    def evaluate(self, point) -> float:
        x = np.asarray(point, dtype=float)
        if x.shape[-1] != self._nvars:
            raise ValueError(f"expected {self._nvars} coordinates, got {x.shape[-1]}")
        if not self._terms:
            return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        exps, coeffs = self.arrays()
        vals = np.prod(x[..., None, :] ** exps, axis=-1) @ coeffs
        return vals if x.ndim > 1 else float(vals)

    def arrays(self):
        """Exponent matrix and coefficient vector in graded-lex order."""
        monos = self.monomials()
        exps = np.array(monos, dtype=int).reshape(len(monos), self._nvars)
        coeffs = np.array([self._terms[m] for m in monos], dtype=float)
        return exps, coeffs

    def substitute_signs(self, signs: Sequence[int]) -> "Polynomial":
        """p(s1*x1, ..., sn*xn) for signs in {+1, -1}."""
        out = {}
        for m, c in self._terms.items():
            s = 1
            for e, si in zip(m, signs):
                if si < 0 and e % 2:
                    s = -s
            out[m] = s * c
        return Polynomial(out, self._nvars)

    def permute(self, perm: Sequence[int]) -> "Polynomial":
        """Rename variable i to perm[i]."""
        out = {}
        for m, c in self._terms.items():
            nm = [0] * self._nvars
            for i, e in enumerate(m):
                nm[perm[i]] = e
            out[tuple(nm)] = c
        return Polynomial(out, self._nvars)

    # -- rendering ----------------------------------------------------
    def to_string(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names else [f"x{i + 1}" for i in range(self._nvars)]
        if not self._terms:
            return "0"
        parts = []
        for m in sorted(self._terms, key=grlex_key, reverse=True):
            c = self._terms[m]
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors)
                text = body if mag == 1.0 else f"{mag:g}*{body}"
            else:
                text = f"{mag:g}"
            parts.append(("-" if c < 0 else "+", text))
        sign, text = parts[0]
        out = ("-" if sign == "-" else "") + text
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Polynomial({self.to_string()!r}, nvars={self._nvars})"


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    a._check(b)
    return a + b


def mul(a: Polynomial, b: Polynomial) -> Polynomial:
    a._check(b)
    return a * b


def partial(p: Polynomial, var_index: int) -> Polynomial:
    return p.partial(var_index)


def lie_derivative(V: Polynomial, field: Sequence[Polynomial]) -> Polynomial:
    """Derivative of ``V`` along the vector field: sum_i f_i dV/dx_i."""
    if len(field) != V.nvars:
        raise ValueError(
            f"dimension mismatch: field has {len(field)} components, V has {V.nvars} variables"
        )
    out = Polynomial.zero(V.nvars)
    for i, fi in enumerate(field):
        fi._check(V)
        dv = V.partial(i)
        if not dv.is_zero():
            out = out + fi * dv
    return out


@dataclass(frozen=True)
class MonomialBasis:
    """Distinct monomials in graded-lex order.

    ``parity_mask`` lists variables whose summed exponent must have parity
    ``parity`` (0 = even, 1 = odd).
    """

    entries: tuple
    max_degree: int
    nvars: int
    parity_mask: tuple | None = None
    parity: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def index(self) -> dict:
        return {m: i for i, m in enumerate(self.entries)}

    def polynomials(self) -> list:
        return [Polynomial.monomial(m) for m in self.entries]


def monomials_up_to(nvars: int, max_degree: int) -> list:
    """All exponent tuples of total degree <= max_degree, graded-lex order."""
    out = []
    for d in range(max_degree + 1):
        block = []
        for combo in combinations_with_replacement(range(nvars), d):
            m = [0] * nvars
            for v in combo:
                m[v] += 1
            block.append(tuple(m))
        out.extend(sorted(block, key=grlex_key))
    return out


def basis(
    nvars: int,
    max_degree: int,
    parity_mask: Iterable[int] | None = None,
    parity: int = 0,
) -> MonomialBasis:
    if max_degree < 0:
        raise ValueError("max_degree must be non-negative")
    mask = tuple(sorted(parity_mask)) if parity_mask is not None else None
    entries = monomials_up_to(nvars, max_degree)
    if mask is not None:
        entries = [m for m in entries if sum(m[i] for i in mask) % 2 == parity % 2]
    return MonomialBasis(tuple(entries), max_degree, nvars, mask, parity % 2 if mask else 0)


def basis_size(nvars: int, max_degree: int) -> int:
    """Closed-form count C(nvars + d, d) of monomials of degree <= d."""
    return comb(nvars + max_degree, max_degree)


@dataclass
class CompiledField:
    """Vectorised evaluator for a list of polynomials sharing one term table."""

    exps: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_polys(cls, polys: Sequence[Polynomial]) -> "CompiledField":
        nvars = polys[0].nvars
        monos = sorted({m for p in polys for m in p.terms}, key=grlex_key)
        idx = {m: k for k, m in enumerate(monos)}
        coeffs = np.zeros((len(polys), len(monos)))
        for i, p in enumerate(polys):
            for m, c in p.terms.items():
                coeffs[i, idx[m]] = c
        exps = np.array(monos, dtype=int).reshape(len(monos), nvars)
        return cls(exps, coeffs)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        # x: (..., nvars)
        mon = np.prod(x[..., None, :] ** self.exps, axis=-1)
        return mon @ self.coeffs.T
