"""Arithmetic differential operators on an affine chart, divided-power basis.

An operator is stored in left-coefficient normal form ``sum a_nu * d^[nu]``
where ``d^[nu]`` is the divided power ``d^nu / nu!`` and ``a_nu`` is a
:class:`MultiPoly`.  All rules below are integral:

* ``d^[a] d^[b] = C(a+b, a) d^[a+b]``
* ``d^[nu] o f = sum_{mu <= nu} D^[mu](f) d^[nu-mu]`` with
  ``D^[mu](x^e) = C(e, mu) x^(e-mu)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from .coeff import (
    AtLeast,
    Exponent,
    MultiPoly,
    div_exact,
    gauss_vp,
    legendre_vp_factorial,
)
from .errors import DimensionMismatch, InsufficientPrecision, NotDivisible, PrecisionExceeded

NEG_INF = -math.inf

MultiIndex = Tuple[int, ...]


@lru_cache(maxsize=None)
def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


def _multi_binom(top: Iterable[int], bottom: Iterable[int]) -> int:
    r = 1
    for n, k in zip(top, bottom):
        if k:
            r *= _binom(n, k)
    return r


class DiffOp:
    """Operator ``sum a_nu d^[nu]`` in ``nvars`` variables over Z/p^N."""

    __slots__ = ("p", "N", "nvars", "terms", "_hash")

    def __init__(self, p: int, N: int, nvars: int, terms: Mapping[MultiIndex, MultiPoly] | None = None):
        self.p, self.N, self.nvars = p, N, nvars
        clean: Dict[MultiIndex, MultiPoly] = {}
        if terms:
            for nu, a in terms.items():
                if isinstance(a, int):
                    a = MultiPoly.constant(p, N, nvars, a)
                if a.ring() != (p, N, nvars):
                    raise DimensionMismatch(f"coefficient over {a.ring()} in operator over {(p, N, nvars)}")
                if len(nu) != nvars:
                    raise DimensionMismatch(f"multi-index {nu} has wrong length")
                if a.terms:
                    clean[tuple(nu)] = a
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, p, N, nvars, terms):
        obj = cls.__new__(cls)
        obj.p, obj.N, obj.nvars, obj.terms, obj._hash = p, N, nvars, terms, None
        return obj

    @classmethod
    def _from_raw_terms(cls, p, N, nvars, raw: Mapping[MultiIndex, Mapping[Exponent, int]]):
        """Build from nested ``{nu: {exponent: residue}}`` dicts, dropping zeros."""
        mod = p**N
        terms = {}
        for nu, coeffs in raw.items():
            c = {e: v % mod for e, v in coeffs.items() if v % mod}
            if c:
                terms[nu] = MultiPoly._raw(p, N, nvars, c)
        return cls._raw(p, N, nvars, terms)

    # -- constructors ----------------------------------------------------
    @classmethod
    def zero(cls, p, N, nvars):
        return cls._raw(p, N, nvars, {})

    @classmethod
    def identity(cls, p, N, nvars):
        return cls.multiplication(MultiPoly.constant(p, N, nvars, 1))

    @classmethod
    def multiplication(cls, f: MultiPoly) -> "DiffOp":
        """The order-zero operator "multiply by f"."""
        return cls(f.p, f.N, f.nvars, {(0,) * f.nvars: f})

    @classmethod
    def dpow(cls, p, N, nvars, nu: Iterable[int], coeff: MultiPoly | int = 1) -> "DiffOp":
        nu = tuple(nu)
        if isinstance(coeff, int):
            coeff = MultiPoly.constant(p, N, nvars, coeff)
        return cls(p, N, nvars, {nu: coeff})

    @classmethod
    def partial(cls, p, N, nvars, i: int, k: int = 1) -> "DiffOp":
        nu = [0] * nvars
        nu[i] = k
        return cls.dpow(p, N, nvars, nu)

    @classmethod
    def variable(cls, p, N, nvars, i: int, power: int = 1) -> "DiffOp":
        return cls.multiplication(MultiPoly.variable(p, N, nvars, i, power))

    # -- protocol ----------------------------------------------------------
    @property
    def modulus(self):
        return self.p**self.N

    def ring(self):
        return (self.p, self.N, self.nvars)

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, DiffOp):
            return self.ring() == other.ring() and self.terms == other.terms
        if isinstance(other, int):
            return self == DiffOp.identity(self.p, self.N, self.nvars).scale(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring(), frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "DiffOp(0)"
        parts = []
        for nu in sorted(self.terms):
            d = "*".join(f"d{i + 1}^[{k}]" for i, k in enumerate(nu) if k)
            parts.append(f"({self.terms[nu]})" + (f"*{d}" if d else ""))
        return "DiffOp(" + " + ".join(parts) + ")"

    def _check(self, other):
        if not isinstance(other, DiffOp):
            raise TypeError(f"expected DiffOp, got {type(other).__name__}")
        if self.ring() != other.ring():
            raise DimensionMismatch(f"operators over {self.ring()} and {other.ring()}")

    def coefficient(self, nu) -> MultiPoly:
        return self.terms.get(tuple(nu), MultiPoly.zero(self.p, self.N, self.nvars))

    def items(self) -> Iterator[Tuple[MultiIndex, MultiPoly]]:
        return iter(self.terms.items())

    def raw(self) -> Dict[MultiIndex, Dict[Exponent, int]]:
        return {nu: a.terms for nu, a in self.terms.items()}

    # -- linear structure -------------------------------------------------
    def __add__(self, other):
        if isinstance(other, int):
            other = DiffOp.identity(self.p, self.N, self.nvars).scale(other)
        self._check(other)
        out = dict(self.terms)
        for nu, a in other.terms.items():
            s = out[nu] + a if nu in out else a
            if s.terms:
                out[nu] = s
            else:
                del out[nu]
        return DiffOp._raw(self.p, self.N, self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return DiffOp._raw(self.p, self.N, self.nvars, {nu: -a for nu, a in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = DiffOp.identity(self.p, self.N, self.nvars).scale(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: int) -> "DiffOp":
        out = {}
        for nu, a in self.terms.items():
            b = a.scale(c)
            if b.terms:
                out[nu] = b
        return DiffOp._raw(self.p, self.N, self.nvars, out)

    def left_mul_poly(self, f: MultiPoly) -> "DiffOp":
        """``f o P``; cheap because multiplication acts on coefficients only."""
        out = {}
        for nu, a in self.terms.items():
            b = f * a
            if b.terms:
                out[nu] = b
        return DiffOp._raw(self.p, self.N, self.nvars, out)

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        if isinstance(other, MultiPoly):
            other = DiffOp.multiplication(other)
        if isinstance(other, DiffOp):
            return compose(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        if isinstance(other, MultiPoly):
            return self.left_mul_poly(other)
        return NotImplemented

    def with_precision(self, N: int) -> "DiffOp":
        if N > self.N:
            raise InsufficientPrecision(f"cannot raise precision from {self.N} to {N}")
        return DiffOp(self.p, N, self.nvars, {nu: a.with_precision(N) for nu, a in self.terms.items()})

    def is_zero_mod(self, k: int) -> bool:
        """True iff every coefficient is divisible by p^k."""
        if k > self.N:
            raise PrecisionExceeded(f"congruence mod p^{k} is undecidable at precision {self.N}")
        pk = self.p**k
        return all(c % pk == 0 for a in self.terms.values() for c in a.terms.values())


# -- divided derivatives ------------------------------------------------------

def divided_derivative_terms(f: Mapping[Exponent, int], mu: MultiIndex, mod: int) -> Dict[Exponent, int]:
    out = {}
    for e, c in f.items():
        if all(k >= m for k, m in zip(e, mu)):
            v = c * _multi_binom(e, mu) % mod
            if v:
                out[tuple(k - m for k, m in zip(e, mu))] = v
    return out


def divided_derivative(f: MultiPoly, mu: Iterable[int]) -> MultiPoly:
    """``D^[mu](f)``: the mu-th derivative divided by mu!, computed with binomials."""
    return MultiPoly._raw(f.p, f.N, f.nvars, divided_derivative_terms(f.terms, tuple(mu), f.modulus))


def _max_degrees(f: Mapping[Exponent, int], nvars: int) -> Tuple[int, ...]:
    top = [0] * nvars
    for e in f:
        for i, k in enumerate(e):
            if k > top[i]:
                top[i] = k
    return tuple(top)


def _accumulate(bucket: Dict[Exponent, int], a: Mapping[Exponent, int], b: Mapping[Exponent, int], scale: int, mod: int):
    for ea, ca in a.items():
        cs = ca * scale
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            bucket[e] = (bucket.get(e, 0) + cs * cb) % mod


# -- ring operations ---------------------------------------------------------

def compose(P: DiffOp, Q: DiffOp) -> DiffOp:
    """The composition ``P o Q`` in left-coefficient normal form."""
    P._check(Q)
    p, N, M = P.ring()
    mod = P.modulus
    out: Dict[MultiIndex, Dict[Exponent, int]] = {}
    for kappa, b in Q.terms.items():
        bt = b.terms
        bdeg = _max_degrees(bt, M)
        dcache: Dict[MultiIndex, Dict[Exponent, int]] = {}
        for nu, a in P.terms.items():
            ranges = [range(min(n, d) + 1) for n, d in zip(nu, bdeg)]
            for mu in product(*ranges):
                db = dcache.get(mu)
                if db is None:
                    db = divided_derivative_terms(bt, mu, mod)
                    dcache[mu] = db
                if not db:
                    continue
                lam = tuple(n - m for n, m in zip(nu, mu))
                target = tuple(l + k for l, k in zip(lam, kappa))
                binom = _multi_binom(target, kappa) % mod
                if not binom:
                    continue
                bucket = out.setdefault(target, {})
                _accumulate(bucket, a.terms, db, binom, mod)
    return DiffOp._from_raw_terms(p, N, M, out)


def apply(P: DiffOp, f: MultiPoly) -> MultiPoly:
    """Action of P on a function: ``sum a_nu D^[nu](f)``."""
    if P.ring() != f.ring():
        raise DimensionMismatch(f"operator over {P.ring()} applied to polynomial over {f.ring()}")
    mod = P.modulus
    acc: Dict[Exponent, int] = {}
    for nu, a in P.terms.items():
        d = divided_derivative_terms(f.terms, nu, mod)
        if d:
            _accumulate(acc, a.terms, d, 1, mod)
    return MultiPoly._raw(P.p, P.N, P.nvars, {e: c for e, c in acc.items() if c})


def transpose(P: DiffOp) -> DiffOp:
    """Formal adjoint: ``(a d^[nu])^t = (-1)^|nu| d^[nu] o a``."""
    p, N, M = P.ring()
    mod = P.modulus
    out: Dict[MultiIndex, Dict[Exponent, int]] = {}
    for nu, a in P.terms.items():
        sign = -1 if sum(nu) % 2 else 1
        adeg = _max_degrees(a.terms, M)
        for mu in product(*[range(min(n, d) + 1) for n, d in zip(nu, adeg)]):
            da = divided_derivative_terms(a.terms, mu, mod)
            if not da:
                continue
            bucket = out.setdefault(tuple(n - m for n, m in zip(nu, mu)), {})
            for e, c in da.items():
                bucket[e] = (bucket.get(e, 0) + sign * c) % mod
    return DiffOp._from_raw_terms(p, N, M, out)


def commutator(A: DiffOp, B: DiffOp) -> DiffOp:
    return compose(A, B) - compose(B, A)


# -- orders and valuation slicing --------------------------------------------

def order(P: DiffOp):
    """Largest |nu| carried by P; ``-inf`` for the zero operator."""
    return max((sum(nu) for nu in P.terms), default=NEG_INF)


def _check_level(P: DiffOp, level: int):
    if level < 0:
        raise ValueError(f"level must be non-negative, got {level}")
    if level >= P.N:
        raise PrecisionExceeded(f"level {level} is not below the precision {P.N}")


def reduction_order(P: DiffOp, i: int):
    """Order of P modulo p^(i+1)."""
    _check_level(P, i)
    return max((sum(nu) for nu, a in P.terms.items() if gauss_vp(a) <= i), default=NEG_INF)


def level_part(P: DiffOp, level: int) -> DiffOp:
    """Terms whose coefficient has Gauss valuation exactly ``level``, kept at
    full precision (this is p^level times the slice)."""
    _check_level(P, level)
    return DiffOp._raw(P.p, P.N, P.nvars, {nu: a for nu, a in P.terms.items() if gauss_vp(a) == level})


def slice_op(P: DiffOp, level: int) -> DiffOp:
    """``[P]_level``: the valuation-``level`` terms divided by p^level (precision N - level)."""
    part = level_part(P, level)
    return DiffOp._raw(P.p, P.N - level, P.nvars, {nu: div_exact(a, level) for nu, a in part.terms.items()})


def sigma(P: DiffOp, level: int) -> DiffOp:
    """Sum of ``p^l [P]_l`` for l <= level: P with its deep terms dropped."""
    _check_level(P, level)
    return DiffOp._raw(P.p, P.N, P.nvars, {nu: a for nu, a in P.terms.items() if gauss_vp(a) <= level})


def valuation_levels(P: DiffOp) -> Dict[int, list]:
    """The sets E_l: multi-indices grouped by the Gauss valuation of their coefficient."""
    levels: Dict[int, list] = {}
    for nu, a in P.terms.items():
        levels.setdefault(int(gauss_vp(a)), []).append(nu)
    return levels


# -- level-m basis -------------------------------------------------------------

def q_index(nu: Iterable[int], p: int, m: int) -> Tuple[int, ...]:
    """Componentwise quotient of the euclidean division of nu by p^m."""
    pm = p**m
    return tuple(k // pm for k in nu)


def q_factorial(nu: Iterable[int], p: int, m: int) -> int:
    r = 1
    for q in q_index(nu, p, m):
        r *= math.factorial(q)
    return r


class LevelBasisOp:
    """Coefficients ``b_nu`` with respect to the level-m basis ``d^<nu> = q_nu! d^[nu]``."""

    __slots__ = ("p", "N", "nvars", "m", "terms")

    def __init__(self, p, N, nvars, m, terms: Mapping[MultiIndex, MultiPoly]):
        self.p, self.N, self.nvars, self.m = p, N, nvars, m
        self.terms = {tuple(nu): b for nu, b in terms.items() if b.terms}

    def __eq__(self, other):
        if not isinstance(other, LevelBasisOp):
            return NotImplemented
        return (self.p, self.N, self.nvars, self.m, self.terms) == (other.p, other.N, other.nvars, other.m, other.terms)

    def __repr__(self):
        return f"LevelBasisOp(m={self.m}, N={self.N}, terms={self.terms!r})"


def to_level_basis(P: DiffOp, m: int) -> LevelBasisOp:
    """Rewrite P in the level-m basis; precision drops by the largest v_p(q_nu!)."""
    p = P.p
    debit = 0
    for nu, a in P.terms.items():
        need = sum(legendre_vp_factorial(q, p) for q in q_index(nu, p, m))
        if gauss_vp(a) < need:
            raise NotDivisible(f"coefficient of d^[{nu}] is not divisible by q_nu! at level {m}")
        debit = max(debit, need)
    newN = P.N - debit
    if newN < 1:
        raise InsufficientPrecision(f"level-{m} coefficients need more than {P.N} digits")
    terms = {}
    for nu, a in P.terms.items():
        qf = q_factorial(nu, p, m)
        k = sum(legendre_vp_factorial(q, p) for q in q_index(nu, p, m))
        unit_inv = pow(qf // p**k, -1, p**newN)
        b = div_exact(a, k).with_precision(newN) if k else a.with_precision(newN)
        terms[nu] = b.scale(unit_inv)
    return LevelBasisOp(p, newN, P.nvars, m, terms)


def from_level_basis(B: LevelBasisOp) -> DiffOp:
    return DiffOp(B.p, B.N, B.nvars, {nu: b.scale(q_factorial(nu, B.p, B.m)) for nu, b in B.terms.items()})


# -- conjugation ---------------------------------------------------------------

def conjugate(P: DiffOp, u: MultiPoly) -> DiffOp:
    """``u o P o u^-1`` for a unit u of the coefficient ring."""
    if u.ring() != P.ring():
        raise DimensionMismatch(f"unit over {u.ring()} for operator over {P.ring()}")
    uinv = u.inverse()
    return compose(P.left_mul_poly(u), DiffOp.multiplication(uinv))


__all__ = [
    "AtLeast",
    "DiffOp",
    "LevelBasisOp",
    "NEG_INF",
    "apply",
    "commutator",
    "compose",
    "op_div_exact",
    "op_mul_p_power",
    "conjugate",
    "divided_derivative",
    "from_level_basis",
    "level_part",
    "order",
    "q_factorial",
    "q_index",
    "reduction_order",
    "sigma",
    "slice_op",
    "to_level_basis",
    "transpose",
    "valuation_levels",
]


def op_div_exact(P: DiffOp, k: int) -> DiffOp:
    """Divide every coefficient by p^k (precision N - k)."""
    if P.N - k <= 0:
        raise InsufficientPrecision(f"dividing by p^{k} exhausts precision {P.N}")
    return DiffOp._raw(P.p, P.N - k, P.nvars, {nu: div_exact(a, k) for nu, a in P.terms.items()})


def op_mul_p_power(P: DiffOp, k: int, N: int | None = None) -> DiffOp:
    """Multiply by p^k, reading the result at precision N (at most P.N + k)."""
    if N is None:
        N = P.N + k
    if N > P.N + k:
        raise InsufficientPrecision(f"p^{k} * (operator mod p^{P.N}) is only known mod p^{P.N + k}")
    pk = P.p**k
    return DiffOp._from_raw_terms(
        P.p, N, P.nvars, {nu: {e: c * pk for e, c in a.terms.items()} for nu, a in P.terms.items()}
    )
