"""Truncated p-adic integers and sparse multivariate polynomials over them.

Everything lives in Z/p^N with a single absolute precision ``N`` per object.
Polynomials store raw residues (python ints in ``[0, p^N)``) keyed by
exponent tuples; ``PadicScalar`` is the user-facing scalar atom.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple, Union

from .errors import DimensionMismatch, InsufficientPrecision, NotAUnit, NotDivisible

Exponent = Tuple[int, ...]


class AtLeast(int):
    """Valuation of zero at precision N: behaves like the integer N but
    prints as "≥N" so callers can tell it apart from an honest value."""

    def __repr__(self):
        return f"AtLeast({int(self)})"

    def __str__(self):
        return f">={int(self)}"


def int_vp(value: int, p: int, N: int) -> int:
    """Valuation of an integer residue modulo p^N, capped at N."""
    value %= p**N
    if value == 0:
        return AtLeast(N)
    k = 0
    while value % p == 0:
        value //= p
        k += 1
    return k


class PadicScalar:
    __slots__ = ("p", "N", "residue")

    def __init__(self, p: int, N: int, value: int = 0):
        if N < 1:
            raise InsufficientPrecision(f"precision must be positive, got {N}")
        self.p = p
        self.N = N
        self.residue = value % p**N

    @property
    def modulus(self):
        return self.p**self.N

    def _coerce(self, other):
        if isinstance(other, PadicScalar):
            if (other.p, other.N) != (self.p, self.N):
                raise DimensionMismatch("scalars over different (p, N)")
            return other.residue
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PadicScalar(self.p, self.N, self.residue + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PadicScalar(self.p, self.N, self.residue - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PadicScalar(self.p, self.N, o - self.residue)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PadicScalar(self.p, self.N, self.residue * o)

    __rmul__ = __mul__

    def __neg__(self):
        return PadicScalar(self.p, self.N, -self.residue)

    def __eq__(self, other):
        if isinstance(other, PadicScalar):
            return (self.p, self.N, self.residue) == (other.p, other.N, other.residue)
        if isinstance(other, int):
            return self.residue == other % self.modulus
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.N, self.residue))

    def __repr__(self):
        return f"PadicScalar(p={self.p}, N={self.N}, residue={self.residue})"

    def is_zero(self):
        return self.residue == 0

    def inverse(self) -> "PadicScalar":
        if self.residue % self.p == 0:
            raise NotAUnit(f"{self.residue} is not a unit modulo {self.p}")
        return PadicScalar(self.p, self.N, pow(self.residue, -1, self.modulus))


class MultiPoly:
    """Sparse polynomial in ``nvars`` variables with coefficients mod p^N.

    Zero residues are never stored, so ``==`` is a plain dict comparison.
    """

    __slots__ = ("p", "N", "nvars", "terms", "_hash")

    def __init__(self, p: int, N: int, nvars: int, terms: Mapping[Exponent, int] | None = None):
        if N < 1:
            raise InsufficientPrecision(f"precision must be positive, got {N}")
        self.p = p
        self.N = N
        self.nvars = nvars
        mod = p**N
        clean: Dict[Exponent, int] = {}
        if terms:
            for e, c in terms.items():
                if isinstance(c, PadicScalar):
                    c = c.residue
                c %= mod
                if c:
                    if len(e) != nvars:
                        raise DimensionMismatch(f"exponent {e} has wrong length for {nvars} variables")
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    # -- constructors ----------------------------------------------------
    @classmethod
    def _raw(cls, p, N, nvars, terms):
        """Wrap an already reduced dict without re-checking it."""
        obj = cls.__new__(cls)
        obj.p, obj.N, obj.nvars, obj.terms, obj._hash = p, N, nvars, terms, None
        return obj

    @classmethod
    def zero(cls, p, N, nvars):
        return cls._raw(p, N, nvars, {})

    @classmethod
    def constant(cls, p, N, nvars, c=1):
        return cls(p, N, nvars, {(0,) * nvars: c})

    @classmethod
    def monomial(cls, p, N, nvars, exponent, c=1):
        return cls(p, N, nvars, {tuple(exponent): c})

    @classmethod
    def variable(cls, p, N, nvars, i, power=1):
        e = [0] * nvars
        e[i] = power
        return cls(p, N, nvars, {tuple(e): 1})

    # -- basic protocol --------------------------------------------------
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
        if isinstance(other, MultiPoly):
            return self.ring() == other.ring() and self.terms == other.terms
        if isinstance(other, int):
            return self == MultiPoly.constant(self.p, self.N, self.nvars, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring(), frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms):
            mono = "*".join(
                (f"x{i + 1}" if k == 1 else f"x{i + 1}^{k}") for i, k in enumerate(e) if k
            )
            c = self.terms[e]
            parts.append(f"{c}*{mono}" if mono and c != 1 else (mono or str(c)))
        return " + ".join(parts)

    def _check(self, other):
        if self.ring() != other.ring():
            raise DimensionMismatch(f"polynomials over {self.ring()} and {other.ring()}")

    def coefficient(self, exponent) -> int:
        return self.terms.get(tuple(exponent), 0)

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.nvars, 0)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, int):
            other = MultiPoly.constant(self.p, self.N, self.nvars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        self._check(other)
        mod = self.modulus
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = (out.get(e, 0) + c) % mod
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return MultiPoly._raw(self.p, self.N, self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        mod = self.modulus
        return MultiPoly._raw(self.p, self.N, self.nvars, {e: mod - c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = MultiPoly.constant(self.p, self.N, self.nvars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: int) -> "MultiPoly":
        mod = self.modulus
        out = {}
        for e, v in self.terms.items():
            v = v * c % mod
            if v:
                out[e] = v
        return MultiPoly._raw(self.p, self.N, self.nvars, out)

    def __mul__(self, other):
        if isinstance(other, PadicScalar):
            other = other.residue
        if isinstance(other, int):
            return self.scale(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        self._check(other)
        return MultiPoly._raw(self.p, self.N, self.nvars, mul_terms(self.terms, other.terms, self.modulus))

    def __rmul__(self, other):
        if isinstance(other, (int, PadicScalar)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        result = MultiPoly.constant(self.p, self.N, self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def with_precision(self, N: int) -> "MultiPoly":
        """Reduce modulo p^N (N may not exceed the current precision)."""
        if N > self.N:
            raise InsufficientPrecision(f"cannot raise precision from {self.N} to {N}")
        return MultiPoly(self.p, N, self.nvars, self.terms)

    def inverse(self) -> "MultiPoly":
        """Inverse of a unit of the p-adically complete polynomial ring.

        A polynomial is a unit iff it reduces to a nonzero constant mod p.
        The inverse is the finite geometric series c^-1 * sum (c^-1 * (c - u))^k.
        """
        p, N = self.p, self.N
        c = self.constant_term()
        if c % p == 0:
            raise NotAUnit("constant term is not a unit modulo p")
        if any(v % p for e, v in self.terms.items() if any(e)):
            raise NotAUnit("non-constant part is not divisible by p")
        cinv = pow(c, -1, p**N)
        w = (MultiPoly.constant(p, N, self.nvars, c) - self).scale(cinv)
        acc = MultiPoly.constant(p, N, self.nvars, 1)
        term = acc
        for _ in range(N):
            term = term * w
            if term.is_zero():
                break
            acc = acc + term
        return acc.scale(cinv)

    def substitute_zero(self, indices: Iterable[int]) -> "MultiPoly":
        """Drop every monomial involving one of ``indices``."""
        idx = tuple(indices)
        return MultiPoly._raw(
            self.p, self.N, self.nvars, {e: c for e, c in self.terms.items() if not any(e[i] for i in idx)}
        )

    def embed(self, nvars: int, positions: Iterable[int]) -> "MultiPoly":
        """Re-read the polynomial in a ring with ``nvars`` variables; variable i goes to positions[i]."""
        pos = tuple(positions)
        out = {}
        for e, c in self.terms.items():
            new = [0] * nvars
            for i, k in zip(pos, e):
                new[i] = k
            out[tuple(new)] = c
        return MultiPoly._raw(self.p, self.N, nvars, out)

    def project(self, keep: Iterable[int]) -> "MultiPoly":
        """Keep only the variables at indices ``keep``; caller ensures the others are absent."""
        keep = tuple(keep)
        out: Dict[Exponent, int] = {}
        mod = self.modulus
        for e, c in self.terms.items():
            k = tuple(e[i] for i in keep)
            v = (out.get(k, 0) + c) % mod
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return MultiPoly._raw(self.p, self.N, len(keep), out)


def mul_terms(a: Mapping[Exponent, int], b: Mapping[Exponent, int], mod: int) -> Dict[Exponent, int]:
    out: Dict[Exponent, int] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = (out.get(e, 0) + ca * cb) % mod
    return {e: c for e, c in out.items() if c}


# -- valuations -------------------------------------------------------------

def vp(x: PadicScalar) -> int:
    return int_vp(x.residue, x.p, x.N)


def gauss_vp(f: MultiPoly) -> int:
    """Gauss valuation: the minimum valuation over the coefficients."""
    if not f.terms:
        return AtLeast(f.N)
    return min(int_vp(c, f.p, f.N) for c in f.terms.values())


def div_exact(x: Union[PadicScalar, MultiPoly], k: int):
    """Divide by p^k, debiting k from the precision."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if x.N - k <= 0:
        raise InsufficientPrecision(f"dividing by p^{k} exhausts precision {x.N}")
    pk = x.p**k
    if isinstance(x, PadicScalar):
        if x.residue % pk:
            raise NotDivisible(f"{x.residue} is not divisible by {x.p}^{k}")
        return PadicScalar(x.p, x.N - k, x.residue // pk)
    out = {}
    for e, c in x.terms.items():
        if c % pk:
            raise NotDivisible(f"coefficient {c} of {e} is not divisible by {x.p}^{k}")
        out[e] = c // pk
    return MultiPoly(x.p, x.N - k, x.nvars, out)


def mul_p_power(x: Union[PadicScalar, MultiPoly], k: int, N: int | None = None):
    """Multiply by p^k and read the result at precision ``N`` (default x.N + k).

    This is the exact inverse of ``div_exact``: a value known mod p^(N-k)
    determines p^k times it mod p^N.
    """
    if N is None:
        N = x.N + k
    if N > x.N + k:
        raise InsufficientPrecision(f"p^{k} * (value mod p^{x.N}) is only known mod p^{x.N + k}")
    pk = x.p**k
    if isinstance(x, PadicScalar):
        return PadicScalar(x.p, N, x.residue * pk)
    return MultiPoly(x.p, N, x.nvars, {e: c * pk for e, c in x.terms.items()})


def ideal_member_poly(f: MultiPoly, r: int) -> bool:
    """Membership in the monomial ideal generated by the variables of index >= r
    (0-based), i.e. x_{r+1}, ..., x_M."""
    if not 0 <= r <= f.nvars:
        raise ValueError(f"r={r} out of range for {f.nvars} variables")
    return all(any(e[r:]) for e in f.terms)


def legendre_vp_factorial(q: int, p: int) -> int:
    total, pi = 0, p
    while pi <= q:
        total += q // pi
        pi *= p
    return total
