"""Random generators, hypothesis strategies and independent oracles for the tests."""

from __future__ import annotations

import itertools
import random
from math import factorial

import sympy
from hypothesis import strategies as st

from arithdk.coeff import MultiPoly
from arithdk.diffop import DiffOp, compose
from arithdk.kashiwara import Chart, ideal_right_member
from arithdk.matrix import OpMatrix


# -- seeded random objects (acceptance runs) ------------------------------------------

def rand_poly(rng: random.Random, p, N, M, maxdeg=2, nterms=3, scale_p=0) -> MultiPoly:
    mod = p**N
    terms = {}
    for _ in range(rng.randint(0, nterms)):
        e = tuple(rng.randint(0, maxdeg) for _ in range(M))
        terms[e] = rng.randrange(mod) * p**scale_p
    return MultiPoly(p, N, M, terms)


def rand_op(rng: random.Random, p, N, M, max_order=3, maxdeg=2, nterms=3, scale_p=0) -> DiffOp:
    terms = {}
    for _ in range(rng.randint(0, nterms)):
        nu = tuple(rng.randint(0, max_order) for _ in range(M))
        while sum(nu) > max_order:
            nu = tuple(rng.randint(0, max_order) for _ in range(M))
        terms[nu] = rand_poly(rng, p, N, M, maxdeg, 2, scale_p) + terms.get(nu, MultiPoly.zero(p, N, M))
    return DiffOp(p, N, M, terms)


def rand_matrix(rng, p, N, M, n, **kw) -> OpMatrix:
    return OpMatrix([[rand_op(rng, p, N, M, **kw) for _ in range(n)] for _ in range(n)])


# -- hypothesis strategies ----------------------------------------------------------------

PRIMES = st.sampled_from([2, 3, 5])


def poly_strategy(p, N, M, maxdeg=2, max_terms=3):
    return st.dictionaries(
        st.tuples(*[st.integers(0, maxdeg)] * M), st.integers(0, p**N - 1), max_size=max_terms
    ).map(lambda d: MultiPoly(p, N, M, d))


def op_strategy(p, N, M, max_order=3, maxdeg=2, max_terms=3):
    return st.dictionaries(
        st.tuples(*[st.integers(0, max_order)] * M), poly_strategy(p, N, M, maxdeg), max_size=max_terms
    ).map(lambda d: DiffOp(p, N, M, d))


@st.composite
def ring_and_ops(draw, count=1, max_M=2, max_order=3, maxdeg=2, N=None):
    p = draw(PRIMES)
    N = N or draw(st.integers(1, 4))
    M = draw(st.integers(1, max_M))
    ops = [draw(op_strategy(p, N, M, max_order, maxdeg)) for _ in range(count)]
    return (p, N, M, *ops)


# -- independent oracles (sympy over Z, reduced mod p^N at the end) --------------------------

def _syms(M):
    return sympy.symbols(f"y0:{M}")


def to_sympy(f: MultiPoly):
    ys = _syms(f.nvars)
    return sum((c * sympy.Mul(*[y**k for y, k in zip(ys, e)]) for e, c in f.terms.items()), sympy.Integer(0))


def from_sympy(expr, p, N, M) -> MultiPoly:
    ys = _syms(M)
    if expr == 0:
        return MultiPoly.zero(p, N, M)
    poly = sympy.Poly(sympy.expand(expr), *ys)
    return MultiPoly(p, N, M, {tuple(e): int(c) for e, c in poly.terms()})


def oracle_apply(P: DiffOp, f: MultiPoly) -> MultiPoly:
    """sum_nu a_nu * (d^nu f) / nu!, differentiated by sympy over the integers."""
    p, N, M = P.ring()
    ys = _syms(M)
    g = to_sympy(f)
    total = sympy.Integer(0)
    for nu, a in P.terms.items():
        d = g
        for y, k in zip(ys, nu):
            if k:
                d = sympy.diff(d, y, k) / factorial(k)
        total += to_sympy(a) * d
    return from_sympy(total, p, N, M)


def monomials_upto(p, N, M, bound):
    for e in itertools.product(range(bound + 1), repeat=M):
        yield MultiPoly.monomial(p, N, M, e)


def ops_equal_by_action(A: DiffOp, B, bound: int) -> bool:
    """Compare an operator with a callable (or operator) on every monomial of degree <= bound per variable.

    Over Z/p^N the action on monomials is faithful once the bound reaches the order.
    """
    p, N, M = A.ring()
    act = B if callable(B) else (lambda f: oracle_apply(B, f))
    return all(oracle_apply(A, f) == act(f) for f in monomials_upto(p, N, M, bound))


def max_order_per_var(*ops):
    return max([max(nu) for P in ops for nu in P.terms] or [0])


# -- closed immersions ----------------------------------------------------------------------

def brute_normalizer(P: DiffOp, chart: Chart, degree=3) -> bool:
    """P (g t_j) lies in J.D for every monomial g of degree <= degree and every transverse t_j."""
    ring = chart.x_ring()
    for e in itertools.product(range(degree + 1), repeat=chart.M):
        if sum(e) > degree:
            continue
        for j in chart.transverse:
            g = MultiPoly.monomial(*ring, e) * MultiPoly.variable(*ring, j)
            if not ideal_right_member(compose(P, DiffOp.multiplication(g)), chart):
                return False
    return True


def random_normalizer(rng, chart: Chart, max_order=2) -> DiffOp:
    """Tangential part arbitrary; transverse directions carry coefficients in J."""
    ring = chart.x_ring()
    P = rand_op(rng, *ring, max_order=max_order)
    terms = {}
    for nu, a in P.terms.items():
        if any(nu[chart.r:]):
            j = rng.choice(list(chart.transverse))
            a = a * MultiPoly.variable(*ring, j)
        terms[nu] = a
    return DiffOp(*ring, terms)
