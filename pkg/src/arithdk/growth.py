"""Growth conditions: beta-boundedness certificates and constant conversions.

All constants are exact ``Fraction`` values.  Real constants that are
irrational powers of p (``eta = p^(-1/alpha)``) are stored by their
base-p exponent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Tuple, Union

from .diffop import NEG_INF, DiffOp, order, reduction_order, slice_op
from .errors import ZeroOperator
from .matrix import OpMatrix, entries_of

Rational = Union[int, Fraction]
Operand = Union[DiffOp, OpMatrix]


def level_orders(P: Operand) -> List[Tuple[int, object]]:
    """``(l, ord(sigma_l(P)))`` for every level below the precision."""
    ops = entries_of(P)
    N = ops[0].N
    return [(l, max(reduction_order(e, l) for e in ops)) for l in range(N)]


@dataclass(frozen=True)
class BetaCertificate:
    beta: Fraction
    precision: int
    per_level: Tuple[Tuple[int, object], ...] = field(default=())
    verdict: bool = False

    def failing_levels(self):
        return [l for l, o in self.per_level if o > self.beta * (l + 1)]


def check_beta_bounded(P: Operand, beta: Rational) -> BetaCertificate:
    """Record ord(sigma_l(P)) for l < N and compare against beta * (l + 1)."""
    beta = Fraction(beta)
    if beta <= 0:
        raise ValueError("beta must be positive")
    levels = tuple(level_orders(P))
    verdict = all(o <= beta * (l + 1) for l, o in levels)
    return BetaCertificate(beta, entries_of(P)[0].N, levels, verdict)


def estimate_alpha(R: Operand) -> Fraction:
    """Least alpha with ord(sigma_l(R)) <= alpha * (l + 1) for every l < N.

    When every level has order <= 0 any positive value works; 1 is returned.
    """
    if all(e.is_zero() for e in entries_of(R)):
        raise ZeroOperator("alpha is undefined for the zero operator")
    best = max(Fraction(o, l + 1) for l, o in level_orders(R) if o != NEG_INF)
    return best if best > 0 else Fraction(1)


def slice_equiv_check(P: DiffOp, alpha: Rational, beta: Rational) -> bool:
    """Whether the sigma-form and the slice-form of the linear growth bound agree."""
    alpha, beta = Fraction(alpha), Fraction(beta)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    via_sigma = all(reduction_order(P, l) <= alpha * l + beta for l in range(P.N))
    via_slices = all(order(slice_op(P, l)) <= alpha * l + beta for l in range(P.N))
    return via_sigma == via_slices


@dataclass(frozen=True)
class GrowthConstants:
    """Constants of the three equivalent growth conditions.

    ``c = p**c_exponent`` and ``eta = p**eta_exponent``; ``lam`` and ``mu``
    describe the valuation bound ``v_p(a_nu) >= lam * |nu| + mu``.
    """

    p: int
    alpha: Fraction
    beta: Fraction
    c_exponent: Fraction
    eta_exponent: Fraction
    lam: Fraction
    mu: Fraction

    def valuation_bound(self, weight: int) -> Fraction:
        return self.lam * weight + self.mu

    @classmethod
    def from_valuation_bound(cls, p: int, lam: Rational, mu: Rational) -> "GrowthConstants":
        """Constants determined by ``v_p(a_nu) >= lam * |nu| + mu`` alone."""
        lam, mu = Fraction(lam), Fraction(mu)
        if lam <= 0:
            raise ValueError("lambda must be positive")
        alpha = 1 / lam
        return cls(p=p, alpha=alpha, beta=-mu * alpha, c_exponent=-mu, eta_exponent=-lam, lam=lam, mu=mu)


def convert_growth_constants(alpha: Rational, beta: Rational, p: int) -> GrowthConstants:
    """From ``ord(P mod p^(i+1)) <= alpha*i + beta`` to ``|a_nu| <= c * eta^|nu|``."""
    alpha, beta = Fraction(alpha), Fraction(beta)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    eta_exp = -1 / alpha
    c_exp = beta / alpha
    return GrowthConstants(
        p=p,
        alpha=alpha,
        beta=beta,
        c_exponent=c_exp,
        eta_exponent=eta_exp,
        lam=-eta_exp,
        mu=-c_exp,
    )


def estimate_level(constants: GrowthConstants, p: int | None = None) -> int:
    """Smallest level m' at which every coefficient a_nu / q_nu! is integral."""
    p = constants.p if p is None else p
    lam, mu = Fraction(constants.lam), Fraction(constants.mu)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    m = 0
    while True:
        pm = p**m
        ok = lam > Fraction(1, pm * (p - 1))
        if ok and mu < 0:
            ok = pm > (-mu + Fraction(1, p - 1)) / lam
        if ok:
            return m
        m += 1
