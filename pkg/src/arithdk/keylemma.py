"""Constructive key lemma: conjugating t^(p^m) into t^(p^m) - pR.

Given a matrix R of operators, the solver builds unipotent P_0 = 1, P_1, ...
with ``t^(p^m) P_l = P_l (t^(p^m) - p R)`` modulo p^(l+1), where t is the
last coordinate.  Each step divides an explicit defect by p^(l+1), solves
the commutator congruence ``[t^(p^m), Q] = U mod p`` by an index shift, and
truncates with sigma_(l+1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Union

from .coeff import MultiPoly
from .diffop import DiffOp, order
from .errors import InsufficientPrecision, NotDivisible, NotUnipotent
from .growth import (
    BetaCertificate,
    check_beta_bounded,
    convert_growth_constants,
    estimate_alpha,
    estimate_level,
)
from .matrix import OpMatrix

log = logging.getLogger(__name__)


class InvariantViolation(AssertionError):
    """A property the construction guarantees failed to hold."""


def _as_matrix(R: Union[DiffOp, OpMatrix]) -> OpMatrix:
    return R if isinstance(R, OpMatrix) else OpMatrix([[R]])


def transverse_power(p, N, nvars, m) -> MultiPoly:
    """t^(p^m) with t the last coordinate."""
    return MultiPoly.variable(p, N, nvars, nvars - 1, p**m)


def commutator_with_t(P: OpMatrix, T: MultiPoly) -> OpMatrix:
    """``[T, P] = T o P - P o T`` for a multiplication operator T."""
    return P.left_mul_poly(T) - P.compose_right_scalar(DiffOp.multiplication(T))


def commutant_solve(U: Union[DiffOp, OpMatrix], m: int, check: bool = True) -> OpMatrix:
    """Q with ``[t^(p^m), Q] = U mod p`` and ``ord(Q) <= ord(U) + p^m``.

    Q is obtained by shifting every multi-index by p^m in the t-direction and
    negating.
    """
    if m < 1:
        raise ValueError("the commutant lemma needs m >= 1")
    U = _as_matrix(U)
    p, N, M = U.ring()
    shift = p**m

    def shifted(e: DiffOp) -> DiffOp:
        return DiffOp._raw(p, N, M, {nu[:-1] + (nu[-1] + shift,): -a for nu, a in e.terms.items()})

    Q = U.map(shifted)
    if check:
        lhs = commutator_with_t(Q, transverse_power(p, N, M, m))
        if not (lhs - U).is_zero_mod(1):
            raise InvariantViolation("[t^(p^m), Q] is not congruent to U mod p")
        if not U.is_zero() and Q.order() > U.order() + shift:
            raise InvariantViolation("order bound ord(Q) <= ord(U) + p^m violated")
    return Q


@dataclass
class SolverStep:
    level: int
    P: OpMatrix
    U: OpMatrix
    Q: OpMatrix
    order_U: object
    order_Q: object


@dataclass
class SolverTrace:
    m: int
    L: int
    alpha: Fraction
    beta: Fraction
    steps: List[SolverStep] = field(default_factory=list)
    final: OpMatrix | None = None
    level_estimate: int | None = None

    def iterates(self) -> List[OpMatrix]:
        """P_0, P_1, ..., P_(L-1)."""
        return [s.P for s in self.steps] + [self.final]


class KeyLemmaResult(NamedTuple):
    P: OpMatrix
    trace: SolverTrace
    cert: BetaCertificate


def choose_beta(alpha: Fraction, p: int, m: int) -> Fraction:
    """Integral beta with 2*alpha + p^m <= beta."""
    return Fraction(max(2 * math.ceil(alpha) + p**m, 1))


def conjugation_defect(P: OpMatrix, R: OpMatrix, m: int) -> OpMatrix:
    """``t^(p^m) P - P (t^(p^m) - p R)``; zero in the limit."""
    p, N, M = P.ring()
    T = transverse_power(p, N, M, m)
    return commutator_with_t(P, T) + (P @ R).scale(p)


def _step_defect(P: OpMatrix, R: OpMatrix, T: MultiPoly, level: int) -> OpMatrix:
    """``[T, P_l] + p * sum p^(l1+l2) [P_l]_l1 [R]_l2`` over l1, l2 <= l, l1 + l2 <= l + 1."""
    p = P.p
    acc = commutator_with_t(P, T)
    products = None
    for l1 in range(level + 1):
        part = P.level_part(l1)
        if part.is_zero():
            continue
        term = part @ R.sigma(min(level, level + 1 - l1))
        products = term if products is None else products + term
    if products is not None:
        acc = acc + products.scale(p)
    return acc


def key_lemma_solve(R: Union[DiffOp, OpMatrix], m: int, L: int, check_invariants: bool = True) -> KeyLemmaResult:
    """Run the induction up to P_(L-1) and certify it.

    The returned P satisfies ``P = 1 mod p`` and
    ``t^(p^m) P = P (t^(p^m) - p R) mod p^L``; both are re-checked before
    returning, as is beta-boundedness of every iterate.
    """
    R = _as_matrix(R)
    p, N, M = R.ring()
    if m < 1:
        raise ValueError("the key lemma needs m >= 1")
    if L < 1:
        raise ValueError("L must be at least 1")
    if L > N:
        raise InsufficientPrecision(f"target p^{L} exceeds the working precision p^{N}")
    n = R.n
    alpha = Fraction(1) if R.is_zero() else estimate_alpha(R)
    beta = choose_beta(alpha, p, m)
    T = transverse_power(p, N, M, m)
    trace = SolverTrace(m=m, L=L, alpha=alpha, beta=beta)

    P = OpMatrix.identity(n, p, N, M)
    for level in range(L - 1):
        defect = _step_defect(P, R, T, level)
        try:
            U = (-defect).div_exact(level + 1)
        except NotDivisible as exc:
            raise NotDivisible(
                f"step {level}: defect not divisible by p^{level + 1}; this contradicts the construction ({exc})"
            ) from exc
        Q = commutant_solve(U, m, check=check_invariants)
        nxt = (P + Q.mul_p_power(level + 1, N)).sigma(level + 1)
        step = SolverStep(level, P, U, Q, U.order(), Q.order())
        trace.steps.append(step)
        if check_invariants:
            _check_step(step, nxt, R, alpha, beta, m)
        log.debug("level %d: ord(U)=%s ord(Q)=%s", level, step.order_U, step.order_Q)
        P = nxt
    trace.final = P

    if not (P - OpMatrix.identity(n, p, N, M)).is_zero_mod(1):
        raise InvariantViolation("P is not congruent to the identity mod p")
    if not conjugation_defect(P, R, m).is_zero_mod(L):
        raise InvariantViolation(f"t^(p^m) P - P (t^(p^m) - pR) is not divisible by p^{L}")
    cert = check_beta_bounded(P, beta)
    if not cert.verdict:
        raise InvariantViolation(f"P is not {beta}-bounded")
    trace.level_estimate = max(m, estimate_level(convert_growth_constants(beta, beta, p)))
    return KeyLemmaResult(P, trace, cert)


def _check_step(step: SolverStep, nxt: OpMatrix, R: OpMatrix, alpha, beta, m):
    l = step.level
    P = step.P
    if nxt.sigma(l + 1) != nxt:
        raise InvariantViolation(f"sigma_{l + 1}(P_{l + 1}) != P_{l + 1}")
    if not (nxt - P).is_zero_mod(l + 1):
        raise InvariantViolation(f"P_{l + 1} and P_{l} differ modulo p^{l + 1}")
    if not check_beta_bounded(nxt, beta).verdict:
        raise InvariantViolation(f"P_{l + 1} is not {beta}-bounded")
    # (iii) at level l + 1: t^(p^m) P_(l+1) = P_(l+1) (t^(p^m) - p sigma_l(R)) mod p^(l+2)
    if not conjugation_defect(nxt, R.sigma(l), m).is_zero_mod(l + 2):
        raise InvariantViolation(f"conjugation congruence fails for P_{l + 1}")
    if step.order_U > beta * (l + 1) + 2 * alpha:
        raise InvariantViolation(f"ord(U_{l}) = {step.order_U} exceeds beta(l+1) + 2 alpha")
    if step.order_Q > beta * (l + 2):
        raise InvariantViolation(f"ord(Q_{l}) = {step.order_Q} exceeds beta(l+2)")
    if not check_beta_bounded(step.Q.mul_p_power(l + 1, P.N), beta).verdict:
        raise InvariantViolation(f"p^{l + 1} Q_{l} is not {beta}-bounded")


def invert_unipotent(P: Union[DiffOp, OpMatrix]) -> OpMatrix:
    """Inverse of P = 1 mod p as the finite geometric series in 1 - P."""
    P = _as_matrix(P)
    p, N, M = P.ring()
    one = OpMatrix.identity(P.n, p, N, M)
    E = one - P
    if not E.is_zero_mod(1):
        raise NotUnipotent("P is not congruent to the identity modulo p")
    acc, term = one, one
    for _ in range(N - 1):
        term = term @ E
        if term.is_zero():
            break
        acc = acc + term
    return acc


def normalize_generators(R: Union[DiffOp, OpMatrix], m: int, L: int):
    """New generators e' = P e killed by t^(p^m) modulo p^L, with the inverse change of basis."""
    P, _, _ = key_lemma_solve(R, m, L)
    return P, invert_unipotent(P)
