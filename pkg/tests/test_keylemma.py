import random

import pytest
from hypothesis import given, settings, strategies as st

from arithdk.coeff import MultiPoly
from arithdk.diffop import DiffOp, compose
from arithdk.errors import InsufficientPrecision, NotUnipotent
from arithdk.growth import check_beta_bounded
from arithdk.keylemma import (
    choose_beta,
    commutant_solve,
    conjugation_defect,
    invert_unipotent,
    key_lemma_solve,
    normalize_generators,
)
from arithdk.matrix import OpMatrix

from helpers import rand_matrix


def d_(p, N, k, c=1):
    return DiffOp.dpow(p, N, 1, (k,), c)


def one(n, p, N, M):
    return OpMatrix.identity(n, p, N, M)


def brute_defect(P: OpMatrix, R: OpMatrix, m: int) -> OpMatrix:
    """t^(p^m) P - P (t^(p^m) - pR), expanded entry by entry with compose only."""
    p, N, M = P.ring()
    T = DiffOp.variable(p, N, M, M - 1, p**m)
    n = P.n
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = compose(T, P[i, j]) - compose(P[i, j], T)
            for k in range(n):
                acc = acc + compose(P[i, k], R[k, j]).scale(p)
            row.append(acc)
        rows.append(row)
    return OpMatrix(rows)


def test_commutant_examples():
    p, N = 2, 3
    assert commutant_solve(DiffOp.zero(p, N, 1), 1).is_zero()
    Q = commutant_solve(DiffOp.identity(p, N, 1), 1)
    assert Q == OpMatrix([[-d_(p, N, 2)]])
    t2 = DiffOp.variable(p, N, 1, 0, 2)
    comm = compose(t2, Q[0, 0]) - compose(Q[0, 0], t2)
    assert comm == DiffOp.identity(p, N, 1) + d_(p, N, 1, MultiPoly.variable(p, N, 1, 0).scale(2))
    Q = commutant_solve(d_(p, N, 1), 1)
    assert Q[0, 0] == -d_(p, N, 3)
    comm = compose(t2, Q[0, 0]) - compose(Q[0, 0], t2)
    assert comm == d_(p, N, 1) + d_(p, N, 2, MultiPoly.variable(p, N, 1, 0).scale(2))


def test_commutant_rejects_level_zero():
    with pytest.raises(ValueError):
        commutant_solve(DiffOp.identity(2, 2, 1), 0)


@pytest.mark.parametrize("n,M,m,L", [(1, 1, 1, 3), (2, 2, 2, 2), (2, 1, 1, 4)])
def test_zero_R_gives_identity(n, M, m, L):
    R = OpMatrix.zero(n, 3, 4, M)
    P, trace, cert = key_lemma_solve(R, m, L)
    assert P == one(n, 3, 4, M)
    assert all(s.U.is_zero() for s in trace.steps)
    assert cert.verdict


def test_worked_fixture():
    R = DiffOp.identity(2, 2, 1)
    P, trace, cert = key_lemma_solve(R, 1, 2)
    assert P == OpMatrix([[DiffOp.identity(2, 2, 1) + d_(2, 2, 2, 2)]])
    step = trace.steps[0]
    assert step.U == OpMatrix([[-DiffOp.identity(2, 1, 1)]])
    assert step.Q == OpMatrix([[d_(2, 1, 2)]])
    Pinv = invert_unipotent(P)
    assert Pinv == OpMatrix([[DiffOp.identity(2, 2, 1) - d_(2, 2, 2, 2)]])
    # t^2 (1 + 2d^[2]) = (1 + 2d^[2]) (t^2 - 2) mod 4, expanded independently
    assert brute_defect(P, OpMatrix([[R]]), 1).is_zero_mod(2)
    assert normalize_generators(R, 1, 2) == (P, Pinv)


def test_invert_unipotent():
    P = one(2, 3, 3, 1)
    assert invert_unipotent(P) == P
    with pytest.raises(NotUnipotent):
        invert_unipotent(OpMatrix([[d_(3, 3, 1)]]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(1, 4), st.randoms(use_true_random=False))
def test_invert_random_unipotent(p, N, rng):
    E = rand_matrix(rng, p, N, 1, 2, max_order=2, scale_p=1)
    P = one(2, p, N, 1) + E
    Pinv = invert_unipotent(P)
    assert P @ Pinv == one(2, p, N, 1) and Pinv @ P == one(2, p, N, 1)


def test_precision_guard():
    with pytest.raises(InsufficientPrecision):
        key_lemma_solve(DiffOp.identity(2, 2, 1), 1, 3)
    with pytest.raises(ValueError):
        key_lemma_solve(DiffOp.identity(2, 2, 1), 0, 2)


def _random_case(seed):
    rng = random.Random(seed)
    p = rng.choice([2, 3])
    m = rng.choice([1, 2])
    n = rng.choice([1, 2])
    M = rng.choice([1, 2])
    L = rng.randint(2, 4)
    R = rand_matrix(rng, p, L, M, n, max_order=3)
    while R.is_zero():
        R = rand_matrix(rng, p, L, M, n, max_order=3)
    return p, m, n, M, L, R


@pytest.mark.parametrize("seed", range(25))
def test_random_induction_properties(seed):
    p, m, n, M, L, R = _random_case(seed)
    P, trace, cert = key_lemma_solve(R, m, L)
    beta = trace.beta
    assert beta == choose_beta(trace.alpha, p, m)
    iterates = trace.iterates()
    assert iterates[0] == one(n, p, L, M)
    for l, Pl in enumerate(iterates):
        assert Pl.sigma(l) == Pl
        assert check_beta_bounded(Pl, beta).verdict
        if l + 1 < len(iterates):
            assert (iterates[l + 1] - Pl).is_zero_mod(l + 1)
        if l >= 1:
            assert conjugation_defect(Pl, R.sigma(l - 1), m).is_zero_mod(l + 1)
    for s in trace.steps:
        assert s.order_U <= beta * (s.level + 1) + 2 * trace.alpha
    assert (P - one(n, p, L, M)).is_zero_mod(1)
    assert brute_defect(P, R, m).is_zero_mod(L)


@pytest.mark.parametrize("seed", range(5))
def test_two_by_two_at_L3(seed):
    rng = random.Random(1000 + seed)
    p = rng.choice([2, 3])
    R = rand_matrix(rng, p, 3, 2, 2, max_order=2)
    P, Pinv = normalize_generators(R, 1, 3)
    assert brute_defect(P, R, 1).is_zero_mod(3)
    assert P @ Pinv == one(2, p, 3, 2)
