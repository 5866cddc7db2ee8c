"""The ten acceptance criteria, one test each.

Every test prints a ``criterion N: PASS|FAIL`` line; the same lines are
repeated in the pytest terminal summary.
"""

import functools
import itertools
import json
import math
import random
import time
from fractions import Fraction

import pytest

from arithdk.certificates import keylemma_certificate, twist_certificate
from arithdk.cli import main
from arithdk.coeff import MultiPoly
from arithdk.diffop import DiffOp, apply, compose, level_part, order, reduction_order, sigma, transpose
from arithdk.growth import check_beta_bounded, estimate_alpha, slice_equiv_check
from arithdk.kashiwara import (
    Chart,
    FinPresentation,
    InducedElement,
    decompose_torsion,
    direct_image,
    ideal_right_member,
    kernel_functor,
    normalizer_member,
    restrict,
    roundtrip_report,
    t_action,
    twist_report,
)
from arithdk.keylemma import choose_beta, invert_unipotent, key_lemma_solve
from arithdk.matrix import OpMatrix
from arithdk.verify import certificate_ok

from acceptance_log import criterion
from helpers import brute_normalizer, rand_matrix, rand_op, rand_poly, random_normalizer


# -- shared key-lemma corpus ------------------------------------------------------------------

N_INSTANCES = 120


def _instance(seed):
    rng = random.Random(seed)
    p = rng.choice([2, 3, 5])
    m = rng.choice([1, 2])
    n = rng.choice([1, 2])
    M = rng.choice([1, 2])
    L = 1 + seed % 5
    R = rand_matrix(rng, p, L, M, n, max_order=3)
    while R.is_zero():
        R = rand_matrix(rng, p, L, M, n, max_order=3)
    return p, m, n, M, L, R


@functools.lru_cache(maxsize=None)
def _solved(seed):
    p, m, n, M, L, R = _instance(seed)
    return (p, m, n, M, L, R), key_lemma_solve(R, m, L)


def test_criterion_1_keylemma_congruences(tmp_path):
    with criterion(1, "key-lemma congruence suite") as info:
        start = time.perf_counter()
        shapes = set()
        for seed in range(N_INSTANCES):
            (p, m, n, M, L, R), (P, trace, _) = _solved(seed)
            shapes.add((p, m))
            one = OpMatrix.identity(n, p, L, M)
            assert (P - one).is_zero_mod(1)
            T = DiffOp.variable(p, L, M, M - 1, p**m)
            defect = P.map(lambda e: compose(T, e)) - P @ (OpMatrix.scalar(T, n) - R.scale(p))
            assert defect.is_zero_mod(L)
            # independent re-verification through the command-line verifier
            path = tmp_path / f"cert{seed}.json"
            path.write_text(json.dumps(keylemma_certificate(R, m, L)))
            assert main(["keylemma", "verify", str(path)]) == 0
        elapsed = time.perf_counter() - start
        assert shapes == {(p, m) for p in (2, 3, 5) for m in (1, 2)}
        assert elapsed < 60, f"{elapsed:.1f}s"
        info["detail"] = f"({N_INSTANCES} instances, {elapsed:.1f}s)"


def test_criterion_2_worked_fixture():
    with criterion(2, "worked fixture p=2, m=1, R=1, L=2"):
        P, _, _ = key_lemma_solve(DiffOp.identity(2, 2, 1), 1, 2)
        one = DiffOp.identity(2, 2, 1)
        d2 = DiffOp.dpow(2, 2, 1, (2,), 2)
        assert P == OpMatrix([[one + d2]])
        Pinv = invert_unipotent(P)
        assert Pinv == OpMatrix([[one - d2]])
        assert P @ Pinv == OpMatrix.identity(1, 2, 2, 1)


def test_criterion_3_commutant_identity():
    with criterion(3, "commutant identity") as info:
        count = 0
        for p, m, K in itertools.product((2, 3), (1, 2), range(7)):
            pm = p**m
            T = DiffOp.variable(p, 2, 1, 0, pm)
            D = DiffOp.dpow(p, 2, 1, (K + pm,))
            lhs = compose(T, D) - compose(D, T)
            assert (lhs + DiffOp.dpow(p, 2, 1, (K,))).is_zero_mod(1)
            count += 1
        info["detail"] = f"({count} cases)"


def test_criterion_4_beta_certification():
    with criterion(4, "beta certification of solver outputs") as info:
        steps = 0
        for seed in range(N_INSTANCES):
            (p, m, n, M, L, R), (P, trace, _) = _solved(seed)
            alpha = estimate_alpha(R)
            beta = Fraction(2 * math.ceil(alpha) + p**m)
            assert trace.beta == beta == choose_beta(alpha, p, m)
            assert check_beta_bounded(P, beta).verdict
            for s in trace.steps:
                assert s.order_U <= beta * (s.level + 1) + 2 * alpha
                steps += 1
        info["detail"] = f"({N_INSTANCES} outputs, {steps} steps)"


def test_criterion_5_growth_equivalences():
    with criterion(5, "growth equivalences"):
        rng = random.Random(5)
        for _ in range(500):
            p = rng.choice([2, 3, 5])
            N = rng.randint(1, 4)
            P = rand_op(rng, p, N, rng.randint(1, 2), max_order=6, nterms=4)
            alpha = Fraction(rng.randint(1, 16), 4)
            beta = Fraction(rng.randint(0, 16), 4)
            assert slice_equiv_check(P, alpha, beta)
            acc = DiffOp.zero(p, N, P.nvars)
            for l in range(N):
                acc = acc + level_part(P, l)
            assert acc == P
        # stable truncation: beta-bounded approximants converging to P force P beta-bounded
        for _ in range(100):
            p = rng.choice([2, 3])
            N = rng.randint(2, 4)
            M = rng.randint(1, 2)
            P = rand_op(rng, p, N, M, max_order=5, nterms=4)
            beta = Fraction(rng.randint(1, 8))
            approximants = []
            for l in range(N):
                noise = rand_op(rng, p, N, M, max_order=2, nterms=2).scale(p ** (l + 1))
                approximants.append(sigma(P, l) + noise)
            for l, Pl in enumerate(approximants):
                assert (P - Pl).is_zero_mod(l + 1)
                for i in range(l + 1):
                    assert reduction_order(Pl, i) == reduction_order(P, i)
            if all(check_beta_bounded(Pl, beta).verdict for Pl in approximants):
                assert check_beta_bounded(P, beta).verdict


def test_criterion_6_ring_axioms():
    with criterion(6, "ring axioms") as info:
        rng = random.Random(6)
        count = 0
        for _ in range(200):
            p = rng.choice([2, 3, 5])
            N = rng.randint(1, 3)
            M = rng.randint(1, 2)
            A, B, C = (rand_op(rng, p, N, M, max_order=3) for _ in range(3))
            f = rand_poly(rng, p, N, M, maxdeg=4, nterms=4)
            assert compose(compose(A, B), C) == compose(A, compose(B, C))
            assert apply(compose(A, B), f) == apply(A, apply(B, f))
            assert transpose(transpose(A)) == A
            assert transpose(compose(A, B)) == compose(transpose(B), transpose(A))
            count += 1
        info["detail"] = f"({count} triples)"


def _random_presentation(rng, chart: Chart, b: int) -> FinPresentation:
    Y = chart.y_ring()
    rows = []
    for _ in range(rng.randint(0, 2)):
        rows.append(tuple(rand_op(rng, *Y, max_order=2) for _ in range(b)))
    return FinPresentation(chart, b, tuple(rows))


def test_criterion_7_kashiwara_roundtrip():
    with criterion(7, "Kashiwara roundtrip and torsion") as info:
        rng = random.Random(7)
        torsion = 0
        for M, r in [(2, 1), (3, 1), (3, 2)]:
            for b in (0, 1, 2):
                chart = Chart(M, r, rng.choice([3, 5]), 3)
                pres = _random_presentation(rng, chart, b) if b else FinPresentation(chart, 0)
                dimage = direct_image(pres)
                assert dimage.generators == b
                samples = [nu for nu in itertools.product(range(3), repeat=chart.codim) if sum(nu) <= 2]
                rep = roundtrip_report(pres, samples)
                assert rep.verdict
                zero = (0,) * chart.codim
                assert rep.kernel == [InducedElement.basis(chart, b, i, zero) for i in range(b)]
                # mixed elements: only the nu = 0 part can survive, and only if it is everything
                for _ in range(5):
                    if not b:
                        break
                    x = InducedElement.basis(chart, b, rng.randrange(b), zero) + InducedElement.basis(
                        chart, b, rng.randrange(b), rng.choice(samples[1:]))
                    assert kernel_functor([x], chart) == ([x] if x.support() == [zero] else [])
        for p, m in [(3, 1), (5, 1), (2, 2), (3, 2)]:
            for j in range(1, p**m + 1):
                for M, r in [(2, 1), (3, 2), (3, 1)]:
                    chart = Chart(M, r, p, 6)
                    if chart.codim * _vp_factorial(j - 1, p) >= chart.N:
                        continue
                    terms = {}
                    for _ in range(3):
                        nu = tuple(rng.randrange(j) for _ in range(chart.codim))
                        terms[(rng.randrange(2), nu)] = rand_op(rng, *chart.y_ring(), max_order=2) + DiffOp.identity(
                            *chart.y_ring())
                    u = InducedElement(chart, 2, terms)
                    for var in chart.transverse:
                        x = u
                        for _ in range(j):
                            x = t_action(x, var)
                        assert x.is_zero()
                    expr = decompose_torsion(u, j, m=m)
                    assert expr.evaluate() == u.with_precision(chart.N - expr.precision_debit())
                    torsion += 1
        info["detail"] = f"({torsion} torsion samples)"


def _vp_factorial(n, p):
    from arithdk.coeff import legendre_vp_factorial

    return legendre_vp_factorial(n, p)


def test_criterion_8_normalizer_oracle():
    with criterion(8, "normalizer oracle equivalence") as info:
        rng = random.Random(8)
        agree = 0
        for k in range(240):
            M = rng.choice([2, 3])
            chart = Chart(M, rng.randint(0, M - 1), rng.choice([2, 3, 5]), 2)
            P = random_normalizer(rng, chart) if k % 2 else rand_op(rng, *chart.x_ring(), max_order=3)
            assert normalizer_member(P, chart) == brute_normalizer(P, chart, degree=3)
            agree += 1
        pairs = 0
        for _ in range(120):
            M = rng.choice([2, 3])
            chart = Chart(M, rng.randint(1, M - 1), rng.choice([2, 3, 5]), 3)
            P, Q = random_normalizer(rng, chart), random_normalizer(rng, chart)
            assert restrict(compose(P, Q), chart) == compose(restrict(P, chart), restrict(Q, chart))
            assert restrict(P, chart).is_zero() == ideal_right_member(P, chart)
            # adding an element of J.D does not change the restriction
            j = rng.choice(list(chart.transverse))
            JD = rand_op(rng, *chart.x_ring(), max_order=2).left_mul_poly(MultiPoly.variable(*chart.x_ring(), j))
            assert ideal_right_member(JD, chart) and normalizer_member(JD, chart)
            assert restrict(JD, chart).is_zero()
            assert restrict(P + JD, chart) == restrict(P, chart)
            pairs += 1
        info["detail"] = f"({agree} operators, {pairs} pairs)"


def test_criterion_9_twist_invariance():
    with criterion(9, "twist invariance") as info:
        rng = random.Random(9)
        runs = 0
        for M, r in [(2, 1), (3, 1), (3, 2)]:
            p = rng.choice([2, 3])
            chart = Chart(M, r, p, 3)
            ring = chart.x_ring()
            one = MultiPoly.constant(*ring, 1)
            units = [one, one + MultiPoly.variable(*ring, 0).scale(p), one + MultiPoly.variable(*ring, M - 1).scale(p)]
            pres = _random_presentation(rng, chart, 2)
            extra = [random_normalizer(rng, chart) for _ in range(4)] + [rand_op(rng, *ring, max_order=2) for _ in range(4)]
            for u in units:
                rep = twist_report(pres, chart, u)
                assert rep.identical, rep.details
                rep = twist_report(pres, chart, u, operators=extra)
                assert rep.identical, rep.details
                assert certificate_ok(twist_certificate(pres, u))
                runs += 1
        info["detail"] = f"({runs} chart/unit pairs)"


def _two_step_sample(rng, p, N):
    """Operator on 3 variables normalizing both (x3) and (x2, x3), with the intermediate restriction
    normalizing (x2)."""
    ring = (p, N, 3)
    P = rand_op(rng, *ring, max_order=3, nterms=4)
    x2, x3 = MultiPoly.variable(*ring, 1), MultiPoly.variable(*ring, 2)
    terms = {}
    for nu, a in P.terms.items():
        if nu[2]:
            a = a * x3
        elif nu[1]:
            a = a * (x2 if rng.random() < 0.7 else x2 + x3)
        terms[nu] = a
    return DiffOp(*ring, terms)


def test_criterion_10_composition_of_immersions():
    with criterion(10, "composition of immersions") as info:
        rng = random.Random(10)
        count = 0
        for _ in range(60):
            p = rng.choice([2, 3, 5])
            N = rng.randint(1, 3)
            X_Z = Chart(3, 2, p, N)  # Z = {x3 = 0} in X
            Z_Y = Chart(2, 1, p, N)  # Y = {x2 = 0} in Z
            X_Y = Chart(3, 1, p, N)  # Y in X, codimension 2
            P = _two_step_sample(rng, p, N)
            assert normalizer_member(P, X_Z) and normalizer_member(P, X_Y)
            PZ = restrict(P, X_Z)
            assert normalizer_member(PZ, Z_Y)
            assert restrict(PZ, Z_Y) == restrict(P, X_Y)
            count += 1
        info["detail"] = f"({count} samples)"
