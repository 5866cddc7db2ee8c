"""Producers of self-contained certificate documents.

A certificate embeds its inputs, the produced objects, and a list of named
claims; :mod:`arithdk.verify` re-checks every claim from the embedded data.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, List, Sequence

from .coeff import MultiPoly
from .diffop import DiffOp
from .growth import BetaCertificate, check_beta_bounded
from .kashiwara import (
    Chart,
    FinPresentation,
    normalizer_member,
    roundtrip_report,
    twist_report,
    twist_operator_samples,
)
from .keylemma import KeyLemmaResult, invert_unipotent, key_lemma_solve
from .matrix import OpMatrix
from .serialize import (
    SCHEMA_VERSION,
    dump_induced,
    dump_matrix,
    dump_operator,
    dump_poly,
    dump_presentation,
    order_to_json,
    rational_to_json,
)

CERTIFICATE_KINDS = ("keylemma", "beta", "roundtrip", "normalizer")


def _cert(kind, inputs, claims, verdict, **extra):
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "inputs": inputs, "claims": claims, "verdict": verdict}
    doc.update(extra)
    return doc


def _beta_claim(cert: BetaCertificate):
    return {
        "name": "beta_bounded",
        "beta": rational_to_json(cert.beta),
        "precision": cert.precision,
        "per_level": [[l, order_to_json(o)] for l, o in cert.per_level],
        "holds": cert.verdict,
    }


def _operand_doc(P, names=None):
    return dump_matrix(P, names) if isinstance(P, OpMatrix) else dump_operator(P, names)


def beta_certificate(P, beta, names=None):
    cert = check_beta_bounded(P, beta)
    return _cert(
        "beta",
        {"operator": _operand_doc(P, names), "beta": rational_to_json(Fraction(beta))},
        [_beta_claim(cert)],
        cert.verdict,
    )


def keylemma_certificate(R, m: int, L: int, names=None, result: KeyLemmaResult | None = None,
                         with_inverse: bool = False):
    """Certificate for the key lemma congruences.

    The inverse of P (and the claim that it is one) is opt-in: for large
    orders the geometric series and its check dominate the solver cost.
    """
    if not isinstance(R, OpMatrix):
        R = OpMatrix([[R]])
    P, trace, cert = result if result is not None else key_lemma_solve(R, m, L)
    p, N = R.p, R.N
    claims = [
        {"name": "unipotent", "statement": "P == 1 mod p", "modulus": [p, 1], "holds": True},
        {
            "name": "conjugation",
            "statement": "t^(p^m) P - P (t^(p^m) - p R) == 0 mod p^L",
            "modulus": [p, L],
            "holds": True,
        },
        _beta_claim(cert),
    ]
    outputs = {"P": dump_matrix(P, names)}
    if with_inverse:
        claims.append({"name": "inverse", "statement": "P Pinv == Pinv P == 1 mod p^N", "modulus": [p, N], "holds": True})
        outputs["P_inverse"] = dump_matrix(invert_unipotent(P), names)
    summary = {
        "alpha": rational_to_json(trace.alpha),
        "beta": rational_to_json(trace.beta),
        "level_estimate": trace.level_estimate,
        "steps": [
            {"level": s.level, "order_U": order_to_json(s.order_U), "order_Q": order_to_json(s.order_Q)}
            for s in trace.steps
        ],
    }
    return _cert(
        "keylemma",
        {"R": dump_matrix(R, names), "m": m, "L": L},
        claims,
        True,
        outputs=outputs,
        trace=summary,
    )


def normalizer_certificate(P: DiffOp, chart: Chart, names=None):
    holds = normalizer_member(P, chart)
    return _cert(
        "normalizer",
        {"operator": dump_operator(P, names), "r": chart.r},
        [{"name": "normalizer", "statement": "P J subset J D", "holds": holds}],
        holds,
    )


def _samples_json(samples) -> List[List[int]]:
    return [[s] if isinstance(s, int) else list(s) for s in samples]


def roundtrip_certificate(Npres: FinPresentation, samples: Iterable, names=None):
    samples = _samples_json(samples)
    report = roundtrip_report(Npres, [tuple(s) for s in samples])
    return _cert(
        "roundtrip",
        {"presentation": dump_presentation(Npres, names), "samples": samples},
        [{"name": "kernel_is_nu_zero_slice", "holds": report.verdict}],
        report.verdict,
        outputs={"kernel": dump_induced(report.kernel, Npres.chart, Npres.generators, names)},
    )


def twist_certificate(Npres: FinPresentation, u: MultiPoly, operators: Sequence[DiffOp] | None = None,
                      samples: Iterable | None = None, names=None):
    chart = Npres.chart
    ops = list(operators) if operators is not None else twist_operator_samples(Npres, chart)
    if samples is None:
        samples = [[0], [1], [2]] if chart.codim == 1 else [[0] * chart.codim, [1] + [0] * (chart.codim - 1)]
    samples = _samples_json(samples)
    report = twist_report(Npres, chart, u, operators=ops, samples=[tuple(s) for s in samples])
    return _cert(
        "roundtrip",
        {
            "presentation": dump_presentation(Npres, names),
            "unit": dump_poly(u, names),
            "operators": [dump_operator(P, names) for P in ops],
            "samples": samples,
        },
        [
            {"name": "twisted_normalizer_agree", "holds": report.normalizer_agree},
            {"name": "twisted_restriction_agree", "holds": report.restriction_agree},
            {"name": "twisted_roundtrip_agree", "holds": report.roundtrip_agree},
        ],
        "identical" if report.identical else "different",
        variant="twist",
        details=report.details,
    )
