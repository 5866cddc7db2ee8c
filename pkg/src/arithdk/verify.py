"""Independent certificate checker.

Every claim is recomputed from the embedded documents using only the
coefficient and operator layers (``coeff``, ``diffop``) plus the JSON
readers.  None of the solver, growth or Kashiwara code paths is used, so a
bug there cannot silently confirm itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .coeff import MultiPoly
from .diffop import DiffOp, compose, conjugate, reduction_order
from .errors import ArithDKError, ParseError
from .serialize import (
    check_header,
    load_matrix,
    load_operator,
    load_poly,
    op_terms_from_json,
    order_from_json,
    rational_from_json,
)


@dataclass
class ClaimCheck:
    name: str
    ok: bool
    message: str = ""


# -- tiny matrix helpers over plain lists of DiffOp -----------------------------------

def _matmul(A, B):
    n = len(A)
    z = DiffOp.zero(*A[0][0].ring())
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = z
            for k in range(n):
                acc = acc + compose(A[i][k], B[k][j])
            row.append(acc)
        out.append(row)
    return out


def _sub(A, B):
    return [[a - b for a, b in zip(r, s)] for r, s in zip(A, B)]


def _identity(n, ring):
    one, z = DiffOp.identity(*ring), DiffOp.zero(*ring)
    return [[one if i == j else z for j in range(n)] for i in range(n)]


def _divisible(A, k):
    pk = A[0][0].p ** k
    return all(c % pk == 0 for row in A for e in row for a in e.terms.values() for c in a.terms.values())


def _level_orders(entries) -> List[Tuple[int, object]]:
    N = entries[0].N
    return [(l, max(reduction_order(e, l) for e in entries)) for l in range(N)]


def _check_beta_claim(claim, entries) -> ClaimCheck:
    beta = rational_from_json(claim.get("beta"), "claim.beta")
    recomputed = _level_orders(entries)
    recorded = [(l, order_from_json(o)) for l, o in claim.get("per_level", [])]
    if recorded != recomputed:
        return ClaimCheck("beta_bounded", False, "recorded per-level orders do not match recomputation")
    holds = all(o <= beta * (l + 1) for l, o in recomputed)
    if holds != claim.get("holds"):
        return ClaimCheck("beta_bounded", False, f"claimed holds={claim.get('holds')} but recomputed {holds}")
    return ClaimCheck("beta_bounded", True)


# -- per-kind checkers ---------------------------------------------------------------

def _verify_keylemma(doc) -> List[ClaimCheck]:
    inputs, outputs = doc["inputs"], doc["outputs"]
    R = load_matrix(inputs["R"], "$.inputs.R").entries
    P = load_matrix(outputs["P"], "$.outputs.P").entries
    Pinv = load_matrix(outputs["P_inverse"], "$.outputs.P_inverse").entries if "P_inverse" in outputs else None
    m, L = inputs["m"], inputs["L"]
    n = len(R)
    ring = R[0][0].ring()
    p, N, M = ring
    if len(P) != n or P[0][0].ring() != ring or (Pinv is not None and (len(Pinv) != n or Pinv[0][0].ring() != ring)):
        raise ParseError("P, P_inverse and R disagree on size or ring", "$.outputs")
    one = _identity(n, ring)
    T = DiffOp.variable(p, N, M, M - 1, p**m)
    Tm = [[T if i == j else DiffOp.zero(*ring) for j in range(n)] for i in range(n)]
    checks = []
    for claim in doc["claims"]:
        name = claim.get("name")
        if name == "unipotent":
            ok = _divisible(_sub(P, one), 1)
            checks.append(ClaimCheck(name, ok == claim.get("holds", True), "" if ok else "P - 1 not divisible by p"))
        elif name == "conjugation":
            lhs = _matmul(Tm, P)
            rhs = _sub(_matmul(P, Tm), [[e.scale(p) for e in row] for row in _matmul(P, R)])
            ok = L <= N and _divisible(_sub(lhs, rhs), L)
            checks.append(ClaimCheck(name, ok == claim.get("holds", True), "" if ok else f"defect not divisible by p^{L}"))
        elif name == "inverse":
            if Pinv is None:
                raise ParseError("inverse claimed but no P_inverse given", "$.outputs")
            ok = all(e.is_zero() for row in _sub(_matmul(P, Pinv), one) for e in row) and all(
                e.is_zero() for row in _sub(_matmul(Pinv, P), one) for e in row
            )
            checks.append(ClaimCheck(name, ok == claim.get("holds", True), "" if ok else "P_inverse is not an inverse"))
        elif name == "beta_bounded":
            checks.append(_check_beta_claim(claim, [e for row in P for e in row]))
        else:
            checks.append(ClaimCheck(str(name), False, "unknown claim"))
    return checks


def _verify_beta(doc) -> List[ClaimCheck]:
    op_doc = doc["inputs"]["operator"]
    entries = [e for row in load_matrix(op_doc, "$.inputs.operator").entries for e in row]
    beta = rational_from_json(doc["inputs"]["beta"], "$.inputs.beta")
    checks = []
    for claim in doc["claims"]:
        if claim.get("name") != "beta_bounded":
            checks.append(ClaimCheck(str(claim.get("name")), False, "unknown claim"))
            continue
        if rational_from_json(claim.get("beta"), "claim.beta") != beta:
            checks.append(ClaimCheck("beta_bounded", False, "claim beta differs from input beta"))
            continue
        checks.append(_check_beta_claim(claim, entries))
    holds = all(c.get("holds") for c in doc["claims"])
    if doc["verdict"] != holds:
        checks.append(ClaimCheck("verdict", False, "verdict does not match the claims"))
    return checks


def _in_ideal(P: DiffOp, r: int) -> bool:
    return all(any(e[r:]) for a in P.terms.values() for e in a.terms)


def _normalizes(P: DiffOp, r: int) -> bool:
    p, N, M = P.ring()
    return all(_in_ideal(compose(P, DiffOp.variable(p, N, M, j)), r) for j in range(r, M))


def _restrict(P: DiffOp, r: int) -> DiffOp:
    p, N, M = P.ring()
    out: Dict = {}
    for nu, a in P.terms.items():
        if any(nu[r:]):
            continue
        coeffs = {e[:r]: c for e, c in a.terms.items() if not any(e[r:])}
        if coeffs:
            out[nu[:r]] = MultiPoly(p, N, r, coeffs)
    return DiffOp(p, N, r, out)


def _verify_normalizer(doc) -> List[ClaimCheck]:
    P = load_operator(doc["inputs"]["operator"], "$.inputs.operator")
    r = doc["inputs"]["r"]
    holds = _normalizes(P, r)
    checks = []
    for claim in doc["claims"]:
        ok = claim.get("name") == "normalizer" and claim.get("holds") == holds
        checks.append(ClaimCheck(str(claim.get("name")), ok, "" if ok else f"recomputed normalizer verdict {holds}"))
    if doc["verdict"] != holds:
        checks.append(ClaimCheck("verdict", False, "verdict does not match recomputation"))
    return checks


def _presentation_shape(pdoc):
    p, N, names = check_header(pdoc, "presentation", "$.inputs.presentation")
    return p, N, len(names), pdoc["r"], pdoc["generators"]


def _sample_kernel(M, r, b, samples):
    """Basis samples g_i (x) d^[nu]; kernel = those killed by every transverse shift."""
    elements, kernel = [], []
    for nu in samples:
        nu = tuple(nu)
        if len(nu) != M - r:
            raise ParseError("sample multi-index has wrong length", "$.inputs.samples")
        for i in range(b):
            el = (i, nu)
            elements.append(el)
            if all(nu[k] == 0 for k in range(M - r)):
                kernel.append(el)
    return elements, kernel


def _verify_roundtrip(doc) -> List[ClaimCheck]:
    inputs = doc["inputs"]
    p, N, M, r, b = _presentation_shape(inputs["presentation"])
    samples = inputs["samples"]
    elements, kernel = _sample_kernel(M, r, b, samples)
    checks = []
    if doc.get("variant") == "twist":
        return _verify_twist(doc, p, N, M, r, b, kernel)
    kdoc = doc["outputs"]["kernel"]
    recorded = []
    for k, item in enumerate(kdoc["elements"]):
        terms = item["terms"]
        if len(terms) != 1:
            recorded.append(None)
            continue
        t = terms[0]
        coeff = op_terms_from_json(t["coeff"], p, N, r, f"$.outputs.kernel.elements[{k}]")
        if coeff != DiffOp.identity(p, N, r):
            recorded.append(None)
            continue
        recorded.append((t["gen"], tuple(t["nu"])))
    holds = recorded == kernel and (
        not any(all(v == 0 for v in nu) for nu in map(tuple, samples)) or sorted({i for i, _ in kernel}) == list(range(b))
    )
    for claim in doc["claims"]:
        ok = claim.get("name") == "kernel_is_nu_zero_slice" and claim.get("holds") == holds
        checks.append(ClaimCheck(str(claim.get("name")), ok, "" if ok else f"recomputed kernel verdict {holds}"))
    if doc["verdict"] != holds:
        checks.append(ClaimCheck("verdict", False, "verdict does not match recomputation"))
    return checks


def _verify_twist(doc, p, N, M, r, b, kernel) -> List[ClaimCheck]:
    inputs = doc["inputs"]
    u = load_poly(inputs["unit"], "$.inputs.unit")
    uinv = u.inverse()
    uY = MultiPoly(p, N, r, {e[:r]: c for e, c in u.terms.items() if not any(e[r:])})
    normal_ok, restr_ok = True, True
    for k, od in enumerate(inputs["operators"]):
        P = load_operator(od, f"$.inputs.operators[{k}]")
        Pu = conjugate(P, u)
        a, b2 = _normalizes(P, r), _normalizes(Pu, r)
        if a != b2 or conjugate(Pu, uinv) != P:
            normal_ok = False
        if a and b2 and _restrict(Pu, r) != (conjugate(_restrict(P, r), uY) if r else _restrict(P, r)):
            restr_ok = False
    # the kernel of the sample set is independent of the relations, hence of the twist
    rt_ok = True
    expected = {
        "twisted_normalizer_agree": normal_ok,
        "twisted_restriction_agree": restr_ok,
        "twisted_roundtrip_agree": rt_ok,
    }
    checks = []
    for claim in doc["claims"]:
        name = claim.get("name")
        ok = name in expected and claim.get("holds") == expected[name]
        checks.append(ClaimCheck(str(name), ok, "" if ok else f"recomputed {expected.get(name)}"))
    verdict = "identical" if all(expected.values()) else "different"
    if doc["verdict"] != verdict:
        checks.append(ClaimCheck("verdict", False, f"verdict should be {verdict!r}"))
    return checks


CHECKERS = {
    "keylemma": _verify_keylemma,
    "beta": _verify_beta,
    "normalizer": _verify_normalizer,
    "roundtrip": _verify_roundtrip,
}


def verify_certificate(doc) -> List[ClaimCheck]:
    """Recheck every claim; a malformed certificate yields a single failed check."""
    if not isinstance(doc, dict):
        return [ClaimCheck("document", False, "certificate must be a JSON object")]
    kind = doc.get("kind")
    checker = CHECKERS.get(kind)
    if checker is None:
        return [ClaimCheck("document", False, f"unknown certificate kind {kind!r}")]
    try:
        checks = checker(doc)
    except (KeyError, TypeError) as exc:
        return [ClaimCheck("document", False, f"malformed certificate: missing or invalid {exc}")]
    except ArithDKError as exc:
        return [ClaimCheck("document", False, str(exc))]
    if not checks:
        return [ClaimCheck("document", False, "certificate carries no claims")]
    return checks


def certificate_ok(doc) -> bool:
    return all(c.ok for c in verify_certificate(doc))
