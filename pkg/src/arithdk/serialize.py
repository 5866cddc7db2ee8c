"""JSON documents for polynomials, operators, matrices, presentations and
induced elements.

Documents never contain floats: residues are integers in ``[0, p^N)`` and
rationals are ``[numerator, denominator]`` pairs.  Output is canonical
(terms sorted lexicographically by multi-index, monomials likewise), so
``dump(load(doc)) == doc`` for every canonical document.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from typing import Any, Dict, List

from .coeff import MultiPoly
from .diffop import NEG_INF, DiffOp
from .errors import ParseError, SchemaVersionMismatch
from .kashiwara import Chart, FinPresentation, InducedElement
from .matrix import OpMatrix

SCHEMA_VERSION = "1"


# -- small helpers ----------------------------------------------------------------

def rational_to_json(x) -> List[int]:
    x = Fraction(x)
    return [x.numerator, x.denominator]


def rational_from_json(v, where="rational") -> Fraction:
    if isinstance(v, bool) or not (
        isinstance(v, int) or (isinstance(v, list) and len(v) == 2 and all(isinstance(k, int) and not isinstance(k, bool) for k in v))
    ):
        raise ParseError("expected an integer or a [numerator, denominator] pair", where)
    if isinstance(v, int):
        return Fraction(v)
    if v[1] == 0:
        raise ParseError("zero denominator", where)
    return Fraction(v[0], v[1])


def order_to_json(o):
    return None if o == NEG_INF else int(o)


def order_from_json(o):
    return NEG_INF if o is None else o


def _require(doc, key, where, kind=None):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", where)
    if key not in doc:
        raise ParseError(f"missing field '{key}'", where)
    v = doc[key]
    if kind is int and (not isinstance(v, int) or isinstance(v, bool)):
        raise ParseError(f"field '{key}' must be an integer", f"{where}.{key}")
    if kind is list and not isinstance(v, list):
        raise ParseError(f"field '{key}' must be a list", f"{where}.{key}")
    if kind is str and not isinstance(v, str):
        raise ParseError(f"field '{key}' must be a string", f"{where}.{key}")
    return v


def _int_list(v, length, where):
    if not isinstance(v, list) or any(not isinstance(k, int) or isinstance(k, bool) or k < 0 for k in v):
        raise ParseError("expected a list of non-negative integers", where)
    if len(v) != length:
        raise ParseError(f"expected length {length}, got {len(v)}", where)
    return tuple(v)


def check_header(doc, kind, where="$", defaults=None):
    """Validate version/kind and return (p, N, vars)."""
    defaults = defaults or {}
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", where)
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema_version {version!r} is not supported (expected {SCHEMA_VERSION!r})", where)
    if kind is not None and doc.get("kind", kind) != kind:
        raise ParseError(f"expected a {kind!r} document, got {doc.get('kind')!r}", f"{where}.kind")
    p = doc.get("p", defaults.get("p"))
    N = doc.get("precision", defaults.get("precision"))
    if not isinstance(p, int) or isinstance(p, bool) or p < 2:
        raise ParseError("p must be an integer >= 2", f"{where}.p")
    if any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
        raise ParseError(f"p = {p} is not prime", f"{where}.p")
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise ParseError("precision must be a positive integer", f"{where}.precision")
    names = _require(doc, "vars", where, list)
    if any(not isinstance(n, str) for n in names) or len(set(names)) != len(names):
        raise ParseError("vars must be distinct strings", f"{where}.vars")
    return p, N, names


def default_vars(M: int) -> List[str]:
    if M == 1:
        return ["t"]
    return [f"x{i + 1}" for i in range(M)]


# -- polynomials and operators -------------------------------------------------------

def poly_terms_to_json(f: MultiPoly) -> List[Dict[str, Any]]:
    return [{"mono": list(e), "val": f.terms[e]} for e in sorted(f.terms)]


def poly_terms_from_json(items, p, N, M, where) -> MultiPoly:
    if not isinstance(items, list):
        raise ParseError("coefficient must be a list of monomials", where)
    mod = p**N
    terms = {}
    for k, item in enumerate(items):
        w = f"{where}[{k}]"
        mono = _int_list(_require(item, "mono", w), M, f"{w}.mono")
        val = _require(item, "val", w, int)
        if not 0 <= val < mod:
            raise ParseError(f"val {val} is not reduced modulo {p}^{N}", f"{w}.val")
        if mono in terms:
            raise ParseError(f"duplicate monomial {list(mono)}", f"{w}.mono")
        terms[mono] = val
    return MultiPoly(p, N, M, terms)


def op_terms_to_json(P: DiffOp) -> List[Dict[str, Any]]:
    return [{"nu": list(nu), "coeff": poly_terms_to_json(P.terms[nu])} for nu in sorted(P.terms)]


def op_terms_from_json(items, p, N, M, where) -> DiffOp:
    if not isinstance(items, list):
        raise ParseError("operator terms must be a list", where)
    terms = {}
    for k, item in enumerate(items):
        w = f"{where}[{k}]"
        nu = _int_list(_require(item, "nu", w), M, f"{w}.nu")
        if nu in terms:
            raise ParseError(f"duplicate multi-index {list(nu)}", f"{w}.nu")
        terms[nu] = poly_terms_from_json(_require(item, "coeff", w), p, N, M, f"{w}.coeff")
    return DiffOp(p, N, M, terms)


def _header(kind, p, N, names):
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "p": p, "precision": N, "vars": list(names)}


def dump_poly(f: MultiPoly, names=None) -> Dict[str, Any]:
    doc = _header("poly", f.p, f.N, names or default_vars(f.nvars))
    doc["terms"] = poly_terms_to_json(f)
    return doc


def load_poly(doc, where="$", defaults=None) -> MultiPoly:
    p, N, names = check_header(doc, "poly", where, defaults)
    return poly_terms_from_json(_require(doc, "terms", where), p, N, len(names), f"{where}.terms")


def dump_operator(P: DiffOp, names=None) -> Dict[str, Any]:
    doc = _header("operator", P.p, P.N, names or default_vars(P.nvars))
    doc["terms"] = op_terms_to_json(P)
    return doc


def load_operator(doc, where="$", defaults=None) -> DiffOp:
    p, N, names = check_header(doc, "operator", where, defaults)
    return op_terms_from_json(_require(doc, "terms", where), p, N, len(names), f"{where}.terms")


def dump_matrix(A: OpMatrix, names=None) -> Dict[str, Any]:
    doc = _header("matrix", A.p, A.N, names or default_vars(A.nvars))
    doc["size"] = A.n
    doc["entries"] = [[op_terms_to_json(e) for e in row] for row in A.entries]
    return doc


def load_matrix(doc, where="$", defaults=None) -> OpMatrix:
    """Load a matrix document; an operator document is read as a 1x1 matrix."""
    if isinstance(doc, dict) and doc.get("kind") == "operator":
        return OpMatrix([[load_operator(doc, where, defaults)]])
    p, N, names = check_header(doc, "matrix", where, defaults)
    M = len(names)
    n = _require(doc, "size", where, int)
    rows = _require(doc, "entries", where, list)
    if n < 1 or len(rows) != n:
        raise ParseError(f"expected {n} rows", f"{where}.entries")
    entries = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"expected {n} entries", f"{where}.entries[{i}]")
        entries.append([op_terms_from_json(e, p, N, M, f"{where}.entries[{i}][{j}]") for j, e in enumerate(row)])
    return OpMatrix(entries)


# -- presentations and induced elements ---------------------------------------------

def _chart_fields(doc, where, p, N, names):
    r = _require(doc, "r", where, int)
    try:
        return Chart(len(names), r, p, N)
    except ValueError as exc:
        raise ParseError(str(exc), f"{where}.r") from exc


def dump_presentation(pres: FinPresentation, names=None) -> Dict[str, Any]:
    ch = pres.chart
    doc = _header("presentation", ch.p, ch.N, names or default_vars(ch.M))
    doc["r"] = ch.r
    doc["over"] = pres.over
    doc["generators"] = pres.generators
    doc["relations"] = [[op_terms_to_json(e) for e in row] for row in pres.relations]
    return doc


def load_presentation(doc, where="$", defaults=None) -> FinPresentation:
    p, N, names = check_header(doc, "presentation", where, defaults)
    chart = _chart_fields(doc, where, p, N, names)
    over = doc.get("over", "Y")
    if over not in ("X", "Y"):
        raise ParseError("over must be 'X' or 'Y'", f"{where}.over")
    b = _require(doc, "generators", where, int)
    if b < 0:
        raise ParseError("generator count must be non-negative", f"{where}.generators")
    M = chart.r if over == "Y" else chart.M
    rows = []
    for i, row in enumerate(_require(doc, "relations", where, list)):
        if not isinstance(row, list) or len(row) != b:
            raise ParseError(f"relation row must have {b} entries", f"{where}.relations[{i}]")
        rows.append(tuple(op_terms_from_json(e, p, N, M, f"{where}.relations[{i}][{j}]") for j, e in enumerate(row)))
    return FinPresentation(chart, b, tuple(rows), over)


def induced_to_json(x: InducedElement) -> Dict[str, Any]:
    return {
        "terms": [
            {"gen": i, "nu": list(nu), "coeff": op_terms_to_json(x.terms[(i, nu)])}
            for (i, nu) in sorted(x.terms)
        ]
    }


def induced_from_json(item, chart: Chart, b: int, where) -> InducedElement:
    terms = {}
    for k, t in enumerate(_require(item, "terms", where, list)):
        w = f"{where}.terms[{k}]"
        i = _require(t, "gen", w, int)
        if not 0 <= i < b:
            raise ParseError(f"generator index {i} out of range", f"{w}.gen")
        nu = _int_list(_require(t, "nu", w), chart.codim, f"{w}.nu")
        if (i, nu) in terms:
            raise ParseError("duplicate (gen, nu) entry", w)
        terms[(i, nu)] = op_terms_from_json(_require(t, "coeff", w), chart.p, chart.N, chart.r, f"{w}.coeff")
    return InducedElement(chart, b, terms)


def dump_induced(elements: List[InducedElement], chart: Chart, generators: int, names=None) -> Dict[str, Any]:
    doc = _header("induced", chart.p, chart.N, names or default_vars(chart.M))
    doc["r"] = chart.r
    doc["generators"] = generators
    doc["elements"] = [induced_to_json(x) for x in elements]
    return doc


def load_induced(doc, where="$", defaults=None):
    p, N, names = check_header(doc, "induced", where, defaults)
    chart = _chart_fields(doc, where, p, N, names)
    b = _require(doc, "generators", where, int)
    elements = [
        induced_from_json(item, chart, b, f"{where}.elements[{k}]")
        for k, item in enumerate(_require(doc, "elements", where, list))
    ]
    return elements, chart, b


# -- files ------------------------------------------------------------------------------

def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", str(path)) from exc


def _reject_float(text):
    raise ParseError(f"floating point literal {text} is not allowed")


def write_json(path, doc):
    """Atomic write: temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps(doc))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
