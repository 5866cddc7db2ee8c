"""The ``dk`` command line.

Exit codes::

    0  success (for ``growth beta``: the bound holds)
    1  malformed input, bad usage, unreadable file
    2  NotDivisible
    3  precision errors (InsufficientPrecision, PrecisionExceeded)
    4  a certificate claim failed verification, or ``growth beta`` found the bound violated
    5  any other domain error (not a unit, not in the normalizer, ...)

Documents without ``p``/``precision`` take them from ``--p``/``--precision``;
when both are present they must agree.  Output goes to ``--out`` (written
atomically) or to standard output.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from typing import List, Sequence

from . import certificates as certs
from .coeff import MultiPoly
from .diffop import apply, compose, transpose
from .errors import (
    ArithDKError,
    InsufficientPrecision,
    NotDivisible,
    ParseError,
    PrecisionExceeded,
)
from .growth import GrowthConstants, check_beta_bounded, convert_growth_constants, estimate_level
from .kashiwara import Chart, direct_image, kernel_functor, restrict
from .keylemma import key_lemma_solve
from .matrix import OpMatrix
from .serialize import (
    dump_induced,
    dump_matrix,
    dump_operator,
    dump_poly,
    dump_presentation,
    dumps,
    load_induced,
    load_matrix,
    load_operator,
    load_poly,
    load_presentation,
    rational_to_json,
    read_json,
    write_json,
)
from .verify import verify_certificate

log = logging.getLogger("arithdk.cli")

EXIT_OK, EXIT_PARSE, EXIT_NOT_DIVISIBLE, EXIT_PRECISION, EXIT_VERIFY, EXIT_DOMAIN = range(6)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for NotDivisible here
    def error(self, message):
        raise UsageError(message)


# -- argument helpers ------------------------------------------------------------------

def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _parse_samples(text: str) -> List[List[int]]:
    """``"0;1;2"`` or ``"0,0;1,0"``: multi-indices separated by semicolons."""
    try:
        return [[int(c) for c in chunk.split(",")] for chunk in text.split(";") if chunk.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --samples value {text!r}") from exc


def _defaults(args):
    d = {}
    if args.p is not None:
        d["p"] = args.p
    if args.precision is not None:
        d["precision"] = args.precision
    return d


def _read(path, args):
    doc = read_json(path)
    if isinstance(doc, dict):
        for key, flag in (("p", args.p), ("precision", args.precision)):
            if flag is not None and key in doc and doc[key] != flag:
                raise UsageError(f"{path}: document has {key}={doc[key]} but --{key} {flag} was given")
    return doc


def _inputs(args, count: int):
    paths = args.inputs or []
    if len(paths) != count:
        raise UsageError(f"expected {count} --in file(s), got {len(paths)}")
    return [_read(p, args) for p in paths]


def _names(doc):
    names = doc.get("vars") if isinstance(doc, dict) else None
    return list(names) if isinstance(names, list) else None


def _emit(doc, path):
    if path:
        write_json(path, doc)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(dumps(doc))


# -- op ------------------------------------------------------------------------------------

def cmd_op_mul(args):
    a, b = _inputs(args, 2)
    P, Q = load_operator(a, args.inputs[0], _defaults(args)), load_operator(b, args.inputs[1], _defaults(args))
    _emit(dump_operator(compose(P, Q), _names(a)), args.out)
    return EXIT_OK


def cmd_op_apply(args):
    a, b = _inputs(args, 2)
    P = load_operator(a, args.inputs[0], _defaults(args))
    f = load_poly(b, args.inputs[1], _defaults(args))
    _emit(dump_poly(apply(P, f), _names(b)), args.out)
    return EXIT_OK


def cmd_op_transpose(args):
    (a,) = _inputs(args, 1)
    _emit(dump_operator(transpose(load_operator(a, args.inputs[0], _defaults(args))), _names(a)), args.out)
    return EXIT_OK


# -- keylemma -------------------------------------------------------------------------------

def _cert_path(args):
    if args.cert:
        return args.cert
    if args.out:
        root, ext = os.path.splitext(args.out)
        return f"{root}.cert{ext or '.json'}"
    return None


def cmd_keylemma_solve(args):
    (a,) = _inputs(args, 1)
    if args.m is None or args.L is None:
        raise UsageError("keylemma solve needs --m and --L")
    R = load_matrix(a, args.inputs[0], _defaults(args))
    names = _names(a)
    result = key_lemma_solve(R, args.m, args.L)
    cert = certs.keylemma_certificate(R, args.m, args.L, names=names, result=result, with_inverse=args.inverse)
    P = result.P
    is_operator = isinstance(a, dict) and a.get("kind") == "operator"
    pdoc = dump_operator(P.entries[0][0], names) if is_operator else dump_matrix(P, names)
    _emit(pdoc, args.out)
    cpath = _cert_path(args)
    if cpath:
        write_json(cpath, cert)
    else:
        sys.stdout.write(dumps(cert))
    return EXIT_OK


def cmd_verify(args):
    paths = list(args.inputs or []) + list(args.certificate or [])
    if not paths:
        raise UsageError("no certificate given")
    status = EXIT_OK
    for path in paths:
        checks = verify_certificate(read_json(path))
        for c in checks:
            line = f"{path}: {c.name}: {'ok' if c.ok else 'FAILED'}"
            if not c.ok:
                status = EXIT_VERIFY
                print(f"{line} ({c.message})" if c.message else line, file=sys.stderr)
            elif args.verbose:
                print(line, file=sys.stderr)
    if status == EXIT_OK:
        print("verified")
    return status


# -- growth -----------------------------------------------------------------------------------

def cmd_growth_beta(args):
    (a,) = _inputs(args, 1)
    if args.beta is None:
        raise UsageError("growth beta needs --beta")
    P = load_matrix(a, args.inputs[0], _defaults(args))
    operand = P.entries[0][0] if P.n == 1 else P
    cert = certs.beta_certificate(operand, args.beta, names=_names(a))
    _emit(cert, args.out or args.cert)
    if not cert["verdict"]:
        failing = check_beta_bounded(operand, args.beta).failing_levels()
        print(f"not {args.beta}-bounded at levels {failing}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _constants_doc(c: GrowthConstants):
    return {
        "kind": "growth_constants",
        "p": c.p,
        "alpha": rational_to_json(c.alpha),
        "beta": rational_to_json(c.beta),
        "c_exponent": rational_to_json(c.c_exponent),
        "eta_exponent": rational_to_json(c.eta_exponent),
        "lambda": rational_to_json(c.lam),
        "mu": rational_to_json(c.mu),
    }


def _constants_from_args(args) -> GrowthConstants:
    if args.p is None:
        raise UsageError("--p is required")
    if args.alpha is not None and args.beta is not None:
        return convert_growth_constants(args.alpha, args.beta, args.p)
    if args.lam is not None and args.mu is not None:
        return GrowthConstants.from_valuation_bound(args.p, args.lam, args.mu)
    raise UsageError("give either --alpha and --beta, or --lam and --mu")


def cmd_growth_convert(args):
    if args.alpha is None or args.beta is None:
        raise UsageError("growth convert needs --alpha and --beta")
    _emit(_constants_doc(_constants_from_args(args)), args.out)
    return EXIT_OK


def cmd_growth_level(args):
    c = _constants_from_args(args)
    doc = _constants_doc(c)
    doc["level"] = estimate_level(c)
    _emit(doc, args.out)
    return EXIT_OK


# -- kash ----------------------------------------------------------------------------------

def _chart_for(P, args) -> Chart:
    if args.r is None:
        raise UsageError("--r is required")
    p, N, M = P.ring()
    return Chart(M, args.r, p, N)


def cmd_kash_normalizer(args):
    (a,) = _inputs(args, 1)
    P = load_operator(a, args.inputs[0], _defaults(args))
    _emit(certs.normalizer_certificate(P, _chart_for(P, args), names=_names(a)), args.out or args.cert)
    return EXIT_OK


def cmd_kash_restrict(args):
    (a,) = _inputs(args, 1)
    P = load_operator(a, args.inputs[0], _defaults(args))
    chart = _chart_for(P, args)
    names = _names(a)
    _emit(dump_operator(restrict(P, chart), names[: chart.r] if names else None), args.out)
    return EXIT_OK


def _presentation(args):
    (a,) = _inputs(args, 1)
    return load_presentation(a, args.inputs[0], _defaults(args)), _names(a)


def cmd_kash_dimage(args):
    pres, names = _presentation(args)
    _emit(dump_presentation(direct_image(pres), names), args.out)
    return EXIT_OK


def cmd_kash_kernel(args):
    (a,) = _inputs(args, 1)
    elements, chart, b = load_induced(a, args.inputs[0], _defaults(args))
    _emit(dump_induced(kernel_functor(elements, chart), chart, b, _names(a)), args.out)
    return EXIT_OK


def _samples(args, chart):
    if args.samples:
        samples = _parse_samples(args.samples)
        if any(len(s) != chart.codim for s in samples):
            raise UsageError(f"every sample needs {chart.codim} component(s)")
        return samples
    return None


def cmd_kash_roundtrip(args):
    pres, names = _presentation(args)
    samples = _samples(args, pres.chart) or [[k] + [0] * (pres.chart.codim - 1) for k in range(3)]
    _emit(certs.roundtrip_certificate(pres, samples, names=names), args.out or args.cert)
    return EXIT_OK


def cmd_kash_twist(args):
    pres, names = _presentation(args)
    chart = pres.chart
    if args.unit:
        u = load_poly(_read(args.unit, args), args.unit, _defaults(args))
    else:
        u = MultiPoly.constant(*chart.x_ring())
    cert = certs.twist_certificate(pres, u, samples=_samples(args, chart), names=names)
    _emit(cert, args.out or args.cert)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--p", type=int, help="prime (default for documents without 'p')")
    common.add_argument("--precision", type=int, help="working precision N, i.e. arithmetic mod p^N")
    common.add_argument("--in", dest="inputs", action="append", metavar="PATH", help="input document (repeatable)")
    common.add_argument("--out", metavar="PATH", help="output path; standard output when omitted")
    common.add_argument("--cert", metavar="PATH", help="certificate output path")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="dk", description="Exact arithmetic for divided-power differential operators.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def sub(group, name, func, help_text):
        sp = group.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        return sp

    op = groups.add_parser("op", help="operator arithmetic").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sub(op, "mul", cmd_op_mul, "compose two operators: --in P --in Q")
    sub(op, "apply", cmd_op_apply, "apply an operator to a polynomial: --in P --in f")
    sub(op, "transpose", cmd_op_transpose, "transpose of an operator")

    kl = groups.add_parser("keylemma", help="key lemma solver").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(kl, "solve", cmd_keylemma_solve, "solve for P given R")
    s.add_argument("--m", type=int)
    s.add_argument("--L", type=int)
    s.add_argument("--inverse", action="store_true", help="also emit P^-1 and certify it")
    s = sub(kl, "verify", cmd_verify, "re-check every claim of a certificate")
    s.add_argument("certificate", nargs="*")

    gr = groups.add_parser("growth", help="growth conditions").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(gr, "beta", cmd_growth_beta, "check beta-boundedness")
    s.add_argument("--beta", type=_rational)
    for name, func in (("convert", cmd_growth_convert), ("level", cmd_growth_level)):
        s = sub(gr, name, func, f"growth constants: {name}")
        s.add_argument("--alpha", type=_rational)
        s.add_argument("--beta", type=_rational)
        s.add_argument("--lam", type=_rational)
        s.add_argument("--mu", type=_rational)

    ka = groups.add_parser("kash", help="closed immersions").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func in (("normalizer", cmd_kash_normalizer), ("restrict", cmd_kash_restrict)):
        s = sub(ka, name, func, f"{name} for the chart t_(r+1) = ... = t_M = 0")
        s.add_argument("--r", type=int)
    sub(ka, "dimage", cmd_kash_dimage, "direct image of a presentation")
    sub(ka, "kernel", cmd_kash_kernel, "kernel functor on induced elements")
    s = sub(ka, "roundtrip", cmd_kash_roundtrip, "kernel of the direct image")
    s.add_argument("--samples", help="transverse multi-indices, e.g. '0;1;2' or '0,0;1,0'")
    s = sub(ka, "twist", cmd_kash_twist, "invariance under conjugation by a unit")
    s.add_argument("--unit", metavar="PATH", help="polynomial document for u (default 1)")
    s.add_argument("--samples")
    return parser


def _fail(code, message):
    print(f"dk: error: {message}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_PARSE, exc)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParseError, ValueError) as exc:
        return _fail(EXIT_PARSE, exc)
    except NotDivisible as exc:
        return _fail(EXIT_NOT_DIVISIBLE, f"not divisible: {exc}")
    except (InsufficientPrecision, PrecisionExceeded) as exc:
        return _fail(EXIT_PRECISION, f"precision: {exc}")
    except ArithDKError as exc:
        return _fail(EXIT_DOMAIN, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
