"""Kashiwara machinery for Y = V(x_(r+1), ..., x_M) inside an affine chart X.

Coordinates 0..r-1 (0-based) are tangential, r..M-1 are transverse.  Right
modules are the primary objects: the direct image of a right D_Y-module N is
``N (x) o[d_T]`` with sign-free right actions

    (n (x) d^[nu]) . t_j  = n (x) d^[nu - e_j]      (zero when nu_j = 0)
    (n (x) d^[nu]) . d_j  = (nu_j + 1) n (x) d^[nu + e_j]

and tangential operators acting on n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .coeff import MultiPoly, ideal_member_poly, legendre_vp_factorial
from .diffop import DiffOp, _multi_binom, compose, conjugate, op_div_exact
from .errors import DimensionMismatch, InsufficientPrecision, NotInNormalizer, NotTorsion

MultiIndex = Tuple[int, ...]


@dataclass(frozen=True)
class Chart:
    """``M`` coordinates of which the first ``r`` are tangential to Y."""

    M: int
    r: int
    p: int
    N: int

    def __post_init__(self):
        if not 0 <= self.r < self.M:
            raise ValueError(f"need 0 <= r < M, got r={self.r}, M={self.M}")

    @property
    def codim(self) -> int:
        return self.M - self.r

    @property
    def transverse(self) -> range:
        return range(self.r, self.M)

    def x_ring(self):
        return (self.p, self.N, self.M)

    def y_ring(self):
        return (self.p, self.N, self.r)


# -- operators: normalizer and restriction --------------------------------------

def _check_x(P: DiffOp, chart: Chart):
    if P.ring() != chart.x_ring():
        raise DimensionMismatch(f"operator over {P.ring()} on chart {chart.x_ring()}")


def ideal_right_member(P: DiffOp, chart: Chart) -> bool:
    """P lies in J.D iff every coefficient lies in J = (x_(r+1), ..., x_M)."""
    _check_x(P, chart)
    return all(ideal_member_poly(a, chart.r) for a in P.terms.values())


def normalizer_member(P: DiffOp, chart: Chart) -> bool:
    """P.J is contained in J.D; checking the generators t_j of J suffices."""
    _check_x(P, chart)
    for j in chart.transverse:
        if not ideal_right_member(compose(P, DiffOp.variable(*chart.x_ring(), j)), chart):
            return False
    return True


def restrict(P: DiffOp, chart: Chart) -> DiffOp:
    """Image of a normalizer element in D_Y = N(J.D) / J.D."""
    if not normalizer_member(P, chart):
        raise NotInNormalizer("operator does not normalize J.D")
    return _restrict_unchecked(P, chart)


def _restrict_unchecked(P: DiffOp, chart: Chart) -> DiffOp:
    r = chart.r
    keep = range(r)
    out: Dict[MultiIndex, MultiPoly] = {}
    for nu, a in P.terms.items():
        if any(nu[r:]):
            continue
        b = a.substitute_zero(chart.transverse).project(keep)
        if b.terms:
            out[nu[:r]] = b
    return DiffOp(*chart.y_ring(), out)


def restrict_poly(f: MultiPoly, chart: Chart) -> MultiPoly:
    return f.substitute_zero(chart.transverse).project(range(chart.r))


def lift_operator(P: DiffOp, chart: Chart) -> DiffOp:
    """Re-read a Y-operator as an X-operator in the tangential variables."""
    if P.ring() != chart.y_ring():
        raise DimensionMismatch(f"operator over {P.ring()} is not over the Y-ring {chart.y_ring()}")
    pad = (0,) * chart.codim
    pos = range(chart.r)
    return DiffOp(*chart.x_ring(), {nu + pad: a.embed(chart.M, pos) for nu, a in P.terms.items()})


# -- finite presentations -----------------------------------------------------------

@dataclass(frozen=True)
class FinPresentation:
    """Generators g_0..g_(b-1) and relation rows ``sum_i rho_i g_i = 0``.

    ``over`` is "Y" (operators in the r tangential variables) or "X".
    """

    chart: Chart
    generators: int
    relations: Tuple[Tuple[DiffOp, ...], ...] = ()
    over: str = "Y"

    def __post_init__(self):
        if self.over not in ("X", "Y"):
            raise ValueError("over must be 'X' or 'Y'")
        ring = self.chart.y_ring() if self.over == "Y" else self.chart.x_ring()
        rows = tuple(tuple(row) for row in self.relations)
        for row in rows:
            if len(row) != self.generators:
                raise DimensionMismatch(f"relation row of length {len(row)} for {self.generators} generators")
            for e in row:
                if e.ring() != ring:
                    raise DimensionMismatch(f"relation entry over {e.ring()}, expected {ring}")
        object.__setattr__(self, "relations", rows)

    def ring(self):
        return self.chart.y_ring() if self.over == "Y" else self.chart.x_ring()


def direct_image(Npres: FinPresentation, chart: Chart | None = None) -> FinPresentation:
    """Presentation of N (x) D_X / J.D_X: lifted relations plus t_j g_i = 0."""
    chart = chart or Npres.chart
    if Npres.over != "Y":
        raise ValueError("direct image expects a presentation over the Y-ring")
    if Npres.chart.y_ring() != chart.y_ring():
        raise DimensionMismatch("presentation and chart disagree on the Y-ring")
    b = Npres.generators
    zero = DiffOp.zero(*chart.x_ring())
    rows = [tuple(lift_operator(e, chart) for e in row) for row in Npres.relations]
    for j in chart.transverse:
        t = DiffOp.variable(*chart.x_ring(), j)
        for i in range(b):
            rows.append(tuple(t if k == i else zero for k in range(b)))
    return FinPresentation(chart, b, tuple(rows), over="X")


# -- induced elements ---------------------------------------------------------------

class InducedElement:
    """Finite sum ``sum_(i, nu) (g_i . c_(i,nu)) (x) d_T^[nu]`` with c in D_Y."""

    __slots__ = ("chart", "generators", "terms")

    def __init__(self, chart: Chart, generators: int, terms: Mapping[Tuple[int, MultiIndex], DiffOp] | None = None):
        self.chart = chart
        self.generators = generators
        clean = {}
        for (i, nu), c in (terms or {}).items():
            nu = tuple(nu)
            if not 0 <= i < generators:
                raise DimensionMismatch(f"generator index {i} out of range")
            if len(nu) != chart.codim:
                raise DimensionMismatch(f"transverse index {nu} has wrong length")
            if c.ring() != chart.y_ring():
                raise DimensionMismatch(f"coefficient over {c.ring()}, expected {chart.y_ring()}")
            if c.terms:
                clean[(i, nu)] = c
        self.terms = clean

    @classmethod
    def basis(cls, chart: Chart, generators: int, i: int, nu: Iterable[int], coeff: DiffOp | None = None):
        """``g_i . coeff (x) d^[nu]`` (coeff defaults to 1)."""
        if coeff is None:
            coeff = DiffOp.identity(*chart.y_ring())
        return cls(chart, generators, {(i, tuple(nu)): coeff})

    @classmethod
    def zero(cls, chart, generators):
        return cls(chart, generators)

    def __eq__(self, other):
        if not isinstance(other, InducedElement):
            return NotImplemented
        return (self.chart, self.generators, self.terms) == (other.chart, other.generators, other.terms)

    def __hash__(self):
        return hash((self.chart, self.generators, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "InducedElement(0)"
        parts = [f"g{i}.{c!r}(x)d^[{nu}]" for (i, nu), c in sorted(self.terms.items(), key=lambda kv: kv[0])]
        return "InducedElement(" + " + ".join(parts) + ")"

    def is_zero(self):
        return not self.terms

    def _check(self, other):
        if self.chart != other.chart or self.generators != other.generators:
            raise DimensionMismatch("induced elements over different modules")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out[k] + c if k in out else c
            if s.terms:
                out[k] = s
            else:
                out.pop(k, None)
        return InducedElement(self.chart, self.generators, out)

    def __neg__(self):
        return InducedElement(self.chart, self.generators, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: int) -> "InducedElement":
        return InducedElement(self.chart, self.generators, {k: v.scale(c) for k, v in self.terms.items()})

    def support(self) -> List[MultiIndex]:
        return sorted({nu for _, nu in self.terms})

    def nu_zero_part(self) -> "InducedElement":
        zero = (0,) * self.chart.codim
        return InducedElement(self.chart, self.generators, {k: c for k, c in self.terms.items() if k[1] == zero})

    def with_precision(self, N: int) -> "InducedElement":
        chart = Chart(self.chart.M, self.chart.r, self.chart.p, N)
        return InducedElement(chart, self.generators, {k: c.with_precision(N) for k, c in self.terms.items()})


def _transverse_slot(chart: Chart, j: int) -> int:
    if j not in chart.transverse:
        raise ValueError(f"coordinate {j} is not transverse on {chart}")
    return j - chart.r


def t_action(x: InducedElement, j: int) -> InducedElement:
    """Right multiplication by the transverse coordinate x_j."""
    k = _transverse_slot(x.chart, j)
    out = {}
    for (i, nu), c in x.terms.items():
        if nu[k]:
            out[(i, nu[:k] + (nu[k] - 1,) + nu[k + 1 :])] = c
    return InducedElement(x.chart, x.generators, out)


def dpartial_action(x: InducedElement, j: int) -> InducedElement:
    """Right multiplication by d_j for a transverse coordinate j."""
    k = _transverse_slot(x.chart, j)
    out = {}
    for (i, nu), c in x.terms.items():
        out[(i, nu[:k] + (nu[k] + 1,) + nu[k + 1 :])] = c.scale(nu[k] + 1)
    return InducedElement(x.chart, x.generators, out)


def right_action(x: InducedElement, P: DiffOp) -> InducedElement:
    """``x . P`` for an X-operator P, term by term as (x . a_nu) . d^[nu]."""
    chart = x.chart
    _check_x(P, chart)
    r = chart.r
    yring = chart.y_ring()
    acc = InducedElement.zero(chart, x.generators)
    for nu, a in P.terms.items():
        nu_tan, nu_tr = nu[:r], nu[r:]
        d_tan = DiffOp.dpow(*yring, nu_tan)
        for e, c in a.terms.items():
            e_tan, e_tr = e[:r], e[r:]
            x_tan = DiffOp.multiplication(MultiPoly.monomial(*yring, e_tan, 1))
            out: Dict[Tuple[int, MultiIndex], Dict] = {}
            for (i, kappa), coeff in x.terms.items():
                if any(k < s for k, s in zip(kappa, e_tr)):
                    continue
                base = tuple(k - s for k, s in zip(kappa, e_tr))
                target = tuple(b + n for b, n in zip(base, nu_tr))
                scale = c * _multi_binom(target, nu_tr)
                new = compose(compose(coeff, x_tan), d_tan).scale(scale)
                key = (i, target)
                out[key] = out[key] + new if key in out else new
            acc = acc + InducedElement(chart, x.generators, out)
    return acc


def kernel_functor(elements: Iterable[InducedElement], chart: Chart | None = None) -> List[InducedElement]:
    """Elements annihilated by every transverse coordinate."""
    kept = []
    for x in elements:
        ch = chart or x.chart
        if all(t_action(x, j).is_zero() for j in ch.transverse):
            kept.append(x)
    return kept


# -- torsion decomposition ------------------------------------------------------------

@dataclass
class TorsionExpression:
    """``u = (1/denominator) * sum kernel_element . operator``."""

    chart: Chart
    generators: int
    terms: List[Tuple[InducedElement, DiffOp]] = field(default_factory=list)
    denominator: int = 1

    def numerator(self) -> InducedElement:
        acc = InducedElement.zero(self.chart, self.generators)
        for k, W in self.terms:
            acc = acc + right_action(k, W)
        return acc

    def precision_debit(self) -> int:
        d, k = self.denominator, 0
        while d % self.chart.p == 0:
            d //= self.chart.p
            k += 1
        return k

    def evaluate(self) -> InducedElement:
        """The represented element, at precision N minus the p-adic valuation of the denominator."""
        p = self.chart.p
        k = self.precision_debit()
        newN = self.chart.N - k
        if newN < 1:
            raise InsufficientPrecision(f"denominator {self.denominator} exhausts precision {self.chart.N}")
        unit = self.denominator // p**k
        num = self.numerator()
        chart = Chart(self.chart.M, self.chart.r, p, newN)
        inv = pow(unit, -1, p**newN)
        return InducedElement(
            chart,
            self.generators,
            {key: op_div_exact(c, k).with_precision(newN).scale(inv) if k else c.with_precision(newN).scale(inv)
             for key, c in num.terms.items()},
        )


def _torsion_operator(k: int, j: int, memo) -> Dict[int, int]:
    """Decompose ``n (x) d^[k]`` along one transverse variable, given u.t^j = 0.

    Returns ``{a: c_a}`` with ``(j-1)! * n (x) d^[k] = sum c_a (n (x) 1) . d^[a]``.
    This is the recursion (j-1) u = (j u - (u d) t) + (u t) d, memoized by
    linearity in u: with u = n (x) d^[k] one has j u - (u d) t = (j-k-1) u
    and u t = n (x) d^[k-1].
    """
    key = (k, j)
    if key in memo:
        return memo[key]
    if j == 1:
        # u.t = 0 forces k = 0, so u is already a kernel element
        res = {0: 1}
    else:
        coeffs: Dict[int, int] = {}
        scale_a = j - k - 1
        if scale_a:
            for a, c in _torsion_operator(k, j - 1, memo).items():
                coeffs[a] = coeffs.get(a, 0) + scale_a * c
        if k >= 1:
            # (n (x) d^[a]) . d = (a + 1) n (x) d^[a + 1]
            for a, c in _torsion_operator(k - 1, j - 1, memo).items():
                coeffs[a + 1] = coeffs.get(a + 1, 0) + (a + 1) * c
        res = {a: c for a, c in coeffs.items() if c}
    memo[key] = res
    return res


def decompose_torsion(u: InducedElement, j: int, chart: Chart | None = None, m: int | None = None) -> TorsionExpression:
    """Write a t^j-torsion element as kernel elements acted on by transverse d's.

    Every transverse variable is processed; the denominator is ((j-1)!)^codim.
    """
    chart = chart or u.chart
    if j < 1:
        raise ValueError("j must be at least 1")
    if m is not None and j > chart.p**m:
        raise ValueError(f"j={j} exceeds p^m={chart.p**m}")
    for var in chart.transverse:
        x = u
        for _ in range(j):
            x = t_action(x, var)
        if not x.is_zero():
            raise NotTorsion(f"u . t_{var + 1}^{j} is not zero")
    if chart.codim * legendre_vp_factorial(j - 1, chart.p) >= chart.N:
        raise InsufficientPrecision(f"dividing by ((j-1)!)^{chart.codim} exhausts precision {chart.N}")

    memo: Dict = {}
    zero_nu = (0,) * chart.codim
    xring = chart.x_ring()
    terms: List[Tuple[InducedElement, DiffOp]] = []
    for (i, nu), c in sorted(u.terms.items(), key=lambda kv: kv[0]):
        op = DiffOp.identity(*xring)
        for slot, k in enumerate(nu):
            one_var = DiffOp.zero(*xring)
            for a, cc in _torsion_operator(k, j, memo).items():
                idx = [0] * chart.M
                idx[chart.r + slot] = a
                one_var = one_var + DiffOp.dpow(*xring, idx, cc)
            op = compose(op, one_var)
        terms.append((InducedElement(chart, u.generators, {(i, zero_nu): c}), op))
    return TorsionExpression(chart, u.generators, terms, _factorial(j - 1) ** chart.codim)


def _factorial(n: int) -> int:
    r = 1
    for i in range(2, n + 1):
        r *= i
    return r


# -- roundtrip checks -----------------------------------------------------------------

@dataclass
class RoundtripReport:
    kernel: List[InducedElement]
    expected: List[InducedElement]
    unit_images: List[InducedElement]
    verdict: bool


def roundtrip_report(Npres: FinPresentation, samples: Iterable) -> RoundtripReport:
    """Apply the kernel functor to sample elements of the direct image.

    ``samples`` are transverse multi-indices (ints allowed in codimension 1) or
    ready-made induced elements.
    """
    chart = Npres.chart
    b = Npres.generators
    elements: List[InducedElement] = []
    for s in samples:
        if isinstance(s, InducedElement):
            elements.append(s)
            continue
        nu = (s,) if isinstance(s, int) else tuple(s)
        for i in range(b):
            elements.append(InducedElement.basis(chart, b, i, nu))
    kernel = kernel_functor(elements, chart)
    expected = [x for x in elements if x == x.nu_zero_part()]
    zero_nu = (0,) * chart.codim
    unit_images = [InducedElement.basis(chart, b, i, zero_nu) for i in range(b)]
    verdict = kernel == expected
    basis_samples = [x for x in elements if len(x.terms) == 1]
    if any(nu == zero_nu for x in basis_samples for (_, nu) in x.terms):
        # the unit n -> n (x) 1 must hit every kernel element and be injective
        verdict = verdict and all(img in kernel for img in unit_images) and len(set(unit_images)) == b
    return RoundtripReport(kernel, expected, unit_images, verdict)


def roundtrip_unit_check(Npres: FinPresentation, samples: Iterable) -> bool:
    return roundtrip_report(Npres, samples).verdict


# -- twists ---------------------------------------------------------------------------

def default_operator_samples(chart: Chart) -> List[DiffOp]:
    """Small operator family covering tangential, transverse and mixed terms."""
    ring = chart.x_ring()
    ops = []
    for i in range(chart.M):
        ops.append(DiffOp.partial(*ring, i))
        ops.append(DiffOp.variable(*ring, i))
    for j in chart.transverse:
        t = MultiPoly.variable(*ring, j)
        for k in range(chart.M):
            ops.append(DiffOp.partial(*ring, k).left_mul_poly(t))
    if chart.r:
        x0 = MultiPoly.variable(*ring, 0)
        ops.append(DiffOp.partial(*ring, 0).left_mul_poly(x0) + DiffOp.partial(*ring, chart.M - 1).left_mul_poly(
            MultiPoly.variable(*ring, chart.M - 1)))
    return ops


def twist_operator_samples(Npres: FinPresentation, chart: Chart) -> List[DiffOp]:
    """Default samples plus every nonzero entry of the direct-image relations."""
    lifted = [e for row in direct_image(Npres, chart).relations for e in row if e.terms]
    return default_operator_samples(chart) + lifted


@dataclass
class TwistReport:
    normalizer_agree: bool
    restriction_agree: bool
    roundtrip_agree: bool
    details: List[str] = field(default_factory=list)

    @property
    def identical(self) -> bool:
        return self.normalizer_agree and self.restriction_agree and self.roundtrip_agree


def twist_report(Npres: FinPresentation, chart: Chart, u: MultiPoly,
                 operators: Sequence[DiffOp] | None = None, samples: Iterable | None = None) -> TwistReport:
    if u.ring() != chart.x_ring():
        raise DimensionMismatch("the twisting unit must live on X")
    uinv = u.inverse()  # raises NotAUnit
    uY = restrict_poly(u, chart)
    ops = list(operators) if operators is not None else twist_operator_samples(Npres, chart)
    details = []

    normal_ok = True
    restr_ok = True
    for P in ops:
        Pu = conjugate(P, u)
        plain, twisted = normalizer_member(P, chart), normalizer_member(Pu, chart)
        if plain != twisted:
            normal_ok = False
            details.append(f"normalizer verdict changed for {P!r}")
        if plain and twisted:
            lhs = restrict(Pu, chart)
            rhs = conjugate(restrict(P, chart), uY) if chart.r else restrict(P, chart)
            if lhs != rhs:
                restr_ok = False
                details.append(f"restriction does not commute with the twist for {P!r}")
        if conjugate(Pu, uinv) != P:
            normal_ok = False
            details.append(f"conjugation by u^-1 does not undo the twist for {P!r}")

    if samples is None:
        samples = [tuple(v) for v in product(range(3), repeat=chart.codim)]
    samples = list(samples)
    twisted_rows = tuple(
        tuple(conjugate(e, uY) if chart.r else e for e in row) for row in Npres.relations
    )
    Ntw = FinPresentation(Npres.chart, Npres.generators, twisted_rows, Npres.over)
    rt_ok = roundtrip_unit_check(Npres, samples) == roundtrip_unit_check(Ntw, samples)
    if not rt_ok:
        details.append("roundtrip verdict changed under the twist")
    return TwistReport(normal_ok, restr_ok, rt_ok, details)


def twisted_roundtrip(Npres: FinPresentation, chart: Chart, u: MultiPoly, **kwargs) -> bool:
    """Whether every normalizer, restriction and roundtrip verdict survives conjugation by u."""
    return twist_report(Npres, chart, u, **kwargs).identical
