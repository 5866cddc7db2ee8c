"""Square matrices of differential operators."""

from __future__ import annotations

from typing import Callable, List, Sequence

from .coeff import MultiPoly
from .diffop import (
    NEG_INF,
    DiffOp,
    compose,
    level_part,
    op_div_exact,
    op_mul_p_power,
    order,
    reduction_order,
    sigma,
    slice_op,
)
from .errors import DimensionMismatch


class OpMatrix:
    """An n x n matrix of DiffOp entries over a common (p, N, nvars)."""

    __slots__ = ("n", "entries")

    def __init__(self, entries: Sequence[Sequence[DiffOp]]):
        rows = [list(r) for r in entries]
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise DimensionMismatch("operator matrix must be square and non-empty")
        ring = rows[0][0].ring()
        if any(e.ring() != ring for r in rows for e in r):
            raise DimensionMismatch("matrix entries over different rings")
        self.n = n
        self.entries = rows

    @classmethod
    def identity(cls, n, p, N, nvars):
        return cls.scalar(DiffOp.identity(p, N, nvars), n)

    @classmethod
    def zero(cls, n, p, N, nvars):
        return cls.scalar(DiffOp.zero(p, N, nvars), n)

    @classmethod
    def scalar(cls, P: DiffOp, n: int) -> "OpMatrix":
        """The embedding P -> P * Identity."""
        z = DiffOp.zero(*P.ring())
        return cls([[P if i == j else z for j in range(n)] for i in range(n)])

    @property
    def p(self):
        return self.entries[0][0].p

    @property
    def N(self):
        return self.entries[0][0].N

    @property
    def nvars(self):
        return self.entries[0][0].nvars

    def ring(self):
        return self.entries[0][0].ring()

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __iter__(self):
        for row in self.entries:
            yield from row

    def __eq__(self, other):
        if not isinstance(other, OpMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(tuple(tuple(r) for r in self.entries))

    def __repr__(self):
        return f"OpMatrix({self.entries!r})"

    def map(self, f: Callable[[DiffOp], DiffOp]) -> "OpMatrix":
        return OpMatrix([[f(e) for e in row] for row in self.entries])

    def _check(self, other):
        if not isinstance(other, OpMatrix):
            raise TypeError(f"expected OpMatrix, got {type(other).__name__}")
        if self.n != other.n or self.ring() != other.ring():
            raise DimensionMismatch("matrices of different size or ring")

    def __add__(self, other):
        self._check(other)
        return OpMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __sub__(self, other):
        self._check(other)
        return OpMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def scale(self, c: int) -> "OpMatrix":
        return self.map(lambda e: e.scale(c))

    def left_mul_poly(self, f: MultiPoly) -> "OpMatrix":
        return self.map(lambda e: e.left_mul_poly(f))

    def __matmul__(self, other):
        self._check(other)
        n = self.n
        z = DiffOp.zero(*self.ring())
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = z
                for k in range(n):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if a.terms and b.terms:
                        acc = acc + compose(a, b)
                row.append(acc)
            rows.append(row)
        return OpMatrix(rows)

    def compose_right_scalar(self, Q: DiffOp) -> "OpMatrix":
        """``self o (Q * Identity)``."""
        return self.map(lambda e: compose(e, Q) if e.terms else e)

    def is_zero(self):
        return all(e.is_zero() for e in self)

    def is_zero_mod(self, k: int) -> bool:
        return all(e.is_zero_mod(k) for e in self)

    def with_precision(self, N: int) -> "OpMatrix":
        return self.map(lambda e: e.with_precision(N))

    def div_exact(self, k: int) -> "OpMatrix":
        return self.map(lambda e: op_div_exact(e, k))

    def mul_p_power(self, k: int, N: int | None = None) -> "OpMatrix":
        return self.map(lambda e: op_mul_p_power(e, k, N))

    # valuation slicing is entrywise; orders are maxima over the entries
    def order(self):
        return max((order(e) for e in self), default=NEG_INF)

    def reduction_order(self, i: int):
        return max(reduction_order(e, i) for e in self)

    def sigma(self, level: int) -> "OpMatrix":
        return self.map(lambda e: sigma(e, level))

    def level_part(self, level: int) -> "OpMatrix":
        return self.map(lambda e: level_part(e, level))

    def slice(self, level: int) -> "OpMatrix":
        return self.map(lambda e: slice_op(e, level))


def entries_of(X) -> List[DiffOp]:
    """Flat list of operators for a DiffOp or an OpMatrix."""
    if isinstance(X, OpMatrix):
        return list(X)
    return [X]
