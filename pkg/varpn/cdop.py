"""Matrix C-differential operators ``sum a_k D^k``.

Operators are stored with coefficients to the left of the powers of D. Each
entry maps a power to a nonzero coefficient, so the representation is unique
and equality is structural. ``A @ B`` is composition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .eqctx import CoveringMode, EquationContext, dx, dx_power
from .errors import ShapeMismatch
from .gpoly import (
    DPoly,
    Generator,
    Kind,
    Role,
    Scalar,
    VecFun,
    as_dpoly,
    derive,
    format_rational,
    mul,
    partial,
)

logger = logging.getLogger(__name__)

Entry = tuple[tuple[int, DPoly], ...]


def _freeze(terms: Mapping[int, DPoly]) -> Entry:
    return tuple(sorted((k, c) for k, c in terms.items() if not c.is_zero))


def _accumulate(terms: dict[int, DPoly], power: int, c: DPoly) -> None:
    if c.is_zero:
        return
    terms[power] = terms[power] + c if power in terms else c


@dataclass(frozen=True)
class CDOp:
    """A rows x cols matrix of scalar C-differential operators."""

    rows: int
    cols: int
    entries: tuple[tuple[Entry, ...], ...]

    @classmethod
    def from_entries(cls, matrix: Sequence[Sequence[Mapping[int, DPoly | Scalar]]]) -> CDOp:
        rows = len(matrix)
        cols = len(matrix[0]) if rows else 0
        if any(len(row) != cols for row in matrix):
            raise ShapeMismatch("operator rows have different lengths")
        return cls(
            rows,
            cols,
            tuple(
                tuple(_freeze({k: as_dpoly(c) for k, c in entry.items()}) for entry in row)
                for row in matrix
            ),
        )

    @classmethod
    def zero(cls, rows: int, cols: int | None = None) -> CDOp:
        cols = rows if cols is None else cols
        return cls(rows, cols, tuple(tuple(() for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def diagonal(cls, m: int, power: int = 0, coefficient: DPoly | Scalar = 1) -> CDOp:
        """``coefficient * D^power`` on each diagonal entry."""
        c = as_dpoly(coefficient)
        return cls.from_entries(
            [[{power: c} if i == j else {} for j in range(m)] for i in range(m)]
        )

    @classmethod
    def identity(cls, m: int) -> CDOp:
        return cls.diagonal(m)

    @classmethod
    def scalar(cls, terms: Mapping[int, DPoly | Scalar]) -> CDOp:
        return cls.from_entries([[terms]])

    def entry(self, i: int, j: int) -> dict[int, DPoly]:
        return dict(self.entries[i][j])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def order(self) -> int:
        """Highest power of D present, or -1 for the zero operator."""
        return max((k for row in self.entries for e in row for k, _ in e), default=-1)

    @property
    def is_zero(self) -> bool:
        return all(not e for row in self.entries for e in row)

    def coefficients(self) -> Iterator[DPoly]:
        for row in self.entries:
            for e in row:
                for _, c in e:
                    yield c

    def generators(self) -> frozenset[Generator]:
        return frozenset().union(*(c.generators() for c in self.coefficients()))

    def coefficient_order(self, kind: Kind = Kind.U) -> int:
        return max((c.max_order(kind) for c in self.coefficients()), default=-1)

    def map_coefficients(self, fn: Callable[[DPoly], DPoly]) -> CDOp:
        return CDOp(
            self.rows,
            self.cols,
            tuple(
                tuple(_freeze({k: fn(c) for k, c in e}) for e in row) for row in self.entries
            ),
        )

    def transpose(self) -> CDOp:
        return CDOp(
            self.cols,
            self.rows,
            tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)),
        )

    def _combine(self, other: CDOp, sign: int) -> CDOp:
        if self.shape != other.shape:
            raise ShapeMismatch(f"cannot add operators of shapes {self.shape} and {other.shape}")
        matrix = []
        for i in range(self.rows):
            row = []
            for j in range(self.cols):
                terms = dict(self.entries[i][j])
                for k, c in other.entries[i][j]:
                    _accumulate(terms, k, c if sign > 0 else -c)
                row.append(_freeze(terms))
            matrix.append(tuple(row))
        return CDOp(self.rows, self.cols, tuple(matrix))

    def __add__(self, other: CDOp) -> CDOp:
        return self._combine(other, 1)

    def __sub__(self, other: CDOp) -> CDOp:
        return self._combine(other, -1)

    def __neg__(self) -> CDOp:
        return self.map_coefficients(lambda c: -c)

    def scale(self, c: DPoly | Scalar) -> CDOp:
        """Left multiplication of every coefficient by ``c``."""
        c = as_dpoly(c)
        return self.map_coefficients(lambda a: mul(c, a))

    def __matmul__(self, other: CDOp) -> CDOp:
        return compose(self, other)

    def __pow__(self, n: int) -> CDOp:
        if self.rows != self.cols:
            raise ShapeMismatch("only square operators have powers")
        result = CDOp.identity(self.rows)
        for _ in range(n):
            result = compose(result, self)
        return result

    def __str__(self) -> str:
        if self.shape == (1, 1):
            return format_entry(self.entries[0][0])
        return "[" + ", ".join(
            "[" + ", ".join(format_entry(e) for e in row) + "]" for row in self.entries
        ) + "]"


def format_entry(entry: Entry) -> str:
    if not entry:
        return "0"
    pieces: list[str] = []
    for power, coefficient in sorted(entry, key=lambda kc: -kc[0]):
        d = "" if power == 0 else ("D" if power == 1 else f"D^{power}")
        for mono, c in coefficient.items():
            factors = [] if not mono.even and not mono.odd else [str(mono)]
            if d:
                factors.append(d)
            body = "*".join(factors)
            if not body:
                text = format_rational(c)
            elif c == 1:
                text = body
            elif c == -1:
                text = f"-{body}"
            else:
                text = f"{format_rational(c)}*{body}"
            if not pieces:
                pieces.append(text)
            elif text.startswith("-"):
                pieces.append(f" - {text[1:]}")
            else:
                pieces.append(f" + {text}")
    return "".join(pieces)


def apply(
    ctx: EquationContext,
    mode: CoveringMode,
    A: CDOp,
    v: VecFun,
    *,
    argument_first: bool = False,
) -> VecFun:
    """Evaluate ``A`` on ``v``.

    Products are formed as ``coefficient * D^k(v)``; ``argument_first`` writes
    them as ``D^k(v) * coefficient``, which differs only when both are odd.
    """
    if A.cols != len(v):
        raise ShapeMismatch(f"operator with {A.cols} columns applied to a {len(v)}-vector")
    ctx.check(mode, v)
    derivatives: dict[tuple[int, int], DPoly] = {}

    def d(j: int, k: int) -> DPoly:
        key = (j, k)
        if key not in derivatives:
            derivatives[key] = v[j] if k == 0 else dx(d(j, k - 1))
        return derivatives[key]

    out = []
    for i in range(A.rows):
        total = DPoly()
        for j in range(A.cols):
            for k, c in A.entries[i][j]:
                total = total + (mul(d(j, k), c) if argument_first else mul(c, d(j, k)))
        out.append(total)
    return VecFun(tuple(out), v.role)


def compose(A: CDOp, B: CDOp) -> CDOp:
    """``A o B``, renormalized by moving each D past the coefficients of B."""
    if A.cols != B.rows:
        raise ShapeMismatch(f"cannot compose {A.shape} with {B.shape}")
    matrix = []
    for i in range(A.rows):
        row = []
        for j in range(B.cols):
            terms: dict[int, DPoly] = {}
            for l in range(A.cols):
                for power_a, a in A.entries[i][l]:
                    for power_b, b in B.entries[l][j]:
                        db = b
                        for r in range(power_a + 1):
                            _accumulate(terms, power_a - r + power_b, mul(a, db).scale(comb(power_a, r)))
                            db = dx(db)
            row.append(_freeze(terms))
        matrix.append(tuple(row))
    return CDOp(A.rows, B.cols, tuple(matrix))


def adjoint(A: CDOp) -> CDOp:
    """Formal adjoint: transpose, with ``(a D^k)* = (-D)^k o a``."""
    matrix: list[list[dict[int, DPoly]]] = [[{} for _ in range(A.rows)] for _ in range(A.cols)]
    for i in range(A.rows):
        for j in range(A.cols):
            for k, a in A.entries[i][j]:
                sign = -1 if k % 2 else 1
                da = a
                for r in range(k + 1):
                    _accumulate(matrix[j][i], k - r, da.scale(sign * comb(k, r)))
                    da = dx(da)
    return CDOp(A.cols, A.rows, tuple(tuple(_freeze(e) for e in row) for row in matrix))


def is_skew(A: CDOp) -> bool:
    return A.rows == A.cols and (A + adjoint(A)).is_zero


def _even_jets(poly: DPoly) -> Iterable[Generator]:
    return sorted(g for g in poly.generators() if g.kind is Kind.U)


def linearize(ctx: EquationContext, mode: CoveringMode, phi: VecFun) -> CDOp:
    """``l_phi`` with entries ``sum_k d phi^i / d u^j_k D^k``; odd variables act as coefficients."""
    ctx.check(mode, phi)
    matrix: list[list[dict[int, DPoly]]] = [[{} for _ in range(ctx.m)] for _ in range(len(phi))]
    for i, entry in enumerate(phi):
        for g in _even_jets(entry):
            _accumulate(matrix[i][g.component - 1], g.order, partial(entry, g))
    return CDOp.from_entries(matrix)


def ev_derive(ctx: EquationContext, mode: CoveringMode, phi: VecFun, a: DPoly) -> DPoly:
    """The evolutionary derivation ``e_phi`` applied to ``a``."""
    if len(phi) != ctx.m:
        raise ShapeMismatch(f"generating section has {len(phi)} entries, expected {ctx.m}")
    shifted: dict[tuple[int, int], DPoly] = {}

    def image(g: Generator) -> DPoly | None:
        if g.kind is not Kind.U:
            return None
        key = (g.component, g.order)
        if key not in shifted:
            shifted[key] = dx_power(phi[g.component - 1], g.order)
        return shifted[key]

    return derive(a, image)


def ev_derive_vec(ctx: EquationContext, mode: CoveringMode, phi: VecFun, target: VecFun) -> VecFun:
    return target.map(lambda a: ev_derive(ctx, mode, phi, a))


def op_directional(ctx: EquationContext, mode: CoveringMode, A: CDOp, phi: VecFun) -> CDOp:
    """``e_phi`` applied to every coefficient of ``A``, powers of D fixed."""
    return A.map_coefficients(lambda c: ev_derive(ctx, mode, phi, c))


def op_total_t(ctx: EquationContext, A: CDOp) -> CDOp:
    """The operator whose coefficients are the t-derivatives of those of ``A``."""
    return A.map_coefficients(ctx.dt)


def ell_E_apply(ctx: EquationContext, mode: CoveringMode, phi: VecFun) -> VecFun:
    """``D_t(phi) - l_f(phi)`` in the covering algebra of ``mode``."""
    ctx.check(mode, phi)
    flow = apply(ctx, mode, ctx.ell_f, phi)
    return VecFun(tuple(ctx.dt(a) - b for a, b in zip(phi, flow)), Role.RESIDUAL)


@dataclass(frozen=True)
class OpPair:
    """A multilinear evaluator together with the roles of its argument slots."""

    name: str
    evaluate: Callable[..., VecFun]
    roles: tuple[Role, ...]

    @property
    def arity(self) -> int:
        return len(self.roles)

    def __call__(self, *args: VecFun) -> VecFun:
        if len(args) != self.arity:
            raise ShapeMismatch(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        return self.evaluate(*args)
