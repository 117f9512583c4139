"""Search for shadows by undetermined coefficients.

A finite ansatz ``Phi = sum c * (coefficient monomial) * (odd jet)`` is fed
through the linearized covering equation; the coefficients of the residual
form a homogeneous linear system in the parameters ``c``, and every vector
of its rational nullspace is a shadow.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

import sympy

from .cdop import ell_E_apply
from .coverings import Shadow
from .eqctx import CoveringMode, EquationContext
from .errors import NonlinearInParams, VarPNError
from .gpoly import (
    DPoly,
    Generator,
    Kind,
    Monomial,
    Role,
    T_GEN,
    VecFun,
    X_GEN,
    jet_generator,
    param,
    param_generator,
    substitute,
)

logger = logging.getLogger(__name__)

_ODD = {CoveringMode.LSTAR: (Kind.P, Role.SHADOW_LSTAR), CoveringMode.L: (Kind.Q, Role.SHADOW_L)}


@dataclass(frozen=True)
class AnsatzSpec:
    covering: CoveringMode
    max_D_order: int
    max_jet_order: int = 0
    max_degree: int = 0
    allow_xt: bool = False
    xt_degree: int = 0

    def __post_init__(self) -> None:
        if self.covering not in _ODD:
            raise VarPNError(f"ansatz search runs in the lstar or l covering, not {self.covering.value}")
        for name in ("max_D_order", "max_jet_order", "max_degree", "xt_degree"):
            if getattr(self, name) < 0:
                raise VarPNError(f"{name} must be non-negative")


@dataclass(frozen=True)
class AnsatzTerm:
    """One basis element: ``param * coefficient * odd`` in entry ``row``."""

    name: str
    row: int
    odd: Generator
    coefficient: Monomial


@dataclass(frozen=True)
class LinearSystem:
    unknowns: tuple[str, ...]
    rows: tuple[dict[int, Fraction], ...]
    provenance: tuple[tuple[int, Monomial], ...]

    def matrix(self) -> sympy.Matrix:
        M = sympy.zeros(len(self.rows), len(self.unknowns))
        for r, row in enumerate(self.rows):
            for c, value in row.items():
                M[r, c] = sympy.Rational(value.numerator, value.denominator)
        return M


def _coefficient_monomials(ctx: EquationContext, spec: AnsatzSpec) -> list[Monomial]:
    jets = [jet_generator(Kind.U, j, k) for j in range(1, ctx.m + 1) for k in range(spec.max_jet_order + 1)]
    base: list[dict[Generator, int]] = [{}]
    if spec.allow_xt:
        base = [
            {g: e for g, e in ((X_GEN, a), (T_GEN, b)) if e}
            for a in range(spec.xt_degree + 1)
            for b in range(spec.xt_degree + 1 - a)
        ]
    monomials = set()
    for degree in range(spec.max_degree + 1):
        for combo in combinations_with_replacement(jets, degree):
            exps: dict[Generator, int] = {}
            for g in combo:
                exps[g] = exps.get(g, 0) + 1
            for b in base:
                merged = dict(exps)
                merged.update(b)
                _, mono = Monomial.from_factors(merged, ())
                monomials.add(mono)
    return sorted(monomials, key=Monomial.sort_key)


def ansatz_terms(ctx: EquationContext, spec: AnsatzSpec) -> list[AnsatzTerm]:
    """Basis elements in pivot order: descending odd order, then entry and component, then coefficient."""
    kind, _ = _ODD[spec.covering]
    coefficients = _coefficient_monomials(ctx, spec)
    layout = [
        (row, jet_generator(kind, j, k), mono)
        for k in range(spec.max_D_order, -1, -1)
        for row in range(ctx.m)
        for j in range(1, ctx.m + 1)
        for mono in coefficients
    ]
    return [AnsatzTerm(f"c{index:04d}", row, odd, mono) for index, (row, odd, mono) in enumerate(layout)]


def build_ansatz(ctx: EquationContext, spec: AnsatzSpec) -> VecFun:
    _, role = _ODD[spec.covering]
    entries = [DPoly() for _ in range(ctx.m)]
    for term in ansatz_terms(ctx, spec):
        entries[term.row] = entries[term.row] + param(term.name) * DPoly.from_term(
            term.coefficient._replace(odd=(term.odd,))
        )
    return VecFun(tuple(entries), role)


def extract_system(
    ctx: EquationContext, residual: VecFun, unknowns: Sequence[str] | None = None
) -> LinearSystem:
    """One row per (entry, parameter-free monomial) of a parameter-linear residual."""
    if unknowns is None:
        unknowns = sorted({g.name for entry in residual for g in entry.params()})
    column = {name: i for i, name in enumerate(unknowns)}
    rows: dict[tuple[int, Monomial], dict[int, Fraction]] = {}
    for r, entry in enumerate(residual):
        for mono, c in entry.terms.items():
            rest, params = mono.without_params()
            if len(params) != 1 or params[0][1] != 1:
                raise NonlinearInParams(f"term {mono} is not linear in the parameters")
            name = params[0][0].name
            if name not in column:
                raise NonlinearInParams(f"unknown parameter {name}")
            row = rows.setdefault((r, rest), {})
            value = row.get(column[name], 0) + c
            if value:
                row[column[name]] = value
            else:
                row.pop(column[name], None)
    keys = sorted((k for k, row in rows.items() if row), key=lambda k: (k[0], k[1].sort_key()))
    logger.debug("linear system: %d rows, %d unknowns", len(keys), len(unknowns))
    return LinearSystem(tuple(unknowns), tuple(rows[k] for k in keys), tuple(keys))


def _to_fraction(value: sympy.Rational) -> Fraction:
    return Fraction(int(value.p), int(value.q))


def nullspace(system: LinearSystem) -> list[list[Fraction]]:
    """Exact nullspace basis, itself in reduced row echelon form."""
    n = len(system.unknowns)
    if not system.rows:
        return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    reduced, pivots = system.matrix().rref()
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        vector = [sympy.Integer(0)] * n
        vector[f] = sympy.Integer(1)
        for r, p in enumerate(pivots):
            vector[p] = -reduced[r, f]
        basis.append(vector)
    if not basis:
        return []
    echelon, _ = sympy.Matrix(basis).rref()
    result = [[_to_fraction(echelon[r, c]) for c in range(n)] for r in range(echelon.rows)]
    return [row for row in result if any(row)]


def solve_shadows(ctx: EquationContext, spec: AnsatzSpec) -> list[Shadow]:
    terms = ansatz_terms(ctx, spec)
    phi = build_ansatz(ctx, spec)
    residual = ell_E_apply(ctx, spec.covering, phi)
    system = extract_system(ctx, residual, [t.name for t in terms])
    basis = nullspace(system)
    logger.info("ansatz with %d unknowns, %d equations: nullspace of dimension %d",
                len(terms), len(system.rows), len(basis))
    _, role = _ODD[spec.covering]
    shadows = []
    for vector in basis:
        values = {param_generator(t.name): v for t, v in zip(terms, vector)}
        value = VecFun(tuple(substitute(entry, values) for entry in phi), role)
        if not ell_E_apply(ctx, spec.covering, value).is_zero:
            raise VarPNError(f"nullspace vector {value} does not solve the shadow equation")
        shadows.append(Shadow(value))
    return shadows


def span_contains(basis: Iterable[VecFun], target: VecFun) -> bool:
    """Whether ``target`` is a rational linear combination of ``basis``."""
    basis = list(basis)
    keys = sorted(
        {(r, mono) for v in basis + [target] for r, e in enumerate(v) for mono in e.terms},
        key=lambda k: (k[0], k[1].sort_key()),
    )
    index = {k: i for i, k in enumerate(keys)}

    def column(v: VecFun) -> list:
        col = [sympy.Integer(0)] * len(keys)
        for r, e in enumerate(v):
            for mono, c in e.terms.items():
                col[index[(r, mono)]] = sympy.Rational(c.numerator, c.denominator)
        return col

    if not keys:
        return True
    M = sympy.Matrix([column(v) for v in basis]).T if basis else sympy.zeros(len(keys), 0)
    augmented = M.row_join(sympy.Matrix(column(target)))
    return M.rank() == augmented.rank()
