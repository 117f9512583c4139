"""Shadows of operators, their lifts and the brackets between them.

An operator ``A`` with entries ``sum a_i D^i`` has the p-linear shadow
``H_A^l = sum a^l_ij p^j_i`` in the l*-covering; an operator ``R`` has the
q-linear shadow ``N_R`` in the l-covering. A shadow that solves the
linearized equation lifts to a symmetry of the covering once its odd
components are completed. Brackets of shadows are odd-quadratic; polarizing
them on test sections recovers the operator brackets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping

from .cdop import CDOp, adjoint, apply, ell_E_apply, linearize, op_directional
from .eqctx import CoveringMode, EquationContext, dx, dx_power
from .errors import DegreeMismatch, NotAShadow, NotLinear, ShapeMismatch
from .gpoly import DPoly, Generator, Kind, Role, VecFun, derive, jet_generator, mul

logger = logging.getLogger(__name__)

_FAMILY = {
    CoveringMode.LSTAR: (Kind.P, Role.SHADOW_LSTAR),
    CoveringMode.L: (Kind.Q, Role.SHADOW_L),
}


@dataclass(frozen=True)
class Shadow:
    """An odd-linear vector function, with the operator it encodes when known."""

    value: VecFun
    origin: CDOp | None = None

    @property
    def covering(self) -> CoveringMode:
        return CoveringMode.LSTAR if self.value.role is Role.SHADOW_LSTAR else CoveringMode.L

    @property
    def operator(self) -> CDOp:
        return self.origin if self.origin is not None else from_shadow(self)

    def __str__(self) -> str:
        return str(self.value)


class Side(str, Enum):
    FROM_LSTAR = "lstar"
    FROM_L = "l"


@dataclass(frozen=True)
class LiftedField:
    """An evolutionary field on a covering: its u-part and odd completions."""

    base: VecFun
    completions: Mapping[Kind, VecFun] = field(default_factory=dict)
    covering: CoveringMode = CoveringMode.LSTAR

    def component(self, kind: Kind) -> VecFun | None:
        if kind is Kind.U:
            return self.base
        return self.completions.get(kind)


def to_shadow(A: CDOp, which: CoveringMode) -> Shadow:
    """Replace ``D^i`` acting on column j by the odd jet ``p^j_i`` (or ``q^j_i``)."""
    if which not in _FAMILY:
        raise ValueError(f"shadows live in the lstar or l covering, not {which.value}")
    kind, role = _FAMILY[which]
    entries = []
    for row in A.entries:
        total = DPoly()
        for j, entry in enumerate(row, start=1):
            for i, a in entry:
                total = total + mul(a, DPoly.of(jet_generator(kind, j, i)))
        entries.append(total)
    return Shadow(VecFun(tuple(entries), role), A)


def shadow_of(value: VecFun) -> Shadow:
    """Wrap an odd-linear vector function, inferring its covering from the odd family."""
    kinds = {g.kind for g in value.generator_set() if g.is_odd}
    if len(kinds) > 1:
        raise NotLinear("a shadow is linear in exactly one odd family")
    role = Role.SHADOW_L if kinds == {Kind.Q} else Role.SHADOW_LSTAR
    return Shadow(value.with_role(role).check_role())


def from_shadow(s: Shadow) -> CDOp:
    """Read the operator back from an odd-linear vector function."""
    value = s.value
    kind = Kind.P if value.role is Role.SHADOW_LSTAR else Kind.Q
    m = len(value)
    matrix: list[list[dict[int, DPoly]]] = [[{} for _ in range(m)] for _ in range(m)]
    for row, entry in enumerate(value):
        for mono, c in entry.terms.items():
            if mono.odd_degree != 1 or mono.odd[0].kind is not kind:
                raise NotLinear(f"term {mono} is not linear in the {kind.name.lower()} family")
            g = mono.odd[0]
            if g.component > m:
                raise ShapeMismatch(f"{g} has no column in a {m}x{m} operator")
            coefficient = DPoly.from_term(mono._replace(odd=()), c)
            slot = matrix[row][g.component - 1]
            slot[g.order] = slot[g.order] + coefficient if g.order in slot else coefficient
    return CDOp.from_entries(matrix)


def _odd_vector(ctx: EquationContext, kind: Kind) -> VecFun:
    return VecFun.generators(kind, ctx.m)


def _require_shadow(ctx: EquationContext, s: Shadow) -> None:
    residual = ell_E_apply(ctx, s.covering, s.value)
    if not residual.is_zero:
        raise NotAShadow(f"{s} does not solve the linearized equation; residual {residual}")


def _lstar_alpha(ctx: EquationContext, H: VecFun) -> VecFun:
    mode = CoveringMode.LSTAR
    ell_star_H = adjoint(linearize(ctx, mode, H))
    return apply(ctx, mode, ell_star_H, _odd_vector(ctx, Kind.P)).scale(Fraction(-1, 2))


def _l_beta(ctx: EquationContext, N: VecFun) -> VecFun:
    mode = CoveringMode.L
    return apply(ctx, mode, linearize(ctx, mode, N), _odd_vector(ctx, Kind.Q))


def lift_lstar(ctx: EquationContext, s: Shadow, *, verify: bool = True) -> LiftedField:
    """Complete ``H`` with ``alpha = -1/2 l*_H(p)`` to a symmetry of the l*-covering."""
    if verify:
        _require_shadow(ctx, s)
    H = s.value.check_role()
    return LiftedField(H, {Kind.P: _lstar_alpha(ctx, H)}, CoveringMode.LSTAR)


def lift_l(ctx: EquationContext, s: Shadow, *, verify: bool = True) -> LiftedField:
    """Complete ``N`` with ``beta = l_N(q)`` to a symmetry of the l-covering."""
    if verify:
        _require_shadow(ctx, s)
    N = s.value.check_role()
    return LiftedField(N, {Kind.Q: _l_beta(ctx, N)}, CoveringMode.L)


def lift_whitney(ctx: EquationContext, s: Shadow, side: Side, *, verify: bool = True) -> LiftedField:
    """Lift a shadow to the Whitney product of both coverings.

    From the l*-side the q-family is completed by ``l_H(q)``; from the l-side
    the p-family is completed by ``-l*_N(p) - e_q(R*)(p)``, where the last
    term is ``sum_i D^i(p) e_q(c_i)`` for ``R* = sum c_i D^i``.
    """
    if verify:
        _require_shadow(ctx, s)
    mode = CoveringMode.WHITNEY
    value = s.value.check_role()
    p0, q0 = _odd_vector(ctx, Kind.P), _odd_vector(ctx, Kind.Q)
    if side is Side.FROM_LSTAR:
        if s.covering is not CoveringMode.LSTAR:
            raise NotLinear("a lift from the l*-side needs a p-linear shadow")
        alpha = apply(ctx, mode, linearize(ctx, mode, value), q0)
        return LiftedField(value, {Kind.P: _lstar_alpha(ctx, value), Kind.Q: alpha}, mode)
    if s.covering is not CoveringMode.L:
        raise NotLinear("a lift from the l-side needs a q-linear shadow")
    R_star = adjoint(s.operator)
    ell_star_N = apply(ctx, mode, adjoint(linearize(ctx, mode, value)), p0)
    e_q = apply(ctx, mode, op_directional(ctx, mode, R_star, q0), p0, argument_first=True)
    rho = -(ell_star_N + e_q)
    return LiftedField(value, {Kind.Q: _l_beta(ctx, value), Kind.P: rho}, mode)


def apply_field(lifted: LiftedField, a: DPoly) -> DPoly:
    """``X(a) = sum_g X(g) d_g a``; jets of each family get total x-derivatives of its component."""
    shifted: dict[Generator, DPoly] = {}

    def image(g: Generator) -> DPoly | None:
        if not g.is_jet:
            return None
        vec = lifted.component(g.kind)
        if vec is None:
            return None
        if g not in shifted:
            shifted[g] = vec[g.component - 1] if g.order == 0 else dx(image(g._replace(order=g.order - 1)))
        return shifted[g]

    return derive(a, image)


def symmetry_residual(ctx: EquationContext, mode: CoveringMode, lifted: LiftedField) -> VecFun:
    """``D_t(X(g)) - X(D_t(g))`` on u^j_0 and on the zeroth jets of each completed family."""
    ctx.check(mode, lifted.base, *lifted.completions.values())
    kinds = [Kind.U] + sorted(k for k in lifted.completions if k in mode.odd_kinds)
    out = []
    for kind in kinds:
        for j in range(1, ctx.m + 1):
            g = DPoly.of(jet_generator(kind, j, 0))
            out.append(ctx.dt(apply_field(lifted, g)) - apply_field(lifted, ctx.dt(g)))
    return VecFun(tuple(out), Role.RESIDUAL)


def _shadow_pair(s1: Shadow, s2: Shadow, covering: CoveringMode) -> None:
    for s in (s1, s2):
        if s.covering is not covering:
            raise NotLinear(f"{s} is not a shadow in the {covering.value} covering")
        s.value.check_role()


def bracket_hh(ctx: EquationContext, s1: Shadow, s2: Shadow) -> VecFun:
    """Closed form of the Jacobi bracket of two l*-shadows (p-quadratic)."""
    _shadow_pair(s1, s2, CoveringMode.LSTAR)
    mode = CoveringMode.LSTAR
    H_A, H_B = s1.value, s2.value
    A, B = s1.operator, s2.operator
    p0 = _odd_vector(ctx, Kind.P)
    ell_A, ell_B = linearize(ctx, mode, H_A), linearize(ctx, mode, H_B)
    half = (
        apply(ctx, mode, A, apply(ctx, mode, adjoint(ell_B), p0))
        + apply(ctx, mode, B, apply(ctx, mode, adjoint(ell_A), p0))
    ).scale(Fraction(1, 2))
    total = -apply(ctx, mode, ell_A, H_B) - apply(ctx, mode, ell_B, H_A) - half
    return total.with_role(Role.RESIDUAL)


def bracket_nn(ctx: EquationContext, s1: Shadow, s2: Shadow) -> VecFun:
    """Closed form of the Jacobi bracket of two l-shadows (q-quadratic)."""
    _shadow_pair(s1, s2, CoveringMode.L)
    mode = CoveringMode.L
    N_R, N_S = s1.value, s2.value
    R, S = s1.operator, s2.operator
    q0 = _odd_vector(ctx, Kind.Q)
    ell_R, ell_S = linearize(ctx, mode, N_R), linearize(ctx, mode, N_S)
    total = (
        -apply(ctx, mode, ell_R, N_S)
        - apply(ctx, mode, ell_S, N_R)
        + apply(ctx, mode, R, apply(ctx, mode, ell_S, q0))
        + apply(ctx, mode, S, apply(ctx, mode, ell_R, q0))
    )
    return total.with_role(Role.RESIDUAL)


def bracket_hn(ctx: EquationContext, h: Shadow, n: Shadow) -> VecFun:
    """Mixed bracket of an l*-shadow and an l-shadow on the Whitney product (p.q-bilinear)."""
    if h.covering is not CoveringMode.LSTAR or n.covering is not CoveringMode.L:
        raise NotLinear("the mixed bracket pairs a p-linear shadow with a q-linear one")
    h.value.check_role()
    n.value.check_role()
    mode = CoveringMode.WHITNEY
    H_A, N_R = h.value, n.value
    A, R = h.operator, n.operator
    p0, q0 = _odd_vector(ctx, Kind.P), _odd_vector(ctx, Kind.Q)
    ell_H, ell_N = linearize(ctx, mode, H_A), linearize(ctx, mode, N_R)
    e_q = apply(ctx, mode, op_directional(ctx, mode, adjoint(R), q0), p0, argument_first=True)
    total = (
        -apply(ctx, mode, ell_N, H_A)
        - apply(ctx, mode, ell_H, N_R)
        - apply(ctx, mode, A, apply(ctx, mode, adjoint(ell_N), p0) + e_q)
        + apply(ctx, mode, R, apply(ctx, mode, ell_H, q0))
    )
    return total.with_role(Role.RESIDUAL)


def bracket_hh_lifted(ctx: EquationContext, s1: Shadow, s2: Shadow) -> VecFun:
    """The same bracket as the sum of each lifted field applied to the other shadow."""
    X1 = lift_lstar(ctx, s1, verify=False)
    X2 = lift_lstar(ctx, s2, verify=False)
    return _lifted_sum(X1, X2, s1.value, s2.value)


def bracket_nn_lifted(ctx: EquationContext, s1: Shadow, s2: Shadow) -> VecFun:
    X1 = lift_l(ctx, s1, verify=False)
    X2 = lift_l(ctx, s2, verify=False)
    return _lifted_sum(X1, X2, s1.value, s2.value)


def bracket_hn_lifted(ctx: EquationContext, h: Shadow, n: Shadow) -> VecFun:
    X1 = lift_whitney(ctx, h, Side.FROM_LSTAR, verify=False)
    X2 = lift_whitney(ctx, n, Side.FROM_L, verify=False)
    return _lifted_sum(X1, X2, h.value, n.value)


def _lifted_sum(X1: LiftedField, X2: LiftedField, v1: VecFun, v2: VecFun) -> VecFun:
    return VecFun(
        tuple(apply_field(X1, b) + apply_field(X2, a) for a, b in zip(v1, v2)),
        Role.RESIDUAL,
    )


def polarize(ctx: EquationContext, F: VecFun, arg1: VecFun, arg2: VecFun) -> VecFun:
    """Evaluate an odd-quadratic vector function on two even test sections.

    A pair ``g_a g_b`` of one odd family (a < b) with coefficient c becomes
    ``c (J_a(arg1) J_b(arg2) - J_b(arg1) J_a(arg2))``; a mixed pair
    ``p_a q_b`` becomes ``c J_a(arg1) J_b(arg2)``. ``J`` takes the x-jet of
    the argument named by the odd generator.
    """
    if len(arg1) != ctx.m or len(arg2) != ctx.m:
        raise ShapeMismatch(f"test sections must have {ctx.m} entries")
    cache: dict[tuple[int, int, int], DPoly] = {}

    def J(which: int, g: Generator) -> DPoly:
        key = (which, g.component, g.order)
        if key not in cache:
            arg = arg1 if which == 1 else arg2
            cache[key] = dx_power(arg[g.component - 1], g.order)
        return cache[key]

    families: set[tuple[Kind, Kind]] = set()
    out = []
    for entry in F:
        total = DPoly()
        for mono, c in entry.terms.items():
            if mono.odd_degree != 2:
                raise DegreeMismatch(f"term {mono} is not odd-quadratic")
            a, b = mono.odd
            families.add((a.kind, b.kind))
            if len(families) > 1:
                raise DegreeMismatch("polarization needs one odd-quadratic family")
            coefficient = DPoly.from_term(mono._replace(odd=()), c)
            if a.kind == b.kind:
                value = mul(J(1, a), J(2, b)) - mul(J(1, b), J(2, a))
            else:
                value = mul(J(1, a), J(2, b))
            total = total + mul(coefficient, value)
        out.append(total)
    return VecFun(tuple(out), Role.RESIDUAL)
