"""Brackets of operators and the calculus around them.

Brackets are evaluators: they take explicit arguments and return the value of
the bracket on them. Whether a bracket vanishes is decided by evaluating it on
generic arguments, x-polynomial sections whose coefficients are parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .cdop import (
    CDOp,
    adjoint,
    apply,
    compose,
    ev_derive,
    ev_derive_vec,
    linearize,
    op_directional,
)
from .eqctx import CoveringMode, EquationContext, dx
from .errors import ShapeMismatch
from .gpoly import DPoly, Kind, Role, VecFun, mul, param, partial, x

logger = logging.getLogger(__name__)


def _check_square(ctx: EquationContext, *ops: CDOp) -> None:
    for op in ops:
        if op.shape != (ctx.m, ctx.m):
            raise ShapeMismatch(f"expected an {ctx.m}x{ctx.m} operator, got {op.shape}")


def jacobi(ctx: EquationContext, phi: VecFun, psi: VecFun, mode: CoveringMode = CoveringMode.PLAIN) -> VecFun:
    """The higher Jacobi bracket ``e_phi(psi) - e_psi(phi)``."""
    return ev_derive_vec(ctx, mode, phi, psi) - ev_derive_vec(ctx, mode, psi, phi)


def ell_op(ctx: EquationContext, mode: CoveringMode, A: CDOp, psi: VecFun, phi: VecFun) -> VecFun:
    """``l_{A,psi}(phi) = e_phi(A)(psi)``."""
    return apply(ctx, mode, op_directional(ctx, mode, A, phi), psi)


def ell_op_operator(ctx: EquationContext, mode: CoveringMode, A: CDOp, psi: VecFun) -> CDOp:
    """The operator ``phi -> l_{A,psi}(phi)`` written out explicitly."""
    if A.cols != len(psi):
        raise ShapeMismatch(f"operator with {A.cols} columns paired with a {len(psi)}-vector")
    derivatives: dict[tuple[int, int], DPoly] = {}

    def d(s: int, i: int) -> DPoly:
        if (s, i) not in derivatives:
            derivatives[(s, i)] = psi[s] if i == 0 else dx(d(s, i - 1))
        return derivatives[(s, i)]

    matrix: list[list[dict[int, DPoly]]] = [[{} for _ in range(ctx.m)] for _ in range(A.rows)]
    for r in range(A.rows):
        for s in range(A.cols):
            for i, a in A.entries[r][s]:
                for g in a.generators():
                    if g.kind is not Kind.U:
                        continue
                    slot = matrix[r][g.component - 1]
                    term = mul(partial(a, g), d(s, i))
                    slot[g.order] = slot[g.order] + term if g.order in slot else term
    return CDOp.from_entries(matrix)


def ell_star(
    ctx: EquationContext,
    mode: CoveringMode,
    A: CDOp,
    psi: VecFun,
    chi: VecFun,
    *,
    argument_first: bool = False,
) -> VecFun:
    """``l*_{A,psi}(chi)``, the adjoint of ``phi -> l_{A,psi}(phi)`` applied to ``chi``."""
    return apply(
        ctx, mode, adjoint(ell_op_operator(ctx, mode, A, psi)), chi, argument_first=argument_first
    )


def schouten(
    ctx: EquationContext,
    mode: CoveringMode,
    A: CDOp,
    B: CDOp,
    psi1: VecFun,
    psi2: VecFun,
) -> VecFun:
    """The variational Schouten bracket [[A, B]] evaluated on two covectors."""
    _check_square(ctx, A, B)
    Bpsi1, Bpsi2 = apply(ctx, mode, B, psi1), apply(ctx, mode, B, psi2)
    Apsi1, Apsi2 = apply(ctx, mode, A, psi1), apply(ctx, mode, A, psi2)
    total = (
        -ell_op(ctx, mode, A, psi1, Bpsi2)
        + ell_op(ctx, mode, A, psi2, Bpsi1)
        - apply(ctx, mode, A, ell_star(ctx, mode, B, psi1, psi2))
        - ell_op(ctx, mode, B, psi1, Apsi2)
        + ell_op(ctx, mode, B, psi2, Apsi1)
        - apply(ctx, mode, B, ell_star(ctx, mode, A, psi1, psi2))
    )
    return total.with_role(Role.RESIDUAL)


def fn_bracket(
    ctx: EquationContext,
    mode: CoveringMode,
    R: CDOp,
    S: CDOp,
    phi1: VecFun,
    phi2: VecFun,
) -> VecFun:
    """The Frolicher-Nijenhuis bracket [[R, S]] evaluated on two sections."""
    _check_square(ctx, R, S)
    Rphi1, Rphi2 = apply(ctx, mode, R, phi1), apply(ctx, mode, R, phi2)
    Sphi1, Sphi2 = apply(ctx, mode, S, phi1), apply(ctx, mode, S, phi2)
    total = (
        -ell_op(ctx, mode, R, phi1, Sphi2)
        - ell_op(ctx, mode, S, phi1, Rphi2)
        + ell_op(ctx, mode, R, phi2, Sphi1)
        + ell_op(ctx, mode, S, phi2, Rphi1)
        + apply(ctx, mode, R, ell_op(ctx, mode, S, phi1, phi2) - ell_op(ctx, mode, S, phi2, phi1))
        + apply(ctx, mode, S, ell_op(ctx, mode, R, phi1, phi2) - ell_op(ctx, mode, R, phi2, phi1))
    )
    return total.with_role(Role.RESIDUAL)


def fn_bracket_jacobi(
    ctx: EquationContext,
    R: CDOp,
    S: CDOp,
    phi1: VecFun,
    phi2: VecFun,
) -> VecFun:
    """The same bracket through Jacobi brackets of the images."""
    mode = CoveringMode.PLAIN
    Rphi1, Rphi2 = apply(ctx, mode, R, phi1), apply(ctx, mode, R, phi2)
    Sphi1, Sphi2 = apply(ctx, mode, S, phi1), apply(ctx, mode, S, phi2)
    total = (
        jacobi(ctx, Rphi1, Sphi2)
        + jacobi(ctx, Sphi1, Rphi2)
        - apply(ctx, mode, R, jacobi(ctx, phi1, Sphi2) + jacobi(ctx, Sphi1, phi2))
        - apply(ctx, mode, S, jacobi(ctx, phi1, Rphi2) + jacobi(ctx, Rphi1, phi2))
        + apply(ctx, mode, compose(R, S) + compose(S, R), jacobi(ctx, phi1, phi2))
    )
    return total.with_role(Role.RESIDUAL)


def c_compat(
    ctx: EquationContext,
    mode: CoveringMode,
    A: CDOp,
    R: CDOp,
    psi1: VecFun,
    psi2: VecFun,
) -> VecFun:
    """The compatibility operator C(A, R) evaluated on two covectors."""
    _check_square(ctx, A, R)
    Rs = adjoint(R)
    Apsi1, Apsi2 = apply(ctx, mode, A, psi1), apply(ctx, mode, A, psi2)
    total = (
        -ell_op(ctx, mode, Rs, psi1, Apsi2)
        + ell_op(ctx, mode, Rs, psi2, Apsi1)
        + ell_star(ctx, mode, A, psi1, apply(ctx, mode, Rs, psi2))
        + ell_star(ctx, mode, Rs, psi1, Apsi2)
        - apply(ctx, mode, Rs, ell_star(ctx, mode, A, psi1, psi2))
    )
    return total.with_role(Role.RESIDUAL)


def c_star(
    ctx: EquationContext,
    mode: CoveringMode,
    A: CDOp,
    R: CDOp,
    psi: VecFun,
    phi: VecFun,
) -> VecFun:
    """C*(A, R) evaluated on a covector and a section."""
    _check_square(ctx, A, R)
    Rs = adjoint(R)
    total = (
        -ell_op(ctx, mode, A, psi, apply(ctx, mode, R, phi))
        + ell_op(ctx, mode, R, phi, apply(ctx, mode, A, psi))
        + apply(ctx, mode, R, ell_op(ctx, mode, A, psi, phi))
        + apply(
            ctx,
            mode,
            A,
            ell_star(ctx, mode, R, phi, psi) - ell_op(ctx, mode, Rs, psi, phi),
        )
    )
    return total.with_role(Role.RESIDUAL)


def lie_on_sections(ctx: EquationContext, phi: VecFun, target: VecFun) -> VecFun:
    """``L_phi = e_phi - l_phi`` acting on a section."""
    mode = CoveringMode.PLAIN
    return (
        ev_derive_vec(ctx, mode, phi, target) - apply(ctx, mode, linearize(ctx, mode, phi), target)
    ).with_role(target.role)


def lie_on_covectors(ctx: EquationContext, phi: VecFun, target: VecFun) -> VecFun:
    """``L_phi = e_phi + l*_phi`` acting on a covector."""
    mode = CoveringMode.PLAIN
    ell_star_phi = adjoint(linearize(ctx, mode, phi))
    return (
        ev_derive_vec(ctx, mode, phi, target) + apply(ctx, mode, ell_star_phi, target)
    ).with_role(target.role)


@dataclass(frozen=True)
class Density:
    """A horizontal form ``value * dx``; equality only matters modulo total derivatives."""

    value: DPoly

    def __sub__(self, other: Density) -> Density:
        return Density(self.value - other.value)

    def __add__(self, other: Density) -> Density:
        return Density(self.value + other.value)


def pairing(psi: VecFun, phi: VecFun) -> Density:
    if len(psi) != len(phi):
        raise ShapeMismatch(f"cannot pair a {len(psi)}-covector with a {len(phi)}-section")
    total = DPoly()
    for a, b in zip(psi, phi):
        total = total + mul(a, b)
    return Density(total)


def euler_operator(ctx: EquationContext, omega: Density) -> VecFun:
    """Variational derivative: ``sum_k (-D)^k d omega / d u^j_k`` per component."""
    ctx.check(CoveringMode.PLAIN, omega.value)
    out = []
    for j in range(1, ctx.m + 1):
        total = DPoly()
        for g in omega.value.generators():
            if g.kind is not Kind.U or g.component != j:
                continue
            term = partial(omega.value, g)
            for _ in range(g.order):
                term = -dx(term)
            total = total + term
        out.append(total)
    return VecFun(tuple(out), Role.COVECTOR)


def is_divergence(ctx: EquationContext, omega: Density) -> bool:
    """True when ``omega`` is a total x-derivative."""
    return euler_operator(ctx, omega).is_zero


def generic_argument(m: int, tag: str, degree: int, role: Role = Role.COVECTOR) -> VecFun:
    """A section with entries ``sum_k {tag_j_k} x^k / k!`` for k up to ``degree``."""
    entries = []
    for j in range(1, m + 1):
        total = DPoly()
        xk = DPoly.constant(1)
        for k in range(degree + 1):
            total = total + mul(param(f"{tag}_{j}_{k}"), xk).scale(Fraction(1, factorial(k)))
            xk = mul(xk, x())
        entries.append(total)
    return VecFun(tuple(entries), role)


def generic_degree(ctx: EquationContext, *ops: CDOp, slack: int = 2) -> int:
    """Degree of generic arguments that makes a vanishing test conclusive."""
    return sum(max(op.order, 0) for op in ops) + ctx.order + slack
