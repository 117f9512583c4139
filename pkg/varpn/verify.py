"""Predicates on equations, operators and pairs of operators.

Every predicate returns a ``Verdict``. A failing verdict carries a nonzero
witness (the residual that should have vanished) and the route that produced
it, so two routes to the same fact can be compared.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence, Union

from .brackets import (
    Density,
    c_compat,
    euler_operator,
    fn_bracket,
    generic_argument,
    generic_degree,
    schouten,
)
from .cdop import (
    CDOp,
    OpPair,
    adjoint,
    apply,
    compose,
    ell_E_apply,
    op_total_t,
)
from .config import Settings, get_settings
from .coverings import bracket_hn, to_shadow
from .eqctx import CoveringMode, EquationContext
from .errors import PreconditionFailed
from .gpoly import DPoly, Role, VecFun
from .sampling import random_section, rng_for

logger = logging.getLogger(__name__)

Witness = Union[VecFun, DPoly, CDOp]


def _nonzero(witness: Witness | None) -> bool:
    if witness is None:
        return False
    return not witness.is_zero


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: Witness | None = None
    route: str = ""

    def __post_init__(self) -> None:
        if not self.holds and not _nonzero(self.witness):
            raise ValueError("a failing verdict needs a nonzero witness")

    def __bool__(self) -> bool:
        return self.holds

    @classmethod
    def check(cls, residual: Witness, route: str) -> Verdict:
        if residual.is_zero:
            return cls(True, None, route)
        return cls(False, residual, route)

    def witness_text(self) -> str | None:
        return None if self.witness is None else str(self.witness)


@dataclass(frozen=True)
class ConservationLaw:
    """The horizontal form ``X dx + T dt``."""

    X: DPoly
    T: DPoly


def _settings(settings: Settings | None) -> Settings:
    return settings if settings is not None else get_settings()


def is_symmetry(ctx: EquationContext, phi: VecFun) -> Verdict:
    return Verdict.check(ell_E_apply(ctx, CoveringMode.PLAIN, phi), "ell_E")


def cosymmetry_residual(ctx: EquationContext, psi: VecFun) -> VecFun:
    mode = CoveringMode.PLAIN
    flow = apply(ctx, mode, ctx.ell_f_star, psi)
    return VecFun(tuple(ctx.total_t(mode, a) + b for a, b in zip(psi, flow)), Role.RESIDUAL)


def is_cosymmetry(ctx: EquationContext, psi: VecFun) -> Verdict:
    return Verdict.check(cosymmetry_residual(ctx, psi), "ell_E_star")


def is_conservation_law(ctx: EquationContext, cl: ConservationLaw) -> Verdict:
    mode = CoveringMode.PLAIN
    residual = ctx.total_t(mode, cl.X) - ctx.total_x(mode, cl.T)
    return Verdict.check(residual, "closedness")


def generating_function(ctx: EquationContext, cl: ConservationLaw) -> VecFun:
    return euler_operator(ctx, Density(cl.X))


def vanishes_generically(
    ctx: EquationContext,
    evaluator: OpPair,
    degree: int,
    route: str | None = None,
) -> Verdict:
    """Evaluate a bilinear evaluator on two generic arguments of the given x-degree."""
    args = [
        generic_argument(ctx.m, tag, degree, role)
        for tag, role in zip(("a", "b"), evaluator.roles)
    ]
    residual = evaluator(*args)
    logger.debug("%s on generic arguments of degree %d: %d terms", evaluator.name, degree,
                 sum(len(e) for e in residual))
    return Verdict.check(residual, route or evaluator.name)


def schouten_pair(ctx: EquationContext, A: CDOp, B: CDOp) -> OpPair:
    mode = CoveringMode.PLAIN
    return OpPair(
        "schouten",
        lambda psi1, psi2: schouten(ctx, mode, A, B, psi1, psi2),
        (Role.COVECTOR, Role.COVECTOR),
    )


def fn_pair(ctx: EquationContext, R: CDOp, S: CDOp) -> OpPair:
    mode = CoveringMode.PLAIN
    return OpPair(
        "fn",
        lambda phi1, phi2: fn_bracket(ctx, mode, R, S, phi1, phi2),
        (Role.SECTION, Role.SECTION),
    )


def c_compat_pair(ctx: EquationContext, A: CDOp, R: CDOp) -> OpPair:
    mode = CoveringMode.PLAIN
    return OpPair(
        "c_compat",
        lambda psi1, psi2: c_compat(ctx, mode, A, R, psi1, psi2),
        (Role.COVECTOR, Role.COVECTOR),
    )


class InvarianceKind(str, Enum):
    HAMILTONIAN = "hamiltonian"
    RECURSION = "recursion"


def invariance_residual(ctx: EquationContext, A: CDOp, kind: InvarianceKind) -> CDOp:
    """Operator form of invariance under the flow of the equation.

    Hamiltonian: ``D_t(A) - l_f o A - A o l_f*``; recursion:
    ``D_t(R) - l_f o R + R o l_f``.
    """
    dt_A = op_total_t(ctx, A)
    if kind is InvarianceKind.HAMILTONIAN:
        return dt_A - compose(ctx.ell_f, A) - compose(A, ctx.ell_f_star)
    return dt_A - compose(ctx.ell_f, A) + compose(A, ctx.ell_f)


def is_invariant(ctx: EquationContext, A: CDOp, kind: InvarianceKind) -> Verdict:
    return Verdict.check(invariance_residual(ctx, A, kind), "operator")


def _shadow_invariance(ctx: EquationContext, A: CDOp, covering: CoveringMode) -> VecFun:
    return ell_E_apply(ctx, covering, to_shadow(A, covering).value)


def is_hamiltonian(ctx: EquationContext, A: CDOp, settings: Settings | None = None) -> Verdict:
    settings = _settings(settings)
    skew_defect = A + adjoint(A)
    if not skew_defect.is_zero:
        return Verdict(False, skew_defect, "skew")
    residual = _shadow_invariance(ctx, A, CoveringMode.LSTAR)
    if not residual.is_zero:
        return Verdict(False, residual, "shadow-lstar")
    degree = generic_degree(ctx, A, A, slack=settings.generic_slack)
    verdict = vanishes_generically(ctx, schouten_pair(ctx, A, A), degree, "schouten")
    logger.info("is_hamiltonian(%s): %s via %s", A, verdict.holds, verdict.route)
    return verdict


def is_nijenhuis_recursion(ctx: EquationContext, R: CDOp, settings: Settings | None = None) -> Verdict:
    settings = _settings(settings)
    residual = _shadow_invariance(ctx, R, CoveringMode.L)
    if not residual.is_zero:
        return Verdict(False, residual, "shadow-l")
    degree = generic_degree(ctx, R, R, slack=settings.generic_slack)
    verdict = vanishes_generically(ctx, fn_pair(ctx, R, R), degree, "fn")
    logger.info("is_nijenhuis_recursion(%s): %s via %s", R, verdict.holds, verdict.route)
    return verdict


def is_pn_pair(ctx: EquationContext, A: CDOp, R: CDOp, settings: Settings | None = None) -> Verdict:
    settings = _settings(settings)
    for verdict in (is_hamiltonian(ctx, A, settings), is_nijenhuis_recursion(ctx, R, settings)):
        if not verdict:
            return verdict
    symmetry_defect = compose(R, A) - compose(A, adjoint(R))
    if not symmetry_defect.is_zero:
        return Verdict(False, symmetry_defect, "R.A=A.R*")
    degree = generic_degree(ctx, A, R, slack=settings.generic_slack)
    verdict = vanishes_generically(ctx, c_compat_pair(ctx, A, R), degree, "c_compat")
    if not verdict:
        return verdict
    mixed = bracket_hn(ctx, to_shadow(A, CoveringMode.LSTAR), to_shadow(R, CoveringMode.L))
    return Verdict.check(mixed, "bracket_hn")


@dataclass(frozen=True)
class Hierarchy:
    operators: tuple[CDOp, ...]
    matrix: tuple[tuple[Verdict, ...], ...]
    auxiliary: dict[tuple[int, int], Verdict] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(v.holds for row in self.matrix for v in row) and all(
            v.holds for v in self.auxiliary.values()
        )


def hierarchy(
    ctx: EquationContext,
    A: CDOp,
    R: CDOp,
    n: int,
    *,
    check_auxiliary: bool = False,
    settings: Settings | None = None,
) -> Hierarchy:
    """The operators ``R^i A`` for i = 0..n and their pairwise compatibility.

    The diagonal holds ``is_hamiltonian(R^i A)``; off-diagonal entries are the
    generic vanishing of ``[[R^i A, R^j A]]``. With ``check_auxiliary`` the
    verdicts for ``A(C(R^i A, R^j))`` with i + j <= n, j >= 1 are added.
    """
    settings = _settings(settings)
    if n < 0:
        raise ValueError("hierarchy length must be non-negative")
    if n > 0:
        precondition = is_pn_pair(ctx, A, R, settings)
        if not precondition:
            raise PreconditionFailed(
                f"({A}, {R}) is not a Poisson-Nijenhuis pair: {precondition.route} fails"
            )
    operators = [A]
    for _ in range(n):
        operators.append(compose(R, operators[-1]))

    def entry(i: int, j: int) -> Verdict:
        if i == j:
            return is_hamiltonian(ctx, operators[i], settings)
        degree = generic_degree(ctx, operators[i], operators[j], slack=settings.generic_slack)
        return vanishes_generically(ctx, schouten_pair(ctx, operators[i], operators[j]), degree)

    pairs = [(i, j) for i in range(n + 1) for j in range(i, n + 1)]
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        results = dict(zip(pairs, pool.map(lambda ij: entry(*ij), pairs)))
    matrix = tuple(
        tuple(results[(min(i, j), max(i, j))] for j in range(n + 1)) for i in range(n + 1)
    )

    auxiliary: dict[tuple[int, int], Verdict] = {}
    if check_auxiliary:
        mode = CoveringMode.PLAIN
        for i in range(n + 1):
            R_j = R
            for j in range(1, n - i + 1):
                Ri_A, Rj = operators[i], R_j
                degree = generic_degree(ctx, A, Ri_A, Rj, slack=settings.generic_slack)
                evaluator = OpPair(
                    "A(C)",
                    lambda psi1, psi2, Ri_A=Ri_A, Rj=Rj: apply(
                        ctx, mode, A, c_compat(ctx, mode, Ri_A, Rj, psi1, psi2)
                    ),
                    (Role.COVECTOR, Role.COVECTOR),
                )
                auxiliary[(i, j)] = vanishes_generically(ctx, evaluator, degree)
                R_j = compose(R, R_j)
    logger.info("hierarchy of length %d computed", n + 1)
    return Hierarchy(tuple(operators), matrix, auxiliary)


def hamiltonian_symmetry(ctx: EquationContext, A: CDOp, psi: VecFun) -> tuple[VecFun, Verdict]:
    """The image ``A psi`` of a cosymmetry and whether it is a symmetry."""
    phi = apply(ctx, CoveringMode.PLAIN, A, psi).with_role(Role.SECTION)
    return phi, is_symmetry(ctx, phi)


def symmetry_tower(ctx: EquationContext, R: CDOp, phi: VecFun, n: int) -> list[tuple[VecFun, Verdict]]:
    """``R^i phi`` for i = 0..n, each with its symmetry verdict."""
    tower = []
    current = phi.with_role(Role.SECTION)
    for _ in range(n + 1):
        tower.append((current, is_symmetry(ctx, current)))
        current = apply(ctx, CoveringMode.PLAIN, R, current)
    return tower


# Proof identities as data: each term is (coefficient, label, evaluator).

Evaluator = Callable[[EquationContext, CDOp, CDOp, CDOp, VecFun, VecFun], VecFun]


@dataclass(frozen=True)
class IdentityTerm:
    coefficient: Fraction
    label: str
    evaluate: Evaluator


@dataclass(frozen=True)
class Identity:
    name: str
    terms: tuple[IdentityTerm, ...]

    def residual(self, ctx: EquationContext, A: CDOp, B: CDOp, R: CDOp, psi1: VecFun, psi2: VecFun) -> VecFun:
        total = VecFun.zero(ctx.m, Role.RESIDUAL)
        for term in self.terms:
            total = total + term.evaluate(ctx, A, B, R, psi1, psi2).scale(term.coefficient)
        return total

    def flip(self, index: int) -> Identity:
        """The identity with the sign of one term reversed."""
        terms = list(self.terms)
        t = terms[index]
        terms[index] = IdentityTerm(-t.coefficient, t.label, t.evaluate)
        return Identity(f"{self.name}~{index}", tuple(terms))


_P = CoveringMode.PLAIN


def _sch(X: Callable, Y: Callable, first: Callable | None = None, second: Callable | None = None,
         outer: Callable | None = None) -> Evaluator:
    """Schouten bracket of operators built from (A, B, R), with optional argument maps and outer operator."""

    def evaluate(ctx, A, B, R, psi1, psi2):
        a1 = first(ctx, A, B, R, psi1) if first else psi1
        a2 = second(ctx, A, B, R, psi2) if second else psi2
        value = schouten(ctx, _P, X(A, B, R), Y(A, B, R), a1, a2)
        return apply(ctx, _P, outer(A, B, R), value) if outer else value

    return evaluate


def _fn(R_of: Callable, first: Callable, second: Callable) -> Evaluator:
    def evaluate(ctx, A, B, R, psi1, psi2):
        phi1 = apply(ctx, _P, first(A, B, R), psi1).with_role(Role.SECTION)
        phi2 = apply(ctx, _P, second(A, B, R), psi2).with_role(Role.SECTION)
        S = R_of(A, B, R)
        return fn_bracket(ctx, _P, S, S, phi1, phi2)

    return evaluate


def _cc(X: Callable, Y: Callable, first: Callable | None = None, second: Callable | None = None,
        outer: Callable | None = None) -> Evaluator:
    def evaluate(ctx, A, B, R, psi1, psi2):
        a1 = first(ctx, A, B, R, psi1) if first else psi1
        a2 = second(ctx, A, B, R, psi2) if second else psi2
        value = c_compat(ctx, _P, X(A, B, R), Y(A, B, R), a1, a2)
        return apply(ctx, _P, outer(A, B, R), value) if outer else value

    return evaluate


def _r_star(ctx, A, B, R, psi):
    return apply(ctx, _P, adjoint(R), psi)


def _A(A, B, R):
    return A


def _B(A, B, R):
    return B


def _R(A, B, R):
    return R


def _RA(A, B, R):
    return compose(R, A)


def _RB(A, B, R):
    return compose(R, B)


def _RR(A, B, R):
    return compose(R, R)


def _R_star(A, B, R):
    return adjoint(R)


def _t(c, label: str, evaluator: Evaluator) -> IdentityTerm:
    return IdentityTerm(Fraction(c), label, evaluator)


IDENTITIES: tuple[Identity, ...] = (
    Identity("square", (
        _t(1, "[[RA,RA]]", _sch(_RA, _RA)),
        _t(-2, "R[[A,RA]]", _sch(_A, _RA, outer=_R)),
        _t(1, "R^2[[A,A]]", _sch(_A, _A, outer=_RR)),
        _t(-1, "[R,R](A.,A.)", _fn(_R, _A, _A)),
    )),
    Identity("mixed", (
        _t(2, "[[A,RA]]", _sch(_A, _RA)),
        _t(-1, "[[A,A]](R*.,.)", _sch(_A, _A, first=_r_star)),
        _t(-1, "[[A,A]](.,R*.)", _sch(_A, _A, second=_r_star)),
        _t(-2, "A(C(A,R))", _cc(_A, _R, outer=_A)),
    )),
    Identity("square-polarized", (
        _t(1, "[[RA,RB]]", _sch(_RA, _RB)),
        _t(-1, "R[[RA,B]]", _sch(_RA, _B, outer=_R)),
        _t(-1, "R[[A,RB]]", _sch(_A, _RB, outer=_R)),
        _t(1, "R^2[[A,B]]", _sch(_A, _B, outer=_RR)),
        _t(Fraction(-1, 2), "[R,R](A.,B.)", _fn(_R, _A, _B)),
        _t(Fraction(-1, 2), "[R,R](B.,A.)", _fn(_R, _B, _A)),
    )),
    Identity("mixed-polarized", (
        _t(1, "[[RA,B]]", _sch(_RA, _B)),
        _t(1, "[[A,RB]]", _sch(_A, _RB)),
        _t(-1, "[[A,B]](R*.,.)", _sch(_A, _B, first=_r_star)),
        _t(-1, "[[A,B]](.,R*.)", _sch(_A, _B, second=_r_star)),
        _t(-1, "A(C(B,R))", _cc(_B, _R, outer=_A)),
        _t(-1, "B(C(A,R))", _cc(_A, _R, outer=_B)),
    )),
    Identity("compatibility-shift", (
        _t(1, "C(RA,R)", _cc(_RA, _R)),
        _t(1, "C(A,R^2)", _cc(_A, _RR)),
        _t(-1, "C(A,R)(R*.,.)", _cc(_A, _R, first=_r_star)),
        _t(-1, "C(A,R)(.,R*.)", _cc(_A, _R, second=_r_star)),
        _t(-1, "R*(C(A,R))", _cc(_A, _R, outer=_R_star)),
    )),
)


def identity_suite(
    ctx: EquationContext,
    A: CDOp,
    B: CDOp,
    R: CDOp,
    trials: int,
    *,
    seed: int = 0,
    identities: Sequence[Identity] = IDENTITIES,
    x_degree: int = 4,
) -> Verdict:
    """Evaluate each identity on ``trials`` random pairs of test covectors.

    The identities hold for skew-adjoint A and B when ``R o A = A o R*``
    and ``R o B = B o R*``.
    """
    rng = rng_for(seed)
    for trial in range(trials):
        psi1 = random_section(rng, ctx.m, x_degree=x_degree)
        psi2 = random_section(rng, ctx.m, x_degree=x_degree)
        for identity in identities:
            residual = identity.residual(ctx, A, B, R, psi1, psi2)
            if not residual.is_zero:
                logger.debug("identity %s fails on trial %d", identity.name, trial)
                return Verdict(False, residual, identity.name)
    return Verdict(True, None, "+".join(i.name for i in identities))

