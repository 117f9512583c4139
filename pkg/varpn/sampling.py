"""Seeded random polynomials, sections and operators.

Every draw takes an explicit ``random.Random`` so that a seed reproduces the
same objects bit for bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .cdop import CDOp, adjoint, compose
from .errors import SamplingError
from .gpoly import DPoly, Kind, Role, VecFun, jet_generator, mul, x


def rng_for(seed: int) -> random.Random:
    return random.Random(seed)


def random_rational(rng: random.Random, bound: int = 3) -> Fraction:
    value = 0
    while value == 0:
        value = rng.randint(-bound, bound)
    return Fraction(value, rng.choice((1, 1, 2, 3)))


def random_dpoly(
    rng: random.Random,
    m: int = 1,
    *,
    jet_order: int = 2,
    degree: int = 1,
    terms: int = 3,
    with_x: bool = False,
    odd_kind: Kind | None = None,
) -> DPoly:
    """A sum of ``terms`` random monomials in u-jets of bounded order and degree.

    With ``odd_kind`` every monomial is multiplied by one random odd jet.
    """
    total = DPoly()
    for _ in range(terms):
        term = DPoly.constant(random_rational(rng))
        for _ in range(rng.randint(0, degree)):
            term = mul(term, DPoly.of(jet_generator(Kind.U, rng.randint(1, m), rng.randint(0, jet_order))))
        if with_x and rng.random() < 0.3:
            term = mul(term, x())
        if odd_kind is not None:
            term = mul(term, DPoly.of(jet_generator(odd_kind, rng.randint(1, m), rng.randint(0, jet_order))))
        total = total + term
    return total


def random_section(
    rng: random.Random,
    m: int = 1,
    *,
    x_degree: int = 3,
    jet_order: int = 0,
    role: Role = Role.COVECTOR,
) -> VecFun:
    """Random polynomial test arguments; with ``jet_order`` > 0 they also depend on u."""
    entries = []
    for _ in range(m):
        total = DPoly()
        xk = DPoly.constant(1)
        for _ in range(x_degree + 1):
            if rng.random() < 0.8:
                total = total + xk.scale(random_rational(rng))
            xk = mul(xk, x())
        if jet_order:
            total = total + random_dpoly(rng, m, jet_order=jet_order, degree=1, terms=1)
        entries.append(total)
    return VecFun(tuple(entries), role)


def random_operator(
    rng: random.Random,
    m: int = 1,
    *,
    order: int = 2,
    jet_order: int = 2,
    degree: int = 1,
    density: float = 0.6,
) -> CDOp:
    matrix = []
    for _ in range(m):
        row = []
        for _ in range(m):
            entry = {}
            for k in range(order + 1):
                if rng.random() < density:
                    entry[k] = random_dpoly(rng, m, jet_order=jet_order, degree=degree, terms=2)
            row.append(entry)
        matrix.append(row)
    return CDOp.from_entries(matrix)


def random_skew_operator(rng: random.Random, m: int = 1, **kwargs) -> CDOp:
    """``C - C*`` for a random ``C``, redrawn until nonzero."""
    if m == 1 and kwargs.get("order", 2) == 0:
        raise SamplingError("scalar skew-adjoint operators have order at least 1")
    while True:
        C = random_operator(rng, m, **kwargs)
        A = C - adjoint(C)
        if not A.is_zero:
            return A


@dataclass(frozen=True)
class OperatorTriple:
    """Operators satisfying ``R o A = A o R*`` with A and B skew-adjoint."""

    A: CDOp
    B: CDOp
    R: CDOp


def random_pn_triple(
    rng: random.Random,
    m: int = 1,
    *,
    order: int = 1,
    jet_order: int = 1,
    degree: int = 1,
) -> OperatorTriple:
    """Draw ``A`` and ``S`` skew, set ``R = A o S`` and ``B`` to ``A`` or ``R o A``."""
    A = random_skew_operator(rng, m, order=order, jet_order=jet_order, degree=degree)
    S = random_skew_operator(rng, m, order=order, jet_order=jet_order, degree=degree)
    R = compose(A, S)
    B = A if rng.random() < 0.5 else compose(R, A)
    return OperatorTriple(A, B, R)
