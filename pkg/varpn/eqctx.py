"""Evolution systems u_t = f and their total derivatives.

The internal coordinates are x, t and the jets u<j>_<k>; every t-derivative
of u is eliminated through the equation. A ``CoveringMode`` decides which odd
families may appear: p (the l*-covering), q (the l-covering) or both (their
Whitney product). The odd variables evolve by p_t = -l_f*(p) and
q_t = l_f(q).
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import TYPE_CHECKING

from .errors import IllegalGenerator
from .gpoly import (
    DPoly,
    Generator,
    Kind,
    Role,
    VecFun,
    derive,
    jet_generator,
)

if TYPE_CHECKING:
    from .cdop import CDOp

logger = logging.getLogger(__name__)

_ONE = DPoly.constant(1)


class CoveringMode(str, Enum):
    PLAIN = "plain"
    LSTAR = "lstar"
    L = "l"
    WHITNEY = "whitney"

    @property
    def odd_kinds(self) -> frozenset[Kind]:
        return _MODE_KINDS[self]

    def admits(self, g: Generator) -> bool:
        return not g.is_odd or g.kind in self.odd_kinds

    @classmethod
    def parse(cls, text: str) -> CoveringMode:
        try:
            return cls(text.strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise IllegalGenerator(f"unknown covering mode {text!r} (choose from {choices})") from None


_MODE_KINDS = {
    CoveringMode.PLAIN: frozenset(),
    CoveringMode.LSTAR: frozenset({Kind.P}),
    CoveringMode.L: frozenset({Kind.Q}),
    CoveringMode.WHITNEY: frozenset({Kind.P, Kind.Q}),
}


def mode_of(*values: DPoly | VecFun) -> CoveringMode:
    """The smallest covering mode whose algebra contains every value."""
    kinds: set[Kind] = set()
    for value in values:
        polys = value.entries if isinstance(value, VecFun) else (value,)
        for poly in polys:
            kinds.update(g.kind for g in poly.generators() if g.is_odd)
    for mode in CoveringMode:
        if kinds <= mode.odd_kinds:
            return mode
    return CoveringMode.WHITNEY


@dataclass(frozen=True)
class EquationContext:
    """An evolution system ``u_t = f`` in one space variable.

    The context itself never changes. It memoizes the t-derivatives of jets,
    and that memo is shared by every thread using the context (``hierarchy``
    evaluates its entries in a pool), so reads and writes go through a lock.
    """

    name: str
    f: VecFun
    _t_images: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _t_lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not len(self.f):
            raise IllegalGenerator("an evolution system needs at least one component")
        object.__setattr__(self, "f", self.f.with_role(Role.SECTION))
        for g in self.f.generator_set():
            if g.kind not in (Kind.X, Kind.T, Kind.U):
                raise IllegalGenerator(f"right-hand side may not mention {g}")
            if g.kind is Kind.U and g.component > self.m:
                raise IllegalGenerator(f"{g} exceeds the {self.m} unknowns of {self.name}")

    @property
    def m(self) -> int:
        return len(self.f)

    @property
    def order(self) -> int:
        return max(entry.max_order(Kind.U) for entry in self.f)

    @cached_property
    def ell_f(self) -> CDOp:
        from .cdop import linearize

        return linearize(self, CoveringMode.PLAIN, self.f)

    @cached_property
    def ell_f_star(self) -> CDOp:
        from .cdop import adjoint

        return adjoint(self.ell_f)

    @cached_property
    def _p_flow(self) -> VecFun:
        from .cdop import apply

        p0 = VecFun.generators(Kind.P, self.m)
        return -apply(self, CoveringMode.LSTAR, self.ell_f_star, p0)

    @cached_property
    def _q_flow(self) -> VecFun:
        from .cdop import apply

        q0 = VecFun.generators(Kind.Q, self.m)
        return apply(self, CoveringMode.L, self.ell_f, q0)

    def check(self, mode: CoveringMode, *values: DPoly | VecFun) -> None:
        """Raise ``IllegalGenerator`` when a value leaves the algebra of ``mode``."""
        for value in values:
            polys = value.entries if isinstance(value, VecFun) else (value,)
            for poly in polys:
                for g in poly.generators():
                    if not mode.admits(g):
                        raise IllegalGenerator(f"{g} is not a coordinate of the {mode.value} covering")
                    if g.is_jet and g.component > self.m:
                        raise IllegalGenerator(f"{g} exceeds the {self.m} unknowns of {self.name}")

    def dx(self, a: DPoly) -> DPoly:
        return dx(a)

    def total_x(self, mode: CoveringMode, a: DPoly) -> DPoly:
        self.check(mode, a)
        return self.dx(a)

    def total_x_power(self, mode: CoveringMode, a: DPoly, k: int) -> DPoly:
        if k < 0:
            raise ValueError("total_x_power needs k >= 0")
        self.check(mode, a)
        return dx_power(a, k)

    def dt(self, a: DPoly) -> DPoly:
        return derive(a, self._t_image)

    def total_t(self, mode: CoveringMode, a: DPoly) -> DPoly:
        self.check(mode, a)
        return self.dt(a)

    def u_t(self, j: int, k: int = 0) -> DPoly:
        """D_x^k(f^j), the value of the eliminated derivative u<j>_t differentiated k times."""
        return self._t_image(jet_generator(Kind.U, j, k))

    def _t_image(self, g: Generator) -> DPoly | None:
        if g.kind is Kind.T:
            return _ONE
        if not g.is_jet:
            return None
        with self._t_lock:
            cached = self._t_images.get(g)
        if cached is not None:
            return cached
        if g.order == 0:
            flow = {Kind.U: self.f, Kind.P: self._p_flow, Kind.Q: self._q_flow}[g.kind]
            value = flow[g.component - 1]
        else:
            value = self.dx(self._t_image(g._replace(order=g.order - 1)) or DPoly())
        # first writer wins; concurrent computations give equal values
        with self._t_lock:
            return self._t_images.setdefault(g, value)

    def __str__(self) -> str:
        return f"{self.name}: u_t = {self.f}"


def _x_image(g: Generator) -> DPoly | None:
    if g.kind is Kind.X:
        return _ONE
    if g.is_jet:
        return DPoly.of(g.shift())
    return None


def dx(a: DPoly) -> DPoly:
    """Total x-derivative without mode checks, extended to every odd family."""
    return derive(a, _x_image)


def dx_power(a: DPoly, k: int) -> DPoly:
    for _ in range(k):
        a = dx(a)
    return a


def total_x(ctx: EquationContext, mode: CoveringMode, a: DPoly) -> DPoly:
    return ctx.total_x(mode, a)


def total_t(ctx: EquationContext, mode: CoveringMode, a: DPoly) -> DPoly:
    return ctx.total_t(mode, a)


def total_x_power(ctx: EquationContext, mode: CoveringMode, a: DPoly, k: int) -> DPoly:
    return ctx.total_x_power(mode, a, k)
