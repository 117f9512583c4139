"""Canonical graded differential polynomials.

A ``DPoly`` is a finite sum of monomials in even jet variables ``u<j>_<k>``,
the base coordinates ``x`` and ``t``, undetermined parameters, and the odd
covering variables ``p<j>_<k>`` / ``q<j>_<k>``. Coefficients are exact
``Fraction`` values. The representation is canonical: two polynomials are
mathematically equal exactly when their term maps are equal.

Odd generators anticommute. Every monomial keeps its odd factors in ascending
generator order; products re-sort them and pick up the Koszul sign.
Derivatives with respect to odd generators are left derivatives.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

from .errors import NotLinear, ParityMismatch, ShapeMismatch

logger = logging.getLogger(__name__)

Scalar = Union[int, Fraction]


class Kind(IntEnum):
    """Generator kinds, in their canonical sort order."""

    X = 0
    T = 1
    U = 2
    P = 3
    Q = 4
    PARAM = 5


ODD_KINDS = frozenset({Kind.P, Kind.Q})
JET_KINDS = frozenset({Kind.U, Kind.P, Kind.Q})
_PREFIX = {Kind.U: "u", Kind.P: "p", Kind.Q: "q"}


class Generator(NamedTuple):
    """A single coordinate; tuple order is the canonical total order."""

    kind: Kind
    component: int = 0
    order: int = 0
    name: str = ""

    @property
    def is_odd(self) -> bool:
        return self.kind in ODD_KINDS

    @property
    def is_jet(self) -> bool:
        return self.kind in JET_KINDS

    def shift(self, k: int = 1) -> Generator:
        """The same jet variable differentiated ``k`` more times in x."""
        return self._replace(order=self.order + k)

    def __str__(self) -> str:
        if self.kind is Kind.X:
            return "x"
        if self.kind is Kind.T:
            return "t"
        if self.kind is Kind.PARAM:
            return "{" + self.name + "}"
        return f"{_PREFIX[self.kind]}{self.component}_{self.order}"


X_GEN = Generator(Kind.X)
T_GEN = Generator(Kind.T)


def jet_generator(kind: Kind, component: int, order: int) -> Generator:
    if kind not in JET_KINDS:
        raise ValueError(f"{kind!r} is not a jet kind")
    if component < 1 or order < 0:
        raise ValueError(f"bad jet index ({component}, {order})")
    return Generator(kind, component, order)


def param_generator(name: str) -> Generator:
    return Generator(Kind.PARAM, 0, 0, name)


class Monomial(NamedTuple):
    """Commuting part as sorted (generator, exponent) pairs, odd part sorted."""

    even: tuple[tuple[Generator, int], ...] = ()
    odd: tuple[Generator, ...] = ()

    @property
    def odd_degree(self) -> int:
        return len(self.odd)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.even) + len(self.odd)

    def sort_key(self) -> tuple:
        # graded lexicographic
        return (self.degree, self.even, self.odd)

    def generators(self) -> Iterator[Generator]:
        for g, _ in self.even:
            yield g
        yield from self.odd

    def exponent(self, g: Generator) -> int:
        for h, e in self.even:
            if h == g:
                return e
        return 0

    def without_params(self) -> tuple[Monomial, tuple[tuple[Generator, int], ...]]:
        """Split off the parameter factors."""
        params = tuple((g, e) for g, e in self.even if g.kind is Kind.PARAM)
        if not params:
            return self, ()
        rest = tuple((g, e) for g, e in self.even if g.kind is not Kind.PARAM)
        return Monomial(rest, self.odd), params

    def __str__(self) -> str:
        factors = [str(g) if e == 1 else f"{g}^{e}" for g, e in self.even]
        factors.extend(str(g) for g in self.odd)
        return "*".join(factors) if factors else "1"

    @classmethod
    def from_factors(
        cls, even: Mapping[Generator, int], odd: Sequence[Generator]
    ) -> tuple[int, Monomial] | None:
        """Build a canonical monomial from an unsorted odd factor list.

        Returns the Koszul sign of the sorting permutation together with the
        monomial, or ``None`` when an odd factor repeats.
        """
        if len(set(odd)) != len(odd):
            return None
        inversions = sum(1 for i, a in enumerate(odd) for b in odd[i + 1:] if a > b)
        sign = -1 if inversions % 2 else 1
        even_part = tuple(sorted((g, e) for g, e in even.items() if e))
        return sign, cls(even_part, tuple(sorted(odd)))


ONE = Monomial()


def _merge_even(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for g, e in b:
        exps[g] = exps.get(g, 0) + e
    return tuple(sorted(exps.items()))


def _merge_odd(a: tuple, b: tuple) -> tuple[int, tuple] | None:
    if not a:
        return 1, b
    if not b:
        return 1, a
    inversions = 0
    for g in a:
        i = bisect.bisect_left(b, g)
        if i < len(b) and b[i] == g:
            return None
        inversions += i
    return (-1 if inversions % 2 else 1), tuple(sorted(a + b))


def monomial_product(m: Monomial, n: Monomial) -> tuple[int, Monomial] | None:
    """Signed canonical product ``m*n``; ``None`` when it vanishes."""
    merged = _merge_odd(m.odd, n.odd)
    if merged is None:
        return None
    sign, odd = merged
    return sign, Monomial(_merge_even(m.even, n.even), odd)


def _accumulate(acc: dict, mono: Monomial, c: Fraction) -> None:
    acc[mono] = acc.get(mono, 0) + c


def _pruned(acc: dict) -> dict:
    return {m: Fraction(c) for m, c in acc.items() if c}


def format_rational(c: Fraction) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class DPoly:
    """Immutable canonical polynomial over exact rationals."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Scalar] | None = None):
        self._terms = {m: Fraction(c) for m, c in (terms or {}).items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> DPoly:
        poly = cls.__new__(cls)
        poly._terms = terms
        poly._hash = None
        return poly

    @classmethod
    def constant(cls, c: Scalar) -> DPoly:
        return cls._raw({ONE: Fraction(c)} if c else {})

    @classmethod
    def of(cls, g: Generator) -> DPoly:
        if g.is_odd:
            return cls._raw({Monomial((), (g,)): Fraction(1)})
        return cls._raw({Monomial(((g, 1),), ()): Fraction(1)})

    @classmethod
    def from_term(cls, mono: Monomial, c: Scalar = 1) -> DPoly:
        return cls._raw({mono: Fraction(c)} if c else {})

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def items(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending graded-lexicographic order."""
        return sorted(self._terms.items(), key=lambda kv: kv[0].sort_key(), reverse=True)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get(ONE, Fraction(0))

    def odd_degrees(self) -> frozenset[int]:
        return frozenset(m.odd_degree for m in self._terms)

    @property
    def parity(self) -> int | None:
        """0 or 1 for parity-homogeneous polynomials, ``None`` otherwise."""
        parities = {d % 2 for d in self.odd_degrees()}
        if not parities:
            return 0
        return parities.pop() if len(parities) == 1 else None

    def generators(self) -> frozenset[Generator]:
        return frozenset(g for m in self._terms for g in m.generators())

    def params(self) -> frozenset[Generator]:
        return frozenset(g for g in self.generators() if g.kind is Kind.PARAM)

    def max_order(self, kind: Kind = Kind.U, component: int | None = None) -> int:
        """Highest jet order of ``kind`` present, or -1."""
        orders = [
            g.order
            for g in self.generators()
            if g.kind is kind and (component is None or g.component == component)
        ]
        return max(orders, default=-1)

    def __eq__(self, other: object) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            # constants hash as their value, since they compare equal to scalars
            if not self._terms:
                self._hash = hash(0)
            elif len(self._terms) == 1 and ONE in self._terms:
                self._hash = hash(self._terms[ONE])
            else:
                self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __add__(self, other: object) -> DPoly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> DPoly:
        return DPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: object) -> DPoly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other: object) -> DPoly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(other, -self)

    def __mul__(self, other: object) -> DPoly:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return mul(self, other)

    def __rmul__(self, other: object) -> DPoly:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int) -> DPoly:
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result = DPoly.constant(1)
        for _ in range(n):
            result = mul(result, self)
        return result

    def scale(self, c: Scalar) -> DPoly:
        if not c:
            return ZERO
        c = Fraction(c)
        return DPoly._raw({m: c * v for m, v in self._terms.items()})

    def __repr__(self) -> str:
        return f"DPoly('{self}')"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for mono, c in self.items():
            if mono == ONE:
                text = format_rational(c)
            elif c == 1:
                text = str(mono)
            elif c == -1:
                text = f"-{mono}"
            else:
                text = f"{format_rational(c)}*{mono}"
            if not out:
                out.append(text)
            elif text.startswith("-"):
                out.append(f" - {text[1:]}")
            else:
                out.append(f" + {text}")
        return "".join(out)


ZERO = DPoly()


def _coerce(value: object) -> DPoly | None:
    if isinstance(value, DPoly):
        return value
    if isinstance(value, (int, Fraction)):
        return DPoly.constant(value)
    return None


def as_dpoly(value: DPoly | Scalar) -> DPoly:
    poly = _coerce(value)
    if poly is None:
        raise TypeError(f"cannot interpret {value!r} as a polynomial")
    return poly


def add(a: DPoly, b: DPoly) -> DPoly:
    if not a._terms:
        return b
    if not b._terms:
        return a
    acc = dict(a._terms)
    for m, c in b._terms.items():
        _accumulate(acc, m, c)
    return DPoly._raw(_pruned(acc))


def mul(a: DPoly, b: DPoly) -> DPoly:
    if not a._terms or not b._terms:
        return ZERO
    acc: dict = {}
    for m1, c1 in a._terms.items():
        for m2, c2 in b._terms.items():
            prod = monomial_product(m1, m2)
            if prod is None:
                continue
            sign, mono = prod
            _accumulate(acc, mono, sign * c1 * c2)
    return DPoly._raw(_pruned(acc))


def _drop_even(even: tuple, g: Generator) -> tuple[tuple, int]:
    out = []
    exponent = 0
    for h, e in even:
        if h == g:
            exponent = e
            if e > 1:
                out.append((h, e - 1))
        else:
            out.append((h, e))
    return tuple(out), exponent


def partial(a: DPoly, g: Generator) -> DPoly:
    """Left graded derivative of ``a`` with respect to ``g``."""
    acc: dict = {}
    for mono, c in a._terms.items():
        if g.is_odd:
            if g not in mono.odd:
                continue
            i = mono.odd.index(g)
            sign = -1 if i % 2 else 1
            rest = Monomial(mono.even, mono.odd[:i] + mono.odd[i + 1:])
            _accumulate(acc, rest, sign * c)
        else:
            even, e = _drop_even(mono.even, g)
            if e:
                _accumulate(acc, Monomial(even, mono.odd), e * c)
    return DPoly._raw(_pruned(acc))


def derive(a: DPoly, image: Callable[[Generator], DPoly | None]) -> DPoly:
    """Apply the derivation determined by its values on generators.

    Computes ``sum_g image(g) * d_g(a)`` with left derivatives; the same
    formula serves even derivations (total derivatives) and odd ones
    (evolutionary fields with odd generating sections).
    """
    images: dict[Generator, DPoly | None] = {}

    def lookup(g: Generator) -> DPoly | None:
        if g not in images:
            img = image(g)
            images[g] = img if img else None
        return images[g]

    acc: dict = {}
    for mono, c in a._terms.items():
        for g, _ in mono.even:
            img = lookup(g)
            if img is None:
                continue
            even, e = _drop_even(mono.even, g)
            _absorb(acc, img, Monomial(even, mono.odd), e * c)
        for i, g in enumerate(mono.odd):
            img = lookup(g)
            if img is None:
                continue
            rest = Monomial(mono.even, mono.odd[:i] + mono.odd[i + 1:])
            _absorb(acc, img, rest, -c if i % 2 else c)
    return DPoly._raw(_pruned(acc))


def _absorb(acc: dict, left: DPoly, right: Monomial, c: Fraction) -> None:
    for m, v in left._terms.items():
        prod = monomial_product(m, right)
        if prod is None:
            continue
        sign, mono = prod
        _accumulate(acc, mono, sign * v * c)


def substitute(
    a: DPoly, mapping: Mapping[Generator, DPoly | Scalar], *, polarization: bool = False
) -> DPoly:
    """Simultaneous substitution of generators, re-canonicalized.

    Images must have the parity of the generator they replace. With
    ``polarization=True`` odd generators may be sent to even values.
    """
    images = {g: as_dpoly(v) for g, v in mapping.items()}
    for g, img in images.items():
        if img.is_zero:
            continue
        parity = img.parity
        if parity is None or (parity != int(g.is_odd) and not (polarization and g.is_odd)):
            raise ParityMismatch(f"cannot substitute {img} for {g}")
    if not images:
        return a
    result: dict = {}
    for mono, c in a._terms.items():
        if not any(g in images for g in mono.generators()):
            _accumulate(result, mono, c)
            continue
        term = DPoly.constant(c)
        for g, e in mono.even:
            term = mul(term, images.get(g, DPoly.of(g)) ** e)
        for g in mono.odd:
            term = mul(term, images.get(g, DPoly.of(g)))
        for m, v in term._terms.items():
            _accumulate(result, m, v)
    return DPoly._raw(_pruned(result))


def x() -> DPoly:
    return DPoly.of(X_GEN)


def t() -> DPoly:
    return DPoly.of(T_GEN)


def u(j: int, k: int = 0) -> DPoly:
    return DPoly.of(jet_generator(Kind.U, j, k))


def p(j: int, k: int = 0) -> DPoly:
    return DPoly.of(jet_generator(Kind.P, j, k))


def q(j: int, k: int = 0) -> DPoly:
    return DPoly.of(jet_generator(Kind.Q, j, k))


def param(name: str) -> DPoly:
    return DPoly.of(param_generator(name))


class Role(str, Enum):
    SECTION = "section"
    COVECTOR = "covector"
    SHADOW_LSTAR = "shadow-lstar"
    SHADOW_L = "shadow-l"
    RESIDUAL = "residual"


_SHADOW_KIND = {Role.SHADOW_LSTAR: Kind.P, Role.SHADOW_L: Kind.Q}


@dataclass(frozen=True)
class VecFun:
    """An m-tuple of polynomials: a section, covector, shadow or residual."""

    entries: tuple[DPoly, ...]
    role: Role = Role.SECTION

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(as_dpoly(e) for e in self.entries))

    @classmethod
    def of(cls, *entries: DPoly | Scalar, role: Role = Role.SECTION) -> VecFun:
        return cls(tuple(as_dpoly(e) for e in entries), role)

    @classmethod
    def zero(cls, m: int, role: Role = Role.SECTION) -> VecFun:
        return cls((ZERO,) * m, role)

    @classmethod
    def generators(cls, kind: Kind, m: int, order: int = 0, role: Role = Role.SECTION) -> VecFun:
        """The vector (g1_order, ..., gm_order) of one jet family."""
        return cls(tuple(DPoly.of(jet_generator(kind, j, order)) for j in range(1, m + 1)), role)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[DPoly]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> DPoly:
        return self.entries[i]

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for e in self.entries)

    def _check_length(self, other: VecFun) -> None:
        if len(other) != len(self):
            raise ShapeMismatch(f"vector lengths differ: {len(self)} vs {len(other)}")

    def __add__(self, other: VecFun) -> VecFun:
        self._check_length(other)
        return VecFun(tuple(a + b for a, b in zip(self.entries, other.entries)), self.role)

    def __sub__(self, other: VecFun) -> VecFun:
        self._check_length(other)
        return VecFun(tuple(a - b for a, b in zip(self.entries, other.entries)), self.role)

    def __neg__(self) -> VecFun:
        return VecFun(tuple(-a for a in self.entries), self.role)

    def scale(self, c: DPoly | Scalar) -> VecFun:
        """Multiply every entry by ``c`` from the left."""
        c = as_dpoly(c)
        return VecFun(tuple(mul(c, a) for a in self.entries), self.role)

    def map(self, fn: Callable[[DPoly], DPoly], role: Role | None = None) -> VecFun:
        return VecFun(tuple(fn(a) for a in self.entries), role or self.role)

    def with_role(self, role: Role) -> VecFun:
        return VecFun(self.entries, role)

    def first_nonzero(self) -> tuple[int, DPoly] | None:
        for i, entry in enumerate(self.entries):
            if not entry.is_zero:
                return i, entry
        return None

    def generator_set(self) -> frozenset[Generator]:
        return frozenset().union(*(e.generators() for e in self.entries))

    def check_role(self) -> VecFun:
        """Raise ``NotLinear`` when a shadow role's linearity invariant fails."""
        kind = _SHADOW_KIND.get(self.role)
        if kind is None:
            return self
        for entry in self.entries:
            for mono in entry.terms:
                if mono.odd_degree != 1 or mono.odd[0].kind is not kind:
                    raise NotLinear(f"term {mono} is not linear in the {kind.name.lower()} family")
        return self

    def __str__(self) -> str:
        if len(self.entries) == 1:
            return str(self.entries[0])
        return "[" + ", ".join(str(e) for e in self.entries) + "]"


def vecfun(entries: Iterable[DPoly | Scalar], role: Role = Role.SECTION) -> VecFun:
    return VecFun(tuple(as_dpoly(e) for e in entries), role)
