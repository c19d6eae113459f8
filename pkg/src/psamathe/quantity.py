"""Type quantities: the four-point abstraction of how many values a location holds.

The lattice orders quantities by the sets of naturals they denote::

            any
           /   \\
      empty    nonempty
                  |
                 one

There is no quantity denoting exactly {0, 1}, so ``one ⊔ empty = any``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Callable

if TYPE_CHECKING:
    from psamathe.syntax import Type


class TypeQuant(Enum):
    EMPTY = "empty"
    ONE = "one"
    ANY = "any"
    NONEMPTY = "nonempty"

    def __str__(self) -> str:
        return self.value


EMPTY = TypeQuant.EMPTY
ONE = TypeQuant.ONE
ANY = TypeQuant.ANY
NONEMPTY = TypeQuant.NONEMPTY

ALL_QUANTS = (EMPTY, ONE, NONEMPTY, ANY)


def quant_approx(n: int) -> TypeQuant:
    """Best quantity approximating the natural ``n``."""
    if n < 0:
        raise ValueError(f"not a natural: {n}")
    if n == 0:
        return EMPTY
    if n == 1:
        return ONE
    return NONEMPTY


def concretize(q: TypeQuant) -> Callable[[int], bool]:
    """Membership predicate for the set of naturals ``q`` denotes."""
    if q is EMPTY:
        return lambda n: n == 0
    if q is ONE:
        return lambda n: n == 1
    if q is NONEMPTY:
        return lambda n: n >= 1
    return lambda n: n >= 0


def contains(q: TypeQuant, n: int) -> bool:
    return concretize(q)(n)


# a ⊑ b iff concretize(a) ⊆ concretize(b)
_LEQ = {
    EMPTY: {EMPTY, ANY},
    ONE: {ONE, NONEMPTY, ANY},
    NONEMPTY: {NONEMPTY, ANY},
    ANY: {ANY},
}


def quant_leq(a: TypeQuant, b: TypeQuant) -> bool:
    return b in _LEQ[a]


def quant_join(a: TypeQuant, b: TypeQuant) -> TypeQuant:
    if quant_leq(a, b):
        return b
    if quant_leq(b, a):
        return a
    # incomparable pairs: {empty, one} and {empty, nonempty}
    return ANY


def quant_max(a: TypeQuant, b: TypeQuant) -> TypeQuant:
    """The larger of two quantities under ⊑; ties and incomparable pairs keep ``a``.

    No typing rule needs it; it is kept alongside the other type functions.
    """
    return b if quant_leq(a, b) and a is not b else a


def quant_add(a: TypeQuant, b: TypeQuant) -> TypeQuant:
    if a is EMPTY:
        return b
    if b is EMPTY:
        return a
    if a is ANY and b is ANY:
        return ANY
    # at least one side is one/nonempty, so the sum is at least 1
    return NONEMPTY


def quant_sub(a: TypeQuant, b: TypeQuant) -> TypeQuant:
    """Saturating (monus) subtraction lifted to quantities."""
    if b is EMPTY or a is EMPTY:
        return a
    if a is ONE and b is ONE:
        return EMPTY
    if a is ONE and b is NONEMPTY:
        # y <= x forces y = 1
        return EMPTY
    return ANY


def quant_mul(a: TypeQuant, b: TypeQuant) -> TypeQuant:
    """Product, used when a transformer runs once per selected element."""
    if a is EMPTY or b is EMPTY:
        return EMPTY
    if a is ONE:
        return b
    if b is ONE:
        return a
    if a is NONEMPTY and b is NONEMPTY:
        return NONEMPTY
    return ANY


@dataclass(frozen=True)
class Updater:
    """A function on types. Subclasses cover id, ⊕Q, ⊖Q and with_Q."""

    def __call__(self, t: Type) -> Type:
        return apply_updater(self, t)


@dataclass(frozen=True)
class Id(Updater):
    def __str__(self) -> str:
        return "id"


@dataclass(frozen=True)
class Add(Updater):
    q: TypeQuant

    def __str__(self) -> str:
        return f"⊕{self.q}"


@dataclass(frozen=True)
class Sub(Updater):
    q: TypeQuant

    def __str__(self) -> str:
        return f"⊖{self.q}"


@dataclass(frozen=True)
class With(Updater):
    q: TypeQuant

    def __str__(self) -> str:
        return f"with_{self.q}"


def apply_updater(f: Updater, t: Type) -> Type:
    from psamathe.syntax import Type

    if isinstance(f, Id):
        return t
    if isinstance(f, With):
        return Type(f.q, t.base)
    if isinstance(f, Add):
        return Type(quant_add(t.quant, f.q), t.base)
    if isinstance(f, Sub):
        return Type(quant_sub(t.quant, f.q), t.base)
    raise TypeError(f"unknown updater {f!r}")
