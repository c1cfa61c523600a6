"""Forward-mode automatic differentiation with one derivative channel.

A DualScalar carries a value and its derivative with respect to a single
active parameter. Plain floats mix freely with duals through the reflected
operators and act as constants (derivative zero), so model code written
against ordinary arithmetic differentiates itself when seeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

Scalar = Union[float, "DualScalar"]


@dataclass(frozen=True)
class DualScalar:
    value: float
    deriv: float = 0.0

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: Scalar) -> "DualScalar":
        o = _lift(other)
        return DualScalar(self.value + o.value, self.deriv + o.deriv)

    __radd__ = __add__

    def __sub__(self, other: Scalar) -> "DualScalar":
        o = _lift(other)
        return DualScalar(self.value - o.value, self.deriv - o.deriv)

    def __rsub__(self, other: Scalar) -> "DualScalar":
        o = _lift(other)
        return DualScalar(o.value - self.value, o.deriv - self.deriv)

    def __mul__(self, other: Scalar) -> "DualScalar":
        o = _lift(other)
        return DualScalar(self.value * o.value,
                          self.value * o.deriv + self.deriv * o.value)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "DualScalar":
        o = _lift(other)
        v = self.value / o.value
        return DualScalar(v, (self.deriv - v * o.deriv) / o.value)

    def __rtruediv__(self, other: Scalar) -> "DualScalar":
        return _lift(other).__truediv__(self)

    def __pow__(self, exponent: float) -> "DualScalar":
        v = self.value ** exponent
        return DualScalar(v, exponent * self.value ** (exponent - 1) * self.deriv)

    def __neg__(self) -> "DualScalar":
        return DualScalar(-self.value, -self.deriv)

    def __abs__(self) -> "DualScalar":
        return DualScalar(abs(self.value),
                          self.deriv if self.value >= 0 else -self.deriv)

    # -- comparisons operate on values only --------------------------------

    def __lt__(self, other: Scalar) -> bool:
        return self.value < _val(other)

    def __le__(self, other: Scalar) -> bool:
        return self.value <= _val(other)

    def __gt__(self, other: Scalar) -> bool:
        return self.value > _val(other)

    def __ge__(self, other: Scalar) -> bool:
        return self.value >= _val(other)

    def __float__(self) -> float:
        return float(self.value)


def _lift(x: Scalar) -> DualScalar:
    return x if isinstance(x, DualScalar) else DualScalar(float(x), 0.0)


def _val(x: Scalar) -> float:
    return x.value if isinstance(x, DualScalar) else float(x)


def value_of(x: Scalar) -> float:
    """Value component of a float or dual."""
    return _val(x)


def deriv_of(x: Scalar) -> float:
    """Derivative component; zero for plain floats."""
    return x.deriv if isinstance(x, DualScalar) else 0.0


def seed(value: float) -> DualScalar:
    """Mark a parameter as the active differentiation variable."""
    return DualScalar(float(value), 1.0)


def sqrt(x: Scalar) -> Scalar:
    if isinstance(x, DualScalar):
        root = math.sqrt(x.value)
        return DualScalar(root, x.deriv / (2.0 * root))
    return math.sqrt(x)


def derivative(f: Callable[[DualScalar], Scalar], x0: float) -> float:
    """d f/dx at x0 via a seeded dual pass."""
    out = f(seed(x0))
    return deriv_of(out)
