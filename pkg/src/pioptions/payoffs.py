"""The pi-option payoff family ``(+/-(M**a * S**b - K))^+``.

The exponent ``a`` sits on the running maximum and ``b`` on the spot, so
``(a, b, K) = (-1, 1, 1)`` as a put pays the relative drawdown ``1 - S/M``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import PayoffDomainError, ValidationError


class Kind(str, enum.Enum):
    CALL = "call"
    PUT = "put"

    @property
    def sign(self) -> float:
        return 1.0 if self is Kind.CALL else -1.0


class Tag(str, enum.Enum):
    AMERICAN = "american"
    LOOKBACK = "lookback"
    RELATIVE_DRAWDOWN = "relative_drawdown"
    GENERIC = "generic"


@dataclass(frozen=True)
class PiPayoff:
    a: float
    b: float
    strike: float
    kind: Kind = Kind.PUT

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError("exponents must be finite", field="a" if not math.isfinite(self.a) else "b")
        if not (self.strike >= 0 and math.isfinite(self.strike)):
            raise ValidationError("strike must be a finite non-negative number", field="strike")

    @classmethod
    def american(cls, strike: float, kind: Kind | str = Kind.CALL) -> "PiPayoff":
        return cls(0.0, 1.0, strike, Kind(kind))

    @classmethod
    def lookback(cls, strike: float, kind: Kind | str = Kind.CALL) -> "PiPayoff":
        return cls(1.0, 0.0, strike, Kind(kind))

    @classmethod
    def relative_drawdown(cls, strike: float = 1.0) -> "PiPayoff":
        return cls(-1.0, 1.0, strike, Kind.PUT)

    def __call__(self, s: float, m: float) -> float:
        """Immediate-exercise value at spot ``s`` and running maximum ``m``."""
        return _exercise_value(self, s, m)


def evaluate(payoff: PiPayoff, state) -> float:
    """Immediate-exercise value on an ``AugmentedState``."""
    return _exercise_value(payoff, state.s, state.m)


def _exercise_value(payoff: PiPayoff, s: float, m: float) -> float:
    try:
        value = math.pow(m, payoff.a) * math.pow(s, payoff.b)
    except (OverflowError, ValueError) as exc:
        raise PayoffDomainError(f"M**a * S**b failed for s={s}, m={m}: {exc}") from exc
    if not math.isfinite(value):
        raise PayoffDomainError(f"M**a * S**b is not finite for s={s}, m={m}")
    return max(0.0, payoff.kind.sign * (value - payoff.strike))


def classify(payoff: PiPayoff) -> Tag:
    if payoff.a == 0 and payoff.b == 1:
        return Tag.AMERICAN
    if payoff.a == 1 and payoff.b == 0:
        return Tag.LOOKBACK
    if payoff.a == -1 and payoff.b == 1 and payoff.strike == 1 and payoff.kind is Kind.PUT:
        return Tag.RELATIVE_DRAWDOWN
    return Tag.GENERIC
