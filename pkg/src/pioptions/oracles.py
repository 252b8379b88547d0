"""Reference prices used to validate the tree estimators.

* Black-Scholes closed form (European; equals the American call without dividends).
* Cox-Ross-Rubinstein lattice with European, Bermudan or American exercise.
* Exact backward induction on an already realized tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .model import MarketParams
from .payoffs import Kind

DEFAULT_LATTICE_STEPS = 2000


def bs_european(params: MarketParams, strike: float, kind: Kind | str = Kind.CALL) -> float:
    """Black-Scholes price of a European call or put on ``params.s0``."""
    kind = Kind(kind)
    if not strike > 0:
        raise ValidationError("strike must be positive", field="strike")
    s, r, sigma, T = params.s0, params.r, params.sigma, params.maturity
    vol = sigma * math.sqrt(T)
    d1 = (math.log(s / strike) + (r + 0.5 * sigma * sigma) * T) / vol
    d2 = d1 - vol
    df = math.exp(-r * T)
    if kind is Kind.CALL:
        return float(s * ndtr(d1) - strike * df * ndtr(d2))
    return float(strike * df * ndtr(-d2) - s * ndtr(-d1))


@dataclass(frozen=True)
class LatticeConfig:
    steps: int
    exercise_dates: FrozenSet[int]

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError("lattice needs at least one step", field="steps")
        dates = frozenset(int(d) for d in self.exercise_dates)
        object.__setattr__(self, "exercise_dates", dates)
        if not dates:
            raise ValidationError("exercise_dates is empty", field="exercise_dates")
        if self.steps not in dates:
            raise ValidationError("exercise_dates must contain the final step", field="exercise_dates")
        if min(dates) < 0 or max(dates) > self.steps:
            raise ValidationError("exercise date outside [0, steps]", field="exercise_dates")

    @classmethod
    def european(cls, steps: int = DEFAULT_LATTICE_STEPS) -> "LatticeConfig":
        return cls(steps, frozenset({steps}))

    @classmethod
    def american(cls, steps: int = DEFAULT_LATTICE_STEPS) -> "LatticeConfig":
        return cls(steps, frozenset(range(steps + 1)))

    @classmethod
    def bermudan(cls, n_dates: int, steps: int = DEFAULT_LATTICE_STEPS,
                 include_start: bool = True) -> "LatticeConfig":
        """Exercise at ``t_i = i T / n_dates``, each mapped to the nearest lattice step.

        ``include_start`` also allows exercise at ``t_0``, matching the stochastic
        tree, whose root compares immediate exercise with continuation.
        """
        first = 0 if include_start else 1
        dates: Iterable[int] = (round(i * steps / n_dates) for i in range(first, n_dates + 1))
        return cls(steps, frozenset(dates))


def crr_binomial(
    params: MarketParams,
    strike: float,
    kind: Kind | str = Kind.CALL,
    lattice: LatticeConfig | None = None,
) -> float:
    kind = Kind(kind)
    lattice = lattice or LatticeConfig.european()
    N = lattice.steps
    dt = params.maturity / N
    u = math.exp(params.sigma * math.sqrt(dt))
    d = 1.0 / u
    growth = math.exp(params.r * dt)
    p = (growth - d) / (u - d)
    if not 0.0 <= p <= 1.0:
        raise ValidationError(
            f"risk-neutral probability {p:.6f} outside [0, 1] at step size dt={dt:g}; use more steps",
            field="steps",
        )
    disc = 1.0 / growth
    sign = kind.sign

    # node j at step i has price s0 * u**(2j - i)
    j = np.arange(N + 1)
    prices = params.s0 * u ** (2.0 * j - N)
    values = np.maximum(sign * (prices - strike), 0.0)
    for i in range(N - 1, -1, -1):
        values = disc * (p * values[1:] + (1.0 - p) * values[:-1])
        if i in lattice.exercise_dates:
            prices = params.s0 * u ** (2.0 * np.arange(i + 1) - i)
            np.maximum(values, sign * (prices - strike), out=values)
    return float(values[0])


def backward_induction_on_tree(root, discount: float) -> float:
    """Dynamic-programming value ``f = max(h, disc * mean f(children))`` on a realized tree.

    Iterative post-order over any object exposing ``h`` and ``children``; kept
    separate from the recursive high estimator so each checks the other.
    """
    # frames are [node, next child, running sum of child values]
    stack = [[root, 0, 0.0]]
    while True:
        frame = stack[-1]
        node = frame[0]
        kids = node.children
        if kids and frame[1] < len(kids):
            frame[1] += 1
            stack.append([kids[frame[1] - 1], 0, 0.0])
            continue
        value = max(node.h, discount * (frame[2] / len(kids))) if kids else node.h
        stack.pop()
        if not stack:
            return value
        stack[-1][2] += value
