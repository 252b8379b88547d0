"""Risk-neutral GBM dynamics on the (price, running maximum) state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numba
import numpy as np

from ._rng import normal_at, seed_to_u64
from .errors import ValidationError

DAYS_PER_YEAR = 365


def maturity_from_days(days: float, days_per_year: float = DAYS_PER_YEAR) -> float:
    """Calendar days to year fraction (actual/365 by default)."""
    return days / days_per_year


@dataclass(frozen=True)
class MarketParams:
    """Spot, running maximum, rate, volatility and maturity (years)."""

    s0: float
    m0: float
    r: float
    sigma: float
    maturity: float

    def __post_init__(self):
        for name in ("s0", "m0", "r", "sigma", "maturity"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite", field=name)
        if self.s0 <= 0:
            raise ValidationError("s0 must be positive", field="s0")
        if self.sigma <= 0:
            raise ValidationError("sigma must be positive", field="sigma")
        if self.maturity <= 0:
            raise ValidationError("maturity must be positive", field="maturity")
        if self.m0 < self.s0:
            raise ValidationError(
                f"m0={self.m0} is below s0={self.s0}; the running maximum cannot "
                "be under the current price",
                field="m0",
            )

    @property
    def state(self) -> "AugmentedState":
        return AugmentedState(self.s0, self.m0)


@dataclass(frozen=True)
class AugmentedState:
    s: float
    m: float

    def __post_init__(self):
        if not (self.s > 0 and self.m >= self.s):
            raise ValidationError(f"invalid state (s={self.s}, m={self.m}); need m >= s > 0")


@dataclass(frozen=True)
class RngStream:
    """One replication's substream of the counter-based generator.

    ``normal(step, index)`` is deterministic in ``(master_seed, replication,
    step, index)`` and independent of call order.
    """

    master_seed: int
    replication: int = 0

    def normal(self, step: int, index: int = 0) -> float:
        return normal_at(seed_to_u64(self.master_seed), self.replication, step, index)


def gbm_step(state: AugmentedState, params: MarketParams, dt: float, z: float) -> AugmentedState:
    """Advance one exact lognormal step and carry the running maximum."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ValidationError(f"dt must be positive and finite, got {dt}", field="dt")
    if not math.isfinite(z):
        raise ValidationError(f"normal draw must be finite, got {z}", field="z")
    s = state.s * math.exp((params.r - 0.5 * params.sigma**2) * dt + params.sigma * math.sqrt(dt) * z)
    return AugmentedState(s, max(state.m, s))


def simulate_path(params: MarketParams, n: int, rng: RngStream) -> List[AugmentedState]:
    """States at ``t_i = i T / n`` for ``i = 0..n``.

    Draw ``i`` uses counter ``(rng.replication, i, 0)``.
    """
    if n < 1:
        raise ValidationError("n must be at least 1", field="steps")
    dt = params.maturity / n
    path = [params.state]
    for i in range(1, n + 1):
        path.append(gbm_step(path[-1], params, dt, rng.normal(i, 0)))
    return path


@numba.njit(nogil=True, cache=True)
def _paths_kernel(seed, s0, m0, drift, vol, n, n_paths, first_path):
    s_out = np.empty((n_paths, n + 1))
    m_out = np.empty((n_paths, n + 1))
    for p in range(n_paths):
        s = s0
        m = m0
        s_out[p, 0] = s
        m_out[p, 0] = m
        for i in range(1, n + 1):
            z = normal_at(seed, first_path + p, i, 0)
            s = s * math.exp(drift + vol * z)
            m = max(m, s)
            s_out[p, i] = s
            m_out[p, i] = m
    return s_out, m_out


def simulate_paths(params: MarketParams, n: int, n_paths: int, seed: int):
    """Vectorised ``simulate_path`` over paths ``0..n_paths-1``.

    Path ``p`` consumes the same counters as ``simulate_path(params, n,
    RngStream(seed, p))``.  Returns ``(s, m)`` arrays of shape ``(n_paths, n+1)``.
    """
    if n < 1:
        raise ValidationError("n must be at least 1", field="steps")
    dt = params.maturity / n
    return _paths_kernel(
        seed_to_u64(seed),
        float(params.s0),
        float(params.m0),
        (params.r - 0.5 * params.sigma**2) * dt,
        params.sigma * math.sqrt(dt),
        n,
        n_paths,
        0,
    )
