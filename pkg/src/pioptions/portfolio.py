"""Backtest of one asset unit hedged with an American put or with drawdown pi-options.

Both portfolios are marked at intrinsic value only: ``net = S_t - premium + payoff_t``,
with no interest on the premium and no remaining time value.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .calibration import PriceSeries
from .errors import InsufficientDataError, ValidationError


class HedgeKind(str, enum.Enum):
    AMERICAN_PUT = "american_put"
    PI_DRAWDOWN = "pi_drawdown"


@dataclass(frozen=True)
class PortfolioSpec:
    """One hedged position evaluated from ``inception`` to the end of ``series``.

    ``strike`` applies to the American put, ``multiplier`` (number of drawdown
    contracts per asset unit) to the pi hedge.
    """

    series: PriceSeries
    hedge: HedgeKind
    premium: float
    inception: dt.date
    strike: Optional[float] = None
    multiplier: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "hedge", HedgeKind(self.hedge))
        if self.premium < 0:
            raise ValidationError("premium must be non-negative", field="premium")
        if self.hedge is HedgeKind.AMERICAN_PUT and (self.strike is None or self.strike < 0):
            raise ValidationError("an American put hedge needs a non-negative strike", field="strike")
        if self.hedge is HedgeKind.PI_DRAWDOWN and not (self.multiplier is not None and self.multiplier > 0):
            raise ValidationError("a drawdown hedge needs a positive multiplier", field="multiplier")
        if self.inception not in self.series.dates:
            raise ValidationError(f"inception {self.inception} is not a date in the series", field="inception")

    def window(self) -> PriceSeries:
        sub = self.series.between(start=self.inception)
        if not len(sub):
            raise InsufficientDataError("empty evaluation window", field="inception")
        return sub


@dataclass(frozen=True)
class BacktestRow:
    date: dt.date
    close: float
    running_max: float
    payoff: float
    net_value: float


def premium_from_unit_price(unit_price: float, multiplier: float) -> float:
    """Cost of ``multiplier`` drawdown contracts at ``unit_price`` each."""
    if unit_price < 0 or multiplier <= 0:
        raise ValidationError("unit price must be non-negative and multiplier positive", field="multiplier")
    return unit_price * multiplier


def _running_max(closes: Sequence[float], m_init: float) -> List[float]:
    out, m = [], float(m_init)
    for c in closes:
        m = max(m, float(c))
        out.append(m)
    return out


def payoff_series(spec: PortfolioSpec, m_init: float) -> List[BacktestRow]:
    """Daily intrinsic payoff; ``net_value`` is left at the bare close.

    The drawdown hedge pays ``multiplier * (1 - S_t / M_t)`` with
    ``M_t = max(m_init, closes since inception)``.
    """
    win = spec.window()
    if m_init < win.closes[0]:
        raise ValidationError(
            f"m_init={m_init} is below the inception close {win.closes[0]}", field="m_init"
        )
    maxima = _running_max(win.closes, m_init)
    rows = []
    for day, close, m in zip(win.dates, win.closes, maxima):
        close = float(close)
        if spec.hedge is HedgeKind.AMERICAN_PUT:
            pay = max(0.0, spec.strike - close)
        else:
            pay = spec.multiplier * (1.0 - close / m)
        rows.append(BacktestRow(day, close, m, pay, close))
    return rows


def net_value_series(spec: PortfolioSpec, m_init: float) -> List[BacktestRow]:
    return [
        BacktestRow(r.date, r.close, r.running_max, r.payoff, r.close - spec.premium + r.payoff)
        for r in payoff_series(spec, m_init)
    ]


COLUMNS = ("date", "close", "running_max", "put_payoff", "pi_payoff", "v_american", "v_pi")


@dataclass(frozen=True)
class ComparisonRow:
    date: dt.date
    close: float
    running_max: float
    put_payoff: float
    pi_payoff: float
    v_american: float
    v_pi: float


def compare(put: PortfolioSpec, pi: PortfolioSpec, m_init: float) -> List[ComparisonRow]:
    """Both portfolios side by side, one row per day."""
    if put.inception != pi.inception or put.series.dates != pi.series.dates:
        raise ValidationError("both portfolios must share series and inception", field="inception")
    a = net_value_series(put, m_init)
    b = net_value_series(pi, m_init)
    return [
        ComparisonRow(x.date, x.close, y.running_max, x.payoff, y.payoff, x.net_value, y.net_value)
        for x, y in zip(a, b)
    ]


def write_comparison_csv(rows: Sequence[ComparisonRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([r.date.isoformat()] + [repr(float(getattr(r, c))) for c in COLUMNS[1:]])


def read_comparison_csv(fh) -> List[ComparisonRow]:
    lines = (ln for ln in fh if not ln.startswith("#"))
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValidationError(f"unexpected backtest columns {reader.fieldnames}", field="csv")
    return [
        ComparisonRow(dt.date.fromisoformat(r["date"]), *(float(r[c]) for c in COLUMNS[1:]))
        for r in reader
    ]
