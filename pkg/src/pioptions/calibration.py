"""Historical volatility and running maximum from daily close prices."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CsvFormatError, InsufficientDataError, ValidationError

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes on strictly ascending dates."""

    dates: Tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        closes.setflags(write=False)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) != closes.shape[0]:
            raise ValidationError("dates and closes differ in length", field="csv")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(closes) & (closes > 0)))[0])
            raise ValidationError(f"close on {self.dates[bad]} is not a positive number", field="csv")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValidationError(f"dates not strictly ascending at {cur}", field="csv")

    def __len__(self) -> int:
        return len(self.dates)

    def between(self, start: Optional[dt.date] = None, end: Optional[dt.date] = None) -> "PriceSeries":
        keep = [i for i, d in enumerate(self.dates)
                if (start is None or d >= start) and (end is None or d <= end)]
        return PriceSeries(tuple(self.dates[i] for i in keep), self.closes[keep])

    def close_on_or_before(self, day: dt.date) -> Tuple[dt.date, float]:
        sub = self.between(end=day)
        if not len(sub):
            raise InsufficientDataError(f"no observation on or before {day}", field="date")
        return sub.dates[-1], float(sub.closes[-1])

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[Union[str, dt.date], float]]) -> "PriceSeries":
        dates, closes = [], []
        for d, c in rows:
            dates.append(d if isinstance(d, dt.date) else dt.date.fromisoformat(d))
            closes.append(float(c))
        return cls(tuple(dates), np.array(closes))

    @classmethod
    def read_csv(cls, source: Union[str, os.PathLike, io.TextIOBase]) -> "PriceSeries":
        """Parse a ``date,close`` file with ISO-8601 dates.

        Errors carry the 1-based line number of the offending row.
        """
        if isinstance(source, (str, os.PathLike)):
            with open(source, newline="") as fh:
                return cls._parse(fh)
        return cls._parse(source)

    @classmethod
    def _parse(cls, fh) -> "PriceSeries":
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError("empty file", line=1)
        if [h.strip().lower() for h in header] != ["date", "close"]:
            raise CsvFormatError(f"expected header 'date,close', got {','.join(header)!r}", line=1)
        dates, closes = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CsvFormatError(f"expected 2 fields, got {len(row)}", line=line)
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise CsvFormatError(f"bad date {row[0]!r}", line=line) from None
            try:
                close = float(row[1])
            except ValueError:
                raise CsvFormatError(f"bad close {row[1]!r}", line=line) from None
            if not (math.isfinite(close) and close > 0):
                raise CsvFormatError(f"close must be positive, got {row[1]!r}", line=line)
            if dates and day <= dates[-1]:
                raise CsvFormatError(f"date {day} does not follow {dates[-1]}", line=line)
            dates.append(day)
            closes.append(close)
        return cls(tuple(dates), np.array(closes))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        for d, c in zip(self.dates, self.closes):
            w.writerow([d.isoformat(), repr(float(c))])


@dataclass(frozen=True)
class CalibrationWindow:
    start: dt.date
    end: dt.date
    trading_days_per_year: int = TRADING_DAYS_PER_YEAR

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError("window start must precede its end", field="start")
        if self.trading_days_per_year < 1:
            raise ValidationError("trading days per year must be positive", field="trading_days")


def log_returns(closes: Sequence[float]) -> np.ndarray:
    return np.diff(np.log(np.asarray(closes, dtype=float)))


def historical_vol(series: PriceSeries, window: CalibrationWindow) -> float:
    """Annualized close-to-close volatility.

    Sample standard deviation (``n - 1`` denominator) of daily log returns
    inside the window, times ``sqrt(trading_days_per_year)``.
    """
    sub = series.between(window.start, window.end)
    if len(sub) < 2:
        raise InsufficientDataError(
            f"insufficient data: {len(sub)} close(s) in {window.start}..{window.end}, need at least 2",
            field="csv",
        )
    rets = log_returns(sub.closes)
    if rets.shape[0] < 2:
        # a single return is trivially constant
        return 0.0
    if np.all(rets == rets[0]):
        return 0.0
    return float(np.std(rets, ddof=1) * math.sqrt(window.trading_days_per_year))


def running_max(series: PriceSeries, upto: dt.date) -> float:
    """Highest close on or before ``upto``."""
    sub = series.between(end=upto)
    if not len(sub):
        raise InsufficientDataError(f"no observation on or before {upto}", field="date")
    return float(np.max(sub.closes))


@dataclass(frozen=True)
class Calibration:
    sigma: float
    s0: float
    m0: float
    window: CalibrationWindow
    pricing_date: dt.date


def calibrate(series: PriceSeries, window: CalibrationWindow) -> Calibration:
    """Model inputs at the end of ``window``: vol, spot and running maximum."""
    sigma = historical_vol(series, window)
    day, s0 = series.close_on_or_before(window.end)
    return Calibration(sigma=sigma, s0=s0, m0=running_max(series, window.end),
                       window=window, pricing_date=day)
