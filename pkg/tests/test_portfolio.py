import datetime as dt
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pioptions.calibration import PriceSeries
from pioptions.errors import ValidationError
from pioptions.portfolio import (
    COLUMNS,
    HedgeKind,
    PortfolioSpec,
    compare,
    net_value_series,
    payoff_series,
    premium_from_unit_price,
    read_comparison_csv,
    write_comparison_csv,
)

D0 = dt.date(2018, 8, 3)


def make_series(closes):
    return PriceSeries(tuple(D0 + dt.timedelta(days=i) for i in range(len(closes))), np.array(closes))


def pair(closes, strike, put_premium, multiplier, pi_premium):
    s = make_series(closes)
    put = PortfolioSpec(s, HedgeKind.AMERICAN_PUT, put_premium, D0, strike=strike)
    pi = PortfolioSpec(s, HedgeKind.PI_DRAWDOWN, pi_premium, D0, multiplier=multiplier)
    return put, pi


def test_new_maximum_zeroes_pi_payoff():
    put, pi = pair([100.0, 105.0, 103.0, 106.0], 100.0, 1.0, 100.0, 2.0)
    rows = compare(put, pi, m_init=100.0)
    assert [r.running_max for r in rows] == [100.0, 105.0, 105.0, 106.0]
    assert rows[1].pi_payoff == 0.0 and rows[3].pi_payoff == 0.0
    assert rows[2].pi_payoff == pytest.approx(100.0 * (1 - 103.0 / 105.0))


def test_put_payoff_is_intrinsic():
    put, _ = pair([100.0, 95.0, 102.0], 100.0, 3.0, 1.0, 0.0)
    assert [r.payoff for r in payoff_series(put, 100.0)] == [0.0, 5.0, 0.0]
    assert [r.net_value for r in net_value_series(put, 100.0)] == [97.0, 97.0, 99.0]


@given(closes=st.lists(st.floats(10.0, 200.0), min_size=1, max_size=30), mult=st.floats(0.1, 500.0))
def test_pi_payoff_bounds(closes, mult):
    s = make_series(closes)
    spec = PortfolioSpec(s, HedgeKind.PI_DRAWDOWN, 0.0, D0, multiplier=mult)
    for row in payoff_series(spec, max(closes[0], 50.0)):
        assert 0.0 <= row.payoff < mult
        assert row.running_max >= row.close


def test_premium_from_unit_price():
    assert premium_from_unit_price(0.0735, 110.0) == pytest.approx(8.085)
    assert premium_from_unit_price(0.094, 74.0) == pytest.approx(6.956)
    with pytest.raises(ValidationError):
        premium_from_unit_price(0.1, 0.0)


@pytest.mark.parametrize(
    "kw",
    [
        dict(hedge=HedgeKind.AMERICAN_PUT, premium=1.0),
        dict(hedge=HedgeKind.PI_DRAWDOWN, premium=1.0),
        dict(hedge=HedgeKind.PI_DRAWDOWN, premium=-1.0, multiplier=1.0),
        dict(hedge=HedgeKind.PI_DRAWDOWN, premium=1.0, multiplier=1.0, inception=D0 - dt.timedelta(days=1)),
    ],
)
def test_spec_validation(kw):
    kw.setdefault("inception", D0)
    with pytest.raises(ValidationError):
        PortfolioSpec(make_series([100.0, 101.0]), **kw)


def test_m_init_below_inception_close_rejected():
    _, pi = pair([100.0, 101.0], 100.0, 1.0, 100.0, 1.0)
    with pytest.raises(ValidationError):
        payoff_series(pi, 99.0)


def test_mismatched_portfolios_rejected():
    put, _ = pair([100.0, 101.0], 100.0, 1.0, 100.0, 1.0)
    _, pi = pair([100.0, 102.0, 99.0], 100.0, 1.0, 100.0, 1.0)
    with pytest.raises(ValidationError):
        compare(put, pi, 100.0)


def test_inception_mid_series():
    s = make_series([120.0, 100.0, 90.0])
    start = D0 + dt.timedelta(days=1)
    spec = PortfolioSpec(s, HedgeKind.PI_DRAWDOWN, 0.0, start, multiplier=120.0)
    rows = payoff_series(spec, 120.0)
    assert [r.date for r in rows] == [start, start + dt.timedelta(days=1)]
    assert rows[1].payoff == pytest.approx(120.0 * (1 - 90.0 / 120.0))


def test_csv_round_trip():
    put, pi = pair([108.13, 107.0, 109.5, 104.2], 108.13, 5.47, 110.0, 8.09)
    rows = compare(put, pi, 110.83)
    buf = io.StringIO()
    write_comparison_csv(rows, buf)
    assert buf.getvalue().splitlines()[0] == ",".join(COLUMNS)
    buf.seek(0)
    assert read_comparison_csv(buf) == rows


def test_csv_rejects_foreign_columns():
    with pytest.raises(ValidationError):
        read_comparison_csv(io.StringIO("date,close\n2018-01-01,1\n"))
