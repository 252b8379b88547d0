import math

import pytest
from hypothesis import given, settings, strategies as st

from pioptions.errors import ValidationError
from pioptions.model import MarketParams
from pioptions.oracles import LatticeConfig, backward_induction_on_tree, bs_european, crr_binomial
from pioptions.payoffs import Kind
from pioptions.tree import FixtureNode

MONTH_MARKET = MarketParams(100.0, 100.0, 0.05, 0.2, 30 / 365)
YEAR = MarketParams(100.0, 100.0, 0.05, 0.2, 1.0)


def test_textbook_values():
    # widely quoted one-year ATM values at r=5%, sigma=20%
    assert bs_european(YEAR, 100.0, Kind.CALL) == pytest.approx(10.450584, abs=1e-6)
    assert bs_european(YEAR, 100.0, Kind.PUT) == pytest.approx(5.573526, abs=1e-6)


@pytest.mark.parametrize("strike", [80.0, 90.0, 100.0, 105.0, 110.0])
def test_call_within_no_arbitrage_bounds(strike):
    c = bs_european(MONTH_MARKET, strike)
    lower = max(0.0, MONTH_MARKET.s0 - strike * math.exp(-MONTH_MARKET.r * MONTH_MARKET.maturity))
    assert lower <= c <= MONTH_MARKET.s0


def test_vanishing_volatility_is_discounted_intrinsic():
    p = MarketParams(100.0, 100.0, 0.05, 1e-9, 1.0)
    assert bs_european(p, 90.0) == pytest.approx(100.0 - 90.0 * math.exp(-0.05), rel=1e-12)
    assert bs_european(p, 110.0, Kind.PUT) == pytest.approx(110.0 * math.exp(-0.05) - 100.0, rel=1e-10)


@given(s=st.floats(10, 500), k=st.floats(10, 500), r=st.floats(-0.02, 0.2),
       sigma=st.floats(0.05, 1.0), T=st.floats(0.01, 5.0))
@settings(max_examples=300)
def test_put_call_parity(s, k, r, sigma, T):
    p = MarketParams(s, s, r, sigma, T)
    lhs = bs_european(p, k, Kind.CALL) - bs_european(p, k, Kind.PUT)
    rhs = s - k * math.exp(-r * T)
    assert abs(lhs - rhs) <= 1e-12 * max(s, k)


def test_bs_rejects_zero_strike():
    with pytest.raises(ValidationError):
        bs_european(YEAR, 0.0)


@pytest.mark.parametrize("strike", [80.0, 90.0, 100.0, 105.0, 110.0])
@pytest.mark.parametrize("kind", [Kind.CALL, Kind.PUT])
def test_lattice_matches_closed_form(strike, kind):
    assert abs(crr_binomial(MONTH_MARKET, strike, kind) - bs_european(MONTH_MARKET, strike, kind)) < 0.01


def test_lattice_error_halves_with_steps():
    # at-the-money CRR error is first order and nearly non-oscillating
    ref = bs_european(YEAR, 100.0, Kind.PUT)
    errs = [abs(crr_binomial(YEAR, 100.0, Kind.PUT, LatticeConfig.european(n)) - ref)
            for n in (500, 1000, 2000, 4000)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(2.0, abs=0.05)


def test_american_put_reference():
    # long-standing benchmark value for this contract is about 6.090
    assert crr_binomial(YEAR, 100.0, Kind.PUT, LatticeConfig.american()) == pytest.approx(6.090, abs=2e-3)


def test_american_call_equals_european_without_dividends():
    eu = crr_binomial(YEAR, 100.0, Kind.CALL)
    am = crr_binomial(YEAR, 100.0, Kind.CALL, LatticeConfig.american())
    assert am == pytest.approx(eu, abs=1e-10)


@pytest.mark.parametrize("strike", [90.0, 100.0, 110.0])
def test_exercise_rights_are_ordered(strike):
    eu = crr_binomial(YEAR, strike, Kind.PUT)
    berm = crr_binomial(YEAR, strike, Kind.PUT, LatticeConfig.bermudan(3))
    am = crr_binomial(YEAR, strike, Kind.PUT, LatticeConfig.american())
    assert eu <= berm <= am


def test_bermudan_dates():
    assert LatticeConfig.bermudan(3).exercise_dates == frozenset({0, 667, 1333, 2000})
    assert LatticeConfig.bermudan(3, include_start=False).exercise_dates == frozenset({667, 1333, 2000})


def test_bad_probability_names_step_size():
    p = MarketParams(100.0, 100.0, 0.5, 0.01, 10.0)
    with pytest.raises(ValidationError, match="dt="):
        crr_binomial(p, 100.0, lattice=LatticeConfig.european(10))


@pytest.mark.parametrize("dates", [frozenset(), frozenset({3}), frozenset({-1, 10}), frozenset({11, 10})])
def test_lattice_config_validation(dates):
    with pytest.raises(ValidationError):
        LatticeConfig(10, dates)


def test_backward_induction_on_shared_nodes():
    # the same leaf object reused under several parents
    leaf = FixtureNode(1.0)
    mid = FixtureNode(0.5, (leaf, leaf))
    root = FixtureNode(0.2, (mid, mid, mid))
    assert backward_induction_on_tree(root, 0.9) == pytest.approx(0.81)


def test_backward_induction_leaf():
    assert backward_induction_on_tree(FixtureNode(0.7), 0.5) == 0.7
