import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pioptions._rng import normal_at, normals_over_replications, seed_to_u64
from pioptions.errors import ValidationError
from pioptions.model import (
    AugmentedState,
    MarketParams,
    RngStream,
    gbm_step,
    maturity_from_days,
    simulate_path,
    simulate_paths,
)

YEAR_MARKET = MarketParams(s0=100.0, m0=100.0, r=0.05, sigma=0.2, maturity=1.0)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(s0=0.0, m0=1.0, r=0.0, sigma=0.2, maturity=1.0), "s0"),
        (dict(s0=1.0, m0=1.0, r=0.0, sigma=0.0, maturity=1.0), "sigma"),
        (dict(s0=1.0, m0=1.0, r=0.0, sigma=0.2, maturity=0.0), "maturity"),
        (dict(s0=2.0, m0=1.0, r=0.0, sigma=0.2, maturity=1.0), "m0"),
        (dict(s0=1.0, m0=1.0, r=math.nan, sigma=0.2, maturity=1.0), "r"),
    ],
)
def test_market_params_rejects(kwargs, field):
    with pytest.raises(ValidationError) as exc:
        MarketParams(**kwargs)
    assert exc.value.field == field


def test_state_invariant():
    with pytest.raises(ValidationError):
        AugmentedState(s=10.0, m=9.0)
    with pytest.raises(ValidationError):
        AugmentedState(s=0.0, m=1.0)


def test_zero_noise_step():
    st_ = AugmentedState(100.0, 100.0)
    out = gbm_step(st_, YEAR_MARKET, 0.5, 0.0)
    assert out.s == pytest.approx(100.0 * math.exp((0.05 - 0.02) * 0.5), rel=1e-15)
    assert out.m == max(100.0, out.s)


def test_vanishing_volatility_is_pure_drift():
    p = MarketParams(100.0, 100.0, 0.05, 1e-12, 1.0)
    out = gbm_step(p.state, p, 1.0, 0.0)
    assert out.s == pytest.approx(100.0 * math.exp(0.05), rel=1e-14)


def test_running_max_holds_above_falling_spot():
    p = MarketParams(100.0, 120.0, 0.0, 0.2, 1.0)
    out = gbm_step(p.state, p, 0.25, -1.0)
    assert out.s < 100.0 and out.m == 120.0


@pytest.mark.parametrize("dt, z", [(0.0, 0.1), (-1.0, 0.1), (0.1, math.inf), (0.1, math.nan)])
def test_gbm_step_rejects(dt, z):
    with pytest.raises(ValidationError):
        gbm_step(YEAR_MARKET.state, YEAR_MARKET, dt, z)


def test_lognormal_mean_one_year():
    # 1e6 one-step draws at dt=1; kernel path is checked bit-for-bit against gbm_step below
    s, _ = simulate_paths(YEAR_MARKET, 1, 10**6, seed=2024)
    terminal = s[:, 1]
    se = terminal.std(ddof=1) / math.sqrt(terminal.size)
    assert abs(terminal.mean() - 100.0 * math.exp(0.05)) < 3 * se
    assert 100.0 * math.exp(0.05) == pytest.approx(105.127, abs=5e-4)


def test_kernel_paths_match_gbm_step():
    s, m = simulate_paths(YEAR_MARKET, 3, 50, seed=9)
    for p in range(50):
        path = simulate_path(YEAR_MARKET, 3, RngStream(9, p))
        assert [x.s for x in path] == list(s[p])
        assert [x.m for x in path] == list(m[p])


def test_path_starts_at_initial_state():
    p = MarketParams(100.0, 110.0, 0.05, 0.2, 1.0)
    path = simulate_path(p, 4, RngStream(1))
    assert len(path) == 5
    assert (path[0].s, path[0].m) == (100.0, 110.0)


def test_single_step_degenerate_path():
    p = MarketParams(50.0, 50.0, 0.0, 1e-14, 1.0)
    path = simulate_path(p, 1, RngStream(3))
    assert path[1].s == pytest.approx(50.0, rel=1e-12)
    assert path[1].m == pytest.approx(50.0, rel=1e-12)


def test_simulate_path_rejects_zero_steps():
    with pytest.raises(ValidationError):
        simulate_path(YEAR_MARKET, 0, RngStream(0))


@given(seed=st.integers(0, 2**63), n=st.integers(1, 6), rep=st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_running_max_is_exact_prefix_max(seed, n, rep):
    p = MarketParams(100.0, 104.0, 0.03, 0.4, 2.0)
    path = simulate_path(p, n, RngStream(seed, rep))
    for i, state in enumerate(path):
        assert state.m == max([p.m0] + [x.s for x in path[1 : i + 1]])
        assert state.m >= state.s > 0


def test_terminal_distribution_is_lognormal():
    s, _ = simulate_paths(YEAR_MARKET, 3, 10**5, seed=77)
    log_ret = np.log(s[:, -1] / YEAR_MARKET.s0)
    law = stats.norm(loc=(0.05 - 0.02) * 1.0, scale=0.2)
    assert stats.kstest(log_ret, law.cdf).pvalue > 0.01


def test_discounted_terminal_is_martingale():
    s, _ = simulate_paths(YEAR_MARKET, 3, 10**5, seed=5)
    disc = math.exp(-YEAR_MARKET.r * YEAR_MARKET.maturity) * s[:, -1]
    assert abs(disc.mean() - YEAR_MARKET.s0) < 3 * disc.std(ddof=1) / math.sqrt(disc.size)


def test_draws_are_pure_functions_of_counters():
    seed = seed_to_u64(123)
    a = normal_at(seed, 4, 2, 17)
    assert normal_at(seed, 4, 2, 17) == a
    assert RngStream(123, 4).normal(2, 17) == a
    assert normal_at(seed, 5, 2, 17) != a
    assert normal_at(seed_to_u64(124), 4, 2, 17) != a


def test_replication_streams_look_independent():
    seed = seed_to_u64(11)
    reps = np.arange(20000, dtype=np.uint64)
    x = normals_over_replications(seed, reps, 1, 0)
    y = normals_over_replications(seed, reps, 1, 1)
    assert stats.kstest(x, "norm").pvalue > 0.01
    # |corr| under independence is ~ N(0, 1/sqrt(N)); 4 sigma bound
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / math.sqrt(reps.size)


def test_negative_seed_maps_into_64_bits():
    assert seed_to_u64(-1) == np.uint64(2**64 - 1)


def test_day_count():
    assert maturity_from_days(30) == 30 / 365
    assert maturity_from_days(30, 360) == 1 / 12
