import numpy as np
import pytest
from scipy.stats import norm

from itebench.orders import (
    ScorePair,
    dkw_band,
    dr_score_pair,
    ecdf_eval,
    estimate_alpha_star,
    fosd_check,
    mcx_check,
    sosd_check,
)
from itebench.rng import substream


def test_dkw_band():
    assert dkw_band(100) == pytest.approx(np.sqrt(np.log(40.0) / 200.0))
    assert dkw_band(400) == dkw_band(100) / 2.0
    with pytest.raises(ValueError):
        dkw_band(0)


def test_ecdf_eval_steps():
    f = ecdf_eval(np.array([1.0, 2.0, 2.0, 4.0]), np.array([0.0, 1.0, 2.0, 3.0, 5.0]))
    assert list(f) == [0.0, 0.25, 0.75, 0.75, 1.0]


def test_order_checks_reflexive_with_zero_violation():
    x = substream(1, "refl").normal(size=2000)
    for check in (fosd_check, sosd_check, mcx_check):
        rep = check(x, x)
        assert rep.holds
        assert rep.max_violation <= 0.0


def test_fosd_location_shift():
    rng = substream(2, "shift")
    b = rng.normal(size=10000)
    a = rng.normal(size=10000) + 0.5
    up = fosd_check(a, b)
    assert up.holds and up.max_violation <= 0.02
    down = fosd_check(b, a)
    assert not down.holds
    # the true CDF gap at the midpoint is about 0.197
    assert down.max_violation > 0.15


def test_sosd_mean_preserving_spread():
    rng = substream(3, "spread")
    tight = rng.normal(size=20000)
    wide = 2.0 * rng.normal(size=20000)
    rep = sosd_check(tight, wide)
    assert rep.holds
    # but the tight sample does not first-order dominate the wide one
    assert not fosd_check(tight, wide).holds
    assert not sosd_check(wide, tight).holds


def test_mcx_stop_loss_order():
    rng = substream(4, "icx")
    small = rng.normal(size=10000)
    big = 2.0 * rng.normal(size=10000)
    assert mcx_check(big, small).holds
    rep = mcx_check(small, big)
    assert not rep.holds
    # stop-loss gap at threshold 0 is (2 - 1) phi(0) ~ 0.399
    assert rep.max_violation == pytest.approx(0.399, abs=0.05)


def test_score_pair_validation():
    with pytest.raises(ValueError):
        ScorePair(pseudo=np.zeros((2, 2)), oracle=np.zeros(4))
    with pytest.raises(ValueError):
        ScorePair(pseudo=np.array([]), oracle=np.zeros(4))


def test_alpha_star_pointwise_dominance_is_one():
    base = np.abs(substream(5, "dom").normal(size=50000))
    pair = ScorePair(pseudo=2.0 * base + 0.5, oracle=base)
    assert estimate_alpha_star(pair) == 1.0


def test_alpha_star_tail_crossing_construction():
    """Dominance engineered to fail in the deep tail only.

    |N(2,1)| beats |N(0,2)| at moderate levels but loses beyond the
    closed-form crossing 2 + z(1-a) = 2 z(1-a/2) near a ~ 0.1, so the
    every-level-below requirement collapses the estimate to zero.
    """
    rng = substream(8, "tc")
    pseudo = np.abs(rng.normal(2.0, 1.0, size=100000))
    oracle = np.abs(rng.normal(0.0, 2.0, size=100000))
    assert estimate_alpha_star(ScorePair(pseudo=pseudo, oracle=oracle)) < 0.1

    # quantile view of the same geometry, against closed forms
    q_p_05 = np.quantile(pseudo, 0.95, method="inverted_cdf")
    q_o_05 = np.quantile(oracle, 0.95, method="inverted_cdf")
    assert q_o_05 == pytest.approx(2.0 * norm.ppf(0.975), abs=0.08)
    assert q_p_05 < q_o_05  # dominance fails at alpha = 0.05
    q_p_20 = np.quantile(pseudo, 0.80, method="inverted_cdf")
    q_o_20 = np.quantile(oracle, 0.80, method="inverted_cdf")
    assert q_o_20 == pytest.approx(2.0 * norm.ppf(0.90), abs=0.08)
    assert q_p_20 > q_o_20  # and holds at alpha = 0.2


def test_alpha_star_rejects_bad_grid():
    pair = ScorePair(pseudo=np.ones(10), oracle=np.ones(10))
    with pytest.raises(ValueError):
        estimate_alpha_star(pair, alphas=np.array([0.5, 0.2]))
    with pytest.raises(ValueError):
        estimate_alpha_star(pair, alphas=np.array([0.0, 0.5]))


def test_dr_score_pair_reproducible_and_validated():
    a = dr_score_pair(rho=0.3, p=0.4, n=1000, seed=7)
    b = dr_score_pair(rho=0.3, p=0.4, n=1000, seed=7)
    assert np.array_equal(a.pseudo, b.pseudo)
    assert np.array_equal(a.oracle, b.oracle)
    with pytest.raises(ValueError):
        dr_score_pair(rho=0.0, p=1.0, n=100)


def test_alpha_star_moves_with_error_correlation():
    """Same propensity, same marginals; only the unidentified coupling moves.

    At p = 0.9 the estimate runs from 1 (perfectly aligned errors, where
    the oracle score is identically zero) down toward 0 as the coupling
    turns negative.  At p = 0.5 the pseudo scores dominate at every
    level regardless of the coupling.
    """
    at = {rho: estimate_alpha_star(dr_score_pair(rho=rho, p=0.9, n=100000, seed=314))
          for rho in (1.0, 0.0, -1.0)}
    assert at[1.0] == 1.0
    assert at[1.0] > at[0.0] > at[-1.0]
    assert at[0.0] == pytest.approx(0.129, abs=0.04)
    assert at[-1.0] == pytest.approx(0.071, abs=0.04)

    for rho in (1.0, 0.0, -1.0):
        assert estimate_alpha_star(dr_score_pair(rho=rho, p=0.5, n=100000, seed=314)) == 1.0
