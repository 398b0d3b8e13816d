"""Monte-Carlo summary-conditional predictor."""

import math

import numpy as np
import pytest

from olreg import (
    History,
    MonteCarloConfig,
    Observation,
    iidgauss_predict,
    iidgauss_pvalue,
)
from olreg.protocol import IidGaussPredictor


def history_of(features, responses):
    return History.from_observations(
        Observation(np.atleast_1d(x), float(y)) for x, y in zip(features, responses)
    )


def random_history(rng, n, k):
    return history_of(rng.normal(size=(n, k)), rng.normal(size=n))


def test_full_lines_until_enough_observations():
    rng = np.random.default_rng(61)
    history = random_history(rng, 2, 2)  # n = 3 < K + 2 = 4
    intervals = iidgauss_predict(history, rng.normal(size=2), (0.2, 0.05))
    assert all((i.lower, i.upper) == (-math.inf, math.inf) for i in intervals)
    obs = Observation(rng.normal(size=2), 0.0)
    assert iidgauss_pvalue(history, obs) == 1.0


def test_no_samples_means_no_information():
    rng = np.random.default_rng(62)
    history = random_history(rng, 12, 2)
    mc = MonteCarloConfig(samples=0, seed=0)
    intervals = iidgauss_predict(history, rng.normal(size=2), (0.05,), mc=mc)
    assert (intervals[0].lower, intervals[0].upper) == (-math.inf, math.inf)


def test_intervals_are_deterministic_given_the_seed():
    rng = np.random.default_rng(63)
    history = random_history(rng, 15, 2)
    x = rng.normal(size=2)
    mc = MonteCarloConfig(samples=499, seed=3)
    first = iidgauss_predict(history, x, (0.1, 0.05), mc=mc)
    second = iidgauss_predict(history, x, (0.1, 0.05), mc=mc)
    assert first == second


def test_levels_nest():
    rng = np.random.default_rng(64)
    for trial in range(5):
        history = random_history(rng, 20, 2)
        x = rng.normal(size=2)
        mc = MonteCarloConfig(samples=499, seed=trial)
        wide, mid, narrow = iidgauss_predict(history, x, (0.2, 0.1, 0.05), mc=mc)
        assert mid.lower <= wide.lower or wide.is_empty
        assert wide.upper <= mid.upper or wide.is_empty
        assert narrow.lower <= mid.lower or mid.is_empty
        assert mid.upper <= narrow.upper or mid.is_empty


def test_permutation_invariance_is_bitwise():
    rng = np.random.default_rng(65)
    features = rng.normal(size=(14, 3))
    responses = rng.normal(size=14)
    x = rng.normal(size=3)
    mc = MonteCarloConfig(samples=299, seed=8)
    plain = history_of(features, responses)
    shuffled_index = rng.permutation(14)
    shuffled = history_of(features[shuffled_index], responses[shuffled_index])
    a = iidgauss_predict(plain, x, (0.1,), mc=mc)
    b = iidgauss_predict(shuffled, x, (0.1,), mc=mc)
    assert a == b
    obs = Observation(x, 0.25)
    assert iidgauss_pvalue(plain, obs, mc=mc) == iidgauss_pvalue(shuffled, obs, mc=mc)


def test_pvalue_and_interval_are_consistent():
    rng = np.random.default_rng(66)
    history = random_history(rng, 25, 2)
    x = rng.normal(size=2)
    mc = MonteCarloConfig(samples=999, seed=5)
    (interval,) = iidgauss_predict(history, x, (0.1,), mc=mc)
    assert interval.is_bounded
    center = 0.5 * (interval.lower + interval.upper)
    margin = 0.05 * interval.length
    assert iidgauss_pvalue(history, Observation(x, center), mc=mc) > 0.1
    far_out = interval.upper + 5.0 * interval.length
    assert iidgauss_pvalue(history, Observation(x, far_out), mc=mc) <= 0.1
    # endpoints sit within the bisection resolution of the 0.1 contour
    near_inside = interval.upper - margin
    near_outside = interval.upper + margin
    assert iidgauss_pvalue(history, Observation(x, near_inside), mc=mc) > 0.1
    assert iidgauss_pvalue(history, Observation(x, near_outside), mc=mc) <= 0.1


def test_pvalue_floor_is_one_over_samples_plus_one():
    rng = np.random.default_rng(67)
    history = random_history(rng, 10, 1)
    mc = MonteCarloConfig(samples=9, seed=0)
    outlier = Observation(np.array([0.0]), 1e6)
    p = iidgauss_pvalue(history, outlier, mc=mc)
    assert p >= 1.0 / 10.0
    assert p <= 0.5


def test_protocol_adapter_runs_online():
    rng = np.random.default_rng(68)
    predictor = IidGaussPredictor(mc=MonteCarloConfig(samples=99, seed=1))
    from olreg import run_online

    stream = [Observation(rng.normal(size=1), float(rng.normal())) for _ in range(12)]
    ledger = run_online(predictor, stream, (0.2,))
    assert ledger.errors.shape == (1, 12)
    assert np.isinf(ledger.lengths[0][0])


def test_ridge_enables_wide_histories():
    rng = np.random.default_rng(69)
    history = random_history(rng, 6, 8)  # more columns than rows
    x = rng.normal(size=8)
    mc = MonteCarloConfig(samples=199, seed=2)
    intervals = iidgauss_predict(history, x, (0.1,), ridge=0.01, mc=mc)
    assert len(intervals) == 1  # regularized run completes
