import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entanglenet.channel import (
    DEFAULT_ALPHA,
    FiberParams,
    edge_success,
    pair_arrival_weights,
    pair_survival,
    partial_arrival_given_loss,
    repeaterless_rate,
    sample_bernoulli,
    transmissivity,
)
from entanglenet.rng import stream

probs = st.floats(0.0, 1.0)


def test_transmissivity_examples():
    assert transmissivity(0.3, 0.0) == 1.0
    assert transmissivity(DEFAULT_ALPHA, 22.0) == pytest.approx(0.367879, abs=1e-6)
    assert transmissivity(1 / 22, 44.0) == pytest.approx(math.exp(-2), abs=1e-12)


@pytest.mark.parametrize("alpha,length", [(-1.0, 1.0), (1.0, -1.0)])
def test_transmissivity_rejects_negative(alpha, length):
    with pytest.raises(ValueError):
        transmissivity(alpha, length)


def test_survival_and_edge_success_examples():
    assert pair_survival(1.0) == 1.0
    assert pair_survival(0.0) == 0.0
    assert pair_survival(0.9) == pytest.approx(0.81)
    assert edge_success(1.0, 0.0) == 1.0
    assert edge_success(0.8, 0.1) == pytest.approx(0.576)
    assert edge_success(0.7, 1.0) == 0.0


def test_repeaterless_rate():
    assert repeaterless_rate(0.0) == 0.0
    assert repeaterless_rate(0.5) == pytest.approx(1.0)
    assert repeaterless_rate(0.75) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        repeaterless_rate(1.0)


def test_fiber_params_validation():
    FiberParams()
    with pytest.raises(ValueError):
        FiberParams(alpha=-0.1)
    with pytest.raises(ValueError):
        FiberParams(gamma=1.5)


def test_bernoulli_extremes_and_mean():
    rng = stream(11)
    assert not any(sample_bernoulli(0.0, rng) for _ in range(1000))
    assert all(sample_bernoulli(1.0, rng) for _ in range(1000))
    # a vectorised draw from the same kind of stream gives the law-of-large-numbers check
    draws = stream(12).random(10**6) < 0.3
    assert abs(draws.mean() - 0.3) < 0.0015


def test_bernoulli_deterministic():
    a = [sample_bernoulli(0.4, stream(5, 1)) for _ in range(3)]
    b = [sample_bernoulli(0.4, stream(5, 1)) for _ in range(3)]
    assert a == b


@given(st.floats(0, 5), st.floats(0, 100), st.floats(0, 100))
def test_transmissivity_multiplicative(alpha, l1, l2):
    whole = transmissivity(alpha, l1 + l2)
    assert abs(whole - transmissivity(alpha, l1) * transmissivity(alpha, l2)) <= 1e-12


@given(probs, probs)
def test_probabilities_in_range(eta, q):
    for value in (pair_survival(eta), edge_success(eta, q), partial_arrival_given_loss(eta)):
        assert 0.0 <= value <= 1.0
    assert edge_success(eta, 0.0) == pair_survival(eta)


@given(probs)
def test_arrival_weights(eta):
    both, one, none = pair_arrival_weights(eta)
    assert both + one + none == pytest.approx(1.0, abs=1e-12)
    if eta < 1:
        assert one / (one + none) == pytest.approx(partial_arrival_given_loss(eta), abs=1e-12)


def test_trial_streams_distinct_and_reproducible():
    from entanglenet.rng import trial_stream

    a = trial_stream(5, (1,), 0).random(8)
    assert np.array_equal(a, trial_stream(5, (1,), 0).random(8))
    assert not np.array_equal(a, trial_stream(5, (1,), 1).random(8))
    assert not np.array_equal(a, trial_stream(5, (2,), 0).random(8))
    assert not np.array_equal(a, trial_stream(6, (1,), 0).random(8))
