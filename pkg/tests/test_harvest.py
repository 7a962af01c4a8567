import math

import numpy as np
import pytest

from dualeh.harvest import (
    RX,
    TX,
    HarvestProcess,
    asymptotic_variance,
    bernoulli,
    derive_seed,
    mean,
    node_stream,
    sample_arrival,
    sample_arrivals,
)


def test_prob_one_gives_amount_every_slot():
    x = sample_arrivals(bernoulli(1.0), node_stream(3, TX), 1000)
    assert np.all(x == 1.0)


def test_prob_zero_gives_nothing():
    x = sample_arrivals(bernoulli(0.0), node_stream(3, TX), 1000)
    assert np.all(x == 0.0)


def test_sample_mean_within_three_sigma():
    n = 10**6
    x = sample_arrivals(bernoulli(0.4), node_stream(11, RX), n)
    assert abs(x.mean() - 0.4) <= 3 * math.sqrt(0.24 / n)


@pytest.mark.parametrize("p,a,want", [(0.4, 1, 0.4), (0.3, 2, 0.6), (0.0, 5, 0.0)])
def test_mean(p, a, want):
    assert mean(bernoulli(p, a)) == pytest.approx(want)
    assert bernoulli(p, a).mean() == pytest.approx(want)


@pytest.mark.parametrize("p,want", [(0.5, 0.25), (1.0, 0.0), (0.4, 0.24)])
def test_asymptotic_variance(p, want):
    assert asymptotic_variance(bernoulli(p)) == pytest.approx(want)


def test_variance_scales_with_amount_squared():
    assert asymptotic_variance(bernoulli(0.5, 3.0)) == pytest.approx(0.25 * 9)


@pytest.mark.parametrize("kw", [dict(prob=-0.1), dict(prob=1.5), dict(prob=0.5, amount=0.0), dict(prob=0.5, kind="poisson")])
def test_invalid_process_rejected(kw):
    with pytest.raises(ValueError):
        HarvestProcess(**kw)


def test_scalar_and_vector_draws_agree():
    p = bernoulli(0.37, 2.0)
    one = [sample_arrival(p, node_stream(5, TX)) for _ in range(1)]
    g = node_stream(5, TX)
    scalar = np.array([sample_arrival(p, g) for _ in range(500)])
    vector = sample_arrivals(p, node_stream(5, TX), 500)
    assert one[0] == vector[0]
    assert np.array_equal(scalar, vector)


def test_chunked_draws_match_single_draw():
    p = bernoulli(0.3)
    g = node_stream(9, RX)
    parts = np.concatenate([sample_arrivals(p, g, m) for m in (7, 100, 1, 392)])
    assert np.array_equal(parts, sample_arrivals(p, node_stream(9, RX), 500))


def test_node_streams_are_independent_and_reproducible():
    a = node_stream(1, TX).random(50)
    b = node_stream(1, RX).random(50)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, node_stream(1, TX).random(50))


def test_derive_seed_is_deterministic_and_distinct():
    seeds = [derive_seed(42, k) for k in range(8)]
    assert len(set(seeds)) == 8
    assert seeds == [derive_seed(42, k) for k in range(8)]
    assert derive_seed(42, 0) != derive_seed(43, 0)
