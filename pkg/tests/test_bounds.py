import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualeh.bounds import LinkParams, genie_throughput_oracle, throughput_upper_bound
from dualeh.harvest import RX, TX, bernoulli, node_stream, sample_arrivals

# log2(1.4) and 0.6*log2(5/3), evaluated independently
RX_UNCONSTRAINED = 0.48542682717024166
RX_CONSTRAINED = 0.44217935649972373


def test_unconstrained_receiver_case():
    assert throughput_upper_bound(LinkParams(0.4, 0.6, 0.5)) == pytest.approx(RX_UNCONSTRAINED, rel=1e-12)


def test_constrained_receiver_case():
    assert throughput_upper_bound(LinkParams(0.4, 0.3, 0.5)) == pytest.approx(RX_CONSTRAINED, rel=1e-12)


def test_branches_meet_when_mu_r_equals_R():
    assert throughput_upper_bound(LinkParams(0.4, 0.5, 0.5)) == pytest.approx(math.log2(1.4), rel=1e-12)
    below = throughput_upper_bound(LinkParams(0.4, 0.5 - 1e-12, 0.5))
    assert below == pytest.approx(math.log2(1.4), rel=1e-9)


def test_zero_rates():
    assert throughput_upper_bound(LinkParams(0.4, 0.0, 0.5)) == 0.0
    assert throughput_upper_bound(LinkParams(0.0, 0.3, 0.5)) == 0.0


def test_rx_constrained_flag():
    assert LinkParams(0.4, 0.3, 0.5).rx_constrained
    assert not LinkParams(0.4, 0.5, 0.5).rx_constrained


@pytest.mark.parametrize("kw", [dict(mu_t=-1, mu_r=0.3, rx_cost=0.5), dict(mu_t=0.4, mu_r=0.3, rx_cost=0)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        LinkParams(**kw)


@given(mu_t=st.floats(0.01, 5), mu_r=st.floats(0.01, 5), R=st.floats(0.05, 5), scale=st.floats(1.0, 3.0))
def test_bound_monotone_in_rates(mu_t, mu_r, R, scale):
    base = throughput_upper_bound(LinkParams(mu_t, mu_r, R))
    assert throughput_upper_bound(LinkParams(mu_t * scale, mu_r, R)) >= base - 1e-12
    assert throughput_upper_bound(LinkParams(mu_t, mu_r * scale, R)) >= base - 1e-12
    assert throughput_upper_bound(LinkParams(mu_t, mu_r, R * scale)) <= base + 1e-12


def test_oracle_zero_tx():
    assert genie_throughput_oracle(LinkParams(0, 0.3, 0.5), [0, 0, 0], [1, 1, 1]) == 0.0


def test_oracle_symmetric_saturated():
    assert genie_throughput_oracle(LinkParams(1, 1, 1), [1, 1, 1, 1], [1, 1, 1, 1]) == pytest.approx(1.0)


def test_oracle_caps_on_slots_at_horizon():
    # 8 units of rx energy at R=1 could pay for 8 slots but the horizon is 4
    assert genie_throughput_oracle(LinkParams(1, 2, 1), [1, 1, 1, 1], [2, 2, 2, 2]) == pytest.approx(1.0)


@pytest.mark.parametrize("tx,rx", [([], []), ([1, 0], [1])])
def test_oracle_bad_inputs(tx, rx):
    with pytest.raises(ValueError):
        genie_throughput_oracle(LinkParams(0.4, 0.3, 0.5), tx, rx)


def test_oracle_approaches_bound():
    n = 10**6
    tx = sample_arrivals(bernoulli(0.4), node_stream(2024, TX), n)
    rx = sample_arrivals(bernoulli(0.3), node_stream(2024, RX), n)
    value = genie_throughput_oracle(LinkParams(0.4, 0.3, 0.5), tx, rx)
    assert abs(value - RX_CONSTRAINED) / RX_CONSTRAINED < 0.01


@given(st.integers(1, 200), st.integers(0, 2**32 - 1))
def test_oracle_never_exceeds_finite_horizon_ceiling(n, seed):
    rng = np.random.default_rng(seed)
    tx = rng.integers(0, 2, n).astype(float)
    rx = rng.integers(0, 2, n).astype(float)
    v = genie_throughput_oracle(LinkParams(0.4, 0.3, 0.5), tx, rx)
    assert 0.0 <= v <= math.log2(1.0 + tx.sum()) + 1e-12
