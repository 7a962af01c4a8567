import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualeh.energy import NodeEnergyState, drain_supercap, transfer_to_supercap
from dualeh.harvest import bernoulli
from dualeh.policies import (
    MINUS,
    PLUS,
    CoordState,
    RxSchedule,
    UncoordPattern,
    coordinated_step,
    dilated_step,
    dilation_drifts,
    half_crossing,
    pattern_for_ratio,
    receive_feedback,
    rx_schedule,
    transmitter_drift,
    unconstrained_step,
    unconstrained_tx_power,
    uncoordinated_step,
)

# beta_t=2, sigma^2=0.24, B_max=50: delta = 2*0.24*ln(50)/50
DELTA_50 = 0.0375554208521102
DRIFT = transmitter_drift(bernoulli(0.4), 50.0, 2.0)


def test_drift_value():
    assert DRIFT.delta_t_plus == pytest.approx(DELTA_50, rel=1e-12)
    assert DRIFT.delta_t_minus == DRIFT.delta_t_plus
    assert transmitter_drift(0.24, 50.0).delta_t_plus == pytest.approx(DELTA_50, rel=1e-12)


@pytest.mark.parametrize(
    "battery,want",
    [(30.0, 0.43755542085211024), (0.0, 0.0), (24.999, 0.3624445791478898), (0.2, 0.2), (25.0, 0.43755542085211024)],
)
def test_tx_prescription(battery, want):
    assert unconstrained_tx_power(battery, DRIFT, 0.4, 50.0) == pytest.approx(want, rel=1e-12)


def test_unconstrained_receiver_listens_when_affordable():
    a, _ = unconstrained_step("rx", 1, NodeEnergyState(0.5, 10), CoordState(), DRIFT, 0.4, 0.5)
    assert a.kind == "listen" and a.draw == 0.5
    a, _ = unconstrained_step("rx", 1, NodeEnergyState(0.49, 10), CoordState(), DRIFT, 0.4, 0.5)
    assert a.kind == "sleep"


def test_rx_schedule_five_thirds():
    s = rx_schedule(0.5, 0.3)
    assert (s.n_r_plus, s.n_r_minus) == (1, 2)
    assert s.delta_r_plus == pytest.approx(2 / 3)
    assert s.delta_r_minus == pytest.approx(1 / 3)


@pytest.mark.parametrize("mu_r", [0.0, 0.6])
def test_rx_schedule_rejects_unconstrained_or_dead(mu_r):
    with pytest.raises(ValueError):
        rx_schedule(0.5, mu_r)


def _wake_slots(belief_high: bool, slots: int):
    sched = rx_schedule(0.5, 0.3)
    cap = 10.0
    rx = NodeEnergyState(cap if belief_high else 1.0, cap)
    coord = CoordState()
    wakes = []
    for n in range(1, slots + 1):
        a, coord = coordinated_step("rx", n, rx, coord, sched, DRIFT, 0.4)
        if a.kind == "listen":
            wakes.append(n)
    return wakes


def test_batch_length_follows_receiver_half():
    assert _wake_slots(True, 6) == [1, 2, 3, 4, 5, 6]
    assert _wake_slots(False, 6) == [2, 4, 6]


def test_receiver_too_poor_sleeps_while_transmitter_sends():
    sched = rx_schedule(0.5, 0.3)
    rx = NodeEnergyState(0.4, 10.0)
    tx = NodeEnergyState(30.0, 50.0, supercap=0.7)
    a_rx, c_rx = coordinated_step("rx", 1, rx, CoordState(), sched, DRIFT, 0.4)
    a_tx, c_tx = coordinated_step("tx", 1, tx, CoordState(rx_half_belief=False), sched, DRIFT, 0.4)
    assert (c_rx.batch_len, c_tx.batch_len) == (2, 2)
    a_rx, _ = coordinated_step("rx", 2, rx, c_rx, sched, DRIFT, 0.4)
    a_tx, _ = coordinated_step("tx", 2, tx, c_tx, sched, DRIFT, 0.4)
    assert a_rx.kind == "sleep"
    assert a_tx.kind == "transmit" and a_tx.drain and a_tx.power > 0.7


def test_off_slots_accumulate_into_boundary_transmission():
    sched = RxSchedule(3.0, 3, 3, 0.0, 0.0, 0.5)
    tx = NodeEnergyState(20.0, 50.0)
    coord = CoordState()
    low = 0.3624445791478898
    for n in (1, 2):
        a, coord = coordinated_step("tx", n, tx, coord, sched, DRIFT, 0.4)
        assert a.kind == "accumulate" and a.draw == pytest.approx(low)
        tx = transfer_to_supercap(tx, a.draw)
    a, coord = coordinated_step("tx", 3, tx, coord, sched, DRIFT, 0.4)
    assert a.kind == "transmit" and a.drain
    assert a.power == pytest.approx(3 * low)
    tx, released = drain_supercap(tx)
    assert released == pytest.approx(2 * low) and tx.supercap == 0.0
    assert coord.n_on == 3


def test_transmitter_uses_belief_not_receiver_battery():
    sched = rx_schedule(0.5, 0.3)
    _, c = coordinated_step("tx", 1, NodeEnergyState(30, 50), CoordState(rx_half_belief=True), sched, DRIFT, 0.4)
    assert (c.batch_len, c.batch_kind) == (1, PLUS)
    _, c = coordinated_step("tx", 1, NodeEnergyState(30, 50), CoordState(rx_half_belief=False), sched, DRIFT, 0.4)
    assert (c.batch_len, c.batch_kind) == (2, MINUS)


def test_feedback_applies_at_next_batch_start_only():
    sched = rx_schedule(0.5, 0.3)
    tx = NodeEnergyState(30, 50)
    _, c = coordinated_step("tx", 1, tx, CoordState(rx_half_belief=False), sched, DRIFT, 0.4)
    c = receive_feedback(c, True)
    assert c.feedback_count == 1 and c.batch_len == 2
    a, c = coordinated_step("tx", 2, tx, c, sched, DRIFT, 0.4)
    assert a.kind == "transmit" and c.n_on == 2
    _, c = coordinated_step("tx", 3, tx, c, sched, DRIFT, 0.4)
    assert c.batch_len == 1


def test_half_crossing():
    assert half_crossing(4.9, 5.0, 10)
    assert half_crossing(5.0, 4.5, 10)
    assert not half_crossing(5.5, 5.0, 10)
    assert not half_crossing(1.0, 4.99, 10)


def test_dilation_lengths_and_drifts():
    d = dilation_drifts(0.5, 0.3, 100)
    assert (d.batch_plus, d.batch_minus) == (166, 167)
    assert d.delta_rf_plus == pytest.approx(2 / 3)
    assert d.delta_eff_plus == pytest.approx(1 / 249, rel=1e-9)
    assert d.delta_rf_minus == pytest.approx(1 / 3)
    assert d.delta_eff_minus == pytest.approx((1 / 3) / 167)


@pytest.mark.parametrize("f", [0, 2.5, True])
def test_dilation_rejects_non_integer_f(f):
    with pytest.raises(ValueError):
        dilation_drifts(0.5, 0.3, f)


def test_dilated_on_phase_equal_split():
    sched = RxSchedule(2.0, 2, 2, 0.0, 0.0, 0.5)
    # f=4 with mu_r=0.25 gives batches of 8 slots, the last four awake
    dil = dilation_drifts(0.5, 0.25, 4)
    assert (dil.batch_plus, dil.batch_minus) == (8, 8)
    coord = CoordState(dilation=dil)
    for n in range(1, 5):
        a, coord = dilated_step("tx", n, NodeEnergyState(30, 50), coord, sched, DRIFT, 0.4)
        assert a.kind == "accumulate"
    tx = NodeEnergyState(30, 50, supercap=8.0)
    releases = []
    for n in range(5, 9):
        a, coord = dilated_step("tx", n, tx, coord, sched, DRIFT, 0.4)
        assert a.kind == "transmit"
        if a.drain:
            releases.append(tx.supercap)
            tx = replace(tx, supercap=0.0)
        else:
            releases.append(a.from_supercap)
            tx = replace(tx, supercap=tx.supercap - a.from_supercap)
    assert releases == pytest.approx([2.0, 2.0, 2.0, 2.0])
    assert coord.n_on == 8


def test_uncoordinated_unrolling():
    sched = rx_schedule(0.5, 0.3)
    rx = NodeEnergyState(10, 10)
    coord = CoordState()
    wakes = []
    for n in range(1, 10):
        a, coord = uncoordinated_step("rx", n, rx, coord, sched, DRIFT, 0.4, UncoordPattern(1, 1))
        if a.kind == "listen":
            wakes.append(n)
    assert wakes == [1, 3, 4, 6, 7, 9]
    assert UncoordPattern(1, 1).period(sched) == 3


def test_pattern_one_zero_is_always_short_batches():
    sched = rx_schedule(0.5, 0.3)
    assert set(UncoordPattern(1, 0).cycle(sched)) == {(sched.n_r_plus, PLUS)}
    assert set(UncoordPattern(0, 1).cycle(sched)) == {(sched.n_r_minus, MINUS)}


@pytest.mark.parametrize(
    "high,low,want",
    [(100, 0, (1, 0)), (0, 100, (0, 1)), (50, 50, (1, 1)), (196, 100, (2, 1)), (80, 100, (1, 1)), (500, 100, (5, 1)), (100, 330, (1, 3))],
)
def test_pattern_for_ratio(high, low, want):
    p = pattern_for_ratio(high, low)
    assert (p.n_plus, p.n_minus) == want


def test_pattern_terms_capped():
    p = pattern_for_ratio(10**6, 1)
    assert (p.n_plus, p.n_minus) == (10, 1)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_pattern_always_valid(high, low):
    if high + low == 0:
        with pytest.raises(ValueError):
            pattern_for_ratio(high, low)
        return
    p = pattern_for_ratio(high, low)
    assert 1 <= p.n_plus + p.n_minus <= 11
    assert min(p.n_plus, p.n_minus) <= 1


@pytest.mark.parametrize("terms", [(-1, 1), (0, 0)])
def test_bad_pattern(terms):
    with pytest.raises(ValueError):
        UncoordPattern(*terms)


@given(
    mu_r=st.floats(0.02, 0.5),
    R=st.just(0.5),
    highs=st.lists(st.booleans(), min_size=1, max_size=40),
)
def test_tx_and_rx_agree_when_belief_is_current(mu_r, R, highs):
    sched = rx_schedule(R, mu_r)
    tx_c, rx_c = CoordState(), CoordState()
    slot = 0
    for high in highs:
        rx = NodeEnergyState(10.0 if high else 1.0, 10.0)
        tx_c = replace(tx_c, rx_half_belief=high)
        while True:
            slot += 1
            a_tx, tx_c = coordinated_step("tx", slot, NodeEnergyState(30, 50), tx_c, sched, DRIFT, 0.4)
            a_rx, rx_c = coordinated_step("rx", slot, rx, rx_c, sched, DRIFT, 0.4)
            assert (tx_c.n_on, tx_c.batch_len) == (rx_c.n_on, rx_c.batch_len)
            assert (a_tx.kind == "transmit") == (a_rx.kind == "listen")
            if a_tx.kind == "transmit":
                break
    assert math.isfinite(slot)
