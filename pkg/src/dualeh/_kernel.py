"""Compiled slot loop used by :func:`dualeh.engine.run_link`.

Mirrors the step functions in :mod:`dualeh.policies` operation for
operation so that both produce bit-identical batteries and rates.
"""

import math

import numpy as np
from numba import njit

from .energy import battery_update

UNCONSTRAINED = 0
COORDINATED = 1
DILATED = 2
UNCOORDINATED = 3
KIND_CODES = {
    "unconstrained": UNCONSTRAINED,
    "coordinated": COORDINATED,
    "dilated": DILATED,
    "uncoordinated": UNCOORDINATED,
}

# fparams
P_MU_T, P_DPLUS, P_DMINUS, P_CAP_T, P_CAP_R, P_RCOST = range(6)
# iparams
P_F, P_LPLUS, P_LMINUS, P_WARMUP = range(4)
# fstate
S_BT, S_BR, S_SC, S_ON_DRAW, S_ON_SHARE, S_MAX_SC = range(6)
# istate
S_SLOT, S_NON, S_BLEN, S_BKIND, S_BELIEF, S_CURSOR = range(6)
# float accumulators; *_W are over the post-warm-up window
(
    A_RATE_W,
    A_RATE,
    A_HARV_T,
    A_HARV_R,
    A_CONS_T,
    A_CONS_R,
    A_OVER_T,
    A_OVER_R,
    A_HARV_R_W,
    A_WASTED,
) = range(10)
N_ACC = 10
# integer counters, window unless noted
(
    C_SLOTS_W,
    C_EMPTY_T,
    C_EMPTY_R,
    C_EMPTY_ANY,
    C_OVER_T,
    C_OVER_R,
    C_FEEDBACK,  # whole horizon
    C_SLOTS_PLUS,
    C_SLOTS_MINUS,
    C_ATT_PLUS,
    C_ATT_MINUS,
    C_MISSED,
    C_RX_HIGH,
    C_RX_LOW,
    C_SUCCESS,
) = range(15)
N_CNT = 15

TRACE_COLUMNS = (
    "slot",
    "arrival_tx",
    "arrival_rx",
    "tx_draw",
    "rx_draw",
    "tx_on",
    "tx_power",
    "rx_on",
    "rate",
    "feedback",
    "battery_tx",
    "battery_rx",
    "supercap",
    "overflow_tx",
    "overflow_rx",
    "batch_kind",
    "scheduled",
)

_update = njit(cache=True)(battery_update)


@njit(cache=True)
def _tx_prescription(b, mu_t, dplus, dminus, cap):
    if b >= cap / 2:
        return mu_t + dplus
    return min(b, mu_t - dminus)


@njit(cache=True)
def run_chunk(arr_t, arr_r, kind, fparams, iparams, cycle_len, cycle_kind, fstate, istate, acc, cnt, trace):
    """Advance the link over ``len(arr_t)`` slots, updating state in place.

    ``trace`` is either a ``(len(arr_t), len(TRACE_COLUMNS))`` array to
    fill, or an empty ``(0, k)`` array to skip per-slot recording.
    """
    mu_t = fparams[P_MU_T]
    dplus = fparams[P_DPLUS]
    dminus = fparams[P_DMINUS]
    cap_t = fparams[P_CAP_T]
    cap_r = fparams[P_CAP_R]
    R = fparams[P_RCOST]
    f = iparams[P_F]
    lplus = iparams[P_LPLUS]
    lminus = iparams[P_LMINUS]
    warmup = iparams[P_WARMUP]
    half_r = cap_r / 2
    record = trace.shape[0] > 0
    ncycle = cycle_len.shape[0]

    bt = fstate[S_BT]
    br = fstate[S_BR]
    sc = fstate[S_SC]
    on_draw = fstate[S_ON_DRAW]
    on_share = fstate[S_ON_SHARE]
    max_sc = fstate[S_MAX_SC]
    slot = istate[S_SLOT]
    n_on = istate[S_NON]
    blen = istate[S_BLEN]
    bkind = istate[S_BKIND]
    belief = istate[S_BELIEF]
    cursor = istate[S_CURSOR]

    for i in range(arr_t.shape[0]):
        slot += 1
        ht = arr_t[i]
        hr = arr_r[i]
        from_sc = 0.0
        transmit = False
        if kind == UNCONSTRAINED:
            tx_draw = _tx_prescription(bt, mu_t, dplus, dminus, cap_t)
            transmit = True
            scheduled = True
            bkind = 1
        else:
            if slot == n_on + 1:
                if kind == UNCOORDINATED:
                    blen = cycle_len[cursor]
                    bkind = cycle_kind[cursor]
                    cursor = (cursor + 1) % ncycle
                else:
                    high = br >= half_r
                    if high != (belief == 1):
                        raise AssertionError("transmitter belief out of sync with receiver battery")
                    if high:
                        blen = lplus
                        bkind = 1
                    else:
                        blen = lminus
                        bkind = -1
            pos = slot - n_on
            last = pos == blen
            if kind == DILATED:
                on_phase = pos > blen - f
            else:
                on_phase = last
            scheduled = on_phase
            if not on_phase:
                tx_draw = _tx_prescription(bt, mu_t, dplus, dminus, cap_t)
                sc = sc + tx_draw
            else:
                transmit = True
                if kind == DILATED:
                    if pos == blen - f + 1:
                        on_draw = _tx_prescription(bt, mu_t, dplus, dminus, cap_t)
                        on_share = sc / f
                    tx_draw = min(on_draw, bt)
                    if last:
                        from_sc = sc
                        sc = 0.0
                    else:
                        from_sc = on_share
                        sc = sc - on_share
                else:
                    tx_draw = _tx_prescription(bt, mu_t, dplus, dminus, cap_t)
                    from_sc = sc
                    sc = 0.0
            if last:
                n_on = slot

        power = 0.0
        if transmit:
            power = from_sc + tx_draw
        tx_on = power > 0.0
        rx_on = scheduled and br >= R
        rx_draw = R if rx_on else 0.0
        rate = 0.0
        if tx_on and rx_on:
            rate = math.log2(1.0 + power)

        br_before = br
        bt, of_t = _update(bt, ht, tx_draw, cap_t)
        br, of_r = _update(br, hr, rx_draw, cap_r)
        if sc > max_sc:
            max_sc = sc

        fb = False
        if kind == COORDINATED or kind == DILATED:
            if (br_before >= half_r) != (br >= half_r):
                fb = True
                belief = 1 if br >= half_r else 0
                cnt[C_FEEDBACK] += 1

        acc[A_RATE] += rate
        acc[A_HARV_T] += ht
        acc[A_HARV_R] += hr
        acc[A_CONS_T] += power
        acc[A_CONS_R] += rx_draw
        acc[A_OVER_T] += of_t
        acc[A_OVER_R] += of_r
        if tx_on and not rx_on:
            acc[A_WASTED] += power
        if slot > warmup:
            cnt[C_SLOTS_W] += 1
            acc[A_RATE_W] += rate
            acc[A_HARV_R_W] += hr
            if bt == 0.0:
                cnt[C_EMPTY_T] += 1
            if br == 0.0:
                cnt[C_EMPTY_R] += 1
            if bt == 0.0 or br == 0.0:
                cnt[C_EMPTY_ANY] += 1
            if of_t > 0.0:
                cnt[C_OVER_T] += 1
            if of_r > 0.0:
                cnt[C_OVER_R] += 1
            if bkind == 1:
                cnt[C_SLOTS_PLUS] += 1
            elif bkind == -1:
                cnt[C_SLOTS_MINUS] += 1
            if scheduled:
                if bkind == 1:
                    cnt[C_ATT_PLUS] += 1
                else:
                    cnt[C_ATT_MINUS] += 1
                if not rx_on:
                    cnt[C_MISSED] += 1
            if rate > 0.0:
                cnt[C_SUCCESS] += 1
            if br >= half_r:
                cnt[C_RX_HIGH] += 1
            else:
                cnt[C_RX_LOW] += 1

        if record:
            row = trace[i]
            row[0] = slot
            row[1] = ht
            row[2] = hr
            row[3] = tx_draw
            row[4] = rx_draw
            row[5] = 1.0 if tx_on else 0.0
            row[6] = power
            row[7] = 1.0 if rx_on else 0.0
            row[8] = rate
            row[9] = 1.0 if fb else 0.0
            row[10] = bt
            row[11] = br
            row[12] = sc
            row[13] = of_t
            row[14] = of_r
            row[15] = bkind
            row[16] = 1.0 if scheduled else 0.0

    fstate[S_BT] = bt
    fstate[S_BR] = br
    fstate[S_SC] = sc
    fstate[S_ON_DRAW] = on_draw
    fstate[S_ON_SHARE] = on_share
    fstate[S_MAX_SC] = max_sc
    istate[S_SLOT] = slot
    istate[S_NON] = n_on
    istate[S_BLEN] = blen
    istate[S_BKIND] = bkind
    istate[S_BELIEF] = belief
    istate[S_CURSOR] = cursor


def new_state(bt0, br0, cap_r):
    fstate = np.array([bt0, br0, 0.0, 0.0, 0.0, 0.0])
    istate = np.zeros(6, dtype=np.int64)
    istate[S_BELIEF] = 1 if br0 >= cap_r / 2 else 0
    return fstate, istate, np.zeros(N_ACC), np.zeros(N_CNT, dtype=np.int64)
