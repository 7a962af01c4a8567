"""Slot-stepped co-simulation of the transmitter, the receiver and the feedback bit."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import _kernel
from .bounds import LinkParams
from .config import MAX_TRACE_SLOTS, SWEEP_AXES, ConfigError, config_violations, merged, set_key
from .energy import (
    EnergyLedger,
    NodeEnergyState,
    drain_supercap,
    release_supercap,
    step_battery,
    transfer_to_supercap,
)
from .harvest import RX, TX, HarvestProcess, derive_seed, node_stream, sample_arrivals
from .metrics import TRACE_DTYPE, SimSummary, empty_records
from .policies import (
    CoordState,
    DilationDrifts,
    DriftParams,
    RxSchedule,
    SimulationIntegrityError,
    UncoordPattern,
    calibrate_uncoordinated,
    coordinated_step,
    dilated_step,
    dilation_drifts,
    half_crossing,
    receive_feedback,
    rx_schedule,
    transmitter_drift,
    unconstrained_step,
    uncoordinated_step,
)

__all__ = [
    "SimConfig",
    "Trace",
    "SweepRow",
    "SWEEP_AXES",
    "run_link",
    "run_reference",
    "summary_from_trace",
    "calibration_pilot",
    "run_sweep",
]

CHUNK = 1 << 18
# Sub-seed key for the coordinated pilot run that calibrates an
# uncoordinated pattern; kept apart from the trial streams.
PILOT_KEY = 7919
PILOT_MIN_SLOTS = 10**5
PILOT_MAX_SLOTS = 10**7


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one run.

    Build it directly or from a nested mapping with :meth:`from_dict`;
    both paths apply the same validation rules.
    """

    horizon: int
    seed: int
    rx_cost: float
    prob_tx: float
    prob_rx: float
    capacity_tx: float
    capacity_rx: float
    policy: str = "coordinated"
    amount: float = 1.0
    beta_t: float = 2.0
    dilation_f: int = 1
    pattern: Optional[UncoordPattern] = None
    initial_fraction_tx: float = 0.5
    initial_fraction_rx: float = 0.5
    record: str = "summary"
    warmup_fraction: float = 0.01

    def __post_init__(self):
        bad = config_violations(self.to_dict())
        if bad:
            raise ConfigError(bad)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "SimConfig":
        bad = config_violations(raw)
        if bad:
            raise ConfigError(bad)
        cfg = merged({k: v for k, v in raw.items() if k != "sweep"})
        pol = cfg["policy"]
        pattern = pol.get("pattern")
        return cls(
            horizon=int(cfg["horizon"]),
            seed=int(cfg["seed"]),
            rx_cost=float(cfg["link"]["rx_cost"]),
            prob_tx=float(cfg["harvest"]["tx"]["prob"]),
            prob_rx=float(cfg["harvest"]["rx"]["prob"]),
            capacity_tx=float(cfg["battery"]["tx"]["capacity"]),
            capacity_rx=float(cfg["battery"]["rx"]["capacity"]),
            policy=pol["kind"],
            amount=float(cfg["harvest"]["amount"]),
            beta_t=float(pol["beta_t"]),
            dilation_f=int(pol["dilation_f"]),
            pattern=None if pattern is None else UncoordPattern(int(pattern["n_plus"]), int(pattern["n_minus"])),
            initial_fraction_tx=float(cfg["battery"]["tx"]["initial_fraction"]),
            initial_fraction_rx=float(cfg["battery"]["rx"]["initial_fraction"]),
            record=cfg["record"],
            warmup_fraction=float(cfg["warmup_fraction"]),
        )

    def to_dict(self) -> Dict[str, Any]:
        pattern = None if self.pattern is None else {"n_plus": self.pattern.n_plus, "n_minus": self.pattern.n_minus}
        return {
            "horizon": self.horizon,
            "seed": self.seed,
            "record": self.record,
            "warmup_fraction": self.warmup_fraction,
            "link": {"rx_cost": self.rx_cost},
            "harvest": {"amount": self.amount, "tx": {"prob": self.prob_tx}, "rx": {"prob": self.prob_rx}},
            "battery": {
                "tx": {"capacity": self.capacity_tx, "initial_fraction": self.initial_fraction_tx},
                "rx": {"capacity": self.capacity_rx, "initial_fraction": self.initial_fraction_rx},
            },
            "policy": {
                "kind": self.policy,
                "beta_t": self.beta_t,
                "dilation_f": self.dilation_f,
                "pattern": pattern,
            },
        }

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)

    def with_key(self, key: str, value: Any) -> "SimConfig":
        """Copy with one dotted config key changed (``battery.capacity`` sets both)."""
        raw = self.to_dict()
        if key == "battery.capacity":
            set_key(raw, "battery.tx.capacity", value)
            set_key(raw, "battery.rx.capacity", value)
        else:
            set_key(raw, key, value)
        return SimConfig.from_dict(raw)

    @property
    def harvest_tx(self) -> HarvestProcess:
        return HarvestProcess(self.prob_tx, self.amount)

    @property
    def harvest_rx(self) -> HarvestProcess:
        return HarvestProcess(self.prob_rx, self.amount)

    @property
    def link(self) -> LinkParams:
        return LinkParams(self.harvest_tx.mean(), self.harvest_rx.mean(), self.rx_cost)

    @property
    def warmup(self) -> int:
        return int(math.floor(self.horizon * self.warmup_fraction))

    def drift(self) -> DriftParams:
        return transmitter_drift(self.harvest_tx, self.capacity_tx, self.beta_t)

    def rx_schedule(self) -> RxSchedule:
        return rx_schedule(self.rx_cost, self.harvest_rx.mean())

    def dilation(self) -> DilationDrifts:
        return dilation_drifts(self.rx_cost, self.harvest_rx.mean(), self.dilation_f)


@dataclass
class Trace:
    """Per-slot records of one run plus the configuration that produced them."""

    records: np.ndarray
    config: SimConfig
    pattern: Optional[UncoordPattern] = None

    def __len__(self) -> int:
        return len(self.records)

    def window(self) -> np.ndarray:
        """Records after the warm-up slots."""
        return self.records[self.config.warmup :]

    def rx_half_counts(self) -> Tuple[int, int]:
        high = int(np.count_nonzero(self.window()["battery_rx"] >= self.config.capacity_rx / 2))
        return high, len(self.window()) - high


def _cycle_arrays(pattern: Optional[UncoordPattern], sched: Optional[RxSchedule]):
    if pattern is None or sched is None:
        return np.ones(1, dtype=np.int64), np.ones(1, dtype=np.int64)
    cycle = pattern.cycle(sched)
    return np.array([c[0] for c in cycle], dtype=np.int64), np.array([c[1] for c in cycle], dtype=np.int64)


def calibration_pilot(config: SimConfig) -> SimSummary:
    """Coordinated run used to calibrate an uncoordinated pattern."""
    horizon = min(max(config.horizon, PILOT_MIN_SLOTS), PILOT_MAX_SLOTS)
    pilot = config.replace(
        policy="coordinated",
        pattern=None,
        dilation_f=1,
        horizon=horizon,
        seed=derive_seed(config.seed, PILOT_KEY),
        record="summary",
    )
    summary, _ = run_link(pilot)
    return summary


def _resolve_pattern(config: SimConfig) -> Optional[UncoordPattern]:
    if config.policy != "uncoordinated":
        return None
    if config.pattern is not None:
        return config.pattern
    return calibrate_uncoordinated(calibration_pilot(config))


def _initial_batteries(config: SimConfig) -> Tuple[float, float]:
    return config.initial_fraction_tx * config.capacity_tx, config.initial_fraction_rx * config.capacity_rx


def run_link(config: SimConfig, *, arrivals: Optional[Tuple[np.ndarray, np.ndarray]] = None):
    """Simulate ``config.horizon`` slots.

    Returns ``(summary, trace)``; ``trace`` is ``None`` unless
    ``config.record == "trace"``. ``arrivals`` replaces the seeded arrival
    streams with explicit ``(tx, rx)`` arrays, mostly for tests.
    """
    pattern = _resolve_pattern(config)
    if pattern is not None and pattern is not config.pattern:
        config = config.replace(pattern=pattern)
    kind = _kernel.KIND_CODES[config.policy]
    drift = config.drift()
    sched = config.rx_schedule() if config.policy != "unconstrained" else None
    f, lplus, lminus = 1, 1, 1
    if config.policy == "dilated":
        dil = config.dilation()
        f, lplus, lminus = dil.f, dil.batch_plus, dil.batch_minus
    elif sched is not None:
        lplus, lminus = sched.n_r_plus, sched.n_r_minus
    fparams = np.array(
        [config.harvest_tx.mean(), drift.delta_t_plus, drift.delta_t_minus, config.capacity_tx, config.capacity_rx, config.rx_cost]
    )
    iparams = np.array([f, lplus, lminus, config.warmup], dtype=np.int64)
    cycle_len, cycle_kind = _cycle_arrays(pattern, sched)
    bt0, br0 = _initial_batteries(config)
    fstate, istate, acc, cnt = _kernel.new_state(bt0, br0, config.capacity_rx)

    n = config.horizon
    want_trace = config.record == "trace"
    if want_trace and n > MAX_TRACE_SLOTS:
        raise ConfigError([f"record: full trace is limited to {MAX_TRACE_SLOTS} slots"])
    ncol = len(_kernel.TRACE_COLUMNS)
    raw = np.zeros((n if want_trace else 0, ncol))
    no_trace = np.zeros((0, ncol))
    if arrivals is None:
        g_t, g_r = node_stream(config.seed, TX), node_stream(config.seed, RX)
    else:
        arr_t_all = np.asarray(arrivals[0], dtype=float)
        arr_r_all = np.asarray(arrivals[1], dtype=float)
        if arr_t_all.shape != (n,) or arr_r_all.shape != (n,):
            raise ValueError("explicit arrivals must have length horizon")
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        if arrivals is None:
            arr_t = sample_arrivals(config.harvest_tx, g_t, m)
            arr_r = sample_arrivals(config.harvest_rx, g_r, m)
        else:
            arr_t = arr_t_all[start : start + m]
            arr_r = arr_r_all[start : start + m]
        out = raw[start : start + m] if want_trace else no_trace
        _kernel.run_chunk(
            arr_t, arr_r, kind, fparams, iparams, cycle_len, cycle_kind, fstate, istate, acc, cnt, out
        )

    summary = _summary_from_kernel(config, pattern, bt0, br0, fstate, acc, cnt)
    trace = None
    if want_trace:
        trace = Trace(_records_from_raw(raw, config), config, pattern)
    return summary, trace


def _records_from_raw(raw: np.ndarray, config: SimConfig) -> np.ndarray:
    rec = np.zeros(raw.shape[0], dtype=TRACE_DTYPE)
    for j, name in enumerate(_kernel.TRACE_COLUMNS):
        rec[name] = raw[:, j]
    rec["tx_empty"] = rec["battery_tx"] == 0.0
    rec["rx_empty"] = rec["battery_rx"] == 0.0
    return rec


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _summary_from_kernel(config, pattern, bt0, br0, fstate, acc, cnt) -> SimSummary:
    K = _kernel
    w = int(cnt[K.C_SLOTS_W])
    in_batch = cnt[K.C_SLOTS_PLUS] + cnt[K.C_SLOTS_MINUS]
    attempts = int(cnt[K.C_ATT_PLUS] + cnt[K.C_ATT_MINUS])
    ledger_tx = EnergyLedger(
        start_battery=bt0,
        harvested_total=float(acc[K.A_HARV_T]),
        consumed_total=float(acc[K.A_CONS_T]),
        overflow_total=float(acc[K.A_OVER_T]),
        end_battery=float(fstate[K.S_BT]),
        end_supercap=float(fstate[K.S_SC]),
    )
    ledger_rx = EnergyLedger(
        start_battery=br0,
        harvested_total=float(acc[K.A_HARV_R]),
        consumed_total=float(acc[K.A_CONS_R]),
        overflow_total=float(acc[K.A_OVER_R]),
        end_battery=float(fstate[K.S_BR]),
    )
    return SimSummary(
        policy=config.policy,
        horizon=config.horizon,
        seed=config.seed,
        window_slots=w,
        throughput=_ratio(acc[K.A_RATE_W], w),
        throughput_full=float(acc[K.A_RATE]) / config.horizon,
        p_d_tx=_ratio(cnt[K.C_EMPTY_T], w),
        p_d_rx=_ratio(cnt[K.C_EMPTY_R], w),
        p_o_tx=_ratio(cnt[K.C_OVER_T], w),
        p_o_rx=_ratio(cnt[K.C_OVER_R], w),
        pi_empty=_ratio(cnt[K.C_EMPTY_ANY], w),
        feedback_bits=int(cnt[K.C_FEEDBACK]),
        feedback_rate=int(cnt[K.C_FEEDBACK]) / config.horizon,
        attempts=attempts,
        attempt_frac_plus=_ratio(cnt[K.C_ATT_PLUS], attempts),
        rx_missed_attempts=int(cnt[K.C_MISSED]),
        successes=int(cnt[K.C_SUCCESS]),
        pi_on_plus=_ratio(cnt[K.C_SLOTS_PLUS], in_batch),
        pi_on_minus=_ratio(cnt[K.C_SLOTS_MINUS], in_batch),
        rx_high_slots=int(cnt[K.C_RX_HIGH]),
        rx_low_slots=int(cnt[K.C_RX_LOW]),
        mu_r_hat=_ratio(acc[K.A_HARV_R_W], w),
        max_supercap=float(fstate[K.S_MAX_SC]),
        wasted_tx_energy=float(acc[K.A_WASTED]),
        ledger_tx=ledger_tx,
        ledger_rx=ledger_rx,
        pattern=None if pattern is None else (pattern.n_plus, pattern.n_minus),
        config=config,
    )


def run_reference(
    config: SimConfig, *, arrivals: Optional[Tuple[Sequence[float], Sequence[float]]] = None
) -> Trace:
    """Slow, object-level simulation built from the policy step functions.

    Produces the same records as :func:`run_link` in trace mode and checks
    the schedule agreement and super-capacitor rules every slot.
    """
    pattern = _resolve_pattern(config)
    if pattern is not None and pattern is not config.pattern:
        config = config.replace(pattern=pattern)
    n = config.horizon
    if arrivals is None:
        g_t, g_r = node_stream(config.seed, TX), node_stream(config.seed, RX)
        arr_t = sample_arrivals(config.harvest_tx, g_t, n)
        arr_r = sample_arrivals(config.harvest_rx, g_r, n)
    else:
        arr_t = np.asarray(arrivals[0], dtype=float)
        arr_r = np.asarray(arrivals[1], dtype=float)
    kind = config.policy
    mu_t = config.harvest_tx.mean()
    drift = config.drift()
    sched = config.rx_schedule() if kind != "unconstrained" else None
    dil = config.dilation() if kind == "dilated" else None
    cycle = pattern.cycle(sched) if pattern is not None else None
    f = dil.f if dil is not None else 1

    bt0, br0 = _initial_batteries(config)
    tx = NodeEnergyState(bt0, config.capacity_tx)
    rx = NodeEnergyState(br0, config.capacity_rx)
    tx_coord = CoordState(rx_half_belief=rx.half_full, dilation=dil)
    rx_coord = CoordState(dilation=dil)
    rec = empty_records(n)

    for i in range(n):
        slot = i + 1
        n_on_before = rx_coord.n_on
        if kind == "unconstrained":
            a_tx, tx_coord = unconstrained_step("tx", slot, tx, tx_coord, drift, mu_t, config.rx_cost)
            a_rx, rx_coord = unconstrained_step("rx", slot, rx, rx_coord, drift, mu_t, config.rx_cost)
            scheduled, bkind = True, 1
        else:
            if kind == "coordinated":
                a_tx, tx_coord = coordinated_step("tx", slot, tx, tx_coord, sched, drift, mu_t)
                a_rx, rx_coord = coordinated_step("rx", slot, rx, rx_coord, sched, drift, mu_t)
            elif kind == "dilated":
                a_tx, tx_coord = dilated_step("tx", slot, tx, tx_coord, sched, drift, mu_t)
                a_rx, rx_coord = dilated_step("rx", slot, rx, rx_coord, sched, drift, mu_t)
            else:
                a_tx, tx_coord = uncoordinated_step("tx", slot, tx, tx_coord, sched, drift, mu_t, cycle)
                a_rx, rx_coord = uncoordinated_step("rx", slot, rx, rx_coord, sched, drift, mu_t, cycle)
            if (tx_coord.n_on, tx_coord.batch_len) != (rx_coord.n_on, rx_coord.batch_len):
                raise SimulationIntegrityError(
                    f"slot {slot}: tx schedule (n_on={tx_coord.n_on}, len={tx_coord.batch_len}) "
                    f"!= rx schedule (n_on={rx_coord.n_on}, len={rx_coord.batch_len})"
                )
            scheduled = slot - n_on_before > rx_coord.batch_len - f
            bkind = rx_coord.batch_kind
            if (a_tx.kind == "transmit") != scheduled:
                raise SimulationIntegrityError(f"slot {slot}: transmitter and receiver wake sets differ")

        ht, hr = float(arr_t[i]), float(arr_r[i])
        if a_tx.kind == "accumulate":
            tx = transfer_to_supercap(tx, a_tx.draw)
            tx, of_t = step_battery(tx, ht, 0.0, policy=kind, slot=slot)
            power = 0.0
        else:
            if a_tx.drain:
                tx, from_sc = drain_supercap(tx)
            else:
                tx, from_sc = release_supercap(tx, a_tx.from_supercap)
            power = from_sc + a_tx.draw
            tx, of_t = step_battery(tx, ht, a_tx.draw, policy=kind, slot=slot)
            if a_tx.drain and tx.supercap != 0.0:
                raise SimulationIntegrityError(f"slot {slot}: supercap not empty after transmission")
        rx_before = rx.battery
        rx, of_r = step_battery(rx, hr, a_rx.draw, policy=kind, slot=slot)

        fb = False
        if kind in ("coordinated", "dilated") and half_crossing(rx_before, rx.battery, rx.capacity):
            fb = True
            tx_coord = receive_feedback(tx_coord, rx.half_full)

        tx_on = power > 0.0
        rx_on = a_rx.kind == "listen"
        r = rec[i]
        r["arrival_tx"], r["arrival_rx"] = ht, hr
        r["tx_draw"], r["rx_draw"] = a_tx.draw, a_rx.draw
        r["tx_on"], r["tx_power"], r["rx_on"] = tx_on, power, rx_on
        r["rate"] = math.log2(1.0 + power) if (tx_on and rx_on) else 0.0
        r["feedback"] = fb
        r["battery_tx"], r["battery_rx"], r["supercap"] = tx.battery, rx.battery, tx.supercap
        r["tx_empty"], r["rx_empty"] = tx.battery == 0.0, rx.battery == 0.0
        r["overflow_tx"], r["overflow_rx"] = of_t, of_r
        r["batch_kind"], r["scheduled"] = bkind, scheduled

    return Trace(rec, config, pattern)


def summary_from_trace(trace: Trace) -> SimSummary:
    """Summary computed directly from per-slot records."""
    cfg = trace.config
    rec = trace.records
    win = trace.window()
    w = len(win)
    kinds = win["batch_kind"]
    in_batch = int(np.count_nonzero(kinds))
    sched = win["scheduled"]
    attempts = int(np.count_nonzero(sched))
    bt0, br0 = _initial_batteries(cfg)
    last = rec[-1]
    high, low = trace.rx_half_counts()
    return SimSummary(
        policy=cfg.policy,
        horizon=cfg.horizon,
        seed=cfg.seed,
        window_slots=w,
        throughput=float(np.sum(win["rate"])) / w if w else 0.0,
        throughput_full=float(np.sum(rec["rate"])) / len(rec),
        p_d_tx=float(np.mean(win["tx_empty"])) if w else 0.0,
        p_d_rx=float(np.mean(win["rx_empty"])) if w else 0.0,
        p_o_tx=float(np.mean(win["overflow_tx"] > 0)) if w else 0.0,
        p_o_rx=float(np.mean(win["overflow_rx"] > 0)) if w else 0.0,
        pi_empty=float(np.mean(win["tx_empty"] | win["rx_empty"])) if w else 0.0,
        feedback_bits=int(np.count_nonzero(rec["feedback"])),
        feedback_rate=int(np.count_nonzero(rec["feedback"])) / len(rec),
        attempts=attempts,
        attempt_frac_plus=_ratio(np.count_nonzero(sched & (kinds == 1)), attempts),
        rx_missed_attempts=int(np.count_nonzero(sched & ~win["rx_on"])),
        successes=int(np.count_nonzero(win["rate"] > 0)),
        pi_on_plus=_ratio(np.count_nonzero(kinds == 1), in_batch),
        pi_on_minus=_ratio(np.count_nonzero(kinds == -1), in_batch),
        rx_high_slots=high,
        rx_low_slots=low,
        mu_r_hat=float(np.mean(win["arrival_rx"])) if w else 0.0,
        max_supercap=max(float(np.max(rec["supercap"])), 0.0),
        wasted_tx_energy=float(np.sum(rec["tx_power"][rec["tx_on"] & ~rec["rx_on"]])),
        ledger_tx=EnergyLedger(
            bt0,
            float(np.sum(rec["arrival_tx"])),
            float(np.sum(rec["tx_power"])),
            float(np.sum(rec["overflow_tx"])),
            float(last["battery_tx"]),
            float(last["supercap"]),
        ),
        ledger_rx=EnergyLedger(
            br0,
            float(np.sum(rec["arrival_rx"])),
            float(np.sum(rec["rx_draw"])),
            float(np.sum(rec["overflow_rx"])),
            float(last["battery_rx"]),
        ),
        pattern=None if trace.pattern is None else (trace.pattern.n_plus, trace.pattern.n_minus),
        config=cfg,
    )


class SweepRow(NamedTuple):
    value: Any
    policy: str
    trial: int
    summary: SimSummary


def _run_summary(config: SimConfig) -> SimSummary:
    return run_link(config.replace(record="summary"))[0]


def run_sweep(
    base: SimConfig,
    axis: str,
    values: Iterable[Any],
    trials: int = 1,
    policies: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> List[SweepRow]:
    """One run per (value, policy, trial), in that nesting order.

    Trial ``k`` uses seed ``derive_seed(base.seed, k)`` at every sweep value
    and for every policy, so policies are compared on common arrivals.
    Uncoordinated runs without a fixed pattern are calibrated once per
    sweep value from a coordinated pilot.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError([f"sweep axis: unknown axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}"])
    if trials < 1:
        raise ConfigError(["trials: must be >= 1"])
    values = list(values)
    policies = list(policies) if policies else [base.policy]
    seeds = [derive_seed(base.seed, k) for k in range(trials)]

    jobs: List[Tuple[Any, str, int, SimConfig]] = []
    for value in values:
        point = base.with_key(axis, value)
        for policy in policies:
            cfg = point.replace(policy=policy)
            if policy == "uncoordinated" and cfg.pattern is None:
                cfg = cfg.replace(pattern=calibrate_uncoordinated(calibration_pilot(cfg)))
            for k, seed in enumerate(seeds):
                jobs.append((value, policy, k, cfg.replace(seed=seed)))

    configs = [j[3] for j in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_summary, configs))
    else:
        summaries = [_run_summary(c) for c in configs]
    return [SweepRow(v, p, k, s) for (v, p, k, _), s in zip(jobs, summaries)]
