"""Throughput and battery statistics from traces and run summaries."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .bounds import LinkParams, throughput_upper_bound
from .energy import EnergyLedger

__all__ = [
    "TRACE_DTYPE",
    "empty_records",
    "SimSummary",
    "NotApplicableError",
    "LowConfidenceWarning",
    "time_avg_throughput",
    "discharge_probability",
    "overflow_probability",
    "energy_balance_residual",
    "throughput_gap_vs_bound",
    "mean_se",
]

TRACE_DTYPE = np.dtype(
    [
        ("slot", np.int64),
        ("arrival_tx", np.float64),
        ("arrival_rx", np.float64),
        ("tx_draw", np.float64),
        ("rx_draw", np.float64),
        ("tx_on", np.bool_),
        ("tx_power", np.float64),
        ("rx_on", np.bool_),
        ("rate", np.float64),
        ("feedback", np.bool_),
        ("battery_tx", np.float64),
        ("battery_rx", np.float64),
        ("supercap", np.float64),
        ("tx_empty", np.bool_),
        ("rx_empty", np.bool_),
        ("overflow_tx", np.float64),
        ("overflow_rx", np.float64),
        ("batch_kind", np.int8),
        ("scheduled", np.bool_),
    ]
)

# Below this many slots the receiver energy balance is not expected to hold.
STATIONARY_SLOTS = 10**5


class NotApplicableError(ValueError):
    pass


class LowConfidenceWarning(UserWarning):
    pass


def empty_records(n: int) -> np.ndarray:
    """Zeroed per-slot records, handy for building traces by hand."""
    rec = np.zeros(n, dtype=TRACE_DTYPE)
    rec["slot"] = np.arange(1, n + 1)
    return rec


def _records(trace) -> np.ndarray:
    return trace.records if hasattr(trace, "records") else np.asarray(trace)


@dataclass(frozen=True)
class SimSummary:
    """Statistics of one run.

    Rates and probabilities are over the slots after warm-up
    (``window_slots`` of them) except ``throughput_full``, the feedback
    counters and the energy ledgers, which cover the whole horizon.
    ``pi_on_plus`` / ``pi_on_minus`` are the fractions of slots spent in
    short / long batches; ``attempt_frac_plus`` is the fraction of
    scheduled receiver wake slots that end a short batch.
    """

    policy: str
    horizon: int
    seed: int
    window_slots: int
    throughput: float
    throughput_full: float
    p_d_tx: float
    p_d_rx: float
    p_o_tx: float
    p_o_rx: float
    pi_empty: float
    feedback_bits: int
    feedback_rate: float
    attempts: int
    attempt_frac_plus: float
    rx_missed_attempts: int
    successes: int
    pi_on_plus: float
    pi_on_minus: float
    rx_high_slots: int
    rx_low_slots: int
    mu_r_hat: float
    max_supercap: float
    wasted_tx_energy: float
    ledger_tx: EnergyLedger
    ledger_rx: EnergyLedger
    pattern: Optional[Tuple[int, int]] = None
    config: Any = field(default=None, repr=False, compare=False)

    def rx_half_counts(self) -> Tuple[int, int]:
        return self.rx_high_slots, self.rx_low_slots

    def as_row(self) -> Dict[str, Any]:
        """Flat mapping used for CSV output; column names are stable."""
        row = {k: v for k, v in asdict(self).items() if k not in ("ledger_tx", "ledger_rx", "pattern", "config")}
        row["n_plus"] = "" if self.pattern is None else self.pattern[0]
        row["n_minus"] = "" if self.pattern is None else self.pattern[1]
        for node, ledger in (("tx", self.ledger_tx), ("rx", self.ledger_rx)):
            for k, v in asdict(ledger).items():
                row[f"ledger_{node}_{k}"] = v
        return row


def time_avg_throughput(trace) -> float:
    """Mean achieved rate in bits per slot over every record in ``trace``."""
    rec = _records(trace)
    if rec.size == 0:
        raise ValueError("empty trace")
    on = rec["rx_on"] & rec["tx_on"]
    return float(np.sum(np.where(on, np.log2(1.0 + rec["tx_power"]), 0.0)) / rec.size)


def _node(node: str) -> str:
    if node not in ("tx", "rx"):
        raise ValueError(f"node must be 'tx' or 'rx', got {node!r}")
    return node


def discharge_probability(trace, node: str) -> float:
    """Fraction of slots ending with the battery exactly empty."""
    rec = _records(trace)
    if rec.size == 0:
        raise ValueError("empty trace")
    return float(np.mean(rec[f"battery_{_node(node)}"] == 0.0))


def overflow_probability(trace, node: str) -> float:
    """Fraction of slots in which some harvested energy was clipped."""
    rec = _records(trace)
    if rec.size == 0:
        raise ValueError("empty trace")
    return float(np.mean(rec[f"overflow_{_node(node)}"] > 0.0))


def _balance_terms(source) -> Dict[str, float]:
    cfg = source.config
    if cfg is None or cfg.policy not in ("coordinated", "dilated"):
        kind = None if cfg is None else cfg.policy
        raise NotApplicableError(f"energy balance needs a coordinated or dilated run, got {kind!r}")
    if isinstance(source, SimSummary):
        return dict(
            pi_plus=source.pi_on_plus,
            pi_minus=source.pi_on_minus,
            p_d=source.p_d_rx,
            p_o=source.p_o_rx,
            mu_r=source.mu_r_hat,
            slots=source.window_slots,
        )
    rec = source.window() if hasattr(source, "window") else _records(source)
    kinds = rec["batch_kind"]
    in_batch = max(int(np.count_nonzero(kinds)), 1)
    return dict(
        pi_plus=float(np.count_nonzero(kinds == 1)) / in_batch,
        pi_minus=float(np.count_nonzero(kinds == -1)) / in_batch,
        p_d=discharge_probability(rec, "rx"),
        p_o=overflow_probability(rec, "rx"),
        mu_r=float(np.mean(rec["arrival_rx"])),
        slots=rec.size,
    )


def energy_balance_residual(source) -> float:
    """Relative mismatch of the receiver's long-run energy balance.

    Listening costs ``f*R`` per batch, so a receiver spending a fraction
    ``pi_plus`` of time in short batches of length ``L+`` and ``pi_minus``
    in long ones of length ``L-`` uses ``pi_plus*f*R/L+ +
    (pi_minus - p_d)*f*R/L-`` per slot; at stationarity this equals the
    energy it keeps, ``mu_r*(1 - p_o)``. Returns
    ``|spent - kept| / mu_r`` from empirical quantities.

    Runs shorter than ``STATIONARY_SLOTS`` trigger a
    :class:`LowConfidenceWarning`; the value is still returned.
    """
    terms = _balance_terms(source)
    cfg = source.config
    sched = cfg.rx_schedule()
    R = cfg.rx_cost
    if cfg.policy == "dilated":
        dil = cfg.dilation()
        f, lplus, lminus = dil.f, dil.batch_plus, dil.batch_minus
    else:
        f, lplus, lminus = 1, sched.n_r_plus, sched.n_r_minus
    mu_r = terms["mu_r"]
    if mu_r <= 0:
        raise ValueError("no receiver energy harvested in the measured window")
    spent = terms["pi_plus"] * f * R / lplus + (terms["pi_minus"] - terms["p_d"]) * f * R / lminus
    kept = mu_r * (1.0 - terms["p_o"])
    if terms["slots"] < STATIONARY_SLOTS:
        warnings.warn(
            f"energy balance over {terms['slots']} slots is not at stationarity",
            LowConfidenceWarning,
            stacklevel=2,
        )
    return abs(spent - kept) / mu_r


def throughput_gap_vs_bound(summary: SimSummary, params: Optional[LinkParams] = None) -> float:
    """Upper bound minus achieved throughput, in bits per slot."""
    if params is None:
        params = summary.config.link
    return throughput_upper_bound(params) - summary.throughput


def mean_se(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and standard error across independent trials (SE is 0 for one trial)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no values")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
