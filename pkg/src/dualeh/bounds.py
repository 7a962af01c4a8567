"""Throughput upper bounds for the dual energy-harvesting link.

All rates are in bits per slot (base-2 logarithm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["LinkParams", "throughput_upper_bound", "genie_throughput_oracle"]


@dataclass(frozen=True)
class LinkParams:
    mu_t: float
    mu_r: float
    rx_cost: float

    def __post_init__(self):
        if self.mu_t < 0 or self.mu_r < 0:
            raise ValueError("mean harvesting rates must be non-negative")
        if not self.rx_cost > 0:
            raise ValueError(f"receiver cost R must be positive, got {self.rx_cost}")

    @property
    def rx_constrained(self) -> bool:
        """True when the receiver cannot afford to listen in every slot."""
        return self.mu_r / self.rx_cost < 1.0


def throughput_upper_bound(params: LinkParams) -> float:
    """Long-run throughput no causal or noncausal policy can beat.

    With an energy-unconstrained receiver the transmitter alone limits the
    link and the bound is ``log2(1 + mu_t)``. Otherwise the receiver can
    be on in a fraction ``mu_r/R`` of slots and the transmit energy is best
    spread evenly over those slots. The two branches meet at ``mu_r = R``.
    """
    mu_t, mu_r, R = params.mu_t, params.mu_r, params.rx_cost
    if mu_r == 0.0:
        return 0.0
    duty = mu_r / R
    if duty >= 1.0:
        return math.log2(1.0 + mu_t)
    return duty * math.log2(1.0 + R * mu_t / mu_r)


def genie_throughput_oracle(
    params: LinkParams, arrivals_tx: Sequence[float], arrivals_rx: Sequence[float]
) -> float:
    """Finite-horizon throughput of a genie with infinite batteries.

    All energy harvested over the horizon is handed to both nodes up front.
    The receiver can then listen in ``floor(E_r / R)`` slots (at most the
    horizon) and the transmitter splits its energy equally across them.
    """
    tx = np.asarray(arrivals_tx, dtype=float)
    rx = np.asarray(arrivals_rx, dtype=float)
    if tx.size == 0 or rx.size == 0:
        raise ValueError("arrival sequences must be non-empty")
    if tx.shape != rx.shape:
        raise ValueError("arrival sequences must have equal length")
    n = tx.size
    e_t = float(tx.sum())
    on_slots = min(math.floor(float(rx.sum()) / params.rx_cost), n)
    if on_slots == 0 or e_t == 0.0:
        return 0.0
    return on_slots * math.log2(1.0 + e_t / on_slots) / n
