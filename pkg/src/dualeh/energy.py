"""Battery and super-capacitor bookkeeping for one node."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

__all__ = [
    "ContractViolation",
    "NodeEnergyState",
    "EnergyLedger",
    "battery_update",
    "step_battery",
    "transfer_to_supercap",
    "release_supercap",
    "drain_supercap",
]

LEDGER_RTOL = 1e-9


class ContractViolation(RuntimeError):
    """A policy asked for energy the node does not have.

    This always indicates a bug in a policy, never bad luck in the arrivals.
    """

    def __init__(self, message: str, policy: Optional[str] = None, slot: Optional[int] = None):
        where = []
        if policy is not None:
            where.append(f"policy={policy}")
        if slot is not None:
            where.append(f"slot={slot}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.policy = policy
        self.slot = slot


@dataclass(frozen=True)
class NodeEnergyState:
    battery: float
    capacity: float
    supercap: float = 0.0

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"battery capacity must be positive, got {self.capacity}")

    @property
    def half_full(self) -> bool:
        return self.battery >= self.capacity / 2


def battery_update(battery: float, harvest: float, draw: float, capacity: float) -> Tuple[float, float]:
    """One slot of battery evolution, returning ``(next_battery, overflow)``.

    The draw is debited from the slot-start level, the harvest credited, then
    the result clipped to ``[0, capacity]``. Kept free of Python objects so
    the compiled simulation kernel reuses it verbatim.
    """
    level = battery - draw + harvest
    if level > capacity:
        return capacity, level - capacity
    if level < 0.0:
        return 0.0, 0.0
    return level, 0.0


def step_battery(
    state: NodeEnergyState,
    harvest: float,
    draw: float,
    *,
    policy: Optional[str] = None,
    slot: Optional[int] = None,
) -> Tuple[NodeEnergyState, float]:
    if draw > state.battery:
        raise ContractViolation(
            f"draw {draw!r} exceeds battery {state.battery!r}", policy=policy, slot=slot
        )
    if draw < 0:
        raise ContractViolation(f"negative draw {draw!r}", policy=policy, slot=slot)
    battery, overflow = battery_update(state.battery, harvest, draw, state.capacity)
    return replace(state, battery=battery), overflow


def transfer_to_supercap(state: NodeEnergyState, amount: float) -> NodeEnergyState:
    if amount > state.battery:
        raise ContractViolation(f"transfer {amount!r} exceeds battery {state.battery!r}")
    return replace(state, battery=state.battery - amount, supercap=state.supercap + amount)


def release_supercap(state: NodeEnergyState, amount: float) -> Tuple[NodeEnergyState, float]:
    """Take ``amount`` out of the super-capacitor without emptying it."""
    if amount > state.supercap:
        raise ContractViolation(f"release {amount!r} exceeds supercap {state.supercap!r}")
    return replace(state, supercap=state.supercap - amount), amount


def drain_supercap(state: NodeEnergyState) -> Tuple[NodeEnergyState, float]:
    return replace(state, supercap=0.0), state.supercap


@dataclass(frozen=True)
class EnergyLedger:
    """Energy totals over one run for one node.

    ``consumed_total`` is energy that left the node (radiated or spent
    listening); energy parked in the super-capacitor is not consumed yet.
    """

    start_battery: float
    harvested_total: float
    consumed_total: float
    overflow_total: float
    end_battery: float
    end_supercap: float = 0.0

    @property
    def residual(self) -> float:
        return self.harvested_total - (
            self.consumed_total
            + self.overflow_total
            + (self.end_battery - self.start_battery)
            + self.end_supercap
        )

    def balanced(self, rtol: float = LEDGER_RTOL) -> bool:
        scale = max(self.harvested_total, self.start_battery, self.consumed_total, 1.0)
        return math.isfinite(self.residual) and abs(self.residual) <= rtol * scale
