"""Power-control policies for the transmitter and receiver.

Each policy is a small state machine stepped once per slot per node. The
step functions here are the readable reference; ``dualeh._kernel`` runs the
same rules compiled for long horizons and is checked against them slot by
slot in the test-suite.

Four joint policies are provided:

``unconstrained``
    The transmitter spends ``mu_t + delta`` per slot when its battery is at
    least half full and ``min(B, mu_t - delta)`` otherwise, radiating it
    immediately. The receiver listens whenever it can afford ``R``.
``coordinated``
    The receiver wakes at the end of batches of ``floor(R/mu_r)`` slots
    while its battery is at least half full and ``ceil(R/mu_r)`` slots
    otherwise, and sends one bit whenever its battery crosses the half mark.
    The transmitter parks its per-slot budget in a super-capacitor and
    radiates all of it in the receiver's wake slot.
``dilated``
    Same, with batches ``f`` times longer and the receiver awake for the
    last ``f`` slots of each batch.
``uncoordinated``
    No feedback; both nodes follow a fixed repeating pattern of ``n_plus``
    short batches followed by ``n_minus`` long ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence, Tuple, Union

from .config import POLICY_KINDS
from .energy import NodeEnergyState
from .harvest import HarvestProcess, asymptotic_variance

__all__ = [
    "POLICY_KINDS",
    "DriftParams",
    "RxSchedule",
    "DilationDrifts",
    "UncoordPattern",
    "CoordState",
    "Action",
    "StepResult",
    "SimulationIntegrityError",
    "transmitter_drift",
    "rx_schedule",
    "dilation_drifts",
    "unconstrained_tx_power",
    "unconstrained_step",
    "coordinated_step",
    "dilated_step",
    "uncoordinated_step",
    "half_crossing",
    "receive_feedback",
    "pattern_for_ratio",
    "calibrate_uncoordinated",
]

TX = "tx"
RX = "rx"
PLUS = 1
MINUS = -1

# Largest n_plus / n_minus accepted from calibration.
MAX_PATTERN_TERM = 10


class SimulationIntegrityError(AssertionError):
    """Transmitter and receiver disagree on the shared schedule."""


@dataclass(frozen=True)
class DriftParams:
    delta_t_plus: float
    delta_t_minus: float
    beta_t: float = 2.0


def transmitter_drift(
    process: Union[HarvestProcess, float], capacity: float, beta_t: float = 2.0
) -> DriftParams:
    """Drift that steers the transmitter battery toward half full.

    ``delta = beta_t * sigma^2 * ln(B_max) / B_max`` with ``sigma^2`` the
    asymptotic variance of the arrivals (a process or the number itself).
    """
    sigma2 = asymptotic_variance(process) if isinstance(process, HarvestProcess) else float(process)
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    delta = beta_t * sigma2 * math.log(capacity) / capacity
    return DriftParams(delta, delta, beta_t)


@dataclass(frozen=True)
class RxSchedule:
    n_r: float
    n_r_plus: int
    n_r_minus: int
    delta_r_plus: float
    delta_r_minus: float
    rx_cost: float


def rx_schedule(rx_cost: float, mu_r: float) -> RxSchedule:
    if not mu_r > 0:
        raise ValueError("receiver harvesting rate must be positive for a batch schedule")
    n_r = rx_cost / mu_r
    lo, hi = math.floor(n_r), math.ceil(n_r)
    if lo < 1:
        raise ValueError(f"R/mu_r = {n_r:.6g} < 1: receiver is not energy constrained")
    return RxSchedule(n_r, lo, hi, n_r - lo, hi - n_r, rx_cost)


@dataclass(frozen=True)
class DilationDrifts:
    """Batch lengths and receiver drifts when batches are stretched ``f`` times.

    ``delta_eff_minus`` divides the long-batch drift by the long-batch
    length; the mirror image of ``delta_eff_plus``.
    """

    f: int
    batch_plus: int
    batch_minus: int
    delta_rf_plus: float
    delta_rf_minus: float

    @property
    def delta_eff_plus(self) -> float:
        return self.delta_rf_plus / self.batch_plus

    @property
    def delta_eff_minus(self) -> float:
        return self.delta_rf_minus / self.batch_minus


def dilation_drifts(rx_cost: float, mu_r: float, f: int) -> DilationDrifts:
    if isinstance(f, bool) or int(f) != f or f < 1:
        raise ValueError(f"dilation factor must be an integer >= 1, got {f!r}")
    f = int(f)
    stretched = rx_cost * f / mu_r
    lo, hi = math.floor(stretched), math.ceil(stretched)
    if lo < f:
        raise ValueError("dilated batch shorter than its on-phase; receiver is not energy constrained")
    n_r = rx_cost / mu_r
    return DilationDrifts(f, lo, hi, f * n_r - lo, hi - f * n_r)


@dataclass(frozen=True)
class UncoordPattern:
    n_plus: int
    n_minus: int

    def __post_init__(self):
        if self.n_plus < 0 or self.n_minus < 0 or self.n_plus + self.n_minus < 1:
            raise ValueError(f"invalid pattern ({self.n_plus}, {self.n_minus})")

    def cycle(self, sched: RxSchedule) -> Tuple[Tuple[int, int], ...]:
        """One period as ``(batch_length, kind)`` pairs."""
        return ((sched.n_r_plus, PLUS),) * self.n_plus + ((sched.n_r_minus, MINUS),) * self.n_minus

    def period(self, sched: RxSchedule) -> int:
        return self.n_plus * sched.n_r_plus + self.n_minus * sched.n_r_minus


@dataclass(frozen=True)
class CoordState:
    """Per-node schedule state.

    ``n_on`` is the last scheduled wake slot (0 before the first) and
    ``batch_len`` the length of the batch that started at ``n_on + 1``.
    ``on_draw`` and ``on_share`` only matter during a dilated on-phase.
    """

    n_on: int = 0
    batch_len: int = 0
    batch_kind: int = 0
    rx_half_belief: bool = True
    feedback_count: int = 0
    cursor: int = 0
    dilation: Optional[DilationDrifts] = None
    on_draw: float = 0.0
    on_share: float = 0.0


class Action(NamedTuple):
    """What a node does in one slot.

    ``draw`` is debited from the battery. For the transmitter,
    ``from_supercap`` is taken out of the super-capacitor (all of it when
    ``drain`` is set) and radiated together with ``draw``.
    """

    kind: str
    draw: float = 0.0
    from_supercap: float = 0.0
    drain: bool = False

    @property
    def power(self) -> float:
        if self.kind == "transmit":
            return self.from_supercap + self.draw
        if self.kind == "listen":
            return self.draw
        return 0.0


SLEEP = Action("sleep")


class StepResult(NamedTuple):
    action: Action
    coord: CoordState


def unconstrained_tx_power(battery: float, params: DriftParams, mu_t: float, capacity: float) -> float:
    if battery >= capacity / 2:
        return mu_t + params.delta_t_plus
    return min(battery, mu_t - params.delta_t_minus)


def unconstrained_step(
    role: str, slot: int, energy: NodeEnergyState, coord: CoordState, drift: DriftParams, mu_t: float, rx_cost: float
) -> StepResult:
    if role == TX:
        u = unconstrained_tx_power(energy.battery, drift, mu_t, energy.capacity)
        return StepResult(Action("transmit", u), coord)
    if energy.battery >= rx_cost:
        return StepResult(Action("listen", rx_cost), coord)
    return StepResult(SLEEP, coord)


def _choose_batch(role: str, energy: NodeEnergyState, coord: CoordState, plus: int, minus: int) -> CoordState:
    # Both nodes decide from the receiver's half-state at batch start: the
    # receiver reads its battery, the transmitter its feedback-driven copy.
    high = coord.rx_half_belief if role == TX else energy.half_full
    return replace(coord, batch_len=plus if high else minus, batch_kind=PLUS if high else MINUS)


def _listen(energy: NodeEnergyState, rx_cost: float) -> Action:
    return Action("listen", rx_cost) if energy.battery >= rx_cost else SLEEP


def coordinated_step(
    role: str,
    slot: int,
    energy: NodeEnergyState,
    coord: CoordState,
    sched: RxSchedule,
    drift: DriftParams,
    mu_t: float,
) -> StepResult:
    if slot == coord.n_on + 1:
        coord = _choose_batch(role, energy, coord, sched.n_r_plus, sched.n_r_minus)
    wake = slot == coord.n_on + coord.batch_len
    if wake:
        coord = replace(coord, n_on=slot)
    if role == TX:
        u = unconstrained_tx_power(energy.battery, drift, mu_t, energy.capacity)
        if wake:
            return StepResult(Action("transmit", u, energy.supercap, drain=True), coord)
        return StepResult(Action("accumulate", u), coord)
    return StepResult(_listen(energy, sched.rx_cost) if wake else SLEEP, coord)


def dilated_step(
    role: str,
    slot: int,
    energy: NodeEnergyState,
    coord: CoordState,
    sched: RxSchedule,
    drift: DriftParams,
    mu_t: float,
) -> StepResult:
    dil = coord.dilation
    if dil is None:
        raise ValueError("dilated_step needs coord.dilation")
    if slot == coord.n_on + 1:
        coord = _choose_batch(role, energy, coord, dil.batch_plus, dil.batch_minus)
    pos = slot - coord.n_on
    length = coord.batch_len
    on_phase = pos > length - dil.f
    last = pos == length
    if role == RX:
        if last:
            coord = replace(coord, n_on=slot)
        return StepResult(_listen(energy, sched.rx_cost) if on_phase else SLEEP, coord)

    if not on_phase:
        u = unconstrained_tx_power(energy.battery, drift, mu_t, energy.capacity)
        return StepResult(Action("accumulate", u), coord)
    if pos == length - dil.f + 1:
        # Budget for the whole on-phase is fixed when it begins.
        u0 = unconstrained_tx_power(energy.battery, drift, mu_t, energy.capacity)
        coord = replace(coord, on_draw=u0, on_share=energy.supercap / dil.f)
    draw = min(coord.on_draw, energy.battery)
    if last:
        coord = replace(coord, n_on=slot)
        return StepResult(Action("transmit", draw, energy.supercap, drain=True), coord)
    return StepResult(Action("transmit", draw, coord.on_share), coord)


def uncoordinated_step(
    role: str,
    slot: int,
    energy: NodeEnergyState,
    coord: CoordState,
    sched: RxSchedule,
    drift: DriftParams,
    mu_t: float,
    pattern: Union[UncoordPattern, Sequence[Tuple[int, int]]],
) -> StepResult:
    """Fixed-pattern schedule; never produces feedback.

    ``pattern`` is an :class:`UncoordPattern` or an explicit cycle of
    ``(batch_length, kind)`` pairs.
    """
    cycle = pattern.cycle(sched) if isinstance(pattern, UncoordPattern) else pattern
    if slot == coord.n_on + 1:
        length, kind = cycle[coord.cursor]
        coord = replace(coord, batch_len=length, batch_kind=kind, cursor=(coord.cursor + 1) % len(cycle))
    wake = slot == coord.n_on + coord.batch_len
    if wake:
        coord = replace(coord, n_on=slot)
    if role == TX:
        u = unconstrained_tx_power(energy.battery, drift, mu_t, energy.capacity)
        if wake:
            return StepResult(Action("transmit", u, energy.supercap, drain=True), coord)
        return StepResult(Action("accumulate", u), coord)
    return StepResult(_listen(energy, sched.rx_cost) if wake else SLEEP, coord)


def half_crossing(before: float, after: float, capacity: float) -> bool:
    """Whether the battery moved across the half-full mark in either direction."""
    half = capacity / 2
    return (before >= half) != (after >= half)


def receive_feedback(coord: CoordState, high: bool) -> CoordState:
    """Transmitter side of the one-bit channel.

    The new belief only takes effect at the next batch start.
    """
    return replace(coord, rx_half_belief=high, feedback_count=coord.feedback_count + 1)


def pattern_for_ratio(high: int, low: int, max_term: int = MAX_PATTERN_TERM) -> UncoordPattern:
    """Pattern whose batch ratio ``n_plus / n_minus`` best matches ``high / low``.

    Candidates have ``n_minus == 1`` or ``n_plus == 1`` and neither term
    above ``max_term``, so the receiver never runs more than one batch of
    the rarer kind in a row. Ties go to the smaller ``n_plus + n_minus``. A
    one-sided count gives the degenerate patterns ``(1, 0)`` or ``(0, 1)``.
    """
    if high < 0 or low < 0 or high + low == 0:
        raise ValueError("need a non-empty count")
    if low == 0:
        return UncoordPattern(1, 0)
    if high == 0:
        return UncoordPattern(0, 1)
    target = Fraction(high, low)
    candidates = {(k, 1) for k in range(1, max_term + 1)} | {(1, k) for k in range(1, max_term + 1)}
    best = min(candidates, key=lambda c: (abs(Fraction(c[0], c[1]) - target), c[0] + c[1]))
    return UncoordPattern(*best)


def calibrate_uncoordinated(source, max_term: int = MAX_PATTERN_TERM) -> UncoordPattern:
    """Pattern matching how often a coordinated run kept the receiver above half.

    ``source`` is a coordinated-policy :class:`~dualeh.engine.Trace` or
    :class:`~dualeh.metrics.SimSummary`; both expose ``rx_half_counts()``.
    """
    high, low = source.rx_half_counts()
    return pattern_for_ratio(high, low, max_term)
