"""Per-slot energy arrival processes and seeded random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HarvestProcess",
    "bernoulli",
    "sample_arrival",
    "sample_arrivals",
    "mean",
    "asymptotic_variance",
    "node_stream",
    "derive_seed",
    "TX",
    "RX",
]

TX = 0
RX = 1


@dataclass(frozen=True)
class HarvestProcess:
    """Stationary i.i.d. arrival process.

    Only ``kind="bernoulli"`` exists today: each slot delivers ``amount``
    energy units with probability ``prob`` and nothing otherwise.
    """

    prob: float
    amount: float = 1.0
    kind: str = "bernoulli"

    def __post_init__(self):
        if self.kind != "bernoulli":
            raise ValueError(f"unknown harvest kind {self.kind!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"harvest probability must lie in [0, 1], got {self.prob}")
        if not self.amount > 0.0:
            raise ValueError(f"harvest amount must be positive, got {self.amount}")

    def mean(self) -> float:
        return mean(self)

    def asymptotic_variance(self) -> float:
        return asymptotic_variance(self)


def bernoulli(prob: float, amount: float = 1.0) -> HarvestProcess:
    return HarvestProcess(prob=prob, amount=amount)


def mean(process: HarvestProcess) -> float:
    """Mean arrival per slot."""
    return process.prob * process.amount


def asymptotic_variance(process: HarvestProcess) -> float:
    """Asymptotic variance of the partial sums per slot.

    Arrivals are independent across slots, so this is the one-slot variance.
    """
    p = process.prob
    return p * (1.0 - p) * process.amount**2


def sample_arrival(process: HarvestProcess, rng: np.random.Generator) -> float:
    """Draw one slot's arrival.

    Consumes exactly one uniform from ``rng``, so interleaving this with
    :func:`sample_arrivals` on the same stream gives the same sequence.
    """
    return process.amount if rng.random() < process.prob else 0.0


def sample_arrivals(process: HarvestProcess, rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random(n)
    return np.where(u < process.prob, process.amount, 0.0)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix integer keys into ``seed`` and return a 64-bit sub-seed.

    ``derive_seed(s, trial)`` is how sweeps produce per-trial seeds; the
    mapping is fixed so sweeps reproduce across machines and worker counts.
    """
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def node_stream(seed: int, node: int) -> np.random.Generator:
    """Random stream owned by one node (``TX`` or ``RX``) for one run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(node)])))
