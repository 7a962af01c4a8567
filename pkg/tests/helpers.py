"""Shared builders for tests."""

from dualeh.engine import SimConfig


def config(**kw):
    base = dict(
        horizon=2000,
        seed=5,
        rx_cost=0.5,
        prob_tx=0.4,
        prob_rx=0.3,
        capacity_tx=50.0,
        capacity_rx=50.0,
        policy="coordinated",
    )
    base.update(kw)
    return SimConfig(**base)
