"""Bigger batteries, fewer empty slots.

Sweeps the battery size at both ends for the coordinated policy and
reports throughput and how often each battery ran dry. Each size uses
the same arrival streams, so differences come from the batteries alone.
"""

from dualeh import SimConfig, run_sweep, throughput_upper_bound

base = SimConfig(
    horizon=2 * 10**6,
    seed=5,
    rx_cost=0.5,
    prob_tx=0.4,
    prob_rx=0.3,
    capacity_tx=1000.0,
    capacity_rx=1000.0,
)
bound = throughput_upper_bound(base.link)
rows = run_sweep(base, "battery.capacity", [10.0, 20.0, 40.0, 80.0, 200.0, 1000.0])
print(f"ceiling {bound:.5f}")
print("B_max   throughput   rx empty   tx empty")
for r in rows:
    s = r.summary
    print(f"{r.value:5.0f}   {s.throughput:.5f}      {s.p_d_rx:.2e}   {s.p_d_tx:.2e}")
