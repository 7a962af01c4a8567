"""When the receiver harvests more than it needs to listen.

With mu_r > R the receiver can stay on, so the transmitter alone sets
the pace. Its battery-drift rule spends a little more than the mean
when the battery is above half and a little less below, which keeps it
away from both empty and full. Throughput ends up at log2(1 + mu_t).
"""

import math

from dualeh import SimConfig, run_link

for cap in (10.0, 50.0, 200.0):
    cfg = SimConfig(
        horizon=10**6,
        seed=7,
        rx_cost=0.5,
        prob_tx=0.4,
        prob_rx=0.6,
        capacity_tx=cap,
        capacity_rx=cap,
        policy="unconstrained",
    )
    s, _ = run_link(cfg)
    print(
        f"B_max={cap:6.0f}  throughput={s.throughput:.5f}  ceiling={math.log2(1.4):.5f}  "
        f"tx empty {s.p_d_tx:.2e}  tx overflow {s.p_o_tx:.2e}"
    )
