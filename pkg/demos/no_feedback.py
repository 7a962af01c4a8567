"""Dropping the feedback channel.

Run the coordinated policy once as a pilot and count how often the
receiver sat above half. A fixed repeating pattern of n_plus short
batches followed by n_minus long batches with the same proportions
then needs no feedback at all and loses very little throughput.
"""

from dualeh import SimConfig, calibrate_uncoordinated, run_link
from dualeh.engine import calibration_pilot

for prob_rx in (0.1, 0.2, 0.4):
    cfg = SimConfig(
        horizon=10**7,
        seed=11,
        rx_cost=0.5,
        prob_tx=0.4,
        prob_rx=prob_rx,
        capacity_tx=50.0,
        capacity_rx=50.0,
    )
    pattern = calibrate_uncoordinated(calibration_pilot(cfg))
    coord, _ = run_link(cfg)
    fixed, _ = run_link(cfg.replace(policy="uncoordinated", pattern=pattern))
    sched = cfg.rx_schedule()
    print(
        f"rho_r={prob_rx}: batches {sched.n_r_plus}/{sched.n_r_minus}, pattern ({pattern.n_plus},{pattern.n_minus})  "
        f"coordinated {coord.throughput:.5f} ({coord.feedback_bits} bits)  "
        f"fixed {fixed.throughput:.5f} ({fixed.feedback_bits} bits)"
    )
