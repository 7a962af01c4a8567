"""A receiver that can only listen part-time.

The coordinated policy wakes the receiver at the end of each batch of
slots. Batches are one slot shorter when the receiver battery is above
half, which nudges the battery back toward the middle. The receiver
tells the transmitter whenever its battery crosses the half mark, one
bit at a time, so both ends always agree on the next batch length.
Meanwhile the transmitter parks energy in a super-capacitor and sends
all of it in the wake slot.

Stretching each batch by a factor f keeps the average duty cycle but
flips the half-mark far less often, so far fewer feedback bits are sent.
"""

from dualeh import SimConfig, energy_balance_residual, run_link, throughput_upper_bound

base = SimConfig(
    horizon=10**7,
    seed=3,
    rx_cost=0.5,
    prob_tx=0.4,
    prob_rx=0.3,
    capacity_tx=1000.0,
    capacity_rx=1000.0,
)
bound = throughput_upper_bound(base.link)
print(f"ceiling {bound:.5f} bits/slot\n")
print("policy        f   throughput  gap     feedback/slot  residual")
for policy, f in (("coordinated", 1), ("dilated", 10), ("dilated", 100)):
    s, _ = run_link(base.replace(policy=policy, dilation_f=f))
    print(
        f"{policy:<12} {f:>3}   {s.throughput:.5f}    {bound - s.throughput:.5f} "
        f"{s.feedback_rate:.2e}       {energy_balance_residual(s):.1e}"
    )
