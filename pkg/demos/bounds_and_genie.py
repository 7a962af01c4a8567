"""How far can a dual energy-harvesting link go?

Prints the long-run throughput ceiling for a few receiver harvesting
rates, then shows a genie that sees all future arrivals creeping up to
that ceiling as the horizon grows.
"""

from dualeh import LinkParams, genie_throughput_oracle, throughput_upper_bound
from dualeh.harvest import RX, TX, bernoulli, node_stream, sample_arrivals

R = 0.5
MU_T = 0.4

print("receiver rate   duty   ceiling (bits/slot)")
for mu_r in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6):
    params = LinkParams(MU_T, mu_r, R)
    duty = min(mu_r / R, 1.0)
    print(f"{mu_r:13.1f}   {duty:4.2f}   {throughput_upper_bound(params):.5f}")

# A receiver at 0.3 units/slot can afford to listen 60% of the time. The
# genie pools all harvested energy and spreads it over those slots.
params = LinkParams(MU_T, 0.3, R)
ceiling = throughput_upper_bound(params)
print(f"\ngenie vs ceiling {ceiling:.5f} (seed 1)")
for n in (10**3, 10**4, 10**5, 10**6):
    tx = sample_arrivals(bernoulli(MU_T), node_stream(1, TX), n)
    rx = sample_arrivals(bernoulli(0.3), node_stream(1, RX), n)
    value = genie_throughput_oracle(params, tx, rx)
    print(f"N={n:>8}  genie={value:.5f}  off by {abs(value - ceiling) / ceiling:.3%}")
