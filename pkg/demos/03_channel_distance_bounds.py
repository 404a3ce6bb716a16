"""How far is the teleportation channel from simple physical channels?

Energy-constrained diamond-norm bounds against the matched lossy
channel (both parameter regimes), the exact distance to the matched
energy-dependent replacement channel, and the two-channel
discrimination bound assembled from channel simulation.
"""
import numpy as np

from cvpbt import (
    ChannelParams,
    Cutoff,
    EdrcParams,
    apply_coherent,
    edrc_apply,
    edrc_diamond_norm,
    lossy_diamond_bound_negative,
    lossy_diamond_bound_positive,
    regime,
    sim_example_bound,
    trace_norm,
)

pos = ChannelParams(0.5, 0.5)
print(f"positive regime {pos.lambda_x}/{pos.lambda_y} ({regime(pos).value}):")
for energy in (0.0, 0.5, 1.0, 2.0, 5.0):
    print(f"  E={energy:>4.1f}: lossy bound {lossy_diamond_bound_positive(energy, pos):.6f}")

neg = ChannelParams(0.12, 0.1)
print(f"\nnegative regime {neg.lambda_x}/{neg.lambda_y} ({regime(neg).value}), envelope bound:")
for energy in (0.0, 0.2, 1.0, 4.0):
    print(f"  E={energy:>4.1f}: lossy bound {lossy_diamond_bound_negative(energy, neg):.6f}")

# the replacement channel is built to imitate the teleportation channel,
# and its diamond-norm distance is exact (largest at vacuum input)
print("\nexact replacement-channel distances:")
for lx, ly in [(0.5, 0.5), (0.6, 0.75), (2**-0.25, 2**-0.25)]:
    p = ChannelParams(lx, ly)
    dn = edrc_diamond_norm(p)
    delta = apply_coherent(0, p, Cutoff(50)).matrix - edrc_apply(0, EdrcParams.matched(p), Cutoff(50)).matrix
    print(f"  lx={lx:.4f}, ly={ly:.4f}: closed form {dn:.8f}, direct trace norm {trace_norm(delta):.8f}")

print("\ndiscrimination bound for a pair of replacement channels split by delta:")
for delta in np.linspace(0, 0.24, 7):
    print(f"  delta={delta:.2f}: bound {sim_example_bound(delta):.6f}")
