"""Inside the N-port machinery: multiset sectors, eigenbases, Gamma.

The overlap operator splits into finite sectors labelled by multisets
of N-1 level indices.  Each sector carries a small Hermitian matrix
whose eigenbasis contracts into the Gamma matrix that feeds the channel
output formulas.  For three ports everything has closed forms, which
the generic route reproduces to machine precision.
"""
import numpy as np

from cvpbt import ChannelParams, Cutoff, enumerate_multisets, eta_basis, gamma, sector_matrix
from cvpbt.nport import NPortChannel, ThreePortChannel, gamma_mm_closed

lam_y = 0.5
print("multisets for 3 ports up to cap 2:", enumerate_multisets(3, 2))

ms = (1, 1)
basis = eta_basis(ms, lam_y)
print(f"\nsector {ms}: eigenvalues {np.round(basis.eigenvalues, 6)}")
print("first eigenvector (uniform):", np.round(basis.etas[:, 0], 4))

print(f"\nGamma({ms}) vs closed form:",
      np.abs(gamma(ms, lam_y) - gamma_mm_closed(1, lam_y)).max())
h = sector_matrix((0, 2), lam_y)
print("sector (0,2) spectrum:", np.round(np.linalg.eigvalsh(h), 6))

# generic channel vs three-port closed forms
p = ChannelParams(0.4, 0.5, ports=3)
gen = NPortChannel(p, cap=12)
closed = ThreePortChannel(p, cap=12)
dev = max(
    np.abs(gen.number_element(a, b, Cutoff(8)).matrix - closed.number_element(a, b, Cutoff(8)).matrix).max()
    for a in range(3)
    for b in range(3)
)
print(f"\ngeneric vs closed three-port channel elements: max dev {dev:.2e}")
el = closed.number_element(1, 1, Cutoff(10))
print(f"three-port E[|1><1|] trace: {el.matrix.trace().real:.10f} "
      f"(declared tail {el.meta['tail_bound']:.1e})")
