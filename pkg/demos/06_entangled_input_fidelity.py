"""Teleporting half of an entangled state: two ports vs three.

Sends one arm of a two-mode squeezed pair (and of maximally entangled
qubit/qutrit states) through the channel and reports the input-output
fidelity.  Three ports beat two across the sampled region, low-energy
squeezed inputs fare much better than Bell pairs, and qutrits trail
qubits -- all consequences of the output energy cap.
"""
import numpy as np

from cvpbt import ChannelParams, input_output_fidelity

grid = np.linspace(0.2, 0.7, 4)

for kind, label in [("tmsv", "TMSV (lambda_in = 1/3)"), ("bell2", "qubit pair"), ("bell3", "qutrit pair")]:
    print(f"\ninput: {label}")
    print("lx\\ly " + " ".join(f"{ly:>13.2f}" for ly in grid))
    for lx in grid:
        cells = []
        for ly in grid:
            f2, _ = input_output_fidelity(kind, ChannelParams(lx, ly, ports=2), lambda_in=1 / 3, levels=12)
            f3, _ = input_output_fidelity(kind, ChannelParams(lx, ly, ports=3), lambda_in=1 / 3, levels=12)
            cells.append(f"{f2:.3f}/{f3:.3f}")
        print(f"{lx:5.2f} " + " ".join(f"{c:>13}" for c in cells))
print("\n(each cell: two-port / three-port fidelity)")
