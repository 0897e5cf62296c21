"""Print the regime of each molecule along a P1 sweep at beta = 1 ps^-2.

LC = ladder climbing, AR = classical autoresonance, "." = below both
thresholds, "=" = exactly on a boundary line.
"""

import numpy as np

from centrifuge.params import PhysicalParams, derive_params, molecule_inertia
from centrifuge.theory import classify_regime

HBAR = 1.054571817e-34
SHORT = {"ladder_climbing": "LC", "autoresonant_classical": "AR", "below_ar_threshold": ".", "boundary": "="}
P1 = np.geomspace(0.1, 100, 13)

print("      P1: " + " ".join(f"{p:5.2g}" for p in P1))
for name in ("D2", "N2", "O2", "Cl2"):
    p2 = derive_params(PhysicalParams(0.0, 1e24, molecule_inertia(name), HBAR)).p2
    row = " ".join(f"{SHORT[classify_regime(p, p2).classification]:>5}" for p in P1)
    print(f"{name:>4} {p2:7.4f} {row}")
