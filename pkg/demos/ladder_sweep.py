"""Ground-state ladder climbing at P2 = 10: simulated efficiency against the
closed-form product of Landau-Zener probabilities.

    python demos/ladder_sweep.py [l_f]
"""

import math
import sys

import numpy as np

from centrifuge.analysis import efficiency
from centrifuge.basis import StateVector, build_chain
from centrifuge.evolve import default_l_max, evolve_rwa_chain
from centrifuge.params import DimensionlessParams
from centrifuge.theory import lc_efficiency


def main(l_f=50, p2=10.0):
    tau_f = 2 * p2 * (l_f - 0.5)
    l_hat = max(2, 2 * math.ceil(0.8 * l_f / 2 - 1e-9))
    chain = build_chain(0, default_l_max(l_f), "even")
    print(f"{'P1':>6} {'simulated':>10} {'theory':>10}")
    for p1 in np.linspace(1.0, 8.0, 15):
        psi = StateVector.basis_state(chain, 0, 0, "rotating")
        traj = evolve_rwa_chain(psi, 0, "even", DimensionlessParams(p1, p2), None, tau_f)
        f = efficiency(traj.final_populations, l_f, stride=2).efficiency
        print(f"{p1:6.2f} {f:10.4f} {lc_efficiency(p1, l_hat):10.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50)
