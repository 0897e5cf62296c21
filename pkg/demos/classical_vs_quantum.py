"""Thermal (l_c = 11.5) efficiency at P2 = 0.1: rotating-wave ensemble versus
classical Monte Carlo. Takes a few minutes."""

from centrifuge.analysis import efficiency
from centrifuge.classical import ClassicalEnsembleSpec, mc_efficiency
from centrifuge.params import DimensionlessParams
from centrifuge.thermal import ThermalSpec, evolve_thermal

P2, L_C, L_F = 0.1, 11.5, 50
tau_f = 2 * P2 * (L_F - 0.5)
for p1 in (4.0, 8.0, 16.0):
    res = evolve_thermal(ThermalSpec(L_C), DimensionlessParams(p1, P2), None, tau_f)
    mc = mc_efficiency(ClassicalEnsembleSpec.from_quantum(L_C, P2, 5000, 0), p1, P2, None, tau_f)
    print(f"P1 = {p1:5.1f}  quantum {efficiency(res.distribution, L_F).efficiency:.3f}  "
          f"classical {mc.efficiency:.3f} +- {mc.stderr:.3f}")
