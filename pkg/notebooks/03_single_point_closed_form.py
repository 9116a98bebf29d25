"""
One UE and one sensing point
============================

The closed-form optimum has two regimes.  Below the threshold the whole
budget is steered at the sensing point; above it the beam bends toward the
UE just enough to meet its SINR.  The SCA iteration lands on the same value.
"""

# %%
import numpy as np

from isac_coverage.channels import scenario_channels
from isac_coverage.closed_form import optimal_single
from isac_coverage.geometry import ArrayGeometry, DirectionAngles, position_from_angles
from isac_coverage.sca import ScaConfig, initialize, run_sca
from isac_coverage.scenario import Scenario, UserPlacement, lin2db

geom = ArrayGeometry(4, 4)
base = Scenario(tx_array=geom, rx_array=geom)
q0 = position_from_angles(base.bs1, DirectionAngles.from_degrees(90, 90), 50.0).as_array()

# %%
# Sweep the SINR target across both regimes.
for sinr_db in (0.0, 20.0, 40.0, 55.0):
    sc = base.replace(users=(UserPlacement.from_degrees(135, 150, 30, sinr_db),))
    ch = scenario_channels(sc)
    grid = sc.points_grid([q0])
    b0, h = grid.tx_steering[0], ch.h[0]
    limit = np.vdot(h, h).real * sc.tx_power / sc.noise_power
    if sc.sinr_targets[0] > limit:
        print(f"{sinr_db:5.1f} dB: infeasible (limit {lin2db(limit):.1f} dB)")
        continue
    sol = optimal_single(h, b0, sc.tx_power, sc.noise_power, sc.sinr_targets[0])
    init = initialize(ch, grid, sc, strategy="merged")
    tr = run_sca(init, ch, grid, sc, ScaConfig())
    cf = sol.objective(b0) / grid.eta[0]
    print(f"{sinr_db:5.1f} dB: {sol.regime:15s} threshold {lin2db(sol.boundary_threshold):5.1f} dB  "
          f"closed form {cf:.6e}  SCA {tr.zeta[-1]:.6e}  ({tr.outer_iterations} iterations)")
