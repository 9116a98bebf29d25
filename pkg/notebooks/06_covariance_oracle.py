"""
Brute-force upper bound for tiny arrays
=======================================

For two antennas the relaxed covariance problem can be searched on a grid.
The best grid point bounds what any rank-one design can reach up to one
cell of tolerance, and the SCA result lands inside that band.
"""

# %%
from isac_coverage.channels import scenario_channels
from isac_coverage.closed_form import optimal_single
from isac_coverage.geometry import ArrayGeometry, DirectionAngles, position_from_angles
from isac_coverage.oracle import CovarianceGridSpec, covariance_grid_search
from isac_coverage.sca import ScaConfig, initialize, run_sca
from isac_coverage.scenario import Scenario, UserPlacement

geom = ArrayGeometry(2, 1)
sc = Scenario(tx_array=geom, rx_array=geom, users=(UserPlacement.from_degrees(135, 150, 30, 20.0),))
ch = scenario_channels(sc)
targets = [(90, 90, 50), (100, 70, 40), (80, 110, 60)]

# %%
for n in (1, 2, 3):
    pts = [position_from_angles(sc.bs1, DirectionAngles.from_degrees(t, p), d).as_array() for t, p, d in targets[:n]]
    grid = sc.points_grid(pts)
    res = covariance_grid_search(CovarianceGridSpec(2, sc.tx_power), ch.h[0], grid.tx_steering,
                                 sc.sinr_targets[0], sc.noise_power, grid.eta)
    tr = run_sca(initialize(ch, grid, sc, strategy="merged"), ch, grid, sc, ScaConfig())
    line = f"L = {n}: oracle {res.objective:.5e} (+/- {res.tolerance:.1e})  SCA {tr.zeta[-1]:.5e}"
    if n == 1:
        cf = optimal_single(ch.h[0], grid.tx_steering[0], sc.tx_power, sc.noise_power, sc.sinr_targets[0])
        line += f"  closed form {cf.objective(grid.tx_steering[0]) / grid.eta[0]:.5e}"
    print(line)
