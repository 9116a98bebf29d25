"""
Arrays, steering vectors and Rician channels
============================================

A walk through the geometry layer: the two base stations, UPA steering
vectors, the coverage lattice and the seeded Rician channels of the UEs.
"""

# %%
import numpy as np

from isac_coverage.channels import scenario_channels
from isac_coverage.geometry import ArrayGeometry, DirectionAngles, upa_steering
from isac_coverage.scenario import Scenario, lin2db

sc = Scenario(tx_array=ArrayGeometry(4, 4), rx_array=ArrayGeometry(4, 4))
print("BS-1 at", sc.bs1.as_array(), " BS-2 at", sc.bs2.as_array())
print("M_t =", sc.m_t, " M_r =", sc.m_r)

# %%
# Steering entries have unit modulus, so ||b||^2 equals the element count.
b = upa_steering(DirectionAngles.from_degrees(90.0, 60.0), sc.tx_array)
print("|b_i| range:", np.abs(b).min(), np.abs(b).max(), " ||b||^2 =", np.vdot(b, b).real)

# %%
# The coverage lattice carries steering vectors from both base stations and
# the per-point weights eta used by the optimizer.
grid = sc.coverage_grid((5, 5))
print("grid shape", grid.shape, " spacing", grid.spacing)
print("first points\n", grid.positions[:3])
print("eta spans", lin2db(grid.eta.max() / grid.eta.min()), "dB across the region")

# %%
# Channels are reproducible from the seed; each UE has its own stream.
a = scenario_channels(sc, seed=7)
b2 = scenario_channels(sc, seed=7)
print("same seed, same draw:", np.array_equal(a.h, b2.h))
for k, h in enumerate(a.h):
    print(f"UE {k + 1}: ||h||^2 = {np.vdot(h, h).real:.3e}")
