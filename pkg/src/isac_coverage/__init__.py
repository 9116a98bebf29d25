"""Max-min sensing-coverage beamforming for a bi-static ISAC pair of base stations.

Modules
-------
geometry     UPA steering vectors, angles, coverage grids
scenario     physical constants and UE placements
channels     Rician UE channels and two-hop sensing gains
metrics      SINR, sensing SNR, beampatterns, Cassini contours
conic        SOCP containers, complex embedding, interior-point solver
closed_form  optimal beam for one UE and one sensing point
benchmark    communication-only power minimization
sca          successive convex approximation for max-min coverage
wavesim      sample-level matched-filter Monte Carlo
oracle       covariance grid search for tiny instances
cli          configuration-driven experiment runner
"""

from .benchmark import BenchmarkInfeasible, BenchmarkSolverError, comm_only_beamforming
from .channels import ChannelSet, generate_rician_channels, scenario_channels, sensing_link_gains
from .closed_form import InfeasibleError, SinglePointSolution, lemma1_collapse, optimal_single
from .geometry import (
    ArrayGeometry,
    CoverageGrid,
    DirectionAngles,
    Position,
    RectRegion,
    angles_from_positions,
    build_coverage_grid,
    points_grid,
    position_from_angles,
    upa_steering,
)
from .metrics import (
    BeamformerSet,
    SnrMap,
    all_sinrs,
    beampattern_gain,
    cassini_contours,
    comm_sinr,
    coverage_quadratic,
    eta_weights,
    isotropic_beamformer,
    sensing_snr,
    snr_map,
)
from .sca import InfeasibleScenario, ScaConfig, ScaError, ScaTrace, build_subproblem, initialize, run_sca
from .scenario import Scenario, UserPlacement, db2lin, dbm2watt, lin2db

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "CoverageGrid", "DirectionAngles", "Position", "RectRegion",
    "angles_from_positions", "build_coverage_grid", "points_grid", "position_from_angles", "upa_steering",
    "Scenario", "UserPlacement", "db2lin", "dbm2watt", "lin2db",
    "ChannelSet", "generate_rician_channels", "scenario_channels", "sensing_link_gains",
    "BeamformerSet", "SnrMap", "all_sinrs", "beampattern_gain", "cassini_contours", "comm_sinr",
    "coverage_quadratic", "eta_weights", "isotropic_beamformer", "sensing_snr", "snr_map",
    "InfeasibleError", "SinglePointSolution", "lemma1_collapse", "optimal_single",
    "BenchmarkInfeasible", "BenchmarkSolverError", "comm_only_beamforming",
    "InfeasibleScenario", "ScaConfig", "ScaError", "ScaTrace", "build_subproblem", "initialize", "run_sca",
]
