import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_coverage.geometry import ArrayGeometry, DirectionAngles, RectRegion, points_grid, upa_steering
from isac_coverage.metrics import (
    BeamformerSet,
    MetricError,
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
from isac_coverage.scenario import Scenario

from conftest import crandn


def _equidistant(sc):
    # point 50 m from both base stations at BS height, on the plane y = D/2
    half = sc.bs_distance / 2
    x = np.sqrt(50.0**2 - half**2)
    return (x, half, sc.bs_height)


def test_sinr_orthogonal_beam_is_zero():
    assert comm_sinr(np.array([[0.0], [1.0]]), np.array([1.0, 0.0]), 1.0) == 0.0


def test_sinr_mrt(rng):
    h = crandn(rng, 4)
    w = np.sqrt(0.3) * h / np.linalg.norm(h)
    assert comm_sinr(w, h, 0.01) == pytest.approx(0.3 * np.vdot(h, h).real / 0.01, rel=1e-12)


def test_sinr_two_user_hand_example():
    W = np.array([[1.0, 1 / np.sqrt(2)], [0.0, 1 / np.sqrt(2)]])
    h = np.eye(2)
    assert comm_sinr(W, h[0], 1.0, k=0) == pytest.approx(2 / 3, rel=1e-12)
    np.testing.assert_allclose(all_sinrs(W, h, 1.0), [2 / 3, 0.5 / 1.0])


def test_radar_columns_do_not_interfere():
    W = np.array([[1.0, 5.0], [0.0, 5.0]])
    assert comm_sinr(BeamformerSet(W, 1), np.array([1.0, 1.0]), 1.0) == pytest.approx(1.0)


def test_sinr_rejects_bad_noise_and_index():
    with pytest.raises(MetricError):
        comm_sinr(np.eye(2), np.ones(2), 0.0)
    with pytest.raises(MetricError):
        comm_sinr(BeamformerSet(np.eye(2), 1), np.ones(2), 1.0, k=1)


def test_sinr_phase_invariance(rng):
    W = crandn(rng, 3, 3)
    h = crandn(rng, 3)
    ref = comm_sinr(W, h, 0.5, k=1)
    Wr = W * np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    assert comm_sinr(Wr, h, 0.5, k=1) == pytest.approx(ref, rel=1e-12)


def test_power_budget_enforced():
    with pytest.raises(MetricError):
        BeamformerSet(np.eye(2), 0, power_budget=1.0)
    BeamformerSet(np.eye(2) / np.sqrt(2), 0, power_budget=1.0)


def test_sensing_snr_isotropic_1024(reference_scenario):
    sc = reference_scenario
    W = isotropic_beamformer(sc.m_t, sc.tx_power)
    assert sensing_snr(W, _equidistant(sc), sc) == pytest.approx(1024.0, rel=1e-9)


def test_sensing_snr_single_beam_65536(reference_scenario):
    sc = reference_scenario
    from isac_coverage.geometry import angles_from_positions

    q = _equidistant(sc)
    b = upa_steering(angles_from_positions(sc.bs1, q), sc.tx_array)
    W = np.sqrt(sc.tx_power) * b / np.linalg.norm(b)
    assert sensing_snr(W, q, sc) == pytest.approx(65536.0, rel=1e-9)


def test_sensing_snr_zero_reflection(reference_scenario):
    sc = reference_scenario.replace(alpha=0.0)
    assert sensing_snr(isotropic_beamformer(64, 0.1), (0, 50, 10), sc) == 0.0


def test_sensing_snr_unitary_invariance_and_scaling(reference_scenario, rng):
    sc = reference_scenario
    W = crandn(rng, 64, 64) * 0.01
    q = (3.0, 55.0, 10.0)
    ref = sensing_snr(W, q, sc)
    U, _ = np.linalg.qr(crandn(rng, 64, 64))
    assert sensing_snr(W @ U, q, sc) == pytest.approx(ref, rel=1e-9)
    assert sensing_snr(W, q, sc.replace(alpha=2.0)) == pytest.approx(4 * ref, rel=1e-12)
    assert sensing_snr(W, q, sc.replace(cpi=3e-3)) == pytest.approx(3 * ref, rel=1e-12)
    assert sensing_snr(np.sqrt(5) * W, q, sc) == pytest.approx(5 * ref, rel=1e-12)


def test_beampattern_isotropic_flat():
    g = ArrayGeometry(8, 8)
    W = isotropic_beamformer(64, 0.1)
    for th, ph in [(90, 90), (30, 10), (120, 250)]:
        assert beampattern_gain(W, DirectionAngles.from_degrees(th, ph), g) == pytest.approx(1.0, rel=1e-12)


def test_beampattern_peak_and_null():
    g = ArrayGeometry(8, 8)
    b = upa_steering(DirectionAngles.from_degrees(90, 90), g)
    W = np.sqrt(0.1) * b / np.linalg.norm(b)
    assert beampattern_gain(W, DirectionAngles.from_degrees(90, 90), g) == pytest.approx(64.0, rel=1e-12)
    # alternating ramp toward phi = 0 sums to zero
    assert beampattern_gain(W, DirectionAngles.from_degrees(90, 0), g) == pytest.approx(0.0, abs=1e-12)


def test_beampattern_zero_power():
    with pytest.raises(MetricError):
        beampattern_gain(np.zeros((4, 4)), DirectionAngles(1.0, 1.0), ArrayGeometry(2, 2))


def test_eta_equidistant(reference_scenario):
    sc = reference_scenario
    grid = points_grid([_equidistant(sc)], rx_origin=sc.bs2, rx_array=sc.rx_array)
    assert eta_weights(grid, sc)[0] == pytest.approx(50.0**4 / 64, rel=1e-12)
    assert 50.0**4 / 64 == 97656.25


def test_eta_unit_and_homogeneity():
    sc = Scenario(bs_distance=2.0, bs_height=0.0, rx_array=ArrayGeometry(1, 1))
    grid = points_grid([[0.0, 1.0, 0.0]])
    assert eta_weights(grid, sc)[0] == pytest.approx(1.0)
    sc2 = sc.replace(bs_distance=6.0)
    grid2 = points_grid([[0.0, 3.0, 0.0]])
    assert eta_weights(grid2, sc2)[0] == pytest.approx(3.0**4)


def test_eta_consistency_over_grid(desk_scenario, rng):
    sc = desk_scenario
    grid = sc.coverage_grid()
    W = crandn(rng, sc.m_t, sc.m_t) * 0.02
    quad = coverage_quadratic(W, grid)
    for l in range(0, len(grid), 7):
        snr = sensing_snr(W, grid.positions[l], sc)
        assert snr * grid.eta[l] / sc.snr_constant == pytest.approx(quad[l], rel=1e-9)


def test_snr_map_matches_pointwise(desk_scenario, rng):
    sc = desk_scenario
    grid = sc.coverage_grid()
    W = crandn(rng, sc.m_t, 3) * 0.05
    m = snr_map(W, grid, sc)
    pointwise = np.array([sensing_snr(W, p, sc) for p in grid.positions])
    np.testing.assert_allclose(m.values, pointwise, rtol=1e-9)
    assert m.worst_case == m.values.min() == m.values[m.worst_point_index]
    assert m.spread_db >= 0


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_cassini_equal_range_product(seed):
    sc = Scenario(tx_array=ArrayGeometry(4, 4), rx_array=ArrayGeometry(4, 4))
    r = np.random.default_rng(seed)
    W = isotropic_beamformer(sc.m_t, sc.tx_power)
    q1 = np.array([r.uniform(-25, 25), r.uniform(25, 75), 10.0])
    p = np.linalg.norm(q1 - sc.bs1.as_array()) * np.linalg.norm(q1 - sc.bs2.as_array())
    # another point on the same Cassini oval: pick d_t, solve for the direction in the horizontal plane
    d_t = np.linalg.norm(q1 - sc.bs1.as_array()) * r.uniform(0.9, 1.1)
    d_r = p / d_t
    D = sc.bs_distance
    y = (d_t**2 - d_r**2 + D**2) / (2 * D)
    x2 = d_t**2 - y**2
    if x2 <= 0:
        return
    q2 = np.array([np.sqrt(x2), y, 10.0])
    assert sensing_snr(W, q2, sc) == pytest.approx(sensing_snr(W, q1, sc), rel=1e-9)


def test_cassini_self_membership(desk_scenario):
    sc = desk_scenario
    from isac_coverage.geometry import build_coverage_grid

    grid = build_coverage_grid(RectRegion((0, 50), 50, 50, 10), (21, 21), rx_origin=sc.bs2, tx_origin=sc.bs1,
                               tx_array=sc.tx_array, rx_array=sc.rx_array)
    W = isotropic_beamformer(sc.m_t, sc.tx_power)
    vals = snr_map(W, grid, sc).values_db
    for l in (0, 37, 220, 440):
        assert l in cassini_contours(sc, [vals[l]], grid)[vals[l]]


def test_cassini_empty_level(desk_scenario):
    grid = desk_scenario.coverage_grid()
    out = cassini_contours(desk_scenario, [500.0], grid)
    assert out[500.0].size == 0
