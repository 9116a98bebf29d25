import warnings

import numpy as np
import pytest

from isac_coverage.geometry import ArrayGeometry, angles_from_positions, upa_steering
from isac_coverage.metrics import isotropic_beamformer
from isac_coverage.scenario import Scenario
from isac_coverage.wavesim import (
    WaveformError,
    analytic_snr,
    generate_waveforms,
    matched_filter_outputs,
    matched_filter_snr,
    receive_beamformer,
)

from conftest import crandn

Q = (0.0, 50.0, 10.0)


@pytest.fixture
def small():
    return Scenario(tx_array=ArrayGeometry(2, 2), rx_array=ArrayGeometry(2, 2))


def _single_beam(sc, q=Q):
    b = upa_steering(angles_from_positions(sc.bs1, q), sc.tx_array)
    W = np.zeros((sc.m_t, sc.m_t), complex)
    W[:, 0] = np.sqrt(sc.tx_power) * b / np.linalg.norm(b)
    return W


def test_all_comm_streams():
    ens = generate_waveforms(4, 4, 64, seed=0)
    assert ens.comm_streams.shape == (4, 64) and ens.radar_streams.shape == (0, 64)


def test_radar_gram_is_n_identity():
    ens = generate_waveforms(1, 5, 256, seed=3)
    R = ens.radar_streams
    np.testing.assert_allclose(R @ R.conj().T, 256 * np.eye(4), atol=1e-9)
    np.testing.assert_allclose(np.mean(np.abs(R) ** 2, axis=1), 1.0, atol=1e-12)


def test_comm_unit_modulus():
    ens = generate_waveforms(3, 4, 128, seed=3)
    np.testing.assert_allclose(np.abs(ens.comm_streams), 1.0, atol=1e-15)
    np.testing.assert_allclose(np.mean(np.abs(ens.comm_streams) ** 2, axis=1), 1.0, atol=1e-15)


def test_waveforms_deterministic_and_validated():
    a = generate_waveforms(2, 4, 32, seed=9)
    b = generate_waveforms(2, 4, 32, seed=9)
    assert np.array_equal(a.streams, b.streams)
    with pytest.raises(WaveformError):
        generate_waveforms(0, 4, 3, seed=0)
    with pytest.raises(WaveformError):
        generate_waveforms(5, 4, 32, seed=0)


def test_leakage_radar_only_is_zero(small):
    sc = small
    ens = generate_waveforms(0, sc.m_t, 512, seed=1)
    W = np.zeros((sc.m_t, sc.m_t), complex)
    W[:, 2] = _single_beam(sc)[:, 0]
    Y = matched_filter_outputs(W, Q, ens, sc)
    others = np.delete(Y, 2, axis=1)
    assert np.max(np.abs(others)) <= 1e-12 * np.max(np.abs(Y))


def test_leakage_comm_is_order_one_over_n(small):
    sc = small
    n = 4096
    ens = generate_waveforms(2, sc.m_t, n, seed=1)
    W = np.zeros((sc.m_t, sc.m_t), complex)
    W[:, 0] = _single_beam(sc)[:, 0]
    Y = matched_filter_outputs(W, Q, ens, sc)
    # each leaking stream has E|rho|^2 = 1/N; bound the mean over streams by 3/N
    leak = np.sum(np.abs(np.delete(Y, 0, axis=1)) ** 2) / np.sum(np.abs(Y[:, 0]) ** 2)
    assert leak / (sc.m_t - 1) < 3 / n


def test_noiseless_saturates_and_signal_matches(small):
    sc = small
    n = 2048
    ens = generate_waveforms(1, sc.m_t, n, seed=4)
    W = isotropic_beamformer(sc.m_t, sc.tx_power).w
    res = matched_filter_snr(W, Q, ens, sc, noise_seed=0, trials=1, noise_scale=0.0)
    assert res.saturated and np.isinf(res.snr)
    # analytic peak value K_CPI beta_t beta_r |alpha|^2 ||a||^2 b^H W W^H b with K_CPI = N
    expected = analytic_snr(W, Q, sc, n) * sc.sensing_noise_power
    assert res.signal_power == pytest.approx(expected, rel=0.01)


def test_zero_beamformer_warns(small):
    ens = generate_waveforms(0, small.m_t, 64, seed=0)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        res = matched_filter_snr(np.zeros((4, 4)), Q, ens, small, noise_seed=0, trials=2)
    assert res.snr == 0.0 and res.zero_signal
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)


def test_noise_covariance_is_sigma2_identity(small):
    sc = small
    n = 256
    ens = generate_waveforms(1, sc.m_t, n, seed=2)
    S = ens.streams
    sigma2 = sc.sensing_noise_power
    r = np.random.default_rng(5)
    trials = 2000
    outs = []
    for _ in range(trials):
        noise = np.sqrt(sigma2) * crandn(r, sc.m_r, n)
        outs.append(np.conj(noise @ S.conj().T / np.sqrt(n)).reshape(-1))
    X = np.array(outs)
    C = X.T @ X.conj() / trials / sigma2
    # exact expectation: sigma^2 I (x) S S^H / N, which is sigma^2 I up to O(1/sqrt(N)) comm cross terms
    expected = np.kron(np.eye(sc.m_r), S @ S.conj().T / n)
    assert np.max(np.abs(C - expected)) < 6 / np.sqrt(trials)
    np.testing.assert_allclose(np.diag(expected).real, 1.0, atol=1e-12)
    assert np.max(np.abs(expected - np.eye(expected.shape[0]))) < 4 / np.sqrt(n)


@pytest.mark.parametrize("design", ["isotropic", "single_beam"])
def test_matches_analytic(small, design):
    sc = small
    ens = generate_waveforms(0 if design == "isotropic" else 1, sc.m_t, 1024, seed=7)
    W = isotropic_beamformer(sc.m_t, sc.tx_power).w if design == "isotropic" else _single_beam(sc)
    res = matched_filter_snr(W, Q, ens, sc, noise_seed=8, trials=100)
    assert abs(res.gap_db) < 0.5
    assert abs(10 * np.log10(res.snr_direct / res.analytic)) < 1.0


def test_doubling_n_doubles_snr(small):
    sc = small
    W = isotropic_beamformer(sc.m_t, sc.tx_power).w
    a = matched_filter_snr(W, Q, generate_waveforms(0, sc.m_t, 1024, seed=1), sc, noise_seed=3, trials=100)
    b = matched_filter_snr(W, Q, generate_waveforms(0, sc.m_t, 2048, seed=1), sc, noise_seed=3, trials=100)
    assert abs(10 * np.log10(b.snr / a.snr) - 10 * np.log10(2)) < 0.5


def test_matched_receiver_is_best(small):
    sc = small
    ens = generate_waveforms(1, sc.m_t, 512, seed=2)
    W = _single_beam(sc)
    W[:, 1] = 0.3 * W[:, 0][::-1]
    v = receive_beamformer(W, Q, sc)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    ref = matched_filter_snr(W, Q, ens, sc, noise_seed=4, trials=20)
    r = np.random.default_rng(0)
    for _ in range(10):
        d = crandn(r, v.size)
        u = v + 0.5 * d / np.linalg.norm(d)
        u /= np.linalg.norm(u)
        alt = matched_filter_snr(W, Q, ens, sc, noise_seed=4, trials=20, v=u)
        assert alt.snr <= ref.snr * (1 + 1e-9)


def test_trials_validated(small):
    ens = generate_waveforms(0, small.m_t, 16, seed=0)
    with pytest.raises(WaveformError):
        matched_filter_snr(np.eye(4), Q, ens, small, noise_seed=0, trials=0)
    with pytest.raises(WaveformError):
        matched_filter_outputs(np.eye(4)[:, :3], Q, ens, small)
