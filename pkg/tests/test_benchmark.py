import numpy as np
import pytest

from isac_coverage.benchmark import BenchmarkInfeasible, comm_only_beamforming, sinr_blocks
from isac_coverage.channels import ChannelSet
from isac_coverage.conic import SOC, ZERO, ComplexEmbedding
from isac_coverage.metrics import all_sinrs

from conftest import crandn

S2 = 1e-12


def _mrt_power(h, gamma):
    return S2 * gamma / np.vdot(h, h).real


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("gamma_db", [0.0, 20.0, 40.0])
def test_single_user_mrt(seed, gamma_db):
    r = np.random.default_rng(seed)
    h = 1e-4 * crandn(r, 6)
    gamma = 10 ** (gamma_db / 10)
    W = comm_only_beamforming(ChannelSet.from_vectors([h]), [gamma], S2)
    assert W.power == pytest.approx(_mrt_power(h, gamma), rel=1e-6)
    w = W.w[:, 0]
    cos = abs(np.vdot(h, w)) / (np.linalg.norm(h) * np.linalg.norm(w))
    assert cos == pytest.approx(1.0, abs=1e-6)
    assert not W.w[:, 1:].any()


def test_orthogonal_pair_decouples():
    h = 1e-4 * np.array([[1.0, 1j, 0, 0], [0, 0, 2.0, -1.0]])
    gamma = np.array([100.0, 30.0])
    W = comm_only_beamforming(ChannelSet.from_vectors(h), gamma, S2)
    expected = _mrt_power(h[0], gamma[0]) + _mrt_power(h[1], gamma[1])
    assert W.power == pytest.approx(expected, rel=1e-6)


def test_zero_targets_give_zero_beams():
    h = 1e-4 * np.ones((2, 3))
    W = comm_only_beamforming(h, [0.0, 0.0], S2)
    assert W.power == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_constraints_active(seed):
    r = np.random.default_rng(100 + seed)
    h = 1e-4 * crandn(r, 3, 8)
    gamma = np.array([100.0, 50.0, 200.0])
    W = comm_only_beamforming(ChannelSet.from_vectors(h), gamma, S2)
    np.testing.assert_allclose(all_sinrs(W, h, S2), gamma, rtol=1e-6)
    # phase convention: h_k^H w_k real and nonnegative
    d = np.array([np.vdot(h[k], W.w[:, k]) for k in range(3)])
    assert np.all(np.abs(d.imag) <= 1e-9 * np.abs(d)) and np.all(d.real > 0)


def test_power_monotone_in_target():
    r = np.random.default_rng(9)
    h = 1e-4 * crandn(r, 2, 4)
    powers = [comm_only_beamforming(h, [g, 50.0], S2).power for g in (10.0, 30.0, 100.0, 300.0)]
    assert all(b >= a * (1 - 1e-7) for a, b in zip(powers, powers[1:]))


def test_infeasible_targets():
    h = 1e-4 * np.array([[1.0, 0.0], [1.0, 0.0]])  # identical channels cannot both get high SINR
    with pytest.raises(BenchmarkInfeasible):
        comm_only_beamforming(h, [10.0, 10.0], S2)


def test_negative_target_rejected():
    with pytest.raises(ValueError):
        comm_only_beamforming(np.ones((1, 2)), [-1.0], S2)


@pytest.mark.parametrize("form, dim", [("interference", 4), ("augmented", 6)])
def test_sinr_block_shapes(form, dim):
    emb = ComplexEmbedding([3, 3])
    h = np.ones((2, 3), complex)
    blocks = sinr_blocks(emb, ["w1", "w2"], h, [10.0, 10.0], 1.0, form=form)
    assert [b.cone for b in blocks] == [SOC, ZERO, SOC, ZERO]
    assert blocks[0].rows == dim


@pytest.mark.parametrize("form", ["interference", "augmented"])
def test_sinr_block_equivalence(form, rng):
    """On the feasible side the cone holds iff the SINR target holds."""
    emb = ComplexEmbedding([3, 3])
    h = crandn(rng, 2, 3)
    gamma = 4.0
    blk = sinr_blocks(emb, ["w1", "w2"], h, [gamma, gamma], 1.0, form=form)[0]
    for _ in range(200):
        W = crandn(rng, 3, 2)
        W[:, 0] *= np.exp(-1j * np.angle(np.vdot(h[0], W[:, 0])))
        x = emb.to_real([W[:, 0], W[:, 1]])
        v = blk.value(x)
        inside = v[0] >= np.linalg.norm(v[1:])
        ok = all_sinrs(W, h, 1.0)[0] >= gamma
        if abs(all_sinrs(W, h, 1.0)[0] - gamma) > 1e-9:
            assert inside == ok


def test_sinr_blocks_reject_nonpositive_target():
    with pytest.raises(ValueError):
        sinr_blocks(ComplexEmbedding([2]), ["w1"], np.ones((1, 2)), [0.0], 1.0)
    with pytest.raises(ValueError):
        sinr_blocks(ComplexEmbedding([2]), ["w1"], np.ones((1, 2)), [1.0], 1.0, form="other")


@pytest.mark.parametrize("seed", range(3))
def test_cone_forms_agree_at_moderate_targets(seed):
    r = np.random.default_rng(300 + seed)
    h = 1e-4 * crandn(r, 3, 6)
    gamma = np.array([10.0, 100.0, 300.0])
    a = comm_only_beamforming(h, gamma, S2, form="interference")
    b = comm_only_beamforming(h, gamma, S2, form="augmented")
    assert a.power == pytest.approx(b.power, rel=1e-6)
