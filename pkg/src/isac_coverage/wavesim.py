"""
Sample-level Monte Carlo of the bi-static matched-filter receiver.

Time is discretized at one sample per symbol, so a CPI of ``N`` samples
plays the role of the time-bandwidth product ``K_CPI``.  BS-1 sends
``x[n] = W s[n]``; BS-2 receives the target echo plus white noise of power
``sigma^2`` per antenna and sample, correlates with each transmitted
stream (scaled by ``1/sqrt(N)`` so the noise keeps power ``sigma^2``),
stacks the outputs and combines them with the matched receive beamformer.
At the aligned delay the expected output SNR equals the analytic sensing
SNR with ``K_CPI = N``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import sensing_link_gains
from .geometry import Position, angles_from_positions, upa_steering
from .metrics import BeamformerSet, sensing_snr

__all__ = [
    "WaveformError",
    "WaveformEnsemble",
    "MatchedFilterResult",
    "generate_waveforms",
    "matched_filter_outputs",
    "receive_beamformer",
    "matched_filter_snr",
    "analytic_snr",
]


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class WaveformEnsemble:
    """Transmit streams as rows of ``streams`` (shape ``(M_t, N)``).

    Rows ``0..K-1`` are QPSK communication symbols, the remaining rows are
    dedicated radar sequences with Gram matrix ``N I``.
    """

    streams: np.ndarray
    k_comm: int
    seed: int

    @property
    def n_samples(self) -> int:
        return self.streams.shape[1]

    @property
    def m_t(self) -> int:
        return self.streams.shape[0]

    @property
    def comm_streams(self) -> np.ndarray:
        return self.streams[: self.k_comm]

    @property
    def radar_streams(self) -> np.ndarray:
        return self.streams[self.k_comm :]


def generate_waveforms(k_comm: int, m_t: int, n_samples: int, seed: int) -> WaveformEnsemble:
    """QPSK communication streams plus orthogonalized radar sequences.

    The radar rows come from a QR decomposition of a seeded complex Gaussian
    matrix, scaled so each has unit mean power and the rows are exactly
    orthogonal over the ``n_samples`` window.
    """
    if not 0 <= k_comm <= m_t:
        raise WaveformError("need 0 <= K <= M_t")
    n_radar = m_t - k_comm
    if n_samples < max(n_radar, 1):
        raise WaveformError(f"{n_samples} samples cannot hold {n_radar} orthogonal radar sequences")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    bits = rng.integers(0, 4, size=(k_comm, n_samples))
    comm = np.exp(1j * (np.pi / 4 + np.pi / 2 * bits))
    if n_radar:
        g = rng.standard_normal((n_samples, n_radar)) + 1j * rng.standard_normal((n_samples, n_radar))
        q, _ = np.linalg.qr(g)
        radar = np.sqrt(n_samples) * q.T
    else:
        radar = np.zeros((0, n_samples), dtype=complex)
    return WaveformEnsemble(np.vstack([comm, radar]), k_comm, int(seed))


def _echo_terms(W, q, scenario):
    q = Position.of(q)
    gains = sensing_link_gains(q, scenario)
    b = upa_steering(angles_from_positions(scenario.bs1, q), scenario.tx_array)
    a = upa_steering(angles_from_positions(scenario.bs2, q), scenario.rx_array)
    amp = np.sqrt(gains.beta_t * gains.beta_r) * scenario.alpha
    return amp, a, b


def matched_filter_outputs(W, q, ensemble: WaveformEnsemble, scenario) -> np.ndarray:
    """Noise-free matched-filter matrix ``Y`` (``M_r x M_t``) at the aligned delay."""
    W = W.w if isinstance(W, BeamformerSet) else np.asarray(W, dtype=complex)
    S = ensemble.streams
    if W.shape[1] != S.shape[0]:
        raise WaveformError("beamformer columns and streams differ in number")
    amp, a, b = _echo_terms(W, q, scenario)
    row = (np.conj(b) @ W) @ S  # b^H W s[n], length N
    # r[n] = amp a b^H W s[n];  Y = r S^H / sqrt(N)
    return amp * np.outer(a, row @ S.conj().T) / np.sqrt(ensemble.n_samples)


def receive_beamformer(W, q, scenario) -> np.ndarray:
    """``v = a^* / ||a|| kron W^H b / ||W^H b||`` (zero vector if ``W^H b = 0``)."""
    W = W.w if isinstance(W, BeamformerSet) else np.asarray(W, dtype=complex)
    _, a, b = _echo_terms(W, q, scenario)
    wb = W.conj().T @ b
    nwb = np.linalg.norm(wb)
    if nwb == 0:
        return np.zeros(a.size * wb.size, dtype=complex)
    return np.kron(np.conj(a) / np.linalg.norm(a), wb / nwb)


def _stack(Y):
    # vec(Y^H): column j of Y^H is the conjugate of row j of Y
    return np.conj(Y).reshape(-1)


def analytic_snr(W, q, scenario, n_samples: int) -> float:
    """Closed-form sensing SNR with the CPI replaced by ``n_samples`` symbols."""
    sc = scenario.replace(cpi=n_samples / scenario.bandwidth)
    return sensing_snr(W, q, sc)


@dataclass(frozen=True)
class MatchedFilterResult:
    """Empirical and analytic SNR of one Monte Carlo run.

    ``noise_power`` pools the sample variance of every stacked output
    component over all trials (the components are white with equal power,
    so for a unit-norm ``v`` this is the variance of ``v^H n``);
    ``noise_power_direct`` is the plain average of ``|v^H n|^2``.
    """

    snr: float
    analytic: float
    signal_power: float
    noise_power: float
    noise_power_direct: float
    trials: int
    n_samples: int
    saturated: bool = False
    zero_signal: bool = False

    @property
    def gap_db(self) -> float:
        if self.snr <= 0 or not np.isfinite(self.snr) or self.analytic <= 0:
            return np.nan
        return float(10 * np.log10(self.snr / self.analytic))

    @property
    def snr_direct(self) -> float:
        if self.noise_power_direct == 0:
            return np.inf if self.signal_power > 0 else 0.0
        return self.signal_power / self.noise_power_direct


def matched_filter_snr(W, q, ensemble: WaveformEnsemble, scenario, noise_seed: int, trials: int = 100,
                       *, noise_scale: float = 1.0, v: Optional[np.ndarray] = None) -> MatchedFilterResult:
    """Empirical post-combining SNR for a target at ``q``.

    Parameters
    ----------
    W : BeamformerSet or ndarray
        Transmit beamformers, one column per stream of ``ensemble``.
    q : Position-like
        Target location; both delays are taken as aligned.
    ensemble : WaveformEnsemble
    scenario : Scenario
        Geometry, path loss, reflection coefficient and the per-sample
        noise power ``sensing_noise_power``.
    noise_seed : int
        Trial ``t`` draws its noise from ``SeedSequence(noise_seed, spawn_key=(t,))``.
    trials : int
    noise_scale : float
        Multiplies the noise amplitude; ``0`` gives a noiseless run whose
        SNR is reported as ``inf`` with ``saturated=True``.
    v : ndarray, optional
        Receive combiner; defaults to the matched one.
    """
    if trials < 1:
        raise WaveformError("trials must be >= 1")
    W = W.w if isinstance(W, BeamformerSet) else np.asarray(W, dtype=complex)
    n = ensemble.n_samples
    analytic = analytic_snr(W, q, scenario, n)
    if v is None:
        v = receive_beamformer(W, q, scenario)
    v = np.asarray(v, dtype=complex)
    sig = np.vdot(v, _stack(matched_filter_outputs(W, q, ensemble, scenario)))
    signal_power = float(abs(sig) ** 2)

    m_r = scenario.m_r
    S = ensemble.streams
    sigma = np.sqrt(scenario.sensing_noise_power) * noise_scale
    pooled = 0.0
    direct = 0.0
    if sigma > 0:
        for t in range(trials):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(noise_seed), spawn_key=(t,))))
            noise = (rng.standard_normal((m_r, n)) + 1j * rng.standard_normal((m_r, n))) * (sigma / np.sqrt(2))
            nt = _stack(noise @ S.conj().T / np.sqrt(n))
            pooled += float(np.mean(np.abs(nt) ** 2))
            direct += float(abs(np.vdot(v, nt)) ** 2)
        pooled /= trials
        direct /= trials
    vn = float(np.vdot(v, v).real)
    noise_power = pooled * vn

    zero = signal_power == 0.0
    if zero:
        warnings.warn("beamformer puts no power toward the target; SNR is zero", RuntimeWarning, stacklevel=2)
        snr = 0.0
    elif noise_power == 0.0:
        snr = np.inf
    else:
        snr = signal_power / noise_power
    return MatchedFilterResult(snr, analytic, signal_power, noise_power, direct, trials, n,
                               saturated=bool(np.isinf(snr)), zero_signal=zero)
