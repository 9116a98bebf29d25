"""
Performance functionals: UE SINR, bi-static sensing SNR, beampattern gain,
coverage weights and Cassini-oval contours of an unoptimized transmitter.

All values are linear; convert to dB only for presentation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .geometry import CoverageGrid, DirectionAngles, GeometryError, Position, angles_from_positions, upa_steering
from .scenario import lin2db

__all__ = [
    "MetricError",
    "BeamformerSet",
    "SnrMap",
    "comm_sinr",
    "all_sinrs",
    "sensing_snr",
    "snr_map",
    "beampattern_gain",
    "eta_weights",
    "coverage_quadratic",
    "isotropic_beamformer",
    "cassini_contours",
]

POWER_RTOL = 1e-9


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class BeamformerSet:
    """Transmit matrix ``W = [w_1 ... w_N]`` (columns are beams).

    The first ``k_comm`` columns carry UE data streams, the rest carry
    dedicated radar waveforms.  If ``power_budget`` is given the total power
    ``trace(W W^H)`` is checked against it.
    """

    w: np.ndarray
    k_comm: int = 0
    power_budget: Optional[float] = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        if w.ndim == 1:
            w = w[:, None]
        object.__setattr__(self, "w", w)
        if not 0 <= self.k_comm <= w.shape[1]:
            raise MetricError("k_comm outside [0, number of columns]")
        if self.power_budget is not None and self.power > self.power_budget * (1 + POWER_RTOL):
            raise MetricError(f"transmit power {self.power:.6g} exceeds budget {self.power_budget:.6g}")

    @property
    def power(self) -> float:
        return float(np.vdot(self.w, self.w).real)

    @property
    def m_t(self) -> int:
        return self.w.shape[0]

    @property
    def comm(self) -> np.ndarray:
        return self.w[:, : self.k_comm]

    @property
    def covariance(self) -> np.ndarray:
        return self.w @ self.w.conj().T


def _matrix(W) -> np.ndarray:
    if isinstance(W, BeamformerSet):
        return W.w
    W = np.asarray(W, dtype=complex)
    return W[:, None] if W.ndim == 1 else W


def _k_comm(W, default: int) -> int:
    return W.k_comm if isinstance(W, BeamformerSet) else default


def comm_sinr(W, h_k, sigma2: float, k: int = 0, k_comm: Optional[int] = None) -> float:
    """SINR of UE ``k`` (0-based); only the first ``k_comm`` columns interfere.

    Dedicated radar columns are known to the UE and cancelled before
    detection, so they do not appear in the denominator.
    """
    if not sigma2 > 0:
        raise MetricError("noise power must be positive")
    Wm = _matrix(W)
    kc = _k_comm(W, Wm.shape[1]) if k_comm is None else k_comm
    if not 0 <= k < kc:
        raise MetricError("UE index outside the communication columns")
    g = np.abs(np.conj(h_k) @ Wm[:, :kc]) ** 2
    return float(g[k] / (g.sum() - g[k] + sigma2))


def all_sinrs(W, channels, sigma2: float) -> np.ndarray:
    h = channels.h if hasattr(channels, "h") else np.atleast_2d(channels)
    return np.array([comm_sinr(W, h[k], sigma2, k, k_comm=h.shape[0]) for k in range(h.shape[0])])


def sensing_snr(W, q, scenario) -> float:
    """Post-processing sensing SNR for a target at ``q``.

    ``K_CPI beta0^2 |alpha|^2 ||a||^2 b^H W W^H b / (d_t^2 d_r^2 sigma^2)``.
    """
    q = Position.of(q)
    d_t = q.distance_to(scenario.bs1)
    d_r = q.distance_to(scenario.bs2)
    if d_t == 0.0 or d_r == 0.0:
        raise GeometryError("sensing point coincides with a base station")
    b = upa_steering(angles_from_positions(scenario.bs1, q), scenario.tx_array)
    a = upa_steering(angles_from_positions(scenario.bs2, q), scenario.rx_array)
    quad = np.sum(np.abs(np.conj(b) @ _matrix(W)) ** 2)
    return float(scenario.snr_constant * np.vdot(a, a).real * quad / (d_t**2 * d_r**2))


def beampattern_gain(W, angles: DirectionAngles, geom) -> float:
    """``||b^H W||^2 / trace(W W^H)`` toward ``angles``."""
    Wm = _matrix(W)
    p = np.vdot(Wm, Wm).real
    if not p > 0:
        raise MetricError("beampattern undefined for zero-power W")
    b = upa_steering(angles, geom)
    return float(np.sum(np.abs(np.conj(b) @ Wm) ** 2) / p)


def eta_weights(grid: CoverageGrid, scenario) -> np.ndarray:
    """``eta_l = ||q_l - o||^2 ||q_l - o'||^2 / ||a(q_l)||^2``; stored on the grid."""
    d_t2 = np.sum((grid.positions - scenario.bs1.as_array()) ** 2, axis=1)
    d_r2 = np.sum((grid.positions - scenario.bs2.as_array()) ** 2, axis=1)
    if np.any(d_t2 == 0) or np.any(d_r2 == 0):
        raise GeometryError("grid point coincides with a base station")
    if grid.rx_steering is not None:
        a2 = np.sum(np.abs(grid.rx_steering) ** 2, axis=1)
    else:
        a2 = np.full(len(grid), float(scenario.rx_array.size))
    grid.eta = d_t2 * d_r2 / a2
    return grid.eta


def coverage_quadratic(W, grid: CoverageGrid) -> np.ndarray:
    """``sum_k |b_l^H w_k|^2`` for every grid point."""
    return np.sum(np.abs(np.conj(grid.tx_steering) @ _matrix(W)) ** 2, axis=1)


@dataclass
class SnrMap:
    grid: CoverageGrid
    values: np.ndarray

    @property
    def worst_point_index(self) -> int:
        return int(np.argmin(self.values))

    @property
    def worst_case(self) -> float:
        return float(self.values.min())

    @property
    def values_db(self) -> np.ndarray:
        return lin2db(self.values)

    @property
    def spread_db(self) -> float:
        v = self.values_db
        return float(v.max() - v.min())


def snr_map(W, grid: CoverageGrid, scenario) -> SnrMap:
    """Sensing SNR at every grid point (vectorized form of :func:`sensing_snr`)."""
    if grid.eta is None:
        eta_weights(grid, scenario)
    vals = scenario.snr_constant * coverage_quadratic(W, grid) / grid.eta
    return SnrMap(grid, vals)


def isotropic_beamformer(m_t: int, power: float) -> BeamformerSet:
    return BeamformerSet(np.sqrt(power / m_t) * np.eye(m_t), 0, power)


def cassini_contours(scenario, snr_levels_db: Sequence[float], grid: CoverageGrid) -> Dict[float, np.ndarray]:
    """Grid points lying on iso-SNR contours of isotropic transmission.

    A lattice point belongs to a level when the level falls inside the range
    of SNR values (in dB) reached within half a cell of the point, using
    linear interpolation toward its four lattice neighbours.  Returns a map
    level -> sorted point indices (possibly empty).
    """
    W = isotropic_beamformer(scenario.m_t, scenario.tx_power)
    v = snr_map(W, grid, scenario).values_db.reshape(grid.shape)
    lo = v.copy()
    hi = v.copy()
    for axis in (0, 1):
        for shift in (1, -1):
            nb = np.roll(v, shift, axis=axis)
            valid = np.ones_like(v, dtype=bool)
            edge = [slice(None)] * 2
            edge[axis] = 0 if shift == 1 else -1
            valid[tuple(edge)] = False
            half = np.where(valid, 0.5 * (v + nb), v)
            lo = np.minimum(lo, half)
            hi = np.maximum(hi, half)
    lo, hi = lo.ravel(), hi.ravel()
    out = {}
    for level in snr_levels_db:
        tol = 1e-9 * max(1.0, abs(level))
        out[level] = np.flatnonzero((lo - tol <= level) & (level <= hi + tol))
    return out
