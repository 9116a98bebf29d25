"""
Optimal beamformer for one UE and one sensing point.

The optimum uses a single full-power beam.  When the UE's SINR target is
met by pointing all power at the target direction (sensing-limited regime)
that beam is the normalized steering vector; otherwise (comm-limited) it
splits power between the UE channel direction, at the minimum power that
meets the target, and the component of the steering vector orthogonal to
the channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SENSING_LIMITED",
    "COMM_LIMITED",
    "InfeasibleError",
    "CovarianceError",
    "SinglePointSolution",
    "optimal_single",
    "lemma1_collapse",
]

SENSING_LIMITED = "sensing-limited"
COMM_LIMITED = "comm-limited"

FEASIBILITY_MARGIN = 1e-12
PARALLEL_TOL = 1e-10


class InfeasibleError(ValueError):
    """The SINR target cannot be met within the power budget."""


class CovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class SinglePointSolution:
    w1: np.ndarray
    regime: str
    boundary_threshold: float

    def objective(self, b0) -> float:
        """``b^H w w^H b``."""
        return float(abs(np.vdot(b0, self.w1)) ** 2)


def optimal_single(h1, b0, tx_power: float, sigma2: float, gamma_bar: float) -> SinglePointSolution:
    """Closed-form optimal ``w1`` for a single UE and a single sensing point.

    Parameters
    ----------
    h1 : complex ndarray
        UE channel (the UE receives ``h1^H w1 s``).
    b0 : complex ndarray
        Transmit steering vector toward the sensing point.
    tx_power, sigma2 : float
        Power budget and UE noise power (linear).
    gamma_bar : float
        Linear SINR target.

    Raises
    ------
    InfeasibleError
        If ``gamma_bar > ||h1||^2 P / sigma2``.
    """
    h1 = np.asarray(h1, dtype=complex)
    b0 = np.asarray(b0, dtype=complex)
    hn = np.linalg.norm(h1)
    bn = np.linalg.norm(b0)
    if hn == 0 or bn == 0:
        raise ValueError("channel and steering vector must be nonzero")
    hbar, bbar = h1 / hn, b0 / bn
    threshold = abs(np.vdot(h1, bbar)) ** 2 * tx_power / sigma2
    limit = hn**2 * tx_power / sigma2
    if gamma_bar > limit * (1 + FEASIBILITY_MARGIN):
        raise InfeasibleError(f"SINR target {gamma_bar:.6g} above the achievable {limit:.6g}")
    if gamma_bar <= threshold:
        return SinglePointSolution(np.sqrt(tx_power) * bbar, SENSING_LIMITED, threshold)

    beta = np.vdot(hbar, b0)
    b_perp = b0 - beta * hbar
    pn = np.linalg.norm(b_perp)
    if pn < PARALLEL_TOL * bn:
        # threshold ~= limit here, so only round-off separates the branches
        return SinglePointSolution(np.sqrt(tx_power) * bbar, SENSING_LIMITED, threshold)
    p_comm = min(sigma2 * gamma_bar / hn**2, tx_power)
    phase = np.exp(1j * np.angle(beta)) if abs(beta) > 0 else 1.0
    w1 = np.sqrt(p_comm) * hbar * phase + np.sqrt(tx_power - p_comm) * b_perp / pn
    return SinglePointSolution(w1, COMM_LIMITED, threshold)


def _check_psd(R, name):
    R = np.asarray(R, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise CovarianceError(f"{name} must be square")
    if not np.allclose(R, R.conj().T, atol=1e-12 * max(1.0, np.abs(R).max())):
        raise CovarianceError(f"{name} is not Hermitian")
    if np.linalg.eigvalsh((R + R.conj().T) / 2).min() < -1e-10:
        raise CovarianceError(f"{name} is not positive semidefinite")
    return R


def lemma1_collapse(r1_hat, rp_hat):
    """Move the dedicated-radar covariance into the UE covariance.

    Returns ``(R1 + R', 0)``: same sensing objective and trace, and the UE
    constraint can only improve since ``h^H R' h >= 0``.
    """
    r1 = _check_psd(r1_hat, "R1")
    rp = _check_psd(rp_hat, "R'")
    if r1.shape != rp.shape:
        raise CovarianceError("covariances differ in size")
    return r1 + rp, np.zeros_like(r1)
