"""
Exhaustive search over transmit covariances for tiny instances.

With ``R = W W^H`` the single-UE problem reads

    maximize  min_l b_l^H R b_l / eta_l
    s.t.      h^H R h >= sigma^2 gamma,  tr R <= P_t,  R PSD,

which is exact for a square ``W``.  Adding ``(P_t - tr R) I / M_t`` to any
feasible ``R`` raises both the objective and ``h^H R h``, so an optimum
sits on ``tr R = P_t`` and the search only enumerates that face.  Diagonal
entries run over multiples of ``step`` summing to the trace; real and
imaginary parts of the off-diagonal entries run over multiples of
``step`` and candidates failing the PSD test are dropped.

The split search keeps a UE covariance ``R1`` and a dedicated-radar
covariance ``R'`` separate (only ``R1`` counts toward the SINR), which is
how the collapse ``R' -> 0`` is checked numerically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "OracleError",
    "OracleInfeasible",
    "CovarianceGridSpec",
    "OracleResult",
    "hermitian_grid",
    "covariance_grid_search",
    "split_covariance_search",
    "cell_tolerance",
]

MAX_DIMENSION = 3
PSD_TOL = 1e-12


class OracleError(ValueError):
    pass


class OracleInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class CovarianceGridSpec:
    m_t: int
    tx_power: float
    step: Optional[float] = None  # defaults to tx_power / 100

    def __post_init__(self):
        if not 1 <= self.m_t <= MAX_DIMENSION:
            raise OracleError(f"oracle supports 1 <= M_t <= {MAX_DIMENSION}")
        if not self.tx_power > 0:
            raise OracleError("tx_power must be positive")
        if self.step is not None and not self.step > 0:
            raise OracleError("step must be positive")

    @property
    def resolved_step(self) -> float:
        return self.tx_power / 100 if self.step is None else float(self.step)


@dataclass(frozen=True)
class OracleResult:
    covariance: np.ndarray
    objective: float
    candidates: int
    feasible: int
    step: float
    tolerance: float  # objective change from one step in every parameter


def _compositions(total_steps: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``total_steps``."""
    if parts == 1:
        return np.array([[total_steps]])
    out = []
    for first in range(total_steps + 1):
        for rest in _compositions(total_steps - first, parts - 1):
            out.append([first, *rest])
    return np.array(out)


def hermitian_grid(m_t: int, trace: float, step: float) -> np.ndarray:
    """PSD Hermitian matrices with ``tr R = trace`` on the parameter lattice.

    Returns an array of shape ``(count, m_t, m_t)`` in a fixed enumeration
    order.  ``trace`` is rounded to a whole number of steps.
    """
    n_steps = int(round(trace / step))
    if n_steps < 0:
        raise OracleError("trace must be nonnegative")
    diags = _compositions(n_steps, m_t) * step
    pairs = [(i, j) for i in range(m_t) for j in range(i + 1, m_t)]
    mats = []
    for d in diags:
        if not pairs:
            mats.append(np.diag(d).astype(complex)[None])
            continue
        # |R_ij| <= sqrt(d_i d_j) for a PSD matrix
        axes = []
        for i, j in pairs:
            lim = int(np.floor(np.sqrt(d[i] * d[j]) / step + 1e-9))
            vals = np.arange(-lim, lim + 1) * step
            axes += [vals, vals]
        grids = np.meshgrid(*axes, indexing="ij")
        flat = np.stack([g.reshape(-1) for g in grids], axis=1)
        R = np.zeros((flat.shape[0], m_t, m_t), dtype=complex)
        R[:, np.arange(m_t), np.arange(m_t)] = d
        for p, (i, j) in enumerate(pairs):
            z = flat[:, 2 * p] + 1j * flat[:, 2 * p + 1]
            R[:, i, j] = z
            R[:, j, i] = np.conj(z)
        if m_t == 2:
            keep = np.abs(R[:, 0, 1]) ** 2 <= d[0] * d[1] + PSD_TOL
        else:
            keep = np.linalg.eigvalsh(R)[:, 0] >= -PSD_TOL * max(trace, 1.0)
        mats.append(R[keep])
    return np.concatenate(mats, axis=0)


def _quadforms(R, vecs):
    """``v^H R v`` for every matrix in ``R`` (count, m, m) and row of ``vecs`` (L, m)."""
    return np.einsum("li,nij,lj->nl", np.conj(vecs), R, vecs).real


def cell_tolerance(m_t: int, step: float, steering, eta) -> float:
    """Largest objective change caused by moving every parameter by one step."""
    B = np.atleast_2d(np.asarray(steering, dtype=complex))
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (B.shape[0],))
    worst = 0.0
    for l in range(B.shape[0]):
        mag = np.abs(B[l])
        total = np.sum(mag**2)  # diagonal moves (bounded by the largest |b_i|^2 each)
        for i, j in itertools.combinations(range(m_t), 2):
            total += 4.0 * mag[i] * mag[j]  # real and imaginary part of R_ij
        worst = max(worst, step * total / eta[l])
    return float(worst)


def _check_inputs(spec, h, steering, eta):
    B = np.atleast_2d(np.asarray(steering, dtype=complex))
    if B.shape[1] != spec.m_t:
        raise OracleError("steering vectors do not match M_t")
    if B.shape[0] > MAX_DIMENSION:
        raise OracleError(f"oracle supports at most {MAX_DIMENSION} grid points")
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (B.shape[0],)).copy()
    h = None if h is None else np.asarray(h, dtype=complex).reshape(-1)
    if h is not None and h.size != spec.m_t:
        raise OracleError("channel does not match M_t")
    return h, B, eta


def covariance_grid_search(spec: CovarianceGridSpec, h, steering, gamma_bar: float, sigma2: float,
                           eta=1.0) -> OracleResult:
    """Best covariance on the grid for one UE (``h``) and up to three points.

    ``steering`` holds one transmit steering vector per row; the objective
    is ``min_l b_l^H R b_l / eta_l`` (same units as the SCA ``zeta`` when
    ``eta`` are the grid weights).  Ties go to the lowest enumeration index.
    """
    h, B, eta = _check_inputs(spec, h, steering, eta)
    step = spec.resolved_step
    R = hermitian_grid(spec.m_t, spec.tx_power, step)
    obj = np.min(_quadforms(R, B) / eta, axis=1)
    if h is not None and gamma_bar > 0:
        ok = _quadforms(R, h[None, :])[:, 0] >= sigma2 * gamma_bar
    else:
        ok = np.ones(R.shape[0], dtype=bool)
    if not np.any(ok):
        raise OracleInfeasible("no grid covariance meets the SINR target")
    idx = np.flatnonzero(ok)
    best = idx[int(np.argmax(obj[idx]))]
    return OracleResult(R[best], float(obj[best]), R.shape[0], int(idx.size), step,
                        cell_tolerance(spec.m_t, step, B, eta))


def split_covariance_search(spec: CovarianceGridSpec, h, steering, gamma_bar: float, sigma2: float,
                            eta=1.0, *, radar_free: bool = True):
    """Joint search over ``(R1, R')`` with ``tr R1 + tr R' = P_t``.

    Only ``R1`` enters the SINR constraint ``h^H R1 h >= sigma^2 gamma``;
    both contribute to the sensing objective.  With ``radar_free=False``
    ``R'`` is pinned to zero.  Returns ``(R1, R', objective)``.
    """
    h, B, eta = _check_inputs(spec, h, steering, eta)
    step = spec.resolved_step
    n_total = int(round(spec.tx_power / step))
    best = (-np.inf, None, None)
    traces = range(n_total + 1) if radar_free else [n_total]
    for t1 in traces:
        R1 = hermitian_grid(spec.m_t, t1 * step, step)
        f1 = _quadforms(R1, B) / eta
        if h is not None and gamma_bar > 0:
            ok = _quadforms(R1, h[None, :])[:, 0] >= sigma2 * gamma_bar
            R1, f1 = R1[ok], f1[ok]
        if R1.shape[0] == 0:
            continue
        R2 = hermitian_grid(spec.m_t, (n_total - t1) * step, step)
        f2 = _quadforms(R2, B) / eta
        total = np.min(f1[:, None, :] + f2[None, :, :], axis=2)
        i, j = np.unravel_index(int(np.argmax(total)), total.shape)
        if total[i, j] > best[0]:
            best = (float(total[i, j]), R1[i], R2[j])
    if best[1] is None:
        raise OracleInfeasible("no grid covariance meets the SINR target")
    return best[1], best[2], best[0]
