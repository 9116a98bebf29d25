"""
Successive convex approximation for worst-case sensing SNR over a grid.

Each outer iteration replaces the nonconvex coverage constraints
``sum_k |b_l^H w_k|^2 >= eta_l zeta`` by their first-order Taylor lower
bound at the current local point, keeps the SINR targets as second-order
cones, and solves the resulting SOCP.  Because the linearization is a
global under-estimator, every new iterate is feasible for the original
problem and ``zeta`` never decreases.

Internally the program works in normalized units (``W / sqrt(P_t)``, SINR
rows divided by the noise amplitude, ``zeta`` scaled by the smallest
``eta``) so that all data are O(1); reported ``zeta`` values are in the
reduced units ``sum_k |b^H w_k|^2 / eta``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .benchmark import BenchmarkInfeasible, comm_only_beamforming, rotate_to_real, sinr_blocks
from .conic import (
    NONNEG,
    SOC,
    ComplexEmbedding,
    ConeBlock,
    ConicProgram,
    Tolerances,
    VariableLayout,
    assemble,
    solve,
)
from .geometry import CoverageGrid, angles_from_positions, upa_steering
from .metrics import BeamformerSet, coverage_quadratic

__all__ = [
    "ScaConfig",
    "ScaTrace",
    "ScaError",
    "InfeasibleScenario",
    "TaylorBound",
    "Subproblem",
    "taylor_lower_bound",
    "build_subproblem",
    "initialize",
    "INIT_STRATEGIES",
    "run_sca",
    "dedupe_grid",
]

log = logging.getLogger(__name__)


class ScaError(RuntimeError):
    """A subproblem did not solve to optimality; ``trace`` holds the history so far."""

    def __init__(self, message, trace=None, report=None):
        super().__init__(message)
        self.trace = trace
        self.report = report


class InfeasibleScenario(RuntimeError):
    pass


@dataclass(frozen=True)
class ScaConfig:
    epsilon: float = 1e-4
    max_outer_iterations: int = 50
    tol: Tolerances = Tolerances()
    solver_max_iter: int = 200
    backend: str = "ipm"
    # Radar columns that are zero at the start get a zero Taylor gradient and
    # only cost power, so they stay zero in every subproblem; dropping them
    # gives the same iterates with far fewer variables.
    prune_zero_columns: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass
class ScaTrace:
    zeta: List[float] = field(default_factory=list)
    worst_snr: List[float] = field(default_factory=list)
    solver_iterations: List[int] = field(default_factory=list)
    wall_time: List[float] = field(default_factory=list)
    iterates: List[np.ndarray] = field(default_factory=list)
    final: Optional[BeamformerSet] = None
    termination: str = ""

    @property
    def outer_iterations(self) -> int:
        return len(self.zeta) - 1

    def rows(self):
        """``(iteration, zeta, worst SNR dB, solver iterations, wall time)`` per entry."""
        for i, (z, snr, it, t) in enumerate(zip(self.zeta, self.worst_snr, self.solver_iterations, self.wall_time)):
            yield i, z, 10 * np.log10(snr) if snr > 0 else -np.inf, it, t


@dataclass(frozen=True)
class TaylorBound:
    """Affine minorant ``g0 + 2 Re sum_k conj(u_k) b^H (w_k - w0_k)`` of ``sum_k |b^H w_k|^2``."""

    b: np.ndarray
    u: np.ndarray  # b^H w0_k per column
    g0: float

    def __call__(self, W) -> float:
        W = W.w if isinstance(W, BeamformerSet) else np.asarray(W)
        z = np.conj(self.b) @ W
        return float(-self.g0 + 2.0 * np.real(np.conj(self.u) @ z))

    @property
    def constant(self) -> float:
        """Value at ``W = 0``."""
        return -self.g0

    @property
    def gradient(self) -> np.ndarray:
        """Complex matrix ``G`` with bound ``= constant + 2 Re sum_k G[:, k]^H w_k``."""
        return np.outer(self.b, self.u)


def taylor_lower_bound(w_local, b_l) -> TaylorBound:
    W = w_local.w if isinstance(w_local, BeamformerSet) else np.asarray(w_local, dtype=complex)
    b_l = np.asarray(b_l, dtype=complex)
    u = np.conj(b_l) @ W
    return TaylorBound(b_l, u, float(np.sum(np.abs(u) ** 2)))


def dedupe_grid(grid: CoverageGrid) -> CoverageGrid:
    """Collapse coincident grid points (keeps first occurrence order)."""
    _, first = np.unique(np.round(grid.positions, 12), axis=0, return_index=True)
    if first.size == len(grid):
        return grid
    return grid.subset(np.sort(first))


@dataclass
class Subproblem:
    program: ConicProgram
    embedding: ComplexEmbedding
    w_scale: float  # W = w_scale * embedded columns
    zeta_scale: float  # zeta (reduced units) = zeta_scale * zeta variable
    names: List[str]

    def beamformers(self, x) -> np.ndarray:
        return self.w_scale * np.column_stack(self.embedding.from_real(x))

    def zeta(self, x) -> float:
        return self.zeta_scale * float(x[self.program.layout.slice("zeta")][0])


def build_subproblem(w_local, channels, grid: CoverageGrid, scenario, gamma_bars=None) -> Subproblem:
    """Convex restriction around ``w_local``.

    Blocks, in order: per UE an SOC SINR block and an ``Im(h_k^H w_k) = 0``
    row; one SOC power block ``||vec W|| <= sqrt(P_t)``; one nonnegative
    block with one linearized coverage row per (deduplicated) grid point.
    """
    W0 = w_local.w if isinstance(w_local, BeamformerSet) else np.asarray(w_local, dtype=complex)
    m_t, n_cols = W0.shape
    if len(grid) == 0:
        raise ValueError("coverage grid is empty")
    grid = dedupe_grid(grid)
    h = np.zeros((0, m_t), complex) if channels is None else np.atleast_2d(channels.h if hasattr(channels, "h") else channels)
    K = h.shape[0]
    gamma = scenario.sinr_targets if gamma_bars is None else np.broadcast_to(np.asarray(gamma_bars, float), (K,))

    p_t = scenario.tx_power
    B = grid.tx_steering
    s_g = float(np.max(np.sum(np.abs(B) ** 2, axis=1)))
    eta = grid.eta
    eta_ref = float(eta.min())
    Bn = B / np.sqrt(s_g)
    W0n = W0 / np.sqrt(p_t)

    layout = VariableLayout()
    names = [f"w{k + 1}" for k in range(n_cols)]
    emb = ComplexEmbedding([m_t] * n_cols, names, layout)
    zs = layout.add_real("zeta", 1)
    n = layout.size

    blocks = sinr_blocks(emb, names[:K], h * np.sqrt(p_t / scenario.noise_power), gamma, 1.0) if K else []

    nw = 2 * m_t * n_cols
    power = np.zeros((nw + 1, n))
    power[1:, :nw] = np.eye(nw)
    off = np.zeros(nw + 1)
    off[0] = 1.0
    blocks.append(ConeBlock("power", power, off, SOC))

    # coverage: 2 Re sum_k conj(u_lk) b_l^H w_k - g_l - (eta_l / eta_ref) zeta >= 0
    U = np.conj(Bn) @ W0n  # (L, n_cols)
    cov = np.zeros((len(grid), n))
    for k, name in enumerate(names):
        s = layout.slice(name)
        ub = 2.0 * U[:, k : k + 1] * Bn
        cov[:, s.start : s.start + m_t] = ub.real
        cov[:, s.start + m_t : s.stop] = ub.imag
    cov[:, zs] = -(eta / eta_ref)[:, None]
    g0 = np.sum(np.abs(U) ** 2, axis=1)
    blocks.append(ConeBlock("coverage", cov, -g0, NONNEG))

    c = np.zeros(n)
    c[zs] = 1.0
    prog = assemble(blocks, c, layout)
    return Subproblem(prog, emb, np.sqrt(p_t), p_t * s_g / eta_ref, names)


INIT_STRATEGIES = ("centroid", "merged")


def initialize(channels, grid: CoverageGrid, scenario, *, config: ScaConfig = ScaConfig(), gamma_bars=None,
               strategy: str = "centroid") -> BeamformerSet:
    """Feasible start built from the power-minimizing UE beams.

    The communication-only design serves the UEs; whatever budget remains
    goes to a beam steered at the grid centroid.

    ``strategy="centroid"`` puts that beam on the first dedicated radar
    column (other radar columns start at zero).  ``strategy="merged"`` adds
    it to the UE column whose channel leaves most of the beam after
    projecting out the other UEs' channels; the projection keeps the other
    UEs' interference unchanged, the phase is aligned with ``h_k^H w_k`` so
    UE ``k`` only gains, and the amplitude exhausts the budget.  Splitting
    the same direction over two columns is a flat direction of the
    objective that the linearized subproblems leave only slowly, so the
    merged start converges much faster on small grids.  With no UEs, or if
    the projected beam vanishes, both strategies coincide.
    """
    if strategy not in INIT_STRATEGIES:
        raise ValueError(f"unknown initialization strategy {strategy!r}")
    m_t = scenario.m_t
    p_t = scenario.tx_power
    K = 0 if channels is None else len(channels)
    W = np.zeros((m_t, m_t), dtype=complex)
    if K:
        gamma = scenario.sinr_targets if gamma_bars is None else gamma_bars
        try:
            bench = comm_only_beamforming(channels, gamma, scenario.noise_power, tol=config.tol,
                                          max_iter=config.solver_max_iter, backend=config.backend)
        except BenchmarkInfeasible as exc:
            raise InfeasibleScenario(str(exc)) from exc
        W[:, :K] = bench.w[:, :K]
    used = float(np.vdot(W, W).real)
    residual = p_t - used
    if residual < -1e-9 * p_t:
        raise InfeasibleScenario(f"UE beams need {used:.6g} W, budget is {p_t:.6g} W")
    if residual <= 0:
        return BeamformerSet(_fit_budget(W, p_t), K, p_t)
    b = upa_steering(angles_from_positions(scenario.bs1, grid.centroid), scenario.tx_array)
    b = b / np.linalg.norm(b)
    if strategy == "merged" and K:
        if _merge_beam(W, channels.h, b, p_t):
            return BeamformerSet(_fit_budget(W, p_t), K, p_t)
    if K < m_t:
        W[:, K] = np.sqrt(residual) * b
    return BeamformerSet(_fit_budget(W, p_t), K, p_t)


def _merge_beam(W, h, b, p_t) -> bool:
    """Add ``b`` (projected) to the best UE column in place; False if nothing is left of it."""
    K = h.shape[0]
    best_k, best_c = -1, None
    for k in range(K):
        c = b.copy()
        others = np.delete(h, k, axis=0)
        if others.size:
            q, _ = np.linalg.qr(others.T)  # span of the h_j, so h_j^H c = 0 afterwards
            c = c - q @ (q.conj().T @ c)
        if best_c is None or np.linalg.norm(c) > np.linalg.norm(best_c):
            best_k, best_c = k, c
    cn = np.linalg.norm(best_c)
    if cn < 1e-9:
        return False
    c = best_c / cn
    w = W[:, best_k]
    hc = np.vdot(h[best_k], c)
    if abs(hc) > 0:
        c = c * np.exp(1j * (np.angle(np.vdot(h[best_k], w)) - np.angle(hc)))
    # |w + a c|^2 + (other columns) = p_t
    lin = 2.0 * float(np.real(np.vdot(w, c)))
    const = float(np.vdot(W, W).real) - p_t
    a = (-lin + np.sqrt(lin * lin - 4.0 * const)) / 2.0
    W[:, best_k] = w + a * c
    return True


def _fit_budget(W, p_t):
    p = float(np.vdot(W, W).real)
    return W * np.sqrt(p_t / p) if p > p_t else W


def run_sca(init, channels, grid: CoverageGrid, scenario, config: ScaConfig = ScaConfig(), gamma_bars=None
            ) -> ScaTrace:
    """Iterate convex restrictions until the relative gain in ``zeta`` drops below ``epsilon``."""
    grid = dedupe_grid(grid)
    W = init.w if isinstance(init, BeamformerSet) else np.asarray(init, dtype=complex)
    K = 0 if channels is None else len(channels)
    h = None if channels is None else (channels.h if hasattr(channels, "h") else np.atleast_2d(channels))
    const = scenario.snr_constant
    if K:
        # the subproblem fixes Im(h_k^H w_k) = 0; rotating keeps every SINR and |b^H w_k|
        W = rotate_to_real(W, h)

    trace = ScaTrace()
    z0 = float(np.min(coverage_quadratic(W, grid) / grid.eta))
    trace.zeta.append(z0)
    trace.worst_snr.append(const * z0)
    trace.solver_iterations.append(0)
    trace.wall_time.append(0.0)
    trace.iterates.append(W)

    active = np.arange(W.shape[1])
    if config.prune_zero_columns:
        keep = np.linalg.norm(W, axis=0) > 0
        keep[:K] = True
        active = np.flatnonzero(keep)

    for it in range(1, config.max_outer_iterations + 1):
        t0 = time.perf_counter()
        sub = build_subproblem(W[:, active], channels, grid, scenario, gamma_bars)
        rep = solve(sub.program, config.tol, config.solver_max_iter, config.backend)
        if not rep.optimal:
            trace.termination = f"solver-{rep.status}"
            raise ScaError(f"subproblem {it} ended with status {rep.status}: {rep.message}", trace, rep)
        W_new = np.zeros_like(W)
        W_new[:, active] = sub.beamformers(rep.x_opt)
        if K:
            W_new = rotate_to_real(W_new, h)
        W_new = _fit_budget(W_new, scenario.tx_power)
        zeta = sub.zeta(rep.x_opt)
        true_min = float(np.min(coverage_quadratic(W_new, grid) / grid.eta))
        trace.zeta.append(zeta)
        trace.worst_snr.append(const * true_min)
        trace.solver_iterations.append(rep.iterations)
        trace.wall_time.append(time.perf_counter() - t0)
        trace.iterates.append(W_new)
        log.debug("sca it=%d zeta=%.12g true=%.12g solver_it=%d", it, zeta, true_min, rep.iterations)
        prev = trace.zeta[-2]
        W = W_new
        if zeta - prev <= config.epsilon * abs(prev):
            trace.termination = "converged"
            break
    else:
        trace.termination = "max-iterations"
    trace.final = BeamformerSet(W, K, scenario.tx_power)
    return trace
