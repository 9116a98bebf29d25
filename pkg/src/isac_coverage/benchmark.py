"""Communication-only baseline: minimum transmit power meeting every SINR target."""

from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .conic import (
    INFEASIBLE,
    SOC,
    ZERO,
    ComplexEmbedding,
    ConeBlock,
    SolveReport,
    Tolerances,
    VariableLayout,
    assemble,
    solve,
)
from .metrics import BeamformerSet

__all__ = ["BenchmarkInfeasible", "BenchmarkSolverError", "sinr_blocks", "comm_only_beamforming", "rotate_to_real"]


class BenchmarkInfeasible(RuntimeError):
    def __init__(self, message, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


class BenchmarkSolverError(RuntimeError):
    """The solver stopped without a verdict (iteration limit or numerical trouble)."""

    def __init__(self, message, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


def sinr_blocks(emb: ComplexEmbedding, names: Sequence[str], h: np.ndarray, gamma_bars, noise: float,
                form: str = "interference") -> List[ConeBlock]:
    """SINR constraints of UEs ``k`` as SOC blocks plus ``Im(h_k^H w_k) = 0`` rows.

    With ``Im(h_k^H w_k) = 0`` the target ``gamma_k`` is equivalent to either

    * ``form="interference"`` (default):
      ``|| (h_k^H w_i for i != k, noise) || <= Re(h_k^H w_k) / sqrt(gamma_k)``
      (dimension ``2K``);
    * ``form="augmented"``:
      ``|| (h_k^H w_1, ..., h_k^H w_K, noise) || <= sqrt(1 + 1/gamma_k) Re(h_k^H w_k)``
      (dimension ``2K + 2``).

    The augmented cone gets very thin at high targets (its aperture shrinks
    like ``1/gamma``), which costs accuracy in the interior-point solver, so
    the interference form is used by default.  Complex entries are split
    into real and imaginary rows.  ``h`` and ``noise`` must already be in
    the units of the embedded variables.
    """
    if form not in ("interference", "augmented"):
        raise ValueError(f"unknown SINR cone form {form!r}")
    n = emb.size
    K = len(names)
    blocks = []
    for k in range(K):
        gk = float(gamma_bars[k])
        if not gk > 0:
            raise ValueError("SINR targets must be positive")
        rows = []
        re_kk, im_kk = emb.rows(names[k], h[k])
        if form == "augmented":
            rows.append(np.sqrt(1.0 + 1.0 / gk) * re_kk)
        else:
            rows.append(re_kk / np.sqrt(gk))
        for i in range(K):
            if i != k or form == "augmented":
                rows.extend(emb.rows(names[i], h[k]))
        rows.append(np.zeros(n))
        off = np.zeros(len(rows))
        off[-1] = noise
        blocks.append(ConeBlock(f"sinr{k + 1}", np.array(rows), off, SOC))
        blocks.append(ConeBlock(f"imag{k + 1}", im_kk[None, :], [0.0], ZERO))
    return blocks


def rotate_to_real(W: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Rotate column ``k`` so that ``h_k^H w_k`` is real and nonnegative."""
    W = W.copy()
    for k in range(h.shape[0]):
        v = np.vdot(h[k], W[:, k])
        if abs(v) > 0:
            W[:, k] *= np.exp(-1j * np.angle(v))
    return W


def comm_only_beamforming(channels, gamma_bars, sigma2: float, *, tol: Tolerances = Tolerances(),
                          max_iter: int = 200, backend: str = "ipm", form: str = "interference") -> BeamformerSet:
    """Power-minimizing beamformers subject to per-UE SINR targets.

    Returns an ``M_t x M_t`` :class:`BeamformerSet` whose radar columns are
    zero.  UEs with a zero target get a zero beam.  Raises
    :class:`BenchmarkInfeasible` when the targets cannot be met and
    :class:`BenchmarkSolverError` when the solver gives no verdict.  ``form``
    selects the SINR cone (see :func:`sinr_blocks`).
    """
    h = channels.h if hasattr(channels, "h") else np.atleast_2d(np.asarray(channels, dtype=complex))
    K, m_t = h.shape
    gamma_bars = np.broadcast_to(np.asarray(gamma_bars, dtype=float), (K,))
    if np.any(gamma_bars < 0):
        raise ValueError("SINR targets must be nonnegative")
    W = np.zeros((m_t, m_t), dtype=complex)
    active = np.flatnonzero(gamma_bars > 0)
    if active.size == 0:
        return BeamformerSet(W, K)

    ha = h[active]
    ga = gamma_bars[active]
    # variables scaled so the single-user minimum power is O(1)
    p_ref = float(np.max(sigma2 * ga / np.sum(np.abs(ha) ** 2, axis=1)))
    h_scaled = ha * np.sqrt(p_ref) / np.sqrt(sigma2)

    layout = VariableLayout()
    names = [f"w{k + 1}" for k in active]
    emb = ComplexEmbedding([m_t] * len(active), names, layout)
    t = layout.add_real("t", 1)
    n = layout.size
    norm_rows = np.zeros((n, n))
    norm_rows[0, t] = 1.0
    norm_rows[1:, : t.start] = np.eye(t.start)
    blocks = sinr_blocks(emb, names, h_scaled, ga, 1.0, form=form)
    blocks.append(ConeBlock("power", norm_rows, np.zeros(n), SOC))
    c = np.zeros(n)
    c[t] = -1.0
    rep = solve(assemble(blocks, c, layout), tol, max_iter, backend)
    if rep.status == INFEASIBLE:
        raise BenchmarkInfeasible("SINR targets cannot be met by any beamformer", rep)
    if not rep.optimal:
        raise BenchmarkSolverError(f"communication-only design failed: {rep.status} ({rep.message})", rep)
    cols = emb.from_real(rep.x_opt)
    for j, k in enumerate(active):
        W[:, k] = np.sqrt(p_ref) * cols[j]
    return BeamformerSet(rotate_to_real(W, h), K)
