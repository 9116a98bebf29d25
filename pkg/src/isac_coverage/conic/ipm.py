"""
Reference primal-dual interior-point solver for LP/SOCP cone programs.

Solves the homogeneous self-dual embedding of

    minimize    c^T x
    subject to  A x = b,  G x + s = h,  s in K

with Nesterov-Todd scaling and a Mehrotra predictor-corrector, in the
style of ECOS/CVXOPT ``conelp``.  ``K`` is a product of a nonnegative
orthant (first ``l`` rows) and second-order cones.  Newton systems are
reduced to the normal equations ``G^T H^{-1} G`` (plus a Schur complement
for ``A``) with static regularization and iterative refinement.
"""

from __future__ import annotations

import logging
from typing import List

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .program import (
    INFEASIBLE,
    ITERATION_LIMIT,
    NONNEG,
    OPTIMAL,
    SOC,
    UNBOUNDED,
    ZERO,
    ConicProgram,
    SolveReport,
    Tolerances,
)

__all__ = ["solve_ipm", "StandardForm", "to_standard_form"]

log = logging.getLogger(__name__)

STEP_FRACTION = 0.99
REFINE_STEPS = 3
# on breakdown, hand back the best iterate instead of the last one if it is
# within this factor of the tolerances (status stays iteration-limit)
REDUCED_ACCURACY = 100.0
STALL_STEP = 1e-8


class StandardForm:
    """``min c^T x  s.t.  A x = b,  G x + s = h,  s in R_+^l x Q^{q_1} x ...``"""

    def __init__(self, c, G, h, A, b, l: int, q: List[int]):
        self.c, self.G, self.h, self.A, self.b = c, G, h, A, b
        self.l, self.q = l, list(q)
        self.n = c.size
        self.m = h.size
        self.p = b.size
        starts = np.cumsum([l] + self.q[:-1]) if self.q else np.array([], dtype=int)
        self.soc = [slice(int(s), int(s) + k) for s, k in zip(starts, self.q)]
        self.degree = l + len(self.q)


def to_standard_form(program: ConicProgram) -> StandardForm:
    n = program.n
    c = -program.objective  # maximize -> minimize
    nonneg = [b for b in program.blocks if b.cone == NONNEG]
    socs = [b for b in program.blocks if b.cone == SOC]
    zeros = [b for b in program.blocks if b.cone == ZERO]

    def stack(blocks):
        if not blocks:
            return sp.csr_matrix((0, n)), np.zeros(0)
        mats = [sp.csr_matrix(b.matrix) for b in blocks]
        return sp.vstack(mats, format="csr"), np.concatenate([b.offset for b in blocks])

    Gm, gh = stack(nonneg + socs)
    Am, ab = stack(zeros)
    l = sum(b.rows for b in nonneg)
    return StandardForm(c, -Gm, gh, Am, -ab, l, [b.rows for b in socs])


# ---------------------------------------------------------------- cone algebra


def _soc_det(v) -> float:
    """``sqrt(v0^2 - ||v1||^2)`` computed without cancellation (clipped at tiny)."""
    r = np.linalg.norm(v[1:])
    return float(np.sqrt(max((v[0] - r) * (v[0] + r), 1e-300)))


def _jmul(v):
    u = -v.copy()
    u[0] = v[0]
    return u


def _cone_margin(sf: StandardForm, x) -> float:
    """Largest ``-lambda_min``; negative means strictly interior."""
    worst = -np.inf
    if sf.l:
        worst = max(worst, -np.min(x[: sf.l]))
    for s in sf.soc:
        v = x[s]
        worst = max(worst, np.linalg.norm(v[1:]) - v[0])
    return worst


def _unit(sf: StandardForm) -> np.ndarray:
    e = np.zeros(sf.m)
    e[: sf.l] = 1.0
    for s in sf.soc:
        e[s.start] = 1.0
    return e


def _circ(sf, x, y):
    out = np.empty_like(x)
    out[: sf.l] = x[: sf.l] * y[: sf.l]
    for s in sf.soc:
        a, b = x[s], y[s]
        out[s.start] = a @ b
        out[s.start + 1 : s.stop] = a[0] * b[1:] + b[0] * a[1:]
    return out


def _circ_div(sf, lam, u):
    """Solve ``lam o x = u`` for ``x``."""
    out = np.empty_like(u)
    out[: sf.l] = u[: sf.l] / lam[: sf.l]
    for s in sf.soc:
        L, U = lam[s], u[s]
        det = _soc_det(L) ** 2
        x0 = (L[0] * U[0] - L[1:] @ U[1:]) / det
        out[s.start] = x0
        out[s.start + 1 : s.stop] = (U[1:] - x0 * L[1:]) / L[0]
    return out


def _max_step(sf, x, d) -> float:
    """Largest ``a`` with ``x + a d`` in the cone (``x`` strictly interior)."""
    amax = np.inf
    if sf.l:
        dx = d[: sf.l]
        neg = dx < 0
        if np.any(neg):
            amax = min(amax, np.min(-x[: sf.l][neg] / dx[neg]))
    for s in sf.soc:
        v, dv = x[s], d[s]
        nrm = _soc_det(v)
        vb = v / nrm
        # u = J sqrt(vb) in the Jordan algebra; rho = Q_{v^{-1/2}} d
        r = np.sqrt(2.0 * (vb[0] + 1.0))
        w = vb.copy()
        w[0] += 1.0
        w /= r
        u = _jmul(w)
        rho = (2.0 * u * (u @ dv) - _jmul(dv)) / nrm
        lim = np.linalg.norm(rho[1:]) - rho[0]
        if lim > 0:
            amax = min(amax, 1.0 / lim)
    return amax


class _Scaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-1} s = lambda``."""

    def __init__(self, sf: StandardForm, s, z):
        self.sf = sf
        self.d = np.sqrt(s[: sf.l] / z[: sf.l])
        self.soc = []
        for sl in sf.soc:
            ss, zz = s[sl], z[sl]
            sn = _soc_det(ss)
            zn = _soc_det(zz)
            sb, zb = ss / sn, zz / zn
            gamma = np.sqrt(max((1.0 + sb @ zb) / 2.0, 1e-300))
            wb = (sb + _jmul(zb)) / (2.0 * gamma)
            v = wb.copy()
            v[0] += 1.0
            v /= np.sqrt(2.0 * (wb[0] + 1.0))
            self.soc.append((np.sqrt(sn / zn), v, _jmul(v)))
        self.lam = self.apply(z)

    def apply(self, x):
        out = np.empty_like(x)
        sf = self.sf
        out[: sf.l] = self.d * x[: sf.l]
        for sl, (beta, v, _) in zip(sf.soc, self.soc):
            xx = x[sl]
            out[sl] = beta * (2.0 * v * (v @ xx) - _jmul(xx))
        return out

    def apply_inv(self, x):
        out = np.empty_like(x)
        sf = self.sf
        out[: sf.l] = x[: sf.l] / self.d
        for sl, (beta, _, u) in zip(sf.soc, self.soc):
            xx = x[sl]
            out[sl] = (2.0 * u * (u @ xx) - _jmul(xx)) / beta
        return out

    def h_apply(self, x):
        return self.apply(self.apply(x))

    def h_inv(self, x):
        return self.apply_inv(self.apply_inv(x))


# ---------------------------------------------------------------- KKT solver


class _KKT:
    """Factorization of ``[[0, A^T, G^T], [A, 0, 0], [G, 0, -H]]``."""

    def __init__(self, sf: StandardForm, cache: dict):
        self.sf = sf
        self.cache = cache
        if "G_nonneg" not in cache:
            G = sf.G.tocsc()
            cache["G_nonneg"] = G[: sf.l].toarray() if sf.l else np.zeros((0, sf.n))
            blocks = []
            for sl in sf.soc:
                Gi = G[sl].tocsr()
                cols = np.unique(Gi.indices)
                Gd = Gi[:, cols].toarray()
                blocks.append((cols, Gd, Gd.T @ Gd))
            cache["G_soc"] = blocks
            cache["Gt"] = sf.G.T.tocsr()
            cache["At"] = sf.A.T.tocsr()

    def factor(self, W: _Scaling):
        sf, cache = self.sf, self.cache
        n = sf.n
        M = np.zeros((n, n))
        if sf.l:
            Gl = cache["G_nonneg"] / W.d[:, None]
            M += Gl.T @ Gl
        for (cols, Gd, gtg), (beta, v, u) in zip(cache["G_soc"], W.soc):
            # G_i^T H_i^{-1} G_i with H_i^{-1} = (2 u u^T - J)^2 / beta^2
            a = Gd.T @ u
            g = Gd.T @ v
            lowrank = np.stack([a, g], axis=1)
            coef = np.array([[4.0 * (v @ v), -2.0], [-2.0, 0.0]])
            blk = gtg + lowrank @ coef @ lowrank.T
            M[np.ix_(cols, cols)] += blk / beta**2
        self.W = W
        # Jacobi equilibration keeps the Cholesky factor accurate late in the run
        diag = np.abs(np.diag(M))
        dinv = 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0))
        Ms = M * dinv[:, None] * dinv[None, :]
        reg = 1e-13
        for _ in range(8):
            try:
                Ms[np.diag_indices(n)] += reg
                self.chol = la.cho_factor(Ms, lower=True, check_finite=False, overwrite_a=False)
                break
            except la.LinAlgError:
                reg *= 100.0
        else:
            raise la.LinAlgError("normal equations not factorizable")
        if not np.all(np.isfinite(self.chol[0])):
            raise la.LinAlgError("normal equations not finite")
        self.dinv = dinv
        self.reg = reg
        if sf.p:
            At = cache["At"].toarray()
            MiAt = self._msolve(At)
            S = sf.A @ MiAt
            sreg = 1e-13 * max(1.0, float(np.max(np.abs(np.diag(S)))))
            for _ in range(8):
                try:
                    self.schur = la.cho_factor(S + sreg * np.eye(sf.p), lower=True, check_finite=False)
                    break
                except la.LinAlgError:
                    sreg *= 100.0
            else:
                raise la.LinAlgError("equality Schur complement not factorizable")

    def _msolve(self, t):
        d = self.dinv if t.ndim == 1 else self.dinv[:, None]
        return d * la.cho_solve(self.chol, d * t, check_finite=False)

    def _solve_once(self, fx, fy, fz):
        sf, W = self.sf, self.W
        t = fx + self.cache["Gt"] @ W.h_inv(fz)
        if sf.p:
            uy = la.cho_solve(self.schur, sf.A @ self._msolve(t) - fy, check_finite=False)
            ux = self._msolve(t - self.cache["At"] @ uy)
        else:
            uy = np.zeros(0)
            ux = self._msolve(t)
        uz = W.h_inv(sf.G @ ux - fz)
        return ux, uy, uz

    def _apply(self, ux, uy, uz):
        sf = self.sf
        return (
            self.cache["At"] @ uy + self.cache["Gt"] @ uz,
            sf.A @ ux,
            sf.G @ ux - self.W.h_apply(uz),
        )

    def solve(self, fx, fy, fz):
        ux, uy, uz = self._solve_once(fx, fy, fz)
        fnorm = max(np.linalg.norm(fx), np.linalg.norm(fy), np.linalg.norm(fz), 1e-300)
        for _ in range(REFINE_STEPS):
            kx, ky, kz = self._apply(ux, uy, uz)
            rx, ry, rz = fx - kx, fy - ky, fz - kz
            if max(np.linalg.norm(rx), np.linalg.norm(ry), np.linalg.norm(rz)) <= 1e-14 * fnorm:
                break
            dx, dy, dz = self._solve_once(rx, ry, rz)
            ux, uy, uz = ux + dx, uy + dy, uz + dz
        return ux, uy, uz


# ---------------------------------------------------------------- main loop


def _no_cone_solve(sf: StandardForm, tol: Tolerances) -> SolveReport:
    n = sf.n
    if sf.p:
        A = sf.A.toarray()
        x, *_ = np.linalg.lstsq(A, sf.b, rcond=None)
        pres = np.linalg.norm(A @ x - sf.b)
        if pres > tol.feasibility * max(1.0, np.linalg.norm(sf.b)):
            return SolveReport(INFEASIBLE, x, np.nan, pres, np.nan, np.nan, 0)
        y, *_ = np.linalg.lstsq(A.T, -sf.c, rcond=None)
        dres = np.linalg.norm(A.T @ y + sf.c)
    else:
        x, dres = np.zeros(n), np.linalg.norm(sf.c)
        pres = 0.0
    if dres > tol.feasibility * max(1.0, np.linalg.norm(sf.c)):
        return SolveReport(UNBOUNDED, x, np.inf, pres, dres, np.nan, 0, message="objective unbounded")
    return SolveReport(OPTIMAL, x, float(-sf.c @ x), pres, dres, 0.0, 0)


def solve_ipm(program: ConicProgram, tol: Tolerances = Tolerances(), max_iter: int = 200) -> SolveReport:
    """Solve ``program`` (a maximization) with the reference interior-point method."""
    sf = to_standard_form(program)
    if sf.m == 0:
        return _no_cone_solve(sf, tol)
    c, G, h, A, b = sf.c, sf.G, sf.h, sf.A, sf.b
    e = _unit(sf)
    cache: dict = {}
    kkt = _KKT(sf, cache)

    # initial point: identity scaling
    ones = _Scaling.__new__(_Scaling)
    ones.sf, ones.d, ones.soc = sf, np.ones(sf.l), [(1.0, _first(k), _first(k)) for k in sf.q]
    try:
        kkt.factor(ones)
        x, _, z0 = kkt.solve(np.zeros(sf.n), b, h)
        s = -z0
        _, y, z = kkt.solve(-c, np.zeros(sf.p), np.zeros(sf.m))
    except la.LinAlgError as exc:
        return SolveReport(ITERATION_LIMIT, np.zeros(sf.n), np.nan, np.inf, np.inf, np.inf, 0,
                           message=f"initialization failed: {exc}")
    for vec in (s, z):
        alpha = _cone_margin(sf, vec)
        if alpha >= 0:
            vec += (1.0 + alpha) * e
    tau, kappa = 1.0, 1.0

    nb = max(1.0, np.linalg.norm(b), np.linalg.norm(h))
    nc = max(1.0, np.linalg.norm(c))
    report = None
    best = (np.inf, None)
    stalled = 0
    it = 0
    while True:
        # residuals of the homogeneous system
        hrx = -(A.T @ y) - G.T @ z
        hry = A @ x
        hrz = s + G @ x
        rx = hrx - c * tau
        ry = hry - b * tau
        rz = hrz - h * tau
        cx, by, hz = c @ x, b @ y, h @ z
        rt = kappa + cx + by + hz

        pres = max(np.linalg.norm(ry), np.linalg.norm(rz)) / tau / nb
        dres = np.linalg.norm(rx) / tau / nc
        pcost, dcost = cx / tau, -(by + hz) / tau
        gap = (s @ z) / tau**2
        relgap = max(gap, abs(pcost - dcost)) / max(1.0, min(abs(pcost), abs(dcost)))
        mu = (s @ z + tau * kappa) / (sf.degree + 1)

        if pres <= tol.feasibility and dres <= tol.feasibility and relgap <= tol.gap:
            report = SolveReport(OPTIMAL, x / tau, float(-pcost), pres, dres, relgap, it)
            break
        score = max(pres / tol.feasibility, dres / tol.feasibility, relgap / tol.gap)
        if score < best[0]:
            best = (score, (x / tau, float(-pcost), pres, dres, relgap, it))
        if by + hz < 0:
            pinf = np.linalg.norm(hrx) / -(by + hz)
            if pinf <= tol.feasibility:
                scale = -(by + hz)
                report = SolveReport(INFEASIBLE, x / tau, np.nan, pres, dres, relgap, it,
                                     message="primal infeasibility certificate found",
                                     certificate={"y": y / scale, "z": z / scale})
                break
        if cx < 0:
            dinf = max(np.linalg.norm(hry), np.linalg.norm(hrz)) / -cx
            if dinf <= tol.feasibility:
                report = SolveReport(UNBOUNDED, x / -cx, np.inf, pres, dres, relgap, it,
                                     message="dual infeasibility certificate found",
                                     certificate={"x": x / -cx, "s": s / -cx})
                break
        if it >= max_iter:
            report = SolveReport(ITERATION_LIMIT, x / tau, float(-pcost), pres, dres, relgap, it,
                                 message="iteration limit reached")
            break
        if stalled >= 3:
            report = SolveReport(ITERATION_LIMIT, x / tau, float(-pcost), pres, dres, relgap, it,
                                 message="step length stalled")
            break
        if not np.all(np.isfinite([pres, dres, gap, tau, kappa])):
            report = SolveReport(ITERATION_LIMIT, x / tau, np.nan, pres, dres, relgap, it,
                                 message="numerical breakdown")
            break

        try:
            W = _Scaling(sf, s, z)
            kkt.factor(W)
            px, py, pz = kkt.solve(-c, b, h)
        except (la.LinAlgError, FloatingPointError, ValueError) as exc:
            report = SolveReport(ITERATION_LIMIT, x / tau, float(-pcost), pres, dres, relgap, it,
                                 message=f"linear algebra failure: {exc}")
            break
        lam = W.lam
        qp = c @ px + b @ py + h @ pz

        def direction(ds, dk, frac):
            wds = W.apply(_circ_div(sf, lam, ds))
            vx, vy, vz = kkt.solve(frac * rx, -frac * ry, -frac * rz - wds)
            rhs4 = -frac * rt - dk / tau
            qv = c @ vx + b @ vy + h @ vz
            dtau = (rhs4 - qv) / (qp - kappa / tau)
            dx, dy, dz = vx + dtau * px, vy + dtau * py, vz + dtau * pz
            dsv = wds - W.h_apply(dz)
            dkap = (dk - kappa * dtau) / tau
            return dx, dy, dz, dsv, dtau, dkap

        def step(dz, dsv, dtau, dkap):
            a = min(_max_step(sf, s, dsv), _max_step(sf, z, dz))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        # predictor
        ds_aff = -_circ(sf, lam, lam)
        dk_aff = -kappa * tau
        ax, ay, az, as_, at, ak = direction(ds_aff, dk_aff, 1.0)
        alpha_aff = min(1.0, step(az, as_, at, ak))
        sigma = float(np.clip((1.0 - alpha_aff) ** 3, 0.0, 1.0))

        # corrector
        ds = -_circ(sf, lam, lam) - _circ(sf, W.apply_inv(as_), W.apply(az)) + sigma * mu * e
        dk = -kappa * tau - ak * at + sigma * mu
        dx, dy, dz, dsv, dtau, dkap = direction(ds, dk, 1.0 - sigma)
        alpha = min(1.0, STEP_FRACTION * step(dz, dsv, dtau, dkap))

        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * dsv
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap
        stalled = stalled + 1 if alpha < STALL_STEP else 0
        it += 1
        log.debug("it=%d pcost=%.9g pres=%.2e dres=%.2e gap=%.2e step=%.3f", it, pcost, pres, dres, relgap, alpha)

    if report.status == ITERATION_LIMIT and best[0] <= REDUCED_ACCURACY:
        return SolveReport(ITERATION_LIMIT, *best[1],
                           message=f"{report.message}; best iterate within {best[0]:.3g}x of the tolerances")
    return report


def _first(k: int) -> np.ndarray:
    """SOC scaling vector giving ``W = 2 v v^T - J = I``."""
    v = np.zeros(k)
    v[0] = 1.0
    return v
