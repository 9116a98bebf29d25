"""Solver dispatch and the optional CVXOPT backend.

A backend is any callable ``(program, tol, max_iter) -> SolveReport`` that
honours the same statuses and tolerances as the reference solver.
"""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from .ipm import solve_ipm, to_standard_form
from .program import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    ConicError,
    ConicProgram,
    SolveReport,
    Tolerances,
)

__all__ = ["solve", "register_backend", "BACKENDS", "solve_cvxopt"]

Backend = Callable[[ConicProgram, Tolerances, int], SolveReport]


def solve_cvxopt(program: ConicProgram, tol: Tolerances = Tolerances(), max_iter: int = 200) -> SolveReport:
    """Adapter around ``cvxopt.solvers.conelp``."""
    from cvxopt import matrix, solvers, spmatrix

    sf = to_standard_form(program)

    def cvx_sparse(M, rows):
        M = M.tocoo()
        return spmatrix(M.data.tolist(), M.row.tolist(), M.col.tolist(), (rows, sf.n))

    G = cvx_sparse(sf.G, sf.m)
    dims = {"l": sf.l, "q": sf.q, "s": []}
    kw = dict(options={"show_progress": False, "maxiters": int(max_iter),
                       "feastol": tol.feasibility, "reltol": tol.gap, "abstol": tol.gap})
    try:
        if sf.p:
            res = solvers.conelp(matrix(sf.c), G, matrix(sf.h), dims, cvx_sparse(sf.A, sf.p), matrix(sf.b), **kw)
        else:
            res = solvers.conelp(matrix(sf.c), G, matrix(sf.h), dims, **kw)
    except (ValueError, ArithmeticError) as exc:
        # cvxopt can hit domain errors in its scaling update on thin cones
        return SolveReport(ITERATION_LIMIT, np.zeros(sf.n), np.nan, np.inf, np.inf, np.inf, 0,
                           solver="cvxopt", message=f"cvxopt numerical failure: {exc}")
    status = {"optimal": OPTIMAL, "primal infeasible": INFEASIBLE, "dual infeasible": UNBOUNDED}.get(
        res["status"], ITERATION_LIMIT)
    x = np.zeros(sf.n) if res["x"] is None else np.array(res["x"]).ravel()
    obj = -float(res["primal objective"]) if status == OPTIMAL else np.nan
    pres = res.get("primal infeasibility") or 0.0
    dres = res.get("dual infeasibility") or 0.0
    gap = res.get("relative gap") or res.get("gap") or 0.0
    return SolveReport(status, x, obj, float(pres), float(dres), float(gap), int(res["iterations"]),
                       solver="cvxopt", message=res["status"])


BACKENDS: Dict[str, Backend] = {"ipm": solve_ipm, "cvxopt": solve_cvxopt}


def register_backend(name: str, fn: Backend) -> None:
    BACKENDS[name] = fn


def solve(program: ConicProgram, tol: Tolerances = Tolerances(), max_iter: int = 200,
          backend: str = "ipm") -> SolveReport:
    """Solve a cone program (maximization).

    Structural problems raise :class:`ConicError` before any iteration;
    numerical trouble is reported as ``iteration-limit``.
    """
    if not isinstance(program, ConicProgram):
        raise ConicError("expected a ConicProgram")
    for blk in program.blocks:
        if blk.matrix.shape[1] != program.n:
            raise ConicError(f"block {blk.name!r} dimension mismatch")
        if not (np.all(np.isfinite(blk.offset)) and np.all(np.isfinite(
                blk.matrix.data if hasattr(blk.matrix, "data") and not isinstance(blk.matrix, np.ndarray)
                else blk.matrix))):
            raise ConicError(f"block {blk.name!r} has non-finite data")
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ConicError(f"unknown solver backend {backend!r}") from None
    return fn(program, tol, max_iter)
