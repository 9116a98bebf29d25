"""Real second-order cone programs: containers, complex embedding, solvers."""

from .backends import BACKENDS, register_backend, solve, solve_cvxopt
from .embedding import ComplexEmbedding, embed_complex, functional_rows
from .ipm import solve_ipm
from .program import (
    INFEASIBLE,
    ITERATION_LIMIT,
    NONNEG,
    OPTIMAL,
    SOC,
    UNBOUNDED,
    ZERO,
    ConeBlock,
    ConicError,
    ConicProgram,
    SolveReport,
    Tolerances,
    VariableLayout,
    assemble,
)

__all__ = [
    "BACKENDS", "register_backend", "solve", "solve_cvxopt", "solve_ipm",
    "ComplexEmbedding", "embed_complex", "functional_rows",
    "ZERO", "NONNEG", "SOC", "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "ITERATION_LIMIT",
    "ConeBlock", "ConicError", "ConicProgram", "SolveReport", "Tolerances", "VariableLayout", "assemble",
]
