"""Real standard-form cone programs.

A program maximizes ``c^T x`` subject to blocks ``A_i x + b_i in K_i`` where
``K_i`` is the zero cone, the nonnegative orthant, or a second-order cone
``{(t, u) : ||u|| <= t}`` whose first row is the scalar bound.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ConicError",
    "ZERO",
    "NONNEG",
    "SOC",
    "ConeBlock",
    "VariableLayout",
    "ConicProgram",
    "Tolerances",
    "SolveReport",
    "assemble",
]

ZERO, NONNEG, SOC = "zero", "nonneg", "soc"
_CONES = (ZERO, NONNEG, SOC)


class ConicError(ValueError):
    """Structurally malformed program."""


@dataclass(frozen=True)
class ConeBlock:
    name: str
    matrix: Union[np.ndarray, sp.spmatrix]
    offset: np.ndarray
    cone: str

    def __post_init__(self):
        if self.cone not in _CONES:
            raise ConicError(f"unknown cone {self.cone!r}")
        m = self.matrix
        if not sp.issparse(m):
            m = np.atleast_2d(np.asarray(m, dtype=float))
        object.__setattr__(self, "matrix", m)
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "offset", off)
        if m.shape[0] != off.shape[0]:
            raise ConicError(f"block {self.name!r}: {m.shape[0]} rows but {off.shape[0]} offsets")
        if self.cone == SOC and m.shape[0] < 1:
            raise ConicError(f"block {self.name!r}: empty second-order cone")

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def value(self, x) -> np.ndarray:
        return np.asarray(self.matrix @ x).ravel() + self.offset

    def violation(self, x) -> float:
        """Distance-like measure of how far ``A x + b`` is from the cone."""
        v = self.value(x)
        if self.cone == ZERO:
            return float(np.max(np.abs(v), initial=0.0))
        if self.cone == NONNEG:
            return float(max(0.0, -np.min(v, initial=0.0)))
        return float(max(0.0, np.linalg.norm(v[1:]) - v[0]))


class VariableLayout:
    """Named contiguous slices of the real decision vector."""

    def __init__(self):
        self._slices: Dict[str, slice] = {}
        self._complex: Dict[str, int] = {}
        self.size = 0

    def __contains__(self, name) -> bool:
        return name in self._slices

    def __iter__(self):
        return iter(self._slices)

    def add_real(self, name: str, size: int) -> slice:
        if name in self._slices:
            raise ConicError(f"duplicate variable name {name!r}")
        if size < 0:
            raise ConicError("negative variable size")
        s = slice(self.size, self.size + int(size))
        self._slices[name] = s
        self.size += int(size)
        return s

    def add_complex(self, name: str, size: int) -> slice:
        """Complex vector of length ``size`` stored as ``[Re; Im]`` (2 * size reals)."""
        s = self.add_real(name, 2 * int(size))
        self._complex[name] = int(size)
        return s

    def slice(self, name: str) -> slice:
        return self._slices[name]

    def is_complex(self, name: str) -> bool:
        return name in self._complex

    def complex_size(self, name: str) -> int:
        return self._complex[name]

    def names(self) -> List[str]:
        return list(self._slices)


@dataclass
class ConicProgram:
    objective: np.ndarray
    blocks: List[ConeBlock]
    layout: Optional[VariableLayout] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        if self.layout is not None and self.layout.size != n:
            raise ConicError(f"layout has {self.layout.size} reals, objective has {n}")
        for blk in self.blocks:
            if blk.matrix.shape[1] != n:
                raise ConicError(f"block {blk.name!r} has {blk.matrix.shape[1]} columns, expected {n}")

    @property
    def n(self) -> int:
        return self.objective.size

    def count(self, cone: str) -> int:
        return sum(1 for b in self.blocks if b.cone == cone)

    def rows(self, cone: str) -> int:
        return sum(b.rows for b in self.blocks if b.cone == cone)

    def max_violation(self, x) -> float:
        return max((b.violation(x) for b in self.blocks), default=0.0)

    def objective_value(self, x) -> float:
        return float(self.objective @ x)

    def dump(self, stream=None, precision: int = 6) -> str:
        """Plain-text listing of the program for debugging."""
        out = io.StringIO()
        out.write(f"maximize c^T x   (n = {self.n})\n")
        if self.layout is not None:
            for name in self.layout.names():
                s = self.layout.slice(name)
                kind = "complex" if self.layout.is_complex(name) else "real"
                out.write(f"  var {name}: [{s.start}:{s.stop}) {kind}\n")
        out.write("c = " + np.array2string(self.objective, precision=precision, max_line_width=120) + "\n")
        for blk in self.blocks:
            out.write(f"block {blk.name} cone={blk.cone} rows={blk.rows}\n")
            m = blk.matrix.toarray() if sp.issparse(blk.matrix) else blk.matrix
            for r in range(blk.rows):
                nz = np.flatnonzero(m[r])
                terms = " ".join(f"{m[r, j]:+.{precision}g}*x{j}" for j in nz)
                out.write(f"  [{r}] {terms or '0'} {blk.offset[r]:+.{precision}g}\n")
        text = out.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def assemble(
    blocks: Iterable[Union[ConeBlock, Tuple[str, object]]],
    objective,
    layout: Optional[VariableLayout] = None,
) -> ConicProgram:
    """Concatenate constraint builders into a program.

    Each entry is either a :class:`ConeBlock` or a ``(name, builder)`` pair
    where ``builder(layout)`` returns one block or a list of blocks.  Order is
    preserved.  ``objective`` is a vector or a callable of the layout.
    """
    built: List[ConeBlock] = []
    for entry in blocks:
        if isinstance(entry, ConeBlock):
            items = [entry]
        else:
            name, builder = entry
            res = builder(layout)
            items = [res] if isinstance(res, ConeBlock) else list(res)
        built.extend(items)
    names = [b.name for b in built]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ConicError(f"duplicate block names: {sorted(dup)}")
    c = objective(layout) if callable(objective) else objective
    return ConicProgram(np.asarray(c, dtype=float), built, layout)


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-8
    gap: float = 1e-8


OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = "optimal", "infeasible", "unbounded", "iteration-limit"


@dataclass
class SolveReport:
    status: str
    x_opt: np.ndarray
    objective_value: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    solver: str = "ipm"
    message: str = ""
    certificate: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL
