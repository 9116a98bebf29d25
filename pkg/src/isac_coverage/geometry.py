"""
Coordinate geometry, direction angles and uniform-planar-array steering.

Angles follow the usual spherical convention: ``theta`` is measured from the
+z axis (``theta = pi/2`` is horizontal) and ``phi`` counterclockwise from the
+x axis.  The arrays lie in the xz-plane, so the x-axis ramp depends on
``sin(theta) cos(phi)`` and the z-axis ramp on ``cos(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "GeometryError",
    "ArrayGeometry",
    "Position",
    "DirectionAngles",
    "RectRegion",
    "CoverageGrid",
    "angles_from_positions",
    "position_from_angles",
    "upa_steering",
    "steering_many",
    "build_coverage_grid",
    "points_grid",
]


class GeometryError(ValueError):
    """Degenerate or invalid geometric input."""


@dataclass(frozen=True)
class ArrayGeometry:
    m_x: int = 8
    m_z: int = 8
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if int(self.m_x) < 1 or int(self.m_z) < 1:
            raise GeometryError("array needs at least one element per axis")
        if not self.spacing_over_wavelength > 0:
            raise GeometryError("element spacing must be positive")

    @property
    def size(self) -> int:
        return int(self.m_x) * int(self.m_z)


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise GeometryError("position coordinates must be finite")

    @classmethod
    def of(cls, p) -> "Position":
        if isinstance(p, Position):
            return p
        x, y, z = (float(v) for v in p)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other) -> float:
        return float(np.linalg.norm(self.as_array() - Position.of(other).as_array()))


@dataclass(frozen=True)
class DirectionAngles:
    """Elevation ``theta`` in [0, pi] and azimuth ``phi`` in [0, 2 pi), radians."""

    theta: float
    phi: float

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "DirectionAngles":
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg) % (2 * np.pi))

    @property
    def degrees(self) -> Tuple[float, float]:
        return float(np.rad2deg(self.theta)), float(np.rad2deg(self.phi))


def angles_from_positions(source, target) -> DirectionAngles:
    """Direction of ``target`` seen from ``source``.

    On the vertical axis (straight up or down) the azimuth is undefined and
    is returned as 0.
    """
    d = Position.of(target).as_array() - Position.of(source).as_array()
    r = np.linalg.norm(d)
    if r == 0.0:
        raise GeometryError("source and target coincide")
    theta = float(np.arccos(np.clip(d[2] / r, -1.0, 1.0)))
    horiz = np.hypot(d[0], d[1])
    if horiz <= 1e-15 * r:
        return DirectionAngles(theta, 0.0)
    phi = float(np.arctan2(d[1], d[0]) % (2 * np.pi))
    return DirectionAngles(theta, phi)


def position_from_angles(origin, angles: DirectionAngles, distance: float) -> Position:
    """Point at ``distance`` meters from ``origin`` along ``angles``."""
    o = Position.of(origin).as_array()
    st = np.sin(angles.theta)
    u = np.array([st * np.cos(angles.phi), st * np.sin(angles.phi), np.cos(angles.theta)])
    return Position.of(o + distance * u)


def upa_steering(angles: DirectionAngles, geom: ArrayGeometry) -> np.ndarray:
    """Steering vector of a UPA in the xz-plane.

    Returns ``kron(x_ramp, z_ramp)`` with ``x_ramp[m] = exp(j 2 pi d/lambda m
    sin(theta) cos(phi))`` and ``z_ramp[n] = exp(j 2 pi d/lambda n cos(theta))``,
    so the entry of element (m, n) sits at index ``m * m_z + n``.
    """
    k = 2 * np.pi * geom.spacing_over_wavelength
    ux = np.sin(angles.theta) * np.cos(angles.phi)
    uz = np.cos(angles.theta)
    x_ramp = np.exp(1j * k * np.arange(geom.m_x) * ux)
    z_ramp = np.exp(1j * k * np.arange(geom.m_z) * uz)
    return np.kron(x_ramp, z_ramp)


def steering_many(origin, points: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    """Row-stacked steering vectors from ``origin`` toward each row of ``points``."""
    return np.array([upa_steering(angles_from_positions(origin, p), geom) for p in points])


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned horizontal rectangle at a fixed height."""

    center: Tuple[float, float] = (0.0, 50.0)
    extent_x: float = 50.0
    extent_y: float = 50.0
    height: float = 10.0


@dataclass
class CoverageGrid:
    """Discretized coverage region.

    Attributes
    ----------
    positions : ndarray, shape (L, 3)
    shape : (n_x, n_y)
        Lattice shape; point ``l`` sits at ``(i, j) = divmod(l, n_y)``.
    tx_steering, rx_steering : ndarray, shape (L, M_t) / (L, M_r), optional
        Steering vectors from BS-1 and BS-2 toward each point.
    eta : ndarray, shape (L,), optional
        Coverage weights, filled by :func:`isac_coverage.metrics.eta_weights`.
    """

    positions: np.ndarray
    shape: Tuple[int, int]
    tx_steering: Optional[np.ndarray] = None
    rx_steering: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None
    spacing: Tuple[float, float] = field(default=(0.0, 0.0))

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def subset(self, index) -> "CoverageGrid":
        """Grid restricted to ``index`` (lattice shape is lost)."""
        index = np.atleast_1d(np.asarray(index))
        if index.size == 0:
            index = index.astype(int)
        pick = lambda a: None if a is None else a[index]
        return CoverageGrid(
            positions=self.positions[index],
            shape=(len(index), 1),
            tx_steering=pick(self.tx_steering),
            rx_steering=pick(self.rx_steering),
            eta=pick(self.eta),
            spacing=self.spacing,
        )


def _axis(center: float, extent: float, n: int) -> np.ndarray:
    if n < 1:
        raise GeometryError("grid counts must be at least 1")
    if n == 1:
        return np.array([float(center)])
    if not extent > 0:
        raise GeometryError("zero or negative extent with more than one grid point")
    return np.linspace(center - extent / 2, center + extent / 2, n)


def build_coverage_grid(
    region: RectRegion,
    counts: Sequence[int],
    *,
    tx_origin=None,
    rx_origin=None,
    tx_array: Optional[ArrayGeometry] = None,
    rx_array: Optional[ArrayGeometry] = None,
) -> CoverageGrid:
    """Uniform closed lattice over ``region`` (edges included).

    Steering vectors are attached when the corresponding origin and array
    geometry are given.
    """
    n_x, n_y = (int(c) for c in counts)
    if region.extent_x < 0 or region.extent_y < 0:
        raise GeometryError("negative region extent")
    xs = _axis(region.center[0], region.extent_x, n_x)
    ys = _axis(region.center[1], region.extent_y, n_y)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(region.height))])
    spacing = (
        region.extent_x / (n_x - 1) if n_x > 1 else 0.0,
        region.extent_y / (n_y - 1) if n_y > 1 else 0.0,
    )
    grid = CoverageGrid(positions=pos, shape=(n_x, n_y), spacing=spacing)
    if tx_origin is not None and tx_array is not None:
        grid.tx_steering = steering_many(tx_origin, pos, tx_array)
    if rx_origin is not None and rx_array is not None:
        grid.rx_steering = steering_many(rx_origin, pos, rx_array)
    return grid


def points_grid(
    points,
    *,
    tx_origin=None,
    rx_origin=None,
    tx_array: Optional[ArrayGeometry] = None,
    rx_array: Optional[ArrayGeometry] = None,
) -> CoverageGrid:
    """Grid made of arbitrary sensing points (rows of ``points``)."""
    pos = np.atleast_2d(np.asarray(points, dtype=float))
    if pos.shape[1] != 3 or len(pos) == 0:
        raise GeometryError("points must be a non-empty (L, 3) array")
    grid = CoverageGrid(positions=pos, shape=(len(pos), 1))
    if tx_origin is not None and tx_array is not None:
        grid.tx_steering = steering_many(tx_origin, pos, tx_array)
    if rx_origin is not None and rx_array is not None:
        grid.rx_steering = steering_many(rx_origin, pos, rx_array)
    return grid
