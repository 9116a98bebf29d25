"""Physical scenario: BS placement, arrays, budgets, link constants, users."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np

from .geometry import (
    ArrayGeometry,
    CoverageGrid,
    DirectionAngles,
    Position,
    RectRegion,
    build_coverage_grid,
    points_grid,
    position_from_angles,
)

__all__ = ["ScenarioError", "UserPlacement", "Scenario", "db2lin", "lin2db", "dbm2watt"]


class ScenarioError(ValueError):
    """A scenario parameter violates its invariants."""


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm2watt(x):
    return db2lin(x) * 1e-3


@dataclass(frozen=True)
class UserPlacement:
    """UE direction and range as seen from BS-1, plus its SINR target (linear)."""

    angles: DirectionAngles
    distance: float
    sinr_target: float

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg, distance, sinr_db) -> "UserPlacement":
        return cls(DirectionAngles.from_degrees(theta_deg, phi_deg), float(distance), float(db2lin(sinr_db)))


def _default_users() -> List[UserPlacement]:
    return [
        UserPlacement.from_degrees(135.0, 30.0, 30.0, 20.0),
        UserPlacement.from_degrees(135.0, 150.0, 30.0, 20.0),
    ]


@dataclass(frozen=True)
class Scenario:
    """All constants of the bi-static setup.

    ``bs_distance`` is an assumed value; 100 m places BS-2 beyond the
    default region on the +y axis.  Both BSs sit at ``(0, 0, H)`` and
    ``(0, D, H)``.
    """

    bs_height: float = 10.0
    bs_distance: float = 100.0
    tx_array: ArrayGeometry = ArrayGeometry(8, 8, 0.5)
    rx_array: ArrayGeometry = ArrayGeometry(8, 8, 0.5)
    tx_power: float = 0.1  # W, 20 dBm
    noise_power: float = 1e-12  # W at the UEs, -90 dBm
    sensing_noise_power: float = 1e-12  # W at BS-2
    bandwidth: float = 100e6
    cpi: float = 1e-3
    beta0: float = 1e-4  # -40 dB at 1 m
    alpha: complex = 1.0 + 0.0j
    rician_factor: float = 10.0
    users: Tuple[UserPlacement, ...] = field(default_factory=lambda: tuple(_default_users()))
    region: RectRegion = RectRegion()
    grid_counts: Tuple[int, int] = (50, 50)
    channel_seed: int = 2023

    def __post_init__(self):
        errors = self.validation_errors()
        if errors:
            raise ScenarioError("; ".join(errors))

    def validation_errors(self) -> List[str]:
        errs = []
        if not self.tx_power > 0:
            errs.append("tx_power must be > 0")
        if not self.noise_power > 0:
            errs.append("noise_power must be > 0")
        if not self.sensing_noise_power > 0:
            errs.append("sensing_noise_power must be > 0")
        if not self.k_cpi >= 1:
            errs.append("bandwidth * cpi must be >= 1")
        if not self.beta0 > 0:
            errs.append("beta0 must be > 0")
        if not self.rician_factor >= 0:
            errs.append("rician_factor must be >= 0")
        for k, u in enumerate(self.users):
            if not u.sinr_target > 0:
                errs.append(f"users[{k}].sinr_target must be > 0")
            if not u.distance >= 1.0:
                errs.append(f"users[{k}].distance must be >= 1 m")
        if len(self.users) > self.tx_array.size:
            errs.append("more users than transmit antennas")
        if any(int(c) < 1 for c in self.grid_counts):
            errs.append("grid_counts must be >= 1")
        return errs

    def replace(self, **kw) -> "Scenario":
        return replace(self, **kw)

    @property
    def k_cpi(self) -> float:
        """Time-bandwidth product B * T_p."""
        return self.bandwidth * self.cpi

    @property
    def noise_psd(self) -> float:
        return self.sensing_noise_power / self.bandwidth

    @property
    def bs1(self) -> Position:
        return Position(0.0, 0.0, self.bs_height)

    @property
    def bs2(self) -> Position:
        return Position(0.0, self.bs_distance, self.bs_height)

    @property
    def m_t(self) -> int:
        return self.tx_array.size

    @property
    def m_r(self) -> int:
        return self.rx_array.size

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def sinr_targets(self) -> np.ndarray:
        return np.array([u.sinr_target for u in self.users], dtype=float)

    @property
    def snr_constant(self) -> float:
        """K_CPI beta0^2 |alpha|^2 / sigma^2: factor between reduced and true sensing SNR."""
        return self.k_cpi * self.beta0**2 * abs(self.alpha) ** 2 / self.sensing_noise_power

    def user_positions(self) -> List[Position]:
        return [position_from_angles(self.bs1, u.angles, u.distance) for u in self.users]

    def coverage_grid(self, counts: Sequence[int] | None = None) -> CoverageGrid:
        """Grid over the region with steering vectors and eta weights attached."""
        from .metrics import eta_weights

        grid = build_coverage_grid(
            self.region,
            self.grid_counts if counts is None else counts,
            tx_origin=self.bs1,
            rx_origin=self.bs2,
            tx_array=self.tx_array,
            rx_array=self.rx_array,
        )
        eta_weights(grid, self)
        return grid

    def points_grid(self, points) -> CoverageGrid:
        """Grid of arbitrary points (rows ``[x, y, z]``) with steering and eta attached."""
        from .metrics import eta_weights

        grid = points_grid(points, tx_origin=self.bs1, rx_origin=self.bs2,
                           tx_array=self.tx_array, rx_array=self.rx_array)
        eta_weights(grid, self)
        return grid
