"""UE channel generation (Rician) and two-hop sensing link gains."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .geometry import DirectionAngles, GeometryError, Position, upa_steering

__all__ = [
    "ChannelError",
    "ChannelSet",
    "SensingLinkGains",
    "sensing_link_gains",
    "generate_rician_channels",
    "user_rng",
    "scenario_channels",
]


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class SensingLinkGains:
    beta_t: float
    beta_r: float


@dataclass(frozen=True)
class ChannelSet:
    """Per-UE channel vectors stacked as rows of ``h`` (shape ``(K, M_t)``)."""

    h: np.ndarray
    rician_factor: float
    seed: int

    def __len__(self) -> int:
        return self.h.shape[0]

    def __getitem__(self, k) -> np.ndarray:
        return self.h[k]

    @classmethod
    def from_vectors(cls, vectors, rician_factor=np.inf, seed=-1) -> "ChannelSet":
        h = np.atleast_2d(np.asarray(vectors, dtype=complex))
        return cls(h, rician_factor, seed)


def sensing_link_gains(q, scenario) -> SensingLinkGains:
    """Free-space power gains of the BS-1 -> q and q -> BS-2 hops."""
    q = Position.of(q)
    d_t = q.distance_to(scenario.bs1)
    d_r = q.distance_to(scenario.bs2)
    if d_t == 0.0 or d_r == 0.0:
        raise GeometryError("sensing point coincides with a base station")
    return SensingLinkGains(scenario.beta0 / d_t**2, scenario.beta0 / d_r**2)


def user_rng(seed: int, k: int) -> np.random.Generator:
    """PCG64 stream for UE ``k``; independent of how many UEs exist."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(k),))))


def generate_rician_channels(
    placements: Sequence[Tuple[DirectionAngles, float]], scenario, seed: int
) -> ChannelSet:
    """Rician channels toward UEs given as ``(angles, distance)`` from BS-1.

    ``h_k = sqrt(beta0 / d_k^2) (sqrt(G/(G+1)) b(q_k) + sqrt(1/(G+1)) g_k)``
    with ``b`` the BS-1 steering vector and ``g_k ~ CN(0, I)``.
    """
    m_t = scenario.tx_array.size
    if len(placements) < 1:
        raise ChannelError("at least one UE is required")
    if len(placements) > m_t:
        raise ChannelError(f"{len(placements)} UEs exceed {m_t} transmit antennas")
    g = float(scenario.rician_factor)
    if np.isinf(g):
        los, nlos = 1.0, 0.0
    else:
        los, nlos = np.sqrt(g / (g + 1.0)), np.sqrt(1.0 / (g + 1.0))
    rows = []
    for k, (angles, dist) in enumerate(placements):
        if dist < 1.0:
            raise ChannelError("UE range below the 1 m reference distance")
        rng = user_rng(seed, k)
        scatter = (rng.standard_normal(m_t) + 1j * rng.standard_normal(m_t)) / np.sqrt(2.0)
        b = upa_steering(angles, scenario.tx_array)
        rows.append(np.sqrt(scenario.beta0) / dist * (los * b + nlos * scatter))
    return ChannelSet(np.array(rows), g, int(seed))


def scenario_channels(scenario, seed: int | None = None) -> ChannelSet:
    placements = [(u.angles, u.distance) for u in scenario.users]
    return generate_rician_channels(placements, scenario, scenario.channel_seed if seed is None else seed)
