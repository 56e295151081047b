"""UPA geometry, spatial-frequency direction grids and channel draws.

Everything works in spatial-frequency coordinates (u, v) = (sin(phi)cos(theta),
sin(theta)); directions are never converted back to angles.  The element index
of a UPA is ``m_v * n_h + m_h`` (vertical progression Kronecker horizontal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange


@dataclass(frozen=True)
class UpaGeometry:
    n_h: int
    n_v: int
    d_h: float = 0.5
    d_v: float = 0.5

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("element counts must be >= 1")
        if self.d_h <= 0 or self.d_v <= 0:
            raise ValueError("element spacings must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v


@dataclass(frozen=True)
class AngleGrid:
    n1: int
    n2: int = 1

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid sizes must be >= 1")

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    def split(self, index: int) -> tuple[int, int]:
        return divmod(index, self.n2)


@dataclass(frozen=True)
class SpatialFrequency:
    u: float
    v: float

    def __post_init__(self):
        if abs(self.u) > 1 + 1e-12 or abs(self.v) > 1 + 1e-12:
            raise ValueError(f"spatial frequency ({self.u}, {self.v}) outside [-1, 1]^2")


def grid_frequency(grid: AngleGrid, index: int) -> SpatialFrequency:
    """Centre of the grid cell ``index = n1 * N2 + n2``."""
    if not 0 <= index < grid.size:
        raise IndexOutOfRange(f"direction {index} outside [0, {grid.size})")
    n1, n2 = grid.split(index)
    return SpatialFrequency((2 * n1 + 1) / grid.n1 - 1, (2 * n2 + 1) / grid.n2 - 1)


def grid_frequencies(grid: AngleGrid) -> tuple[np.ndarray, np.ndarray]:
    """(u, v) arrays of every cell centre, in direction-index order."""
    n1, n2 = np.divmod(np.arange(grid.size), grid.n2)
    return (2 * n1 + 1) / grid.n1 - 1, (2 * n2 + 1) / grid.n2 - 1


def angles_to_frequency(phi: float, theta: float) -> SpatialFrequency:
    return SpatialFrequency(math.sin(phi) * math.cos(theta), math.sin(theta))


def _phases(geom: UpaGeometry, u, v) -> np.ndarray:
    m_v, m_h = np.divmod(np.arange(geom.n_elements), geom.n_h)
    u = np.atleast_1d(np.asarray(u, dtype=float))[:, None]
    v = np.atleast_1d(np.asarray(v, dtype=float))[:, None]
    return 2 * np.pi * (geom.d_v * m_v * v + geom.d_h * m_h * u)


def steering_vector(geom: UpaGeometry, f: SpatialFrequency) -> np.ndarray:
    """Unit-modulus UPA response; entry (m_v, m_h) has phase 2pi(d_v m_v v + d_h m_h u)."""
    return np.exp(1j * _phases(geom, f.u, f.v))[0]


def steering_matrix(geom: UpaGeometry, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Steering vectors for many frequencies at once, one per row."""
    return np.exp(1j * _phases(geom, u, v))


@dataclass(frozen=True)
class CascadedLink:
    gain: complex
    direction: int

    def __post_init__(self):
        if abs(self.gain) <= 0:
            raise ValueError("cascaded gain must be non-zero")
        if self.direction < 0:
            raise ValueError("direction index must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    """One multi-RIS scenario.

    ``snr_db`` fixes the strongest link of every user:
    P * |g_strongest|^2 / noise_power = 10^(snr_db/10), measured before any
    beamforming gain.
    """

    ris_count: int
    user_count: int
    geometry: UpaGeometry
    grid: AngleGrid
    tx_power: float = 1.0
    noise_power: float = 1.0
    gain_gap_db: float = 3.0
    snr_db: float = 0.0

    def __post_init__(self):
        if self.ris_count < 1 or self.user_count < 1:
            raise ValueError("need at least one RIS and one user")
        if self.tx_power <= 0:
            raise ValueError("tx_power must be positive")
        if self.noise_power < 0:
            raise ValueError("noise_power must be non-negative")
        if self.gain_gap_db < 0:
            raise ValueError("gain_gap_db must be non-negative")

    @property
    def strongest_gain(self) -> float:
        """|g| of the strongest link; a zero noise power is treated as 1 here."""
        reference = self.noise_power if self.noise_power > 0 else 1.0
        return math.sqrt(10 ** (self.snr_db / 10) * reference / self.tx_power)


@dataclass(frozen=True)
class Channels:
    """Cascaded links for every (RIS i, user k).

    ``ranking[k]`` lists RIS indices from strongest to weakest for user k.
    """

    gains: np.ndarray  # (I, K) complex
    directions: np.ndarray  # (I, K) int
    ranking: np.ndarray  # (K, I) int

    @property
    def ris_count(self) -> int:
        return self.gains.shape[0]

    @property
    def user_count(self) -> int:
        return self.gains.shape[1]

    def link(self, i: int, k: int) -> CascadedLink:
        return CascadedLink(complex(self.gains[i, k]), int(self.directions[i, k]))

    def scaled(self, factor: float) -> "Channels":
        return Channels(self.gains * factor, self.directions, self.ranking)


def gain_ladder(ris_count: int, gap_db: float) -> np.ndarray:
    """Relative link magnitudes 1, 10^(-gap/20), 10^(-2 gap/20), ..."""
    return 10 ** (-gap_db * np.arange(ris_count) / 20)


def draw_channels(cfg: ScenarioConfig, rng: np.random.Generator) -> Channels:
    """On-grid directions, uniform phases and a per-user random strength order.

    The strongest link of each user has magnitude ``cfg.strongest_gain`` and
    successive links drop by exactly ``gain_gap_db``.
    """
    I, K, N = cfg.ris_count, cfg.user_count, cfg.grid.size
    directions = rng.integers(0, N, size=(I, K))
    ranking = np.stack([rng.permutation(I) for _ in range(K)])
    phases = rng.uniform(0, 2 * np.pi, size=(I, K))
    ladder = gain_ladder(I, cfg.gain_gap_db) * cfg.strongest_gain
    mags = np.empty((I, K))
    for k in range(K):
        mags[ranking[k], k] = ladder
    return Channels(mags * np.exp(1j * phases), directions, ranking)
