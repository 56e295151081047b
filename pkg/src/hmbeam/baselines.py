"""Exhaustive and hierarchical beam training, with slot accounting.

Both baselines train the RISs one after another.  While RIS i sweeps, every
other RIS reflects through a fixed, uniformly random phase configuration that
is redrawn for each training turn.  Users are separated ideally at the BS, so
all users are trained by the same sweep.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .array_model import AngleGrid, Channels, ScenarioConfig, UpaGeometry
from .codebook import cached_hierarchical_codebook, cached_single_beam_codebook, is_power_of_two
from .errors import NotPowerOfTwo, UnknownMethod
from .protocol import complex_noise

METHODS = ("hmb", "exhaustive", "hierarchical")


@dataclass(frozen=True, eq=False)
class TrainingOutcome:
    method: str
    gamma_hat: np.ndarray  # (I, K)
    ranking: np.ndarray  # (K, I), RISs ordered by peak training power
    slots_used: int

    def correct(self, channels: Channels) -> np.ndarray:
        return self.gamma_hat == channels.directions


def overhead_model(method: str, n: int, ris_count: int, bins: int | None = None,
                   rounds: int | None = None) -> int:
    """Closed-form number of training slots."""
    if method == "hmb":
        if bins is None or rounds is None:
            raise ValueError("hmb overhead needs B and L")
        return rounds * bins
    if method == "exhaustive":
        return ris_count * n
    if method == "hierarchical":
        if not is_power_of_two(n):
            raise NotPowerOfTwo(f"N={n} is not a power of two")
        return ris_count * 2 * (n.bit_length() - 1)
    raise UnknownMethod(f"unknown method {method!r}; expected one of {METHODS}")


def default_rounds(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


@functools.lru_cache(maxsize=32)
def _single_gram(geom: UpaGeometry, grid: AngleGrid) -> np.ndarray:
    rows = cached_single_beam_codebook(geom, grid).rows
    return rows @ rows.conj().T  # [gamma, n] = <a_gamma, c_n>


@functools.lru_cache(maxsize=32)
def _layer_grams(geom: UpaGeometry, grid: AngleGrid) -> tuple[np.ndarray, ...]:
    rows = cached_single_beam_codebook(geom, grid).rows
    tree = cached_hierarchical_codebook(geom, grid)
    return tuple(rows @ layer.conj().T for layer in tree.layers)


def _interference(cfg: ScenarioConfig, channels: Channels, active: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Per-user leakage through the idle RISs' random configurations, shape (K,)."""
    rows = cached_single_beam_codebook(cfg.geometry, cfg.grid).rows
    total = np.zeros(channels.user_count, dtype=complex)
    for j in range(channels.ris_count):
        if j == active:
            continue
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, size=rows.shape[1]))
        total += channels.gains[j] * (rows[channels.directions[j]] @ theta.conj())
    return np.sqrt(cfg.tx_power) * total


def _rank(peaks: np.ndarray) -> np.ndarray:
    return np.argsort(-peaks, axis=0, kind="stable").T


def exhaustive_train(cfg: ScenarioConfig, channels: Channels,
                     rng: np.random.Generator) -> TrainingOutcome:
    gram = _single_gram(cfg.geometry, cfg.grid)
    I, K, N = channels.ris_count, channels.user_count, cfg.grid.size
    gamma_hat = np.empty((I, K), dtype=np.int64)
    peaks = np.empty((I, K))
    slots = 0
    for i in range(I):
        leak = _interference(cfg, channels, i, rng)
        clean = np.sqrt(cfg.tx_power) * channels.gains[i][:, None] * gram[channels.directions[i]]
        y = clean + leak[:, None] + np.sqrt(cfg.noise_power) * complex_noise(rng, (K, N))
        power = np.abs(y) ** 2
        gamma_hat[i] = power.argmax(axis=1)
        peaks[i] = power.max(axis=1)
        slots += N
    return TrainingOutcome("exhaustive", gamma_hat, _rank(peaks), slots)


def hierarchical_train(cfg: ScenarioConfig, channels: Channels,
                       rng: np.random.Generator) -> TrainingOutcome:
    """Binary descent keeping the stronger child at every layer, no backtracking."""
    n = cfg.grid.size
    if not is_power_of_two(n) or n < 2:
        raise NotPowerOfTwo(f"N={n} is not a power of two >= 2")
    grams = _layer_grams(cfg.geometry, cfg.grid)
    I, K = channels.ris_count, channels.user_count
    users = np.arange(K)
    gamma_hat = np.empty((I, K), dtype=np.int64)
    peaks = np.empty((I, K))
    slots = 0
    for i in range(I):
        leak = _interference(cfg, channels, i, rng)
        gain = np.sqrt(cfg.tx_power) * channels.gains[i]
        node = np.zeros(K, dtype=np.int64)
        for gram in grams:
            children = np.stack([2 * node, 2 * node + 1], axis=1)  # (K, 2)
            resp = gram[channels.directions[i][:, None], children]
            y = gain[:, None] * resp + leak[:, None] + np.sqrt(cfg.noise_power) * complex_noise(rng, (K, 2))
            power = np.abs(y) ** 2
            pick = power.argmax(axis=1)
            node = children[users, pick]
            peaks[i] = power[users, pick]
            slots += 2
        gamma_hat[i] = node
    return TrainingOutcome("hierarchical", gamma_hat, _rank(peaks), slots)
