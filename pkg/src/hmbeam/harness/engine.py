"""Per-trial simulation with reproducible random streams.

Every random draw of a trial comes from a stream keyed by
(seed, trial, purpose[, extra]), so results never depend on scheduling order
or thread count.  Channels, hashes and noise are shared across SNR points and
methods of the same trial (common random numbers), and one trial's noiseless
response is reused for every SNR by linear scaling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..array_model import Channels, ScenarioConfig, draw_channels
from ..baselines import exhaustive_train, hierarchical_train
from ..codebook import (HmbCodebook, MultiArmBeamSet, build_hmb_codebook, build_multiarm_beams,
                        cached_single_beam_codebook)
from ..galois_hash import HashFamilySpec
from ..identify import IdentificationResult, demultiplex_and_vote
from ..protocol import complex_noise, noiseless_samples
from .config import ExperimentConfig

_PURPOSES = {"channels": 1, "hash": 2, "noise": 3, "exhaustive": 4, "hierarchical": 5}

# counters accumulated per (method, B, snr)
LINK, STRONGEST, RANKING = 0, 1, 2
N_COUNTERS = 3


def stream(seed: int, trial: int, purpose: str, *extra: int) -> np.random.Generator:
    key = (int(trial), _PURPOSES[purpose], *(int(e) for e in extra))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def resolve_threads(threads: int | None) -> int:
    env = os.environ.get("HMB_THREADS")
    if env:
        threads = int(env)
    return max(1, threads or 1)


def snr_scale(snr_db: float) -> float:
    return 10 ** (snr_db / 20) if np.isfinite(snr_db) else 0.0


@dataclass(frozen=True, eq=False)
class HmbTrial:
    """Everything identification needs from one scanned HMB trial."""

    channels: Channels
    beam_sets: list[MultiArmBeamSet]
    clean: np.ndarray  # (K, Q) noiseless samples at 0 dB
    noise: np.ndarray  # (K, Q) unit complex noise

    def powers(self, scenario: ScenarioConfig, snr_db: float) -> np.ndarray:
        y = snr_scale(snr_db) * self.clean + np.sqrt(scenario.noise_power) * self.noise
        return np.abs(y) ** 2


def trial_channels(cfg: ExperimentConfig, trial: int) -> Channels:
    """Channels at 0 dB; scale by 10^(snr/20) for other SNR points."""
    return draw_channels(cfg.scenario(0.0), stream(cfg.seed, trial, "channels"))


def hmb_codebooks(cfg: ExperimentConfig, trial: int, bins: int,
                  rounds: int | None = None) -> list[HmbCodebook]:
    rounds = cfg.rounds if rounds is None else rounds
    family = HashFamilySpec.for_grid(cfg.n_directions, bins, cfg.k_wise)
    single = cached_single_beam_codebook(cfg.geometry, cfg.grid)
    books = []
    for i in range(cfg.I):
        beams = build_multiarm_beams(cfg.grid, bins, rounds, family,
                                     stream(cfg.seed, trial, "hash", i, bins, rounds))
        books.append(build_hmb_codebook(single, beams))
    return books


def scan_hmb(cfg: ExperimentConfig, trial: int, bins: int, rounds: int | None = None,
             channels: Channels | None = None) -> HmbTrial:
    channels = trial_channels(cfg, trial) if channels is None else channels
    books = hmb_codebooks(cfg, trial, bins, rounds)
    scenario = cfg.scenario(0.0)
    clean = noiseless_samples(scenario, channels, books)
    noise = complex_noise(stream(cfg.seed, trial, "noise", bins, books[0].beam_set.rounds),
                          clean.shape)
    return HmbTrial(channels, [b.beam_set for b in books], clean, noise)


def identify_all(powers: np.ndarray, beam_sets: Sequence[MultiArmBeamSet],
                 rounds: int) -> list[IdentificationResult]:
    return [demultiplex_and_vote(powers[k], beam_sets, rounds) for k in range(powers.shape[0])]


def score(channels: Channels, gamma_hat: np.ndarray, rankings: Sequence[Sequence[int]]) -> np.ndarray:
    """[link hits, strongest-link hits, exact rankings] for one trial."""
    hits = gamma_hat == channels.directions  # (I, K)
    users = np.arange(channels.user_count)
    strongest = hits[channels.ranking[:, 0], users]
    ranked = sum(list(r) == list(channels.ranking[k]) for k, r in enumerate(rankings))
    return np.array([hits.sum(), strongest.sum(), ranked], dtype=np.int64)


def run_trial(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    """Counters of shape (methods, len(B), len(snr), 3) for one trial.

    Baselines do not depend on B; their counters are repeated along that axis.
    """
    out = np.zeros((len(cfg.methods), len(cfg.B), len(cfg.snr_db), N_COUNTERS), dtype=np.int64)
    channels = trial_channels(cfg, trial)
    for mi, method in enumerate(cfg.methods):
        if method == "hmb":
            for bi, bins in enumerate(cfg.B):
                scanned = scan_hmb(cfg, trial, bins, channels=channels)
                for si, snr in enumerate(cfg.snr_db):
                    results = identify_all(scanned.powers(cfg.scenario(snr), snr),
                                           scanned.beam_sets, cfg.rounds)
                    gamma_hat = np.stack([r.gamma_hat for r in results], axis=1)
                    out[mi, bi, si] = score(channels, gamma_hat, [r.ranking for r in results])
            continue
        train = exhaustive_train if method == "exhaustive" else hierarchical_train
        for si, snr in enumerate(cfg.snr_db):
            outcome = train(cfg.scenario(snr), channels.scaled(snr_scale(snr)),
                            stream(cfg.seed, trial, method))
            out[mi, :, si] = score(channels, outcome.gamma_hat, outcome.ranking)
    return out


def run_trials(fn: Callable[[int], np.ndarray], trials: int, threads: int = 1) -> np.ndarray:
    """Sum ``fn(t)`` over trials; integer sums make the result order independent."""
    threads = resolve_threads(threads)
    if threads == 1 or trials == 1:
        return sum(fn(t) for t in range(trials))
    chunks = [range(start, trials, threads) for start in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda ts: sum(fn(t) for t in ts), chunks))
    return sum(parts)
