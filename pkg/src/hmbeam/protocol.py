"""Scanning phase: every RIS sweeps its HMB codewords while all users transmit.

The BS side (RIS-to-BS steering and BS combining) is taken as pre-compensated,
so the contribution of RIS i to user k in slot q is
sqrt(P) * g_ik * <a(gamma_ik), s_q^i>.  Users are separated ideally, each
(user, slot) pair receiving its own complex Gaussian noise draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .array_model import Channels, ScenarioConfig
from .codebook import HmbCodebook, MultiArmBeamSet, cached_single_beam_codebook
from .errors import ConfigMismatch
from .galois_hash import HashFamilySpec, batch_partition, sample_coefficients


@dataclass(frozen=True)
class SlotSchedule:
    rounds: int
    beams: int

    @property
    def total_slots(self) -> int:
        return self.rounds * self.beams

    def slot(self, round_: int, beam: int) -> int:
        if not (0 <= round_ < self.rounds and 0 <= beam < self.beams):
            raise IndexError(f"(round {round_}, beam {beam}) outside schedule")
        return round_ * self.beams + beam

    def round_beam(self, q: int) -> tuple[int, int]:
        if not 0 <= q < self.total_slots:
            raise IndexError(f"slot {q} outside [0, {self.total_slots})")
        return divmod(q, self.beams)


@dataclass(frozen=True, eq=False)
class PowerTrace:
    user: int
    powers: np.ndarray  # (Q,)

    def __post_init__(self):
        p = self.powers
        if p.ndim != 1 or not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("power trace must be a finite non-negative vector")


@dataclass(frozen=True, eq=False)
class AlignmentRecord:
    """``seen[i, k, q]`` is 1 iff RIS i's slot-q beam contains user k's direction."""

    seen: np.ndarray  # (I, K, Q) bool

    def counts(self) -> np.ndarray:
        return self.seen.sum(axis=2)


@dataclass(frozen=True, eq=False)
class ScanResult:
    traces: list[PowerTrace]
    alignment: AlignmentRecord
    schedule: SlotSchedule


def alignment_indicator(beams: MultiArmBeamSet, gamma: int, q: int) -> int:
    round_, beam = divmod(q, beams.beams)
    return int(gamma in beams.dirs[round_, beam])


def alignment_record(channels: Channels, beam_sets: Sequence[MultiArmBeamSet]) -> AlignmentRecord:
    seen = np.stack([bs.membership()[:, channels.directions[i]].T
                     for i, bs in enumerate(beam_sets)])
    return AlignmentRecord(seen)


def check_codebooks(codebooks: Sequence[HmbCodebook]) -> SlotSchedule:
    shapes = {cb.beam_set.dirs.shape[:2] for cb in codebooks}
    if len(shapes) != 1:
        raise ConfigMismatch(f"RIS codebooks disagree on (L, B): {sorted(shapes)}")
    (L, B), = shapes
    return SlotSchedule(L, B)


def noiseless_samples(cfg: ScenarioConfig, channels: Channels,
                      codebooks: Sequence[HmbCodebook]) -> np.ndarray:
    """Superimposed received amplitudes before noise, shape (K, Q)."""
    check_codebooks(codebooks)
    if len(codebooks) != channels.ris_count:
        raise ConfigMismatch(f"{len(codebooks)} codebooks for {channels.ris_count} RISs")
    rows = cached_single_beam_codebook(cfg.geometry, cfg.grid).rows
    total = 0
    for i, cb in enumerate(codebooks):
        a = rows[channels.directions[i]]  # (K, N_i)
        total = total + channels.gains[i][:, None] * (a @ cb.slot_codewords().conj().T)
    return np.sqrt(cfg.tx_power) * total


def complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def run_scanning(cfg: ScenarioConfig, channels: Channels, codebooks: Sequence[HmbCodebook],
                 rng: np.random.Generator) -> ScanResult:
    schedule = check_codebooks(codebooks)
    clean = noiseless_samples(cfg, channels, codebooks)
    noisy = clean + np.sqrt(cfg.noise_power) * complex_noise(rng, clean.shape)
    powers = np.abs(noisy) ** 2
    traces = [PowerTrace(k, powers[k]) for k in range(channels.user_count)]
    alignment = alignment_record(channels, [cb.beam_set for cb in codebooks])
    return ScanResult(traces, alignment, schedule)


def joint_alignment_rate(n: int, bins: int, rounds: int, draws: int, rng: np.random.Generator,
                         k: int = 4) -> tuple[float, int]:
    """Fraction of slots in which two independently hashed RISs both align.

    Each draw fixes a random direction per RIS and fresh hashes for
    ``rounds`` rounds; every slot of every draw is one sample.  Returns
    (rate, samples).
    """
    spec = HashFamilySpec.for_grid(n, bins, k)
    aligned = []
    for _ in range(2):
        parts = batch_partition(sample_coefficients(spec, rng, draws * rounds), spec.field.p, n, bins)
        gamma = np.repeat(rng.integers(0, n, size=draws), rounds)
        aligned.append((parts == gamma[:, None, None]).any(axis=2))  # (draws*rounds, B)
    samples = draws * rounds * bins
    return int((aligned[0] & aligned[1]).sum()) / samples, samples
