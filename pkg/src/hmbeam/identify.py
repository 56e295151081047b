"""Soft-decision demultiplexing and multi-round voting.

The power trace of one user is sorted in descending order.  Iteration i takes
the i-th block of L slots, lets every still-unassigned RIS vote on its own
beams in those slots, and gives the block to the RIS whose best direction
collected the most votes.

Ties are broken deterministically: equal powers by slot index, equal vote
counts by direction index, equal winning counts by RIS index (smallest first).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .array_model import ScenarioConfig
from .codebook import MultiArmBeamSet
from .errors import InconsistentBeamSets, InsufficientSlots
from .protocol import PowerTrace

UNRESOLVED = -1


@dataclass(frozen=True, eq=False)
class VoteTally:
    counts: np.ndarray
    winner: int
    winner_votes: int


@dataclass(frozen=True, eq=False)
class IdentificationResult:
    """Per-RIS direction estimates for one user (``UNRESOLVED`` if not reached)."""

    gamma_hat: np.ndarray  # (I,)
    ranking: list[int]
    iterations: int

    @property
    def resolved(self) -> np.ndarray:
        return self.gamma_hat != UNRESOLVED

    def rank_of(self, ris: int) -> int:
        return self.ranking.index(ris) if ris in self.ranking else UNRESOLVED

    def __eq__(self, other):
        if not isinstance(other, IdentificationResult):
            return NotImplemented
        return (np.array_equal(self.gamma_hat, other.gamma_hat)
                and self.ranking == other.ranking and self.iterations == other.iterations)


def vote(beams: np.ndarray, n_directions: int) -> VoteTally:
    """Tally one vote per member direction of each beam in ``beams`` (shape (L, R))."""
    counts = np.bincount(np.asarray(beams).ravel(), minlength=n_directions)
    winner = int(np.argmax(counts))
    return VoteTally(counts, winner, int(counts[winner]))


def stop_threshold_default(cfg: ScenarioConfig) -> float:
    return float(cfg.noise_power)


def _check_beam_sets(beam_sets: Sequence[MultiArmBeamSet], q_len: int, rounds: int):
    if not beam_sets:
        raise InconsistentBeamSets("no beam sets given")
    shapes = {bs.dirs.shape[:2] for bs in beam_sets}
    sizes = {bs.n_directions for bs in beam_sets}
    if len(shapes) != 1 or len(sizes) != 1:
        raise InconsistentBeamSets("beam sets disagree on (L, B) or grid size")
    (L, B), = shapes
    if L != rounds:
        raise InconsistentBeamSets(f"beam sets have {L} rounds, expected {rounds}")
    if L * B != q_len:
        raise InconsistentBeamSets(f"trace has {q_len} slots, beam sets need {L * B}")


def demultiplex_and_vote(trace: PowerTrace | np.ndarray, beam_sets: Sequence[MultiArmBeamSet],
                         rounds: int, threshold: float | None = None,
                         ris_count: int | None = None) -> IdentificationResult:
    """Recover each RIS's aligned direction from one user's power trace.

    The loop runs at most ``ris_count`` times (default: number of beam sets)
    and, when ``threshold`` is given, stops as soon as the weakest power of the
    next slot block is <= ``threshold``.
    """
    powers = trace.powers if isinstance(trace, PowerTrace) else np.asarray(trace, dtype=float)
    _check_beam_sets(beam_sets, len(powers), rounds)
    n_ris = len(beam_sets)
    limit = n_ris if ris_count is None else min(ris_count, n_ris)
    if threshold is None and limit * rounds > len(powers):
        raise InsufficientSlots(f"{limit} RISs x {rounds} rounds exceed {len(powers)} slots")
    order = np.argsort(-powers, kind="stable")
    slot_dirs = [bs.slot_dirs() for bs in beam_sets]
    n_dir = beam_sets[0].n_directions

    gamma_hat = np.full(n_ris, UNRESOLVED, dtype=np.int64)
    ranking: list[int] = []
    i = 0
    while i < limit:
        end = (i + 1) * rounds
        if end > len(powers):
            raise InsufficientSlots(f"slot block {i + 1} needs {end} slots, have {len(powers)}")
        if threshold is not None and powers[order[end - 1]] <= threshold:
            break
        block = order[i * rounds:end]
        best_ris, best = -1, None
        for j in range(n_ris):
            if gamma_hat[j] != UNRESOLVED:
                continue
            tally = vote(slot_dirs[j][block], n_dir)
            if best is None or tally.winner_votes > best.winner_votes:
                best_ris, best = j, tally
        gamma_hat[best_ris] = best.winner
        ranking.append(best_ris)
        i += 1
    return IdentificationResult(gamma_hat, ranking, i)
