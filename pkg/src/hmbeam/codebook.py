"""Single-beam, hashing multi-arm (HMB) and hierarchical codebooks.

Codewords are stored exactly as steering rows (e^{+j...} convention); the
conjugation of the matched filter lives in :func:`beam_gain`.  A multi-arm
codeword with R arms splits the array into R consecutive segments of
M = N_i / R elements, and segment r copies the same segment of the
single-beam row of the r-th arm direction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .array_model import AngleGrid, UpaGeometry, grid_frequencies, steering_matrix
from .errors import IndivisibleArray, IndivisibleGrid, LengthMismatch, NotPowerOfTwo
from .galois_hash import HashFamilySpec, PolyHash, partition_matrix, sample_hash


@dataclass(frozen=True, eq=False)
class SingleBeamCodebook:
    rows: np.ndarray  # (N, N_i)
    grid: AngleGrid
    geom: UpaGeometry

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @property
    def n_elements(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True, eq=False)
class MultiArmBeamSet:
    """Direction sets ``dirs[l, b]`` (R sorted indices) for L rounds of B beams."""

    dirs: np.ndarray  # (L, B, R) int
    hashes: tuple[PolyHash, ...]
    n_directions: int

    @property
    def rounds(self) -> int:
        return self.dirs.shape[0]

    @property
    def beams(self) -> int:
        return self.dirs.shape[1]

    @property
    def arms(self) -> int:
        return self.dirs.shape[2]

    @property
    def slots(self) -> int:
        return self.rounds * self.beams

    def slot_dirs(self) -> np.ndarray:
        """(Q, R) direction sets in slot order q = l*B + b."""
        return self.dirs.reshape(self.slots, self.arms)

    def membership(self) -> np.ndarray:
        """(Q, N) boolean table: slot beam contains direction."""
        table = np.zeros((self.slots, self.n_directions), dtype=bool)
        np.put_along_axis(table, self.slot_dirs(), True, axis=1)
        return table

    def beam_of(self, direction: int) -> np.ndarray:
        """Index of the beam containing ``direction`` in every round, shape (L,)."""
        hit = (self.dirs == direction).any(axis=2)
        return hit.argmax(axis=1)


@dataclass(frozen=True, eq=False)
class HmbCodebook:
    codewords: np.ndarray  # (L, B, N_i)
    beam_set: MultiArmBeamSet
    segment_len: int

    def slot_codewords(self) -> np.ndarray:
        L, B, n = self.codewords.shape
        return self.codewords.reshape(L * B, n)


@dataclass(frozen=True, eq=False)
class HierarchicalCodebook:
    """Layer t (1-based) holds 2^t codewords over contiguous direction blocks."""

    layers: tuple[np.ndarray, ...]  # layer t-1 -> (2^t, N_i)
    blocks: tuple[np.ndarray, ...]  # layer t-1 -> (2^t, N / 2^t) covered directions
    arms: tuple[np.ndarray, ...]  # layer t-1 -> (2^t, r_t) directions actually steered

    @property
    def depth(self) -> int:
        return len(self.layers)


def build_single_beam_codebook(geom: UpaGeometry, grid: AngleGrid) -> SingleBeamCodebook:
    u, v = grid_frequencies(grid)
    return SingleBeamCodebook(steering_matrix(geom, u, v), grid, geom)


@functools.lru_cache(maxsize=32)
def cached_single_beam_codebook(geom: UpaGeometry, grid: AngleGrid) -> SingleBeamCodebook:
    cb = build_single_beam_codebook(geom, grid)
    cb.rows.setflags(write=False)
    return cb


def dft_form_check(cb: SingleBeamCodebook) -> float:
    """Max deviation of ``cb`` from the conjugated 2D DFT closed form.

    The closed form builds row n as xi_v^(f_v m_v) (x) xi_h^(f_h m_h) with
    xi = exp(-j 2 pi d); steering rows are its complex conjugate.
    """
    geom = cb.geom
    u, v = grid_frequencies(cb.grid)
    log_xi_h = -2j * np.pi * geom.d_h
    log_xi_v = -2j * np.pi * geom.d_v
    m_h = np.arange(geom.n_h)
    m_v = np.arange(geom.n_v)
    worst = 0.0
    for n in range(cb.size):
        horiz = np.exp(log_xi_h * u[n] * m_h)
        vert = np.exp(log_xi_v * v[n] * m_v)
        closed = np.conj(np.kron(vert, horiz))
        worst = max(worst, float(np.max(np.abs(cb.rows[n] - closed), initial=0.0)))
    return worst


def build_multiarm_beams(grid: AngleGrid, bins: int, rounds: int, family: HashFamilySpec,
                         rng: np.random.Generator) -> MultiArmBeamSet:
    """Draw one hash per round and turn each into a balanced partition of the grid."""
    n = grid.size
    if bins < 1 or n % bins:
        raise IndivisibleGrid(f"B={bins} does not divide N={n}")
    if family.key_count != n or family.bins != bins:
        raise ValueError("hash family does not match the grid and beam count")
    if rounds < 1:
        raise ValueError("need at least one round")
    hashes = tuple(sample_hash(family, rng) for _ in range(rounds))
    dirs = np.stack([partition_matrix(h, n, bins) for h in hashes])
    return MultiArmBeamSet(dirs, hashes, n)


def _check_arms(n_elements: int, arms: int) -> int:
    if arms < 1 or n_elements % arms:
        raise IndivisibleArray(f"R={arms} does not divide N_i={n_elements}")
    return n_elements // arms


def build_hmb_codeword(cb: SingleBeamCodebook, dirs) -> np.ndarray:
    """Splice segment r of row ``dirs[r]`` into one multi-arm codeword."""
    dirs = np.asarray(dirs, dtype=np.int64)
    seg = _check_arms(cb.n_elements, len(dirs))
    return cb.rows.reshape(cb.size, len(dirs), seg)[dirs, np.arange(len(dirs))].reshape(-1)


def build_hmb_codebook(cb: SingleBeamCodebook, beams: MultiArmBeamSet) -> HmbCodebook:
    L, B, R = beams.dirs.shape
    seg = _check_arms(cb.n_elements, R)
    segmented = cb.rows.reshape(cb.size, R, seg)
    words = segmented[beams.dirs, np.arange(R)]  # (L, B, R, M)
    return HmbCodebook(words.reshape(L, B, cb.n_elements), beams, seg)


def beam_gain(s: np.ndarray, a: np.ndarray) -> float:
    """|sum_n a(n) conj(s(n))|."""
    if s.shape != a.shape:
        raise LengthMismatch(f"codeword length {s.shape} != steering length {a.shape}")
    return float(abs(np.vdot(s, a)))


def _decimate(block: np.ndarray, n_elements: int) -> np.ndarray:
    r = len(block)
    while n_elements % r:
        r -= 1
    if r == len(block):
        return block
    picks = np.round(np.linspace(0, len(block) - 1, r)).astype(np.int64)
    return block[picks]


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def build_hierarchical_codebook(geom: UpaGeometry, grid: AngleGrid) -> HierarchicalCodebook:
    """Bisection tree of wide beams built with the same segment splicing.

    A block whose size does not divide N_i is steered through an evenly
    spaced subset of its directions.
    """
    n = grid.size
    if not is_power_of_two(n) or n < 2:
        raise NotPowerOfTwo(f"N={n} is not a power of two >= 2")
    cb = cached_single_beam_codebook(geom, grid)
    layers, blocks, arms = [], [], []
    depth = n.bit_length() - 1
    for t in range(1, depth + 1):
        block_dirs = np.arange(n).reshape(2 ** t, n >> t)
        steered = [_decimate(b, cb.n_elements) for b in block_dirs]
        layers.append(np.stack([build_hmb_codeword(cb, s) for s in steered]))
        blocks.append(block_dirs)
        arms.append(np.stack(steered))
    return HierarchicalCodebook(tuple(layers), tuple(blocks), tuple(arms))


@functools.lru_cache(maxsize=32)
def cached_hierarchical_codebook(geom: UpaGeometry, grid: AngleGrid) -> HierarchicalCodebook:
    return build_hierarchical_codebook(geom, grid)
