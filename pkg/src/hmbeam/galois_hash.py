"""Prime-field polynomial hashing and balanced direction partitions.

A hash is a random polynomial of degree k-1 over GF(p),

    h(x) = a_0 + a_1 x + ... + a_{k-1} x^{k-1}  (mod p),

reduced to one of B bins by ``mod B``.  Drawing the coefficients uniformly,
with a_1..a_{k-1} not all zero, gives a family of p**k - p functions whose
values on any k distinct keys are jointly uniform (up to the removed constant
polynomials).

Keys are beam-direction indices in [0, N).  N is usually not prime, so the
field is GF(p) with p the smallest prime >= N and keys are restricted to
[0, N).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import IndivisibleGrid, KeyOutOfRange, NotPrime

MAX_MODULUS = 1 << 31


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def smallest_prime_at_least(n: int) -> int:
    p = max(2, n)
    while not is_prime(p):
        p += 1
    return p


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if self.p < 2 or not is_prime(self.p):
            raise NotPrime(f"{self.p} is not prime")
        if self.p > MAX_MODULUS:
            raise ValueError(f"modulus {self.p} exceeds 2^31")

    def reduce(self, x: int) -> int:
        return x % self.p


def field_new(p: int) -> PrimeField:
    return PrimeField(int(p))


@dataclass(frozen=True)
class PolyHash:
    """Polynomial ``sum a_i x^i mod p`` followed by ``mod bins``."""

    field: PrimeField
    coeffs: tuple[int, ...]
    bins: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if len(self.coeffs) < 2:
            raise ValueError("a polynomial hash needs k >= 2 coefficients")
        if any(c < 0 or c >= self.field.p for c in self.coeffs):
            raise ValueError(f"coefficients must lie in [0, {self.field.p})")
        if not any(self.coeffs[1:]):
            raise ValueError("a_1..a_{k-1} must not all be zero")
        if self.bins < 1:
            raise ValueError("bins must be positive")

    @property
    def k(self) -> int:
        return len(self.coeffs)

    def values(self, keys: np.ndarray) -> np.ndarray:
        """Vectorized Horner evaluation; int64 is safe because p <= 2^31."""
        keys = np.asarray(keys, dtype=np.int64)
        if keys.size and (keys.min() < 0 or keys.max() >= self.field.p):
            raise KeyOutOfRange(f"keys must lie in [0, {self.field.p})")
        p = self.field.p
        acc = np.full(keys.shape, self.coeffs[-1], dtype=np.int64)
        for a in reversed(self.coeffs[:-1]):
            acc = (acc * keys + a) % p
        return acc

    def to_dict(self) -> dict:
        return {"p": self.field.p, "k": self.k, "B": self.bins, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class HashFamilySpec:
    field: PrimeField
    k: int
    bins: int
    key_count: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("independence order k must be >= 2")
        if not 1 <= self.key_count <= self.field.p:
            raise ValueError(f"key_count must lie in [1, {self.field.p}]")
        if not 1 <= self.bins <= self.key_count:
            raise ValueError("bins must lie in [1, key_count]")
        if self.key_count % self.bins:
            raise IndivisibleGrid(f"B={self.bins} does not divide N={self.key_count}")

    @classmethod
    def for_grid(cls, n_keys: int, bins: int, k: int = 4) -> "HashFamilySpec":
        return cls(PrimeField(smallest_prime_at_least(n_keys)), k, bins, n_keys)


def poly_eval(h: PolyHash, x: int) -> int:
    if not 0 <= x < h.field.p:
        raise KeyOutOfRange(f"key {x} outside [0, {h.field.p})")
    acc = 0
    for a in reversed(h.coeffs):
        acc = (acc * x + a) % h.field.p
    return acc


def hash_bin(h: PolyHash, x: int) -> int:
    return poly_eval(h, x) % h.bins


def sample_hash(spec: HashFamilySpec, rng: np.random.Generator) -> PolyHash:
    """Draw uniformly from the family, rejecting the constant polynomials."""
    p = spec.field.p
    while True:
        coeffs = rng.integers(0, p, size=spec.k)
        if coeffs[1:].any():
            return PolyHash(spec.field, tuple(int(c) for c in coeffs), spec.bins)


def enumerate_family(field: PrimeField, k: int, bins: int) -> Iterator[PolyHash]:
    """Every valid hash of the family, in lexicographic coefficient order."""
    for coeffs in itertools.product(range(field.p), repeat=k):
        if any(coeffs[1:]):
            yield PolyHash(field, coeffs, bins)


def balanced_partition(h: PolyHash, n: int, bins: int) -> list[np.ndarray]:
    """Split keys 0..n-1 into ``bins`` sets of exactly n/bins keys each.

    Keys are ranked by (hash bin, polynomial value, key) and the ranking is cut
    into consecutive chunks, so bins of a well-balanced hash come out unchanged
    and overfull bins spill into their neighbours.  Each returned set is sorted
    ascending.
    """
    if bins < 1 or n % bins:
        raise IndivisibleGrid(f"B={bins} does not divide N={n}")
    if n > h.field.p:
        raise KeyOutOfRange(f"N={n} exceeds field size {h.field.p}")
    keys = np.arange(n, dtype=np.int64)
    vals = h.values(keys)
    order = np.lexsort((keys, vals, vals % bins))
    return [np.sort(chunk) for chunk in order.reshape(bins, n // bins)]


def partition_matrix(h: PolyHash, n: int, bins: int) -> np.ndarray:
    """``balanced_partition`` stacked into a (bins, n/bins) integer array."""
    return np.stack(balanced_partition(h, n, bins))


def coeffs_from_text(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def hash_to_text(h: PolyHash) -> str:
    return ",".join(str(c) for c in h.coeffs)


def sample_coefficients(spec: HashFamilySpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, k) coefficient rows drawn like ``sample_hash``, vectorized."""
    out = np.empty((count, spec.k), dtype=np.int64)
    filled = 0
    while filled < count:
        draw = rng.integers(0, spec.field.p, size=(count - filled, spec.k))
        keep = draw[draw[:, 1:].any(axis=1)]
        out[filled:filled + len(keep)] = keep
        filled += len(keep)
    return out


def batch_partition(coeffs: np.ndarray, p: int, n: int, bins: int) -> np.ndarray:
    """``balanced_partition`` for many coefficient rows at once, shape (H, bins, n/bins)."""
    if bins < 1 or n % bins:
        raise IndivisibleGrid(f"B={bins} does not divide N={n}")
    coeffs = np.asarray(coeffs, dtype=np.int64)
    keys = np.arange(n, dtype=np.int64)
    vals = np.broadcast_to(coeffs[:, -1:], (len(coeffs), n)).copy()
    for j in range(coeffs.shape[1] - 2, -1, -1):
        vals = (vals * keys + coeffs[:, j:j + 1]) % p
    order = np.lexsort((np.broadcast_to(keys, vals.shape), vals, vals % bins), axis=-1)
    return np.sort(order.reshape(len(coeffs), bins, n // bins), axis=-1)
