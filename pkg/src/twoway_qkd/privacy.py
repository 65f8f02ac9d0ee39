"""Toeplitz-hash privacy amplification against an adversary who knows some key bits exactly.

Keys, seeds and hashes are uint8 bit arrays. Guessing probabilities are
computed by brute force over every raw key consistent with Eve's knowledge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_KEY_BITS = 24
MAX_UNKNOWN_BITS = 20


def _bits(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.int64).reshape(-1)
    if np.any((a != 0) & (a != 1)):
        raise ValueError(f"{name} must contain only 0/1 bits")
    return a.astype(np.uint8)


@dataclass(frozen=True)
class EveKnowledge:
    """Bit values Eve holds with certainty, by key position."""

    positions: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.positions) != len(self.values):
            raise ValueError("positions and values differ in length")
        if len(set(self.positions)) != len(self.positions):
            raise ValueError("known positions must be distinct")
        if any(v not in (0, 1) for v in self.values):
            raise ValueError("known values must be bits")

    @classmethod
    def from_key(cls, key: Sequence[int], positions: Sequence[int]) -> EveKnowledge:
        key = _bits(key, "key")
        positions = sorted(int(p) for p in positions)
        return cls(tuple(positions), tuple(int(key[p]) for p in positions))

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class PAReport:
    n: int
    f: float
    m: int
    trials: int
    mean_guess_prob: float
    residual_bits: float


def toeplitz_matrix(seed: Sequence[int], n: int, m: int) -> np.ndarray:
    """m x n matrix T[i][j] = seed[i - j + n - 1]."""
    seed = _bits(seed, "seed")
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    if seed.size != n + m - 1:
        raise ValueError(f"seed length must be n + m - 1 = {n + m - 1}, got {seed.size}")
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    return seed[i - j + n - 1] if m else np.zeros((0, n), dtype=np.uint8)


def toeplitz_hash(key: Sequence[int], seed: Sequence[int], m: int) -> np.ndarray:
    """Compress ``key`` to ``m`` bits over GF(2)."""
    key = _bits(key, "key")
    t = toeplitz_matrix(seed, key.size, m)
    return ((t.astype(np.int64) @ key.astype(np.int64)) % 2).astype(np.uint8)


def random_seed(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n + m - 1, dtype=np.uint8)


def eve_guess_probability(
    knowledge: EveKnowledge, true_key: Sequence[int], seed: Sequence[int], m: int
) -> float:
    """Eve's optimal probability of guessing the hashed key.

    Every completion of the unknown positions is equally likely to her;
    we hash each one and return the mass of the most frequent output.
    """
    key = _bits(true_key, "true_key")
    n = key.size
    if not 1 <= n <= MAX_KEY_BITS:
        raise ValueError(f"key length must be in [1, {MAX_KEY_BITS}], got {n}")
    if any(not 0 <= p < n for p in knowledge.positions):
        raise ValueError("known position outside the key")
    if any(key[p] != v for p, v in zip(knowledge.positions, knowledge.values)):
        raise ValueError("Eve's known values disagree with the true key")
    known = set(knowledge.positions)
    unknown = [j for j in range(n) if j not in known]
    u = len(unknown)
    if u > MAX_UNKNOWN_BITS:
        raise ValueError(f"{u} unknown bits exceed the enumeration bound of {MAX_UNKNOWN_BITS}")
    t = toeplitz_matrix(seed, n, m)
    if m == 0:
        return 1.0
    # Pack each column of T into an m-bit integer: hash(key) = XOR of columns where key_j = 1.
    weights = (1 << np.arange(m, dtype=np.int64))
    cols = (t.astype(np.int64) * weights[:, None]).sum(axis=0)
    base = 0
    for p, v in zip(knowledge.positions, knowledge.values):
        if v:
            base ^= int(cols[p])
    idx = np.arange(1 << u, dtype=np.int64)
    hashes = np.full(1 << u, base, dtype=np.int64)
    for b, j in enumerate(unknown):
        hashes ^= ((idx >> b) & 1) * cols[j]
    _, counts = np.unique(hashes, return_counts=True)
    return float(counts.max()) / float(1 << u)


def pa_experiment(
    n: int, f: float, m: int, trials: int, rng: np.random.Generator
) -> PAReport:
    """Average Eve's guessing probability over random keys, knowledge sets and seeds.

    Each position is known to Eve independently with probability f; the
    compression m is fixed in advance, as Alice and Bob only know f.
    """
    if not 1 <= n <= MAX_KEY_BITS:
        raise ValueError(f"n must be in [1, {MAX_KEY_BITS}], got {n}")
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}")
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must lie in [0, 1], got {f!r}")
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    total = 0.0
    for _ in range(trials):
        key = rng.integers(0, 2, size=n, dtype=np.uint8)
        positions = np.flatnonzero(rng.random(n) < f)
        seed = random_seed(n, m, rng)
        total += eve_guess_probability(EveKnowledge.from_key(key, positions), key, seed, m)
    mean = total / trials
    residual = -math.log2(mean) + 0.0  # no -0.0 when mean == 1
    return PAReport(n, f, m, trials, mean, residual)

