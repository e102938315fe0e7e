"""
Binary Block Service
Packed binary blocks and probability vectors over them.

Packing: bit i of the index is the symbol at time offset i (LSB = earliest),
so the string "0100" (x_0 x_1 x_2 x_3, left to right) has index 2. The
complement of block x is (2^m - 1) - x, i.e. the reversed probability array.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from app.utils.error_handler import DomainError

NEGATIVE_SLACK = 1e-14
SUM_SLACK = 1e-10

BitsLike = Union[str, Sequence[int], np.ndarray]


# ─── Packing ───────────────────────────────────────────────

@lru_cache(maxsize=32)
def _block_bits(m: int) -> np.ndarray:
    idx = np.arange(1 << m, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(m, dtype=np.int64)[None, :]) & 1).astype(np.uint8)
    bits.setflags(write=False)
    return bits


def block_bits(m: int) -> np.ndarray:
    """(2^m, m) array whose row x holds the bits of block x in time order."""
    return _block_bits(m)


def as_bits(x: BitsLike) -> np.ndarray:
    """Accept "0101", [0, 1, 0, 1] or an array; return a uint8 bit array."""
    if isinstance(x, str):
        if any(c not in "01" for c in x):
            raise DomainError(f"not a binary string: {x!r}")
        return np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(x, dtype=np.int64)
    if arr.ndim != 1 or np.any((arr != 0) & (arr != 1)):
        raise DomainError("block must be a one-dimensional sequence of bits")
    return arr.astype(np.uint8)


def pack(bits: BitsLike) -> int:
    b = as_bits(bits)
    return int(np.dot(b.astype(np.int64), 1 << np.arange(b.size, dtype=np.int64)))


def unpack(index: int, m: int) -> np.ndarray:
    return ((index >> np.arange(m)) & 1).astype(np.uint8)


def to_string(index: int, m: int) -> str:
    return "".join(str(b) for b in unpack(index, m))


def complement_index(index: int, m: int) -> int:
    return ((1 << m) - 1) ^ index


# ─── Distributions ─────────────────────────────────────────

@dataclass(frozen=True)
class BlockDistribution:
    """Probability vector over the 2^length binary blocks of a fixed length."""
    length: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).reshape(-1)
        if p.size != (1 << self.length):
            raise DomainError(f"expected {1 << self.length} probabilities, got {p.size}")
        if np.any(p < -NEGATIVE_SLACK) or not np.all(np.isfinite(p)):
            raise DomainError("probabilities must be finite and nonnegative",
                              {"min": float(np.min(p))})
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if abs(total - 1.0) > SUM_SLACK:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_probs(cls, probs: Iterable[float]) -> "BlockDistribution":
        p = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=np.float64)
        m = int(round(np.log2(p.size))) if p.size else -1
        if m < 0 or (1 << m) != p.size:
            raise DomainError(f"length {p.size} is not a power of two")
        return cls(m, p)

    @classmethod
    def uniform(cls, m: int) -> "BlockDistribution":
        return cls(m, np.full(1 << m, 1.0 / (1 << m)))

    @classmethod
    def point_mass(cls, m: int, block: Union[int, BitsLike]) -> "BlockDistribution":
        index = block if isinstance(block, (int, np.integer)) else pack(block)
        p = np.zeros(1 << m)
        p[int(index)] = 1.0
        return cls(m, p)

    def complement(self) -> "BlockDistribution":
        return BlockDistribution(self.length, self.probs[::-1])

    def marginal(self, start: int, width: int) -> "BlockDistribution":
        """Distribution of the symbols at offsets start .. start+width-1."""
        if start < 0 or width < 0 or start + width > self.length:
            raise DomainError(f"window [{start}, {start + width}) outside block of length {self.length}")
        hi = self.length - start - width
        cube = self.probs.reshape(1 << hi, 1 << width, 1 << start)
        return BlockDistribution(width, cube.sum(axis=(0, 2)))

    def support(self, threshold: float = 0.0):
        return [(to_string(int(i), self.length), float(self.probs[i]))
                for i in np.flatnonzero(self.probs > threshold)]
