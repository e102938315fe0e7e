"""
DID Channel Service
Exact finite-block channel law P(Y^n | X_0^n), channel sampling and the
structural checks (consistency, shift-stationarity, bit-symmetry).

Model: Y_i = X_{i - Z_i}, i = 1..n, with {Z_i} the stationary state chain.
Laws are computed by forward dynamic programming over (y-prefix, z); blocks
are packed LSB-earliest (see block_service).
"""
import itertools
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from app.config.solver import settings
from app.services.info.block_service import BitsLike, as_bits, block_bits
from app.services.state import state_chain_service as chain
from app.services.state.state_chain_service import Seed, StateDist
from app.utils import cache_service
from app.utils.console import log
from app.utils.error_handler import DomainError, EnumerationGuardError
from app.utils.validators import ChannelParams

NORMALIZATION_SLACK = 1e-12


# ─── Types ────────────────────────────────────────────────

@dataclass(frozen=True)
class ChannelLawTable:
    """probs[x, y] = P(Y^n = y | X_0^n = x) for packed x (n+1 bits) and y (n bits)."""
    n: int
    probs: np.ndarray

    def law(self, x: BitsLike) -> np.ndarray:
        bits = as_bits(x)
        if bits.size != self.n + 1:
            raise DomainError(f"input block has length {bits.size}, expected {self.n + 1}")
        return self.probs[int(np.dot(bits.astype(np.int64), 1 << np.arange(bits.size)))]


@dataclass(frozen=True)
class ChannelTraceSample:
    x: np.ndarray   # X_0..X_n
    z: np.ndarray   # Z_1..Z_n
    y: np.ndarray   # Y_1..Y_n

    def __post_init__(self):
        n = self.y.size
        if self.x.size != n + 1 or self.z.size != n:
            raise DomainError("trace lengths must be n+1 (x), n (z), n (y)")
        if not np.array_equal(self.y, self.x[np.arange(1, n + 1) - self.z]):
            raise DomainError("trace violates y_i = x_{i - z_i}")


# ─── Channel Law ──────────────────────────────────────────

def channel_law(params: ChannelParams, x: BitsLike) -> np.ndarray:
    """Distribution over the 2^n output blocks for one input block of length n+1."""
    bits = as_bits(x)
    n = bits.size - 1
    if n < 1:
        raise DomainError(f"input block must have length >= 2, got {bits.size}")
    pi = chain.stationary_distribution(params).as_array()
    M = chain.one_step_matrix(params).entries

    mass = pi[None, :]   # virtual Z_0, so Z_1 is stationary after one step
    for i in range(1, n + 1):
        moved = mass @ M.T
        width = moved.shape[0]
        nxt = np.zeros((2 * width, 2))
        for z in (0, 1):
            b = int(bits[i - z])
            nxt[b * width:(b + 1) * width, z] += moved[:, z]
        mass = nxt
    return mass.sum(axis=1)


def _forward_tables(params: ChannelParams, n: int, initial: np.ndarray) -> np.ndarray:
    """P(Y^n = y | X_0^n = x) for all x, y when Z_0 ~ initial."""
    M = chain.one_step_matrix(params).entries
    xb = block_bits(n + 1)
    num_x = xb.shape[0]

    mass = np.broadcast_to(initial[None, None, :], (num_x, 1, 2)).copy()
    for i in range(1, n + 1):
        moved = mass @ M.T
        width = moved.shape[1]
        nxt = np.zeros((num_x, 2 * width, 2))
        for z in (0, 1):
            for b in (0, 1):
                rows = xb[:, i - z] == b
                nxt[rows, b * width:(b + 1) * width, z] += moved[rows, :, z]
        mass = nxt
    return mass.sum(axis=2)


def _build_law_table(params: ChannelParams, n: int) -> ChannelLawTable:
    pi = chain.stationary_distribution(params).as_array()
    probs = _forward_tables(params, n, pi)
    probs.setflags(write=False)
    return ChannelLawTable(n, probs)


def conditional_law_table(params: ChannelParams, n: int, z0: int) -> np.ndarray:
    """P(Y^n = y | X_0^n = x, Z_0 = z0) for all x, y (rows x, columns y)."""
    if z0 not in (0, 1):
        raise DomainError(f"z0 must be 0 or 1, got {z0}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if n > settings.max_upper_L:
        raise EnumerationGuardError("conditional law n", n, settings.max_upper_L)
    return _forward_tables(params, n, np.eye(2)[z0])


def channel_law_table(params: ChannelParams, n: int) -> ChannelLawTable:
    """Full table for all 2^{n+1} inputs, by joint DP; cached per (params, n)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    limit = settings.max_enumeration_n + 1
    if n > limit:
        raise EnumerationGuardError("channel law n", n, limit)
    params.require_nondegenerate()
    return cache_service.law_table(params.p_i, params.p_d, n, lambda: _build_law_table(params, n))


def channel_law_bruteforce(params: ChannelParams, x: BitsLike) -> np.ndarray:
    """Oracle: sum the stationary path probability over all 2^n z-paths."""
    bits = as_bits(x)
    n = bits.size - 1
    if n < 1:
        raise DomainError(f"input block must have length >= 2, got {bits.size}")
    pi = chain.stationary_distribution(params).as_array()
    M = chain.one_step_matrix(params).entries
    out = np.zeros(1 << n)
    for path in itertools.product((0, 1), repeat=n):
        weight = pi[path[0]]
        for prev, cur in zip(path, path[1:]):
            weight *= M[cur, prev]
        y = sum(int(bits[i + 1 - z]) << i for i, z in enumerate(path))
        out[y] += weight
    return out


# ─── Sampling ─────────────────────────────────────────────

def sample_markov_input(alpha: float, n: int, seed: Seed = None) -> np.ndarray:
    """X_0..X_n from the stationary bit-symmetric Markov source with flip probability alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    rng = np.random.default_rng(seed)
    x0 = rng.integers(0, 2)
    flips = (rng.random(n) < alpha).astype(np.int64)
    return np.concatenate(([x0], (x0 + np.cumsum(flips)) % 2)).astype(np.uint8)


def sample_channel(params: ChannelParams, x: BitsLike, seed: Seed = None,
                   initial: Optional[StateDist] = None) -> ChannelTraceSample:
    bits = as_bits(x)
    n = bits.size - 1
    if n < 1:
        raise DomainError(f"input block must have length >= 2, got {bits.size}")
    z = chain.sample_state_path(params, n, seed, initial)
    y = bits[np.arange(1, n + 1) - z]
    return ChannelTraceSample(bits, z, y)


def sample_channel_markov(params: ChannelParams, alpha: float, n: int,
                          seed: Seed = None) -> ChannelTraceSample:
    """Markov(alpha) input through the channel; input and state use independent streams."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    x_seed, z_seed = seq.spawn(2)
    x = sample_markov_input(alpha, n, x_seed)
    return sample_channel(params, x, z_seed)


# ─── Structural Checks ────────────────────────────────────

def check_consistency(params: ChannelParams, n_max: int) -> Dict[str, Any]:
    """
    Summing P(y^{n+1} | x_0^{n+1}) over y_{n+1} must give P(y^n | x_0^n)
    for every n < n_max.
    """
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    worst = 0.0
    normalization = 0.0
    for n in range(1, n_max):
        small = channel_law_table(params, n).probs
        big = channel_law_table(params, n + 1).probs
        half = 1 << n
        summed = big[:, :half] + big[:, half:]
        truncated = small[np.arange(big.shape[0]) & ((1 << (n + 1)) - 1)]
        worst = max(worst, float(np.max(np.abs(summed - truncated))))
        normalization = max(normalization, float(np.max(np.abs(small.sum(axis=1) - 1.0))))
    log("Channel", f"consistency p_i={params.p_i} p_d={params.p_d} n<{n_max}: max violation {worst:.2e}")
    return {
        "check": "consistency",
        "n_max": n_max,
        "max_violation": worst,
        "max_normalization_error": normalization,
    }


def check_stationarity_and_bitsymmetry(params: ChannelParams, n_max: int, k_max: int) -> Dict[str, Any]:
    """
    Shift identity: P(Y_{k+1}^{n+k} = y | [x~, x]) = P(Y^n = y | x) for every
    prefix x~ of length k. Negation identity: P(y | x) = P(~y | ~x).
    """
    if n_max < 2 or k_max < 1:
        raise DomainError(f"need n_max >= 2 and k_max >= 1, got {n_max}, {k_max}")
    shift = 0.0
    negation = 0.0
    for n in range(1, n_max + 1):
        base = channel_law_table(params, n).probs
        negation = max(negation, float(np.max(np.abs(base[::-1, ::-1] - base))))
        for k in range(1, k_max + 1):
            long = channel_law_table(params, n + k).probs
            tail = long.reshape(long.shape[0], 1 << n, 1 << k).sum(axis=2)
            reference = base[np.arange(long.shape[0]) >> k]
            shift = max(shift, float(np.max(np.abs(tail - reference))))
    log("Channel", f"stationarity/bit-symmetry p_i={params.p_i} p_d={params.p_d}: "
                   f"shift {shift:.2e}, negation {negation:.2e}")
    return {
        "check": "stationarity_and_bitsymmetry",
        "n_max": n_max,
        "k_max": k_max,
        "shift_violation": shift,
        "bitsym_violation": negation,
    }
