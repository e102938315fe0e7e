"""
State Chain Service
The binary Markov state {Z_i} driving the DID channel.

Z_i = 1 means the write head lags one bit behind (an insertion happened and
the matching deletion has not). Transition matrix, column-stochastic:

    M = [[1 - p_i, p_d],
         [p_i,     1 - p_d]]        M[a, b] = P(Z_n = a | Z_{n-1} = b)
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from app.services.info.entropy_service import binary_entropy, binary_entropy_small
from app.utils.error_handler import DomainError
from app.utils.validators import ChannelParams

STOCHASTIC_SLACK = 1e-12

Seed = Union[None, int, np.random.SeedSequence, np.random.Generator]


# ─── Types ────────────────────────────────────────────────

@dataclass(frozen=True)
class StateDist:
    p0: float
    p1: float

    def __post_init__(self):
        if abs(self.p0 + self.p1 - 1.0) > STOCHASTIC_SLACK or min(self.p0, self.p1) < 0.0:
            raise DomainError(f"invalid state distribution ({self.p0}, {self.p1})")

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1])


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if e.shape != (2, 2):
            raise DomainError("transition matrix must be 2x2")
        if np.any(e < -STOCHASTIC_SLACK) or np.any(e > 1.0 + STOCHASTIC_SLACK):
            raise DomainError("transition probabilities outside [0, 1]")
        if np.any(np.abs(e.sum(axis=0) - 1.0) > STOCHASTIC_SLACK):
            raise DomainError("transition matrix columns must sum to 1")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def __getitem__(self, item):
        return self.entries[item]


# ─── Closed Forms ─────────────────────────────────────────

def one_step_matrix(params: ChannelParams) -> TransitionMatrix:
    p_i, p_d = params.p_i, params.p_d
    return TransitionMatrix(np.array([[1.0 - p_i, p_d], [p_i, 1.0 - p_d]]))


def stationary_distribution(params: ChannelParams) -> StateDist:
    params.require_nondegenerate()
    s = params.total
    return StateDist(params.p_d / s, params.p_i / s)


def _decay_complement(params: ChannelParams, k):
    """1 - (1 - p_i - p_d)^k, accurate when p_i + p_d is small."""
    s = params.total
    k = np.asarray(k, dtype=np.float64)
    if s < 1.0:
        return -np.expm1(k * np.log1p(-s))
    return 1.0 - np.power(1.0 - s, k)


def k_step_matrix(params: ChannelParams, k: int) -> TransitionMatrix:
    """M^k in closed form via powers of 1 - p_i - p_d."""
    params.require_nondegenerate()
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    s = params.total
    g = float(_decay_complement(params, k))
    moved_up = params.p_i * g / s      # P(Z_n = 1 | Z_{n-k} = 0)
    moved_down = params.p_d * g / s    # P(Z_n = 0 | Z_{n-k} = 1)
    return TransitionMatrix(np.array([[1.0 - moved_up, moved_down], [moved_up, 1.0 - moved_down]]))


def cond_state_entropy_array(params: ChannelParams, ks: np.ndarray) -> np.ndarray:
    """H(Z_n | Z_{n-k}) for an array of k values."""
    params.require_nondegenerate()
    s = params.total
    g = _decay_complement(params, ks)
    pi0, pi1 = params.p_d / s, params.p_i / s
    up = np.clip(params.p_i * g / s, 0.0, 1.0)
    down = np.clip(params.p_d * g / s, 0.0, 1.0)
    return pi0 * _h2_any(up) + pi1 * _h2_any(down)


def _h2_any(t: np.ndarray) -> np.ndarray:
    return binary_entropy_small(np.minimum(t, 1.0 - t))


def cond_state_entropy(params: ChannelParams, k: int) -> float:
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    return float(cond_state_entropy_array(params, np.array([k]))[0])


def state_entropy_limit(params: ChannelParams) -> float:
    """lim_k H(Z_n | Z_{n-k}) = H(Z) under the stationary law."""
    params.require_nondegenerate()
    return binary_entropy(params.p_i / params.total)


# ─── Sampling ─────────────────────────────────────────────

def sample_state_path(params: ChannelParams, n: int, seed: Seed = None,
                      initial: Optional[StateDist] = None) -> np.ndarray:
    """
    Draw Z_1..Z_n as uint8. Z_1 ~ initial (stationary by default).

    Sojourn times are geometric, so the path is assembled run by run:
    a run in state 0 lasts Geometric(p_i) steps, a run in state 1
    Geometric(p_d). A zero leaving probability makes the state absorbing.
    """
    params.require_nondegenerate()
    if n < 1:
        raise DomainError(f"path length must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    init = initial or stationary_distribution(params)
    state = int(rng.random() < init.p1)
    leave = (params.p_i, params.p_d)

    pieces = []
    remaining = n
    while remaining > 0:
        positive = [q for q in leave if q > 0.0]
        mean_run = float(np.mean([1.0 / q for q in positive]))
        batch = int(min(remaining, remaining / mean_run * 1.2 + 16))
        batch += batch % 2
        states = (state + np.arange(batch)) % 2
        lengths = np.empty(batch, dtype=np.int64)
        for s in (0, 1):
            mask = states == s
            count = int(mask.sum())
            if leave[s] > 0.0:
                lengths[mask] = rng.geometric(leave[s], size=count)
            else:
                lengths[mask] = remaining
        ends = np.cumsum(lengths)
        cut = int(np.searchsorted(ends, remaining))
        if cut < batch:
            lengths = lengths[:cut + 1].copy()
            lengths[-1] -= ends[cut] - remaining
            states = states[:cut + 1]
        pieces.append(np.repeat(states.astype(np.uint8), lengths))
        remaining -= int(lengths.sum())
        state = int(1 - states[-1])
    return np.concatenate(pieces)[:n]
