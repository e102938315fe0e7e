"""
Sim Rate Service
Monte Carlo estimates of the entropy rates of the DID channel under a
stationary Markov(alpha) input, by scaled forward recursions on the trellis:

  - output law p(y^n):       4 states (X_i, Z_i); y_i = x_i if z_i = 0 else x_{i-1}
  - conditional p(y^n | x):  2 states Z_i;        y_i = x_{i - z_i}

Each sample draws (x, z), forms y, and evaluates -(1/n) log2 of both laws.
Samples run on a thread pool with seeds spawned from one SeedSequence, so
results do not depend on the worker count.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from numba import njit
from scipy.stats import norm

from app.config.simulation import settings as sim_settings
from app.config.solver import settings as solver_settings
from app.services.bounds.lower_bound_service import MarkovInput
from app.services.channel import did_channel_service as channel
from app.services.info import info_kernel_service as kernel
from app.services.info.block_service import BitsLike, as_bits
from app.services.info.entropy_service import entropy_of
from app.services.state import state_chain_service as chain
from app.utils.console import log
from app.utils.error_handler import DomainError, EnumerationGuardError
from app.utils.validators import ChannelParams

MIN_N = 1000

InputLike = Union[MarkovInput, float]


# ─── Types ────────────────────────────────────────────────

@dataclass(frozen=True)
class RateEstimate:
    n: int
    samples: int
    mean: float
    half_width: float
    quantity: str    # "H(Y)/n" | "H(Y|X)/n" | "info-rate"


# ─── Forward Recursions ───────────────────────────────────

@njit(cache=True, nogil=True)
def _output_log_prob(y, alpha, M, pi):
    # state index s = 2 * x + z
    f = np.empty(4)
    for x in range(2):
        for z in range(2):
            f[2 * x + z] = 0.5 * pi[z]
    g = np.empty(4)
    total = 0.0
    for i in range(y.shape[0]):
        yi = y[i]
        norm_ = 0.0
        for x2 in range(2):
            for z2 in range(2):
                acc = 0.0
                for x1 in range(2):
                    emitted = x2 if z2 == 0 else x1
                    if emitted != yi:
                        continue
                    px = alpha if x1 != x2 else 1.0 - alpha
                    for z1 in range(2):
                        acc += f[2 * x1 + z1] * px * M[z2, z1]
                g[2 * x2 + z2] = acc
                norm_ += acc
        if norm_ <= 0.0:
            return -np.inf
        total += np.log(norm_)
        for s in range(4):
            f[s] = g[s] / norm_
    return total


@njit(cache=True, nogil=True)
def _conditional_log_prob(x, y, M, pi):
    f0 = pi[0]
    f1 = pi[1]
    total = 0.0
    for i in range(y.shape[0]):
        yi = y[i]
        g0 = 0.0
        g1 = 0.0
        if x[i + 1] == yi:
            g0 = f0 * M[0, 0] + f1 * M[0, 1]
        if x[i] == yi:
            g1 = f0 * M[1, 0] + f1 * M[1, 1]
        norm_ = g0 + g1
        if norm_ <= 0.0:
            return -np.inf
        total += np.log(norm_)
        f0 = g0 / norm_
        f1 = g1 / norm_
    return total


def _chain_arrays(params: ChannelParams) -> Tuple[np.ndarray, np.ndarray]:
    M = np.ascontiguousarray(chain.one_step_matrix(params).entries, dtype=np.float64)
    pi = chain.stationary_distribution(params).as_array()
    return M, pi


def _alpha_of(inp: InputLike) -> float:
    alpha = inp.alpha if isinstance(inp, MarkovInput) else float(inp)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    return alpha


def output_log2_prob(params: ChannelParams, inp: InputLike, y: BitsLike) -> float:
    """log2 p(y^n) under the Markov input and the stationary state chain."""
    M, pi = _chain_arrays(params)
    bits = np.ascontiguousarray(as_bits(y), dtype=np.int64)
    return float(_output_log_prob(bits, _alpha_of(inp), M, pi) / math.log(2.0))


def conditional_log2_prob(params: ChannelParams, x: BitsLike, y: BitsLike) -> float:
    """log2 p(y^n | x_0^n)."""
    xb = np.ascontiguousarray(as_bits(x), dtype=np.int64)
    yb = np.ascontiguousarray(as_bits(y), dtype=np.int64)
    if xb.size != yb.size + 1:
        raise DomainError(f"x must have length len(y) + 1, got {xb.size} and {yb.size}")
    M, pi = _chain_arrays(params)
    return float(_conditional_log_prob(xb, yb, M, pi) / math.log(2.0))


# ─── Exact Oracles ────────────────────────────────────────

def _exact_joint(params: ChannelParams, alpha: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    if n > solver_settings.max_enumeration_n:
        raise EnumerationGuardError("n", n, solver_settings.max_enumeration_n)
    px = kernel.markov_block_distribution(alpha, n + 1).probs
    table = channel.channel_law_table(params, n).probs
    return px, px[:, None] * table


def exact_output_entropy_rate(params: ChannelParams, inp: InputLike, n: int) -> float:
    """(1/n) H(Y^n) by enumeration."""
    _, joint = _exact_joint(params, _alpha_of(inp), n)
    return entropy_of(joint.sum(axis=0)) / n


def exact_conditional_entropy_rate(params: ChannelParams, inp: InputLike, n: int) -> float:
    """(1/n) H(Y^n | X_0^n) by enumeration."""
    px, joint = _exact_joint(params, _alpha_of(inp), n)
    return (entropy_of(joint) - entropy_of(px)) / n


# ─── Monte Carlo ──────────────────────────────────────────

def _one_sample(params: ChannelParams, alpha: float, n: int, seed: np.random.SeedSequence,
                M: np.ndarray, pi: np.ndarray) -> Tuple[float, float]:
    trace = channel.sample_channel_markov(params, alpha, n, seed)
    x = np.ascontiguousarray(trace.x, dtype=np.int64)
    y = np.ascontiguousarray(trace.y, dtype=np.int64)
    ln2n = math.log(2.0) * n
    hy = -_output_log_prob(y, alpha, M, pi) / ln2n
    hyx = -_conditional_log_prob(x, y, M, pi) / ln2n
    return float(hy), float(hyx)


def _run_samples(params: ChannelParams, inp: InputLike, n: Optional[int], samples: Optional[int],
                 seed: Optional[int], threads: Optional[int]):
    alpha = _alpha_of(inp)
    n = sim_settings.default_n if n is None else n
    samples = sim_settings.default_samples if samples is None else samples
    seed = sim_settings.default_seed if seed is None else seed
    if n < MIN_N:
        raise DomainError(f"n must be >= {MIN_N}, got {n}")
    if samples < 2:
        raise DomainError(f"need at least 2 samples for a confidence interval, got {samples}")
    M, pi = _chain_arrays(params)
    children = np.random.SeedSequence(seed).spawn(samples)
    workers = max(1, min(threads or sim_settings.threads, samples))
    log("Sim", f"p_i={params.p_i} p_d={params.p_d} alpha={alpha}: {samples} x n={n} on {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda s: _one_sample(params, alpha, n, s, M, pi), children))
    return n, samples, results


def _summarise(values: List[float], n: int, quantity: str) -> RateEstimate:
    k = len(values)
    mean = math.fsum(values) / k
    variance = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    z = norm.ppf(0.5 + sim_settings.confidence / 2.0)
    return RateEstimate(n, k, mean, float(z * math.sqrt(variance / k)), quantity)


def estimate_output_entropy_rate(params: ChannelParams, inp: InputLike, n: Optional[int] = None,
                                 samples: Optional[int] = None, seed: Optional[int] = None,
                                 threads: Optional[int] = None) -> RateEstimate:
    n, _, results = _run_samples(params, inp, n, samples, seed, threads)
    return _summarise([hy for hy, _ in results], n, "H(Y)/n")


def estimate_conditional_entropy_rate(params: ChannelParams, inp: InputLike, n: Optional[int] = None,
                                      samples: Optional[int] = None, seed: Optional[int] = None,
                                      threads: Optional[int] = None) -> RateEstimate:
    n, _, results = _run_samples(params, inp, n, samples, seed, threads)
    return _summarise([hyx for _, hyx in results], n, "H(Y|X)/n")


def estimate_rates(params: ChannelParams, inp: InputLike, n: Optional[int] = None,
                   samples: Optional[int] = None, seed: Optional[int] = None,
                   threads: Optional[int] = None) -> Tuple[RateEstimate, RateEstimate, RateEstimate]:
    """Output entropy, conditional entropy and paired information rate from one set of samples."""
    n, _, results = _run_samples(params, inp, n, samples, seed, threads)
    return (
        _summarise([hy for hy, _ in results], n, "H(Y)/n"),
        _summarise([hyx for _, hyx in results], n, "H(Y|X)/n"),
        _summarise([hy - hyx for hy, hyx in results], n, "info-rate"),
    )


def estimate_info_rate(params: ChannelParams, inp: InputLike, n: Optional[int] = None,
                       samples: Optional[int] = None, seed: Optional[int] = None,
                       threads: Optional[int] = None) -> RateEstimate:
    return estimate_rates(params, inp, n, samples, seed, threads)[2]
