"""
Lower Bound Service
Achievable rate of the stationary bit-symmetric first-order Markov input,

    C_Mkv = max_alpha  H(Y_n | Y_{n-1}, X_{n-2}, Z_{n-2})  -  lim H(Y_n | Y^{n-1}, X)

with alpha the flip probability, plus the genie-erasure upper bound
1 - p_i p_d / (p_i + p_d) for comparison.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from app.config.solver import settings
from app.services.info.block_service import BlockDistribution
from app.services.info.entropy_service import binary_entropy, cond_entropy
from app.services.state import state_chain_service as chain
from app.utils.console import log, warn
from app.utils.error_handler import DomainError
from app.utils.validators import ChannelParams

GRID_STEP = 1e-3
ALPHA_XTOL = 1e-8
CLAMP_SLACK = 1e-12
IUD_ALPHA = 0.5


# ─── Types ────────────────────────────────────────────────

@dataclass(frozen=True)
class MarkovInput:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class SeriesValue:
    value: float
    terms: int
    tail_bound: float


@dataclass(frozen=True)
class LowerBoundResult:
    value: float
    alpha_opt: float
    term1: float
    term2: float
    series_terms_used: int


# ─── First Term ───────────────────────────────────────────

def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")


def _clamped(a: float, name: str) -> float:
    if a < -CLAMP_SLACK or a > 1.0 + CLAMP_SLACK:
        raise DomainError(f"{name}={a!r} left [0, 1]")
    return min(max(a, 0.0), 1.0)


def first_term(params: ChannelParams, alpha: float) -> float:
    """
    Closed form of H(Y_n | Y_{n-1}, X_{n-2}, Z_{n-2}).

    1 - A1 and 1 - A2 are ratios of sums of nonnegative terms.
    """
    params.require_nondegenerate()
    _check_alpha(alpha)
    pi, pd, a = params.p_i, params.p_d, alpha
    b = 1.0 - a
    s = params.total

    den1 = b + a * (1.0 - pd)    # 1 - alpha p_d
    den2 = b + a * pi            # 1 - alpha (1 - p_i)
    w0 = a * pd / s
    w1 = pi * den1 / s
    w2 = pd * den2 / s

    value = w0 * binary_entropy(_clamped(a - a * pi, "alpha(1-p_i)"))
    if w1 > 0.0:
        gap1 = a * ((1.0 - pd) ** 2 + b * pd * (3.0 - 2.0 * pd - pi))
        value += w1 * binary_entropy(_clamped(gap1 / den1, "1-A1"))
    if w2 > 0.0:
        gap2 = a * (b * ((1.0 - pi) ** 2 + 2.0 * pi * pd) + pi * (1.0 - pd))
        value += w2 * binary_entropy(_clamped(gap2 / den2, "1-A2"))
    return float(value)


def first_term_enumerated(params: ChannelParams, alpha: float) -> float:
    """
    Oracle for first_term: exact joint of (X_{n-2..n}, Z_{n-2..n}) with a
    stationary Markov(alpha) input and the stationary state chain.
    """
    _check_alpha(alpha)
    pi = chain.stationary_distribution(params).as_array()
    M = chain.one_step_matrix(params).entries
    joint = np.zeros(16)
    for x0, x1, x2, z0, z1, z2 in itertools.product((0, 1), repeat=6):
        px = 0.5 * (alpha if x1 != x0 else 1.0 - alpha) * (alpha if x2 != x1 else 1.0 - alpha)
        pz = pi[z0] * M[z1, z0] * M[z2, z1]
        xs = (x0, x1, x2)
        y1 = xs[1 - z1]
        y2 = xs[2 - z2]
        joint[y2 | (y1 << 1) | (x0 << 2) | (z0 << 3)] += px * pz
    return cond_entropy(BlockDistribution(4, joint), split=1)


# ─── Second Term ──────────────────────────────────────────

def second_term_series(params: ChannelParams, alpha: float, tol: Optional[float] = None) -> SeriesValue:
    """
    lim H(Y_n | Y^{n-1}, X) = sum_{k>=1} alpha^2 (1-alpha)^{k-1} H(Z_n | Z_{n-k}).

    H(Z_n | Z_{n-k}) increases to its limit H_inf, so after K terms the
    remainder lies within alpha (1-alpha)^K (H_inf - H_K) of
    alpha (1-alpha)^K H_inf, which is added in closed form.
    """
    _check_alpha(alpha)
    params.require_nondegenerate()
    tol = settings.series_tol if tol is None else tol
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    if alpha == 0.0:
        return SeriesValue(0.0, 0, 0.0)

    h_inf = chain.state_entropy_limit(params)
    log_q = math.log1p(-alpha) if alpha < 1.0 else -math.inf
    partials = []
    start = 1
    chunk = 1024
    while True:
        ks = np.arange(start, start + chunk, dtype=np.float64)
        weights = alpha * alpha * np.exp((ks - 1.0) * log_q) if alpha < 1.0 else (ks == 1.0) * 1.0
        h = chain.cond_state_entropy_array(params, ks)
        tails = alpha * np.exp(ks * log_q) if alpha < 1.0 else np.zeros_like(ks)
        bounds = tails * np.maximum(h_inf - h, 0.0)
        done = np.flatnonzero(bounds < tol)
        cap_hit = start + chunk - 1 >= settings.series_cap
        if done.size or cap_hit:
            last = int(done[0]) if done.size else min(chunk, settings.series_cap - start + 1) - 1
            partials.append(float(np.sum(weights[:last + 1] * h[:last + 1])))
            terms = start + last
            value = math.fsum(partials) + float(tails[last]) * h_inf
            if not done.size:
                warn("Lower", f"series cap {settings.series_cap} reached at alpha={alpha}; "
                              f"tail bound {bounds[last]:.2e}")
            return SeriesValue(value, terms, float(bounds[last]))
        partials.append(float(np.sum(weights * h)))
        start += chunk
        chunk = min(chunk * 2, 1 << 18)


def second_term(params: ChannelParams, alpha: float, tol: Optional[float] = None) -> float:
    return second_term_series(params, alpha, tol).value


# ─── Bounds ───────────────────────────────────────────────

def markov_rate(params: ChannelParams, alpha: float, tol: Optional[float] = None) -> LowerBoundResult:
    """Achievable rate of the Markov(alpha) input, without optimisation."""
    t1 = first_term(params, alpha)
    series = second_term_series(params, alpha, tol)
    return LowerBoundResult(t1 - series.value, alpha, t1, series.value, series.terms)


def lower_bound_curve(params: ChannelParams, alphas: Sequence[float], tol: Optional[float] = None) -> np.ndarray:
    return np.array([markov_rate(params, float(a), tol).value for a in alphas])


def lower_bound(params: ChannelParams, tol: Optional[float] = None) -> LowerBoundResult:
    """
    Maximise over alpha: scan a 1e-3 grid, then refine around the best grid
    point by golden-section search (bounded Brent when the grid point does
    not bracket strictly).
    """
    grid = np.linspace(0.0, 1.0, int(round(1.0 / GRID_STEP)) + 1)
    values = lower_bound_curve(params, grid, tol)
    best = int(np.argmax(values))

    def negated(a: float) -> float:
        return -markov_rate(params, min(max(a, 0.0), 1.0), tol).value

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    refined = None
    if 0 < best < grid.size - 1 and values[best] > max(values[best - 1], values[best + 1]):
        try:
            refined = minimize_scalar(negated, bracket=(lo, grid[best], hi), method="golden",
                                      options={"xtol": ALPHA_XTOL})
        except ValueError:
            refined = None
    if refined is None or not lo <= refined.x <= hi:
        refined = minimize_scalar(negated, bounds=(lo, hi), method="bounded",
                                  options={"xatol": ALPHA_XTOL})

    alpha = float(grid[best])
    if -refined.fun > values[best]:
        alpha = float(min(max(refined.x, 0.0), 1.0))
    result = markov_rate(params, alpha, tol)
    log("Lower", f"p_i={params.p_i} p_d={params.p_d}: C_Mkv={result.value:.10g} at alpha={alpha:.8f}")
    return result


def iud_lower_bound(params: ChannelParams, tol: Optional[float] = None) -> LowerBoundResult:
    return markov_rate(params, IUD_ALPHA, tol)


def genie_erasure(params: ChannelParams) -> float:
    params.require_nondegenerate()
    return 1.0 - params.p_i * params.p_d / params.total
