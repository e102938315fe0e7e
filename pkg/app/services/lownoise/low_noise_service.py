"""
Low-Noise Service
Capacity behaviour for small symmetric noise p_i = p_d = p:

    C(p) = 1 - sum_{k>=1} 2^{-(k+1)} R(p; k) + O(p^2),   R(p; k) = h2(1/2 + (1-2p)^k / 2)

and the two-variable rate function f(delta1, delta2) around the i.u.d.
input (delta = deviation of the pair-pattern probabilities from 1/4), with
its first-order coefficients A1, A2 and second-order coefficients B at a
Lagrange-remainder point (c delta1, c delta2).
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from app.config.solver import settings
from app.services.bounds import lower_bound_service as lower
from app.services.info.entropy_service import LN2, binary_entropy, binary_entropy_small
from app.utils.error_handler import DomainError
from app.utils.validators import ChannelParams

FEASIBILITY_SLACK = 1e-12
Q_EPSILON = 1e-12
B_SIGN_K_MAX = 2000


# ─── Types ────────────────────────────────────────────────

@dataclass(frozen=True)
class ExpansionResult:
    p_id: float
    value: float
    K: int
    tail_bound: float


@dataclass(frozen=True)
class TaylorPoint:
    delta1: float
    delta2: float
    c: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise DomainError(f"c must be in [0, 1], got {self.c}")
        if not is_feasible(self.delta1, self.delta2):
            raise DomainError("infeasible point", {"delta1": self.delta1, "delta2": self.delta2})

    @property
    def q(self) -> float:
        return 0.5 + self.c * self.delta1 + self.c * self.delta2


@dataclass(frozen=True)
class TaylorCoefficients:
    A1: float
    A2: float
    B20: float
    B11: float
    B02: float
    terms: int
    tail_bound: float

    @property
    def B(self) -> float:
        """Curvature used by the sign map: the (1-p)(1-2p) first term plus the series part."""
        return self.B11


# ─── Series Expansion ─────────────────────────────────────

def _check_p(p_id: float) -> None:
    if not 0.0 <= p_id <= 0.5:
        raise DomainError(f"p_id must be in [0, 0.5], got {p_id}")


def series_terms(p_id: float, ks: np.ndarray) -> np.ndarray:
    """R(p; k) for an array of k, via the small side 1/2 - (1-2p)^k / 2."""
    _check_p(p_id)
    ks = np.asarray(ks, dtype=np.float64)
    if p_id == 0.5:
        return np.ones_like(ks)
    small = -np.expm1(ks * math.log1p(-2.0 * p_id)) / 2.0
    return binary_entropy_small(small)


def series_term(p_id: float, k: int) -> float:
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    return float(series_terms(p_id, np.array([k]))[0])


def expansion(p_id: float, tol: float = 1e-12) -> ExpansionResult:
    """1 - sum_{k<=K} 2^{-(k+1)} R(p; k) with 2^{-(K+1)} < tol."""
    _check_p(p_id)
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    K = max(1, int(math.floor(-math.log2(tol))))
    while 2.0 ** -(K + 1) >= tol:
        K += 1
    ks = np.arange(1, K + 1, dtype=np.float64)
    value = 1.0 - math.fsum(np.exp2(-(ks + 1.0)) * series_terms(p_id, ks))
    return ExpansionResult(p_id, value, K, 2.0 ** -(K + 1))


# ─── Rate Function ────────────────────────────────────────

def is_feasible(delta1: float, delta2: float) -> bool:
    return (delta1 + 2.0 * delta2 <= 0.25 + FEASIBILITY_SLACK
            and delta1 >= -0.25 - FEASIBILITY_SLACK
            and delta2 >= -0.25 - FEASIBILITY_SLACK)


def pair_output_entropy(params: ChannelParams, p1: float, p2: float) -> float:
    """H(Y_n | Y_{n-1}) for the stationary bit-symmetric input with pattern probabilities p1, p2."""
    params.require_nondegenerate()
    s = params.p_i * params.p_d / params.total
    arg = (1.0 - 2.0 * s) * p1 + (1.0 - 4.0 * s) * p2 + 2.0 * s
    return binary_entropy(min(max(arg, 0.0), 1.0))


def rate_function_f(delta1: float, delta2: float, params: ChannelParams, tol: Optional[float] = None) -> float:
    """f = H(Y_n | Y_{n-1}) - lim H(Y_n | Y^{n-1}, X), with alpha = 1 - p1 - p2."""
    TaylorPoint(delta1, delta2)
    p1 = delta1 + 0.25
    p2 = delta2 + 0.25
    alpha = min(max(1.0 - p1 - p2, 0.0), 1.0)
    return pair_output_entropy(params, p1, p2) - lower.second_term(params, alpha, tol)


# ─── Taylor Coefficients ──────────────────────────────────

def _series_sum(weights_of, p_id: float, tol: float, k_max: Optional[int], majorant_of):
    """sum_k weights(k) R(p; k) in chunks until the majorant tail drops below tol (or k_max)."""
    partial = []
    start = 1
    chunk = 256
    cap = k_max if k_max is not None else settings.series_cap
    while True:
        stop = min(start + chunk - 1, cap)
        ks = np.arange(start, stop + 1, dtype=np.float64)
        partial.append(float(np.sum(weights_of(ks) * series_terms(p_id, ks))))
        tail = majorant_of(stop)
        if (k_max is None and tail < tol) or stop >= cap:
            return math.fsum(partial), int(stop), float(tail)
        start = stop + 1
        chunk *= 2


def _first_order_tail(K: int) -> float:
    # sum_{k>K} |k-3| / 2^k <= (K+1) / 2^{K-1} for K >= 3
    return (K + 1) / 2.0 ** (K - 1)


def first_order_coefficients(p_id: float, tol: float = 1e-12):
    """A1, A2: partial derivatives of f at the i.u.d. point (0, 0)."""
    _check_p(p_id)
    shared, _, _ = _series_sum(lambda k: (k - 3.0) / np.exp2(k), p_id, tol, None, _first_order_tail)
    ratio = math.log2((2.0 - p_id) / (2.0 + p_id))
    return (1.0 - p_id) * ratio - shared, (1.0 - 2.0 * p_id) * ratio - shared


def _p2(k: float) -> float:
    return (k - 1.0) * (k - 2.0) + 2.0 * k * (k - 1.0) + k * (k + 1.0)


def taylor_coefficients(p_id: float, delta1: float, delta2: float, c: float = 1.0,
                        tol: float = 1e-12, k_max: Optional[int] = None) -> TaylorCoefficients:
    """
    f(d) = f(0) + A1 d1 + A2 d2 - (B20 d1^2 + 2 B11 d1 d2 + B02 d2^2), the
    B's being minus half the Hessian of f at (c d1, c d2).
    """
    _check_p(p_id)
    point = TaylorPoint(delta1, delta2, c)
    q = point.q
    if q >= 1.0 or q < 0.0:
        raise DomainError(f"q = {q} outside [0, 1); the expansion excludes this extreme point")
    d1, d2 = c * delta1, c * delta2
    r = 2.0 * (1.0 - p_id) * d1 + 2.0 * (1.0 - 2.0 * p_id) * d2
    spread = 1.0 - (p_id / 2.0 + r) ** 2
    if spread <= 0.0:
        raise DomainError(f"pair-entropy argument degenerates at r = {r}")

    A1, A2 = first_order_coefficients(p_id, tol)

    def curvature(k: np.ndarray) -> np.ndarray:
        low = np.where(k >= 3.0, np.power(q, np.maximum(k - 3.0, 0.0)), 0.0)
        mid = np.where(k >= 2.0, np.power(q, np.maximum(k - 2.0, 0.0)), 0.0)
        high = np.power(q, k - 1.0)
        return 0.5 * ((k - 1.0) * (k - 2.0) * low - 2.0 * k * (k - 1.0) * mid + k * (k + 1.0) * high)

    eps = min(q + Q_EPSILON, 1.0 - 1e-15)

    def majorant(K: int) -> float:
        # geometric-times-quadratic tail: terms beyond K bounded by 0.5 eps^{k-3} P2(k)
        nxt = K + 1.0
        ratio = eps * _p2(nxt + 1.0) / _p2(nxt)
        if ratio >= 1.0:
            return math.inf
        return 0.5 * eps ** (nxt - 3.0) * _p2(nxt) / (1.0 - ratio)

    b2, terms, tail = _series_sum(curvature, p_id, tol, k_max, majorant)
    scale = 2.0 / (spread * LN2)
    return TaylorCoefficients(
        A1=A1,
        A2=A2,
        B20=scale * (1.0 - p_id) ** 2 + b2,
        B11=scale * (1.0 - p_id) * (1.0 - 2.0 * p_id) + b2,
        B02=scale * (1.0 - 2.0 * p_id) ** 2 + b2,
        terms=terms,
        tail_bound=tail,
    )


def quadratic_sup(a: float, b: float) -> float:
    """sup_t (a t - b t^2): a^2 / (4b) for b > 0."""
    if b > 0.0:
        return a * a / (4.0 * b)
    return 0.0 if a == 0.0 and b == 0.0 else math.inf


def b_sign_map(p_values: Iterable[float], delta1_values: Iterable[float], delta2_values: Iterable[float],
               k_max: int = B_SIGN_K_MAX, c: float = 1.0) -> List[Dict[str, Any]]:
    """Sign of B over a grid; infeasible or excluded points are skipped."""
    rows: List[Dict[str, Any]] = []
    d1s = list(delta1_values)
    d2s = list(delta2_values)
    for p in p_values:
        for d1 in d1s:
            for d2 in d2s:
                if not is_feasible(d1, d2) or 0.5 + c * (d1 + d2) >= 1.0:
                    continue
                try:
                    coeffs = taylor_coefficients(p, d1, d2, c, k_max=k_max)
                except DomainError:
                    continue
                rows.append({
                    "p_id": p,
                    "delta1": d1,
                    "delta2": d2,
                    "B_value": coeffs.B,
                    "sign": int(np.sign(coeffs.B)),
                })
    return rows
