"""
Upper Bound Service
The window-L upper bound family C_L^ub: a concave maximisation over the law u
of the input block X_n..X_{n+L},

    F(u) = H(Y_{n+L} | Y_{n+1}^{n+L-1}) - H(Y_{n+L} | Y_{n+1}^{n+L-1}, X_n^{n+L}, Z_n)
         = H(W u) - H(W' u) - c.u

where W maps u to the law of Y_{n+1}^{n+L}, W' to that of its first L-1
symbols, and c_x is the conditional term for block x. u ranges over the
stationary (optionally bit-symmetric) distributions.

The solver parametrises the affine hull by a null-space basis and runs a
log-barrier interior-point method with exact Newton steps.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lstsq, null_space
from scipy.optimize import linprog
from scipy.special import entr

from app.config.solver import settings
from app.services.channel import did_channel_service as channel
from app.services.info import info_kernel_service as kernel
from app.services.info.block_service import BlockDistribution, block_bits
from app.services.info.entropy_service import LN2
from app.services.state import state_chain_service as chain
from app.utils import cache_service
from app.utils.console import log, warn
from app.utils.error_handler import ConvergenceError, DomainError, EnumerationGuardError
from app.utils.validators import ChannelParams

FEASIBILITY_TOL = 1e-8
STATIONARITY_TOL = 1e-10
MONOTONE_SLACK = 1e-8
CERTIFIED_GAP = 1e-6
LOG_FLOOR = 1e-300


# ─── Types ────────────────────────────────────────────────

@dataclass(frozen=True)
class UpperBoundProblem:
    L: int
    params: ChannelParams
    W: np.ndarray        # (reachable y-blocks of length L) x 2^{L+1}
    W_prefix: np.ndarray  # (reachable y-blocks of length L-1) x 2^{L+1}
    c: np.ndarray
    constraints: kernel.ConstraintSystem
    bitsym: bool = True
    stationary: bool = True

    @property
    def size(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class BoundResult:
    value: float
    u_opt: BlockDistribution
    iterations: int
    kkt_residual: float
    feasibility_residual: float
    duality_gap: float
    barrier_gap: float
    converged: bool
    L: int

    @property
    def certified_value(self) -> float:
        """value + duality gap: an upper bound on the supremum itself."""
        return self.value + max(self.duality_gap, 0.0)


@dataclass(frozen=True)
class TrivializationResult:
    feasible: bool
    input: Optional[BlockDistribution]
    objective: float
    not_stationary: bool
    residual: float
    details: Dict[str, Any] = field(default_factory=dict)


# ─── Problem Construction ─────────────────────────────────

def _row_entropies(rows: np.ndarray) -> np.ndarray:
    return entr(rows).sum(axis=1) / LN2


def _build(params: ChannelParams, L: int, bitsym: bool, stationary: bool) -> UpperBoundProblem:
    m = L + 1
    pi = chain.stationary_distribution(params).as_array()

    c = np.zeros(1 << m)
    mixed = np.zeros((1 << m, 1 << L))
    for z0 in (0, 1):
        g = channel.conditional_law_table(params, L, z0)
        half = g.shape[1] >> 1
        prefix = g[:, :half] + g[:, half:]
        c += pi[z0] * (_row_entropies(g) - _row_entropies(prefix))
        mixed += pi[z0] * g
    W = mixed.T
    half = W.shape[0] >> 1
    W_prefix = W[:half] + W[half:]

    W = W[W.sum(axis=1) > 0.0]
    W_prefix = W_prefix[W_prefix.sum(axis=1) > 0.0]
    c = np.clip(c, 0.0, 1.0)
    constraints = kernel.build_constraint_system(m, stationarity=stationary, bitsym=bitsym, unity=True)
    for arr in (W, W_prefix, c):
        arr.setflags(write=False)
    return UpperBoundProblem(L, params, W, W_prefix, c, constraints, bitsym, stationary)


def build_problem(params: ChannelParams, L: int, bitsym: bool = True,
                  stationary: bool = True) -> UpperBoundProblem:
    """
    Enumerate every (x-block, z-path) pair of the window to form W, W' and c.
    stationary=False drops the stationarity rows (only u >= 0, sum u = 1 and
    the optional bit-symmetry rows remain).
    """
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")
    if L > settings.max_upper_L:
        raise EnumerationGuardError("L", L, settings.max_upper_L)
    params.require_nondegenerate()
    return cache_service.upper_problem(params.p_i, params.p_d, L, bitsym, stationary,
                                       lambda: _build(params, L, bitsym, stationary))


# ─── Objective ────────────────────────────────────────────

def _as_vector(prob: UpperBoundProblem, u: Union[BlockDistribution, np.ndarray]) -> np.ndarray:
    vec = u.probs if isinstance(u, BlockDistribution) else np.asarray(u, dtype=np.float64)
    if vec.shape != (prob.size,):
        raise DomainError(f"u must have {prob.size} entries, got shape {vec.shape}")
    return vec


def objective(prob: UpperBoundProblem, u: Union[BlockDistribution, np.ndarray]) -> float:
    vec = _as_vector(prob, u)
    return float((entr(prob.W @ vec).sum() - entr(prob.W_prefix @ vec).sum()) / LN2 - prob.c @ vec)


def _gradient(prob: UpperBoundProblem, u: np.ndarray):
    a = prob.W @ u
    b = prob.W_prefix @ u
    grad = -prob.W.T @ np.log2(np.maximum(a, LOG_FLOOR)) + prob.W_prefix.T @ np.log2(np.maximum(b, LOG_FLOOR)) - prob.c
    return grad, a, b


def _hessian(prob: UpperBoundProblem, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    full = (prob.W / a[:, None]).T @ prob.W
    prefix = (prob.W_prefix / b[:, None]).T @ prob.W_prefix
    return (prefix - full) / LN2


def check_feasible(prob: UpperBoundProblem, u: np.ndarray, tol: float = FEASIBILITY_TOL) -> None:
    residual = prob.constraints.residual(u)
    if np.min(u) < -tol or residual > tol:
        raise DomainError("infeasible u", {"min_entry": float(np.min(u)), "residual": residual})


def objective_and_gradient(prob: UpperBoundProblem, u: Union[BlockDistribution, np.ndarray]):
    """F(u) in bits and its gradient; the additive constants of both entropy gradients cancel."""
    vec = _as_vector(prob, u)
    check_feasible(prob, vec)
    grad, _, _ = _gradient(prob, vec)
    return objective(prob, vec), grad


# ─── Solver ───────────────────────────────────────────────

def _barrier_value(prob: UpperBoundProblem, u: np.ndarray, mu: float) -> float:
    return objective(prob, u) + mu * float(np.sum(np.log(u)))


def _newton_stage(prob: UpperBoundProblem, basis: np.ndarray, u: np.ndarray, mu: float, tol: float):
    """Maximise F + mu sum log u along the affine set; returns (u, converged, steps, decrement^2)."""
    dec2 = math.inf
    for step in range(1, settings.newton_max_iter + 1):
        g, a, b = _gradient(prob, u)
        grad = basis.T @ (g + mu / u)
        hess = basis.T @ (_hessian(prob, a, b) - np.diag(mu / u ** 2)) @ basis
        try:
            direction = cho_solve(cho_factor(-hess), grad)
        except LinAlgError:
            direction = lstsq(-hess, grad)[0]
        dec2 = float(grad @ direction)
        if dec2 / 2.0 <= tol:
            return u, True, step, dec2

        du = basis @ direction
        shrinking = du < 0.0
        s = 1.0
        if np.any(shrinking):
            s = min(1.0, settings.fraction_to_boundary * float(np.min(-u[shrinking] / du[shrinking])))
        current = _barrier_value(prob, u, mu)
        while s > 1e-16:
            candidate = u + s * du
            if np.all(candidate > 0.0) and \
                    _barrier_value(prob, candidate, mu) >= current + settings.line_search_c * s * dec2:
                break
            s *= settings.line_search_beta
        else:
            # no ascent left at working precision
            return u, dec2 < 1e-12, step, dec2
        u = candidate
    return u, False, settings.newton_max_iter, dec2


def frank_wolfe_gap(prob: UpperBoundProblem, u: np.ndarray) -> float:
    """max over the polytope of grad F(u).(v - u); bounds sup F - F(u) by concavity."""
    g, _, _ = _gradient(prob, u)
    res = linprog(-g, A_eq=prob.constraints.matrix, b_eq=prob.constraints.rhs,
                  bounds=(0.0, None), method="highs")
    if res.status != 0:
        return math.inf
    return max(float(-res.fun - g @ u), 0.0)


def solve(prob: UpperBoundProblem, tol: float = 1e-9) -> BoundResult:
    """Barrier schedule mu_start -> mu_final, exact Newton steps in null-space coordinates."""
    basis = null_space(prob.constraints.matrix)
    u = np.full(prob.size, 1.0 / prob.size)
    mu = settings.barrier_mu_start
    iterations = 0
    all_converged = True
    dec2 = math.inf
    while True:
        final = mu <= settings.barrier_mu_final * (1.0 + 1e-12)
        stage_tol = min(settings.newton_tol, tol * tol / 2.0) if final else settings.newton_tol
        u, ok, steps, dec2 = _newton_stage(prob, basis, u, mu, stage_tol)
        iterations += steps
        all_converged = all_converged and ok
        if final:
            break
        mu = max(mu / settings.barrier_mu_factor, settings.barrier_mu_final)

    value = objective(prob, u)
    feasibility = prob.constraints.residual(u)
    gap = frank_wolfe_gap(prob, u)
    kkt = math.sqrt(max(dec2, 0.0)) if math.isfinite(dec2) else math.inf
    result = BoundResult(
        value=value,
        u_opt=BlockDistribution(prob.L + 1, np.clip(u, 0.0, None)),
        iterations=iterations,
        kkt_residual=kkt,
        feasibility_residual=feasibility,
        duality_gap=gap,
        barrier_gap=prob.size * mu,
        converged=all_converged,
        L=prob.L,
    )
    if not all_converged:
        if gap <= CERTIFIED_GAP:
            warn("Upper", f"L={prob.L}: Newton stages hit the cap; value kept with certified gap {gap:.2e}")
        else:
            raise ConvergenceError("barrier solver", f"L={prob.L}, duality gap {gap:.2e}",
                                   {"value": value, "iterations": iterations})
    log("Upper", f"p_i={prob.params.p_i} p_d={prob.params.p_d} L={prob.L}: {value:.10g} "
                 f"({iterations} Newton steps, gap {gap:.1e})")
    return result


def upper_bound(params: ChannelParams, L: int, bitsym: bool = True, tol: float = 1e-9) -> BoundResult:
    return solve(build_problem(params, L, bitsym), tol)


def upper_bound_sequence(params: ChannelParams, Ls: Sequence[int], bitsym: bool = True,
                         tol: float = 1e-9) -> List[Dict[str, Any]]:
    """Solve for each L in increasing order and flag values that rise with L."""
    rows = []
    previous: Optional[float] = None
    for L in sorted(Ls):
        result = upper_bound(params, L, bitsym, tol)
        nonmonotone = previous is not None and result.value > previous + MONOTONE_SLACK
        if nonmonotone:
            warn("Upper", f"L={L} value {result.value:.10g} exceeds L-1 value {previous:.10g}")
        rows.append({"L": L, "result": result, "nonmonotone": nonmonotone})
        previous = result.value
    return rows


# ─── Trivialization Without Stationarity ──────────────────

def _alternating_block(L: int) -> int:
    """x_{L-1} = x_L = 0 with strict alternation before: L=3 gives "0100"."""
    index = 0
    for j in range(L - 1):
        if (L - 1 - j) % 2:
            index |= 1 << j
    return index


def check_not_stationary(u: BlockDistribution) -> bool:
    return kernel.stationarity_residual(u) > STATIONARITY_TOL


def trivializing_input(params: ChannelParams, L: int) -> TrivializationResult:
    """
    Input law on X_0..X_L with X_L = X_{L-1} almost surely whose earlier
    outputs carry no information about that last bit, driving F to 1 once
    the stationarity constraints are dropped.
    """
    if L < 2:
        raise DomainError(f"L must be >= 2, got {L}")
    m = L + 1
    free = build_problem(params, L, bitsym=False, stationary=False)

    if params.is_symmetric:
        probs = np.zeros(1 << m)
        block = _alternating_block(L)
        probs[block] = 0.5
        probs[((1 << m) - 1) ^ block] = 0.5
        u = BlockDistribution(m, probs)
        return TrivializationResult(True, u, objective(free, u), check_not_stationary(u), 0.0,
                                    {"method": "two-string"})

    bits = block_bits(m)
    last = bits[:, L]
    before = bits[:, L - 1]
    zeros_class = (last == 0) & (before == 0)
    ones_class = (last == 1) & (before == 1)
    prefix_law = channel.channel_law_table(params, L - 1).probs   # rows x_0..x_{L-1}
    rows_x = np.arange(1 << m) & ((1 << L) - 1)
    balance = (prefix_law[rows_x].T * (zeros_class.astype(float) - ones_class.astype(float)))
    A_eq = np.vstack([balance, np.ones((1, 1 << m))])
    b_eq = np.concatenate([np.zeros(balance.shape[0]), [1.0]])
    bounds = [(0.0, None) if (zeros_class[x] or ones_class[x]) else (0.0, 0.0) for x in range(1 << m)]
    res = linprog(np.zeros(1 << m), A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        log("Upper", f"p_i={params.p_i} p_d={params.p_d} L={L}: trivializing system infeasible")
        return TrivializationResult(False, None, math.nan, False, math.inf,
                                    {"method": "linear-system", "status": res.message})
    probs = np.clip(res.x, 0.0, None)
    u = BlockDistribution(m, probs / probs.sum())
    residual = float(np.max(np.abs(A_eq @ u.probs - b_eq)))
    return TrivializationResult(True, u, objective(free, u), check_not_stationary(u), residual,
                                {"method": "linear-system"})
