"""
Info Kernel Service
Mutual information by exact enumeration, input symmetrization, the
block-stationarity constraint system, and the shift-average construction of
stationary inputs from block distributions.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from app.config.solver import settings
from app.services.channel import did_channel_service as channel
from app.services.info.block_service import BlockDistribution, block_bits
from app.services.info.entropy_service import entropy_of
from app.utils.console import log
from app.utils.error_handler import DomainError, EnumerationGuardError
from app.utils.validators import ChannelParams

VIOLATION_TOL = 1e-10


# ─── Input Distributions ──────────────────────────────────

def iud_distribution(m: int) -> BlockDistribution:
    return BlockDistribution.uniform(m)


def markov_block_distribution(alpha: float, m: int) -> BlockDistribution:
    """Marginal on m consecutive symbols of the stationary bit-symmetric Markov(alpha) source."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    bits = block_bits(m).astype(np.int64)
    flips = np.sum(bits[:, 1:] != bits[:, :-1], axis=1)
    probs = 0.5 * np.power(alpha, flips) * np.power(1.0 - alpha, (m - 1) - flips)
    return BlockDistribution(m, probs)


def symmetrize(d: BlockDistribution) -> BlockDistribution:
    """(P(x) + P(~x)) / 2."""
    return BlockDistribution(d.length, 0.5 * (d.probs + d.probs[::-1]))


def is_bit_symmetric(d: BlockDistribution, tol: float = VIOLATION_TOL) -> bool:
    return bool(np.max(np.abs(d.probs - d.probs[::-1])) <= tol)


# ─── Mutual Information ───────────────────────────────────

def mutual_information_joint(joint: np.ndarray) -> float:
    """I(A; B) for a 2-D joint table joint[a, b]."""
    joint = np.asarray(joint, dtype=np.float64)
    return entropy_of(joint.sum(axis=1)) + entropy_of(joint.sum(axis=0)) - entropy_of(joint)


def mutual_information_bruteforce(params: ChannelParams, input_dist: BlockDistribution) -> float:
    """I(X_0^n; Y^n) under the DID channel for an input law on X_0^n."""
    n = input_dist.length - 1
    if n < 1:
        raise DomainError("input block must cover X_0 and at least X_1")
    if n > settings.max_enumeration_n:
        raise EnumerationGuardError("n", n, settings.max_enumeration_n)
    table = channel.channel_law_table(params, n).probs
    joint = input_dist.probs[:, None] * table
    return max(mutual_information_joint(joint), 0.0)


# ─── Constraint Systems ───────────────────────────────────

@dataclass(frozen=True)
class ConstraintSystem:
    """Equalities matrix @ p = rhs over distributions on 2^m blocks."""
    m: int
    matrix: np.ndarray
    rhs: np.ndarray
    stationarity: bool = True
    bitsym: bool = False
    unity: bool = True
    family_rows: Dict[str, int] = field(default_factory=dict)

    def residual(self, probs: np.ndarray) -> float:
        if self.matrix.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix @ probs - self.rhs)))


def stationarity_constraints(m: int) -> ConstraintSystem:
    """
    Rows P(V_2^m = v) - P(V_1^{m-1} = v) = 0 for every (m-1)-block v except
    the all-ones block, whose equation follows from the others.
    """
    if m < 2:
        raise DomainError(f"stationarity constraints need m >= 2, got {m}")
    half = 1 << (m - 1)
    rows = np.zeros((half - 1, 1 << m))
    for v in range(half - 1):
        rows[v, 2 * v] += 1.0
        rows[v, 2 * v + 1] += 1.0
        rows[v, v] -= 1.0
        rows[v, v + half] -= 1.0
    return ConstraintSystem(m, rows, np.zeros(half - 1), True, False, False, {"stationarity": half - 1})


def bit_symmetry_constraints(m: int) -> np.ndarray:
    """Rows e_x - e_{~x} for the 2^{m-1} blocks x below their complement."""
    half = 1 << (m - 1)
    rows = np.zeros((half, 1 << m))
    idx = np.arange(half)
    rows[idx, idx] = 1.0
    rows[idx, (1 << m) - 1 - idx] = -1.0
    return rows


def build_constraint_system(m: int, stationarity: bool = True, bitsym: bool = False,
                            unity: bool = True) -> ConstraintSystem:
    blocks = []
    rhs = []
    families: Dict[str, int] = {}
    if stationarity:
        st = stationarity_constraints(m)
        blocks.append(st.matrix)
        rhs.append(st.rhs)
        families["stationarity"] = st.matrix.shape[0]
    if bitsym:
        bs = bit_symmetry_constraints(m)
        blocks.append(bs)
        rhs.append(np.zeros(bs.shape[0]))
        families["bitsym"] = bs.shape[0]
    if unity:
        blocks.append(np.ones((1, 1 << m)))
        rhs.append(np.ones(1))
        families["unity"] = 1
    matrix = np.vstack(blocks) if blocks else np.zeros((0, 1 << m))
    vector = np.concatenate(rhs) if rhs else np.zeros(0)
    return ConstraintSystem(m, matrix, vector, stationarity, bitsym, unity, families)


def stationarity_residual(d: BlockDistribution) -> float:
    if d.length < 2:
        return 0.0
    return stationarity_constraints(d.length).residual(d.probs)


# ─── Stationary Constructions ─────────────────────────────

def block_iid_product(base: BlockDistribution, blocks: int) -> BlockDistribution:
    """Law of `blocks` independent copies of base laid end to end (later copies in higher bits)."""
    probs = base.probs
    for _ in range(blocks - 1):
        probs = np.kron(base.probs, probs)
    return BlockDistribution(base.length * blocks, probs)


def feinstein_shift_average(base: BlockDistribution, m: int) -> BlockDistribution:
    """
    Length-m marginal of (1/s) sum_{k<s} mu o T^{-k}, where mu is the
    block-i.i.d. measure built from base (block length s).
    """
    if m < 1:
        raise DomainError(f"marginal length must be >= 1, got {m}")
    s = base.length
    if s < 1:
        raise DomainError("base distribution must have block length >= 1")
    blocks = -(-(s - 1 + m) // s)
    product = block_iid_product(base, blocks)
    acc = np.zeros(1 << m)
    for k in range(s):
        acc += product.marginal(k, m).probs
    return BlockDistribution(m, acc / s)


# ─── Randomised Property Checks ───────────────────────────

def _random_distribution(rng: np.random.Generator, size: int) -> np.ndarray:
    p = rng.dirichlet(np.full(size, 0.5))
    # sparsify sometimes so boundary cases are exercised
    if rng.random() < 0.3:
        p[rng.random(size) < 0.4] = 0.0
        if p.sum() == 0.0:
            p[rng.integers(size)] = 1.0
        p /= p.sum()
    return p


def check_symmetrization(params: ChannelParams, n_max: int = 4, trials: int = 100,
                         seed: Optional[int] = 0) -> Dict[str, Any]:
    """I(symmetrize(Q)) >= I(Q) for random input laws Q on X_0^n, n <= n_max."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    idempotence = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, n_max + 1))
        q = BlockDistribution(n + 1, _random_distribution(rng, 1 << (n + 1)))
        sym = symmetrize(q)
        gap = mutual_information_bruteforce(params, q) - mutual_information_bruteforce(params, sym)
        worst = max(worst, gap)
        violations += int(gap > VIOLATION_TOL)
        idempotence = max(idempotence, float(np.max(np.abs(symmetrize(sym).probs - sym.probs))))
    log("Info", f"symmetrization: {trials} trials, {violations} violations, worst {worst:.2e}")
    return {
        "check": "symmetrization",
        "trials": trials,
        "violations": violations,
        "max_violation": worst,
        "idempotence_error": idempotence,
    }


def check_superadditivity(trials: int = 200, seed: Optional[int] = 0, max_bits: int = 3) -> Dict[str, Any]:
    """
    For X1, X2 independent and an arbitrary joint channel (Y1, Y2 | X1, X2):
    I(X1,X2; Y1,Y2) >= I(X1; Y1) + I(X2; Y2).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    for _ in range(trials):
        nx1, nx2, ny1, ny2 = (1 << int(rng.integers(1, max_bits + 1)) for _ in range(4))
        px1 = _random_distribution(rng, nx1)
        px2 = _random_distribution(rng, nx2)
        kernel = rng.dirichlet(np.full(ny1 * ny2, 0.3), size=(nx1, nx2)).reshape(nx1, nx2, ny1, ny2)
        joint = px1[:, None, None, None] * px2[None, :, None, None] * kernel
        whole = mutual_information_joint(joint.reshape(nx1 * nx2, ny1 * ny2))
        first = mutual_information_joint(joint.sum(axis=(1, 3)))
        second = mutual_information_joint(joint.sum(axis=(0, 2)))
        gap = first + second - whole
        worst = max(worst, gap)
        violations += int(gap > VIOLATION_TOL)
    log("Info", f"superadditivity: {trials} trials, {violations} violations, worst {worst:.2e}")
    return {"check": "superadditivity", "trials": trials, "violations": violations, "max_violation": worst}


def check_feinstein(trials: int = 50, seed: Optional[int] = 0, max_s: int = 4, max_m: int = 5) -> Dict[str, Any]:
    """Shift averages of random block laws satisfy every stationarity row."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    for _ in range(trials):
        s = int(rng.integers(1, max_s + 1))
        m = int(rng.integers(2, max_m + 1))
        base = BlockDistribution(s, _random_distribution(rng, 1 << s))
        avg = feinstein_shift_average(base, m)
        # full equation set, including the row dropped from the solver system
        half = 1 << (m - 1)
        first = avg.probs.reshape(2, half).sum(axis=0)
        later = avg.probs.reshape(half, 2).sum(axis=1)
        residual = float(np.max(np.abs(first - later)))
        worst = max(worst, residual)
        violations += int(residual > VIOLATION_TOL)
    log("Info", f"shift average: {trials} trials, {violations} violations, worst {worst:.2e}")
    return {"check": "feinstein", "trials": trials, "violations": violations, "max_violation": worst}


def check_block_rate(params: ChannelParams, r: int, base: Optional[BlockDistribution] = None) -> Dict[str, Any]:
    """
    Two independent copies of an input law on X_0^r, laid end to end, carry
    at least twice the information of one copy:
    I(X_0^{2r+1}; Y^{2r+1}) >= 2 I(X_0^r; Y^r).
    """
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    base = base or iud_distribution(r + 1)
    if base.length != r + 1:
        raise DomainError(f"base law must cover r+1={r + 1} symbols")
    single = mutual_information_bruteforce(params, base)
    double = mutual_information_bruteforce(params, block_iid_product(base, 2))
    return {
        "check": "block_rate",
        "r": r,
        "single": single,
        "double": double,
        "violation": max(2.0 * single - double, 0.0),
    }
