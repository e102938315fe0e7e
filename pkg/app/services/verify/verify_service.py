"""
Verification Service
Structural checks run by `verify --suite ...`. Every check returns a record
{suite, name, violation, passed}; a suite passes when every violation stays
at or below 1e-10.
"""
import itertools
from typing import Any, Callable, Dict, List

import numpy as np

from app.services.bounds import lower_bound_service as lower
from app.services.channel import did_channel_service as channel
from app.services.info import info_kernel_service as kernel
from app.services.info.entropy_service import binary_entropy
from app.services.state import state_chain_service as chain
from app.utils.validators import ChannelParams

VIOLATION_TOL = 1e-10

CONSISTENCY_POINTS = [(0.3, 0.1, 4), (0.5, 0.5, 3), (0.9, 0.05, 4), (0.2, 0.3, 5)]
STATIONARITY_POINTS = [(0.2, 0.3, 3, 2), (0.5, 0.5, 2, 1), (0.7, 0.1, 3, 2), (0.05, 0.4, 4, 3)]
CLOSED_FORM_PARAMS = [(0.2, 0.3), (0.05, 0.05), (0.4, 0.1), (0.1, 0.6)]
CLOSED_FORM_ALPHAS = [0.0, 0.25, 0.4, 0.6, 1.0]


def _record(suite: str, name: str, violation: float) -> Dict[str, Any]:
    return {"suite": suite, "name": name, "violation": float(violation),
            "passed": bool(violation <= VIOLATION_TOL)}


def consistency_suite() -> List[Dict[str, Any]]:
    out = []
    for p_i, p_d, n_max in CONSISTENCY_POINTS:
        report = channel.check_consistency(ChannelParams(p_i=p_i, p_d=p_d), n_max)
        out.append(_record("consistency", f"p_i={p_i} p_d={p_d} n_max={n_max}",
                           max(report["max_violation"], report["max_normalization_error"])))
    return out


def stationarity_suite() -> List[Dict[str, Any]]:
    out = []
    for p_i, p_d, n_max, k_max in STATIONARITY_POINTS:
        report = channel.check_stationarity_and_bitsymmetry(ChannelParams(p_i=p_i, p_d=p_d), n_max, k_max)
        label = f"p_i={p_i} p_d={p_d} n_max={n_max} k_max={k_max}"
        out.append(_record("stationarity", f"shift {label}", report["shift_violation"]))
        out.append(_record("stationarity", f"bit-symmetry {label}", report["bitsym_violation"]))
    return out


def symmetrization_suite() -> List[Dict[str, Any]]:
    report = kernel.check_symmetrization(ChannelParams(p_i=0.2, p_d=0.3), n_max=4, trials=100, seed=1)
    return [
        _record("symmetrization", "I(sym Q) >= I(Q), 100 inputs", report["max_violation"]),
        _record("symmetrization", "idempotence", report["idempotence_error"]),
    ]


def superadditivity_suite() -> List[Dict[str, Any]]:
    report = kernel.check_superadditivity(trials=200, seed=2)
    out = [_record("superadditivity", "random joint channels, 200 trials", report["max_violation"])]
    params = ChannelParams(p_i=0.2, p_d=0.3)
    for r, alpha in itertools.product((1, 2, 3), (0.5, 0.3)):
        base = kernel.markov_block_distribution(alpha, r + 1)
        block = kernel.check_block_rate(params, r, base)
        out.append(_record("superadditivity", f"DID block rate r={r} alpha={alpha}", block["violation"]))
    return out


def feinstein_suite() -> List[Dict[str, Any]]:
    report = kernel.check_feinstein(trials=100, seed=3)
    return [_record("feinstein", "shift average stationarity, 100 bases", report["max_violation"])]


def closed_form_suite() -> List[Dict[str, Any]]:
    out = []
    worst_first = 0.0
    for (p_i, p_d), alpha in itertools.product(CLOSED_FORM_PARAMS, CLOSED_FORM_ALPHAS):
        params = ChannelParams(p_i=p_i, p_d=p_d)
        worst_first = max(worst_first, abs(lower.first_term(params, alpha)
                                           - lower.first_term_enumerated(params, alpha)))
    out.append(_record("closed-form", "first term vs enumeration, 20 points", worst_first))

    worst_power = 0.0
    worst_entropy = 0.0
    for p_i, p_d in CLOSED_FORM_PARAMS:
        params = ChannelParams(p_i=p_i, p_d=p_d)
        step = chain.one_step_matrix(params).entries
        power = np.eye(2)
        for k in range(1, 21):
            power = step @ power
            worst_power = max(worst_power, float(np.max(np.abs(chain.k_step_matrix(params, k).entries - power))))
        pi = chain.stationary_distribution(params).as_array()
        direct = pi[0] * binary_entropy(step[1, 0]) + pi[1] * binary_entropy(step[0, 1])
        worst_entropy = max(worst_entropy, abs(chain.cond_state_entropy(params, 1) - direct))
    out.append(_record("closed-form", "k-step matrix vs repeated product, k <= 20", worst_power))
    out.append(_record("closed-form", "H(Z_n | Z_{n-1}) vs one-step matrix", worst_entropy))
    return out


SUITES: Dict[str, Callable[[], List[Dict[str, Any]]]] = {
    "consistency": consistency_suite,
    "stationarity": stationarity_suite,
    "symmetrization": symmetrization_suite,
    "superadditivity": superadditivity_suite,
    "feinstein": feinstein_suite,
    "closed-form": closed_form_suite,
}


def run_suite(name: str) -> List[Dict[str, Any]]:
    if name == "all":
        return [record for suite in SUITES.values() for record in suite()]
    return SUITES[name]()
