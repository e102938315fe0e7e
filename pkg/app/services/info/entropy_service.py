"""
Entropy Service
Binary entropy, block entropies and conditional entropies, all in bits.
Uses 0 log 0 = 0 throughout (scipy.special.entr).
"""
from typing import Union

import numpy as np
from scipy.special import entr, xlog1py

from app.services.info.block_service import BlockDistribution
from app.utils.error_handler import DomainError

LN2 = np.log(2.0)
H2_SLACK = 1e-12

ArrayLike = Union[float, np.ndarray]


def binary_entropy(x: ArrayLike) -> ArrayLike:
    """
    h2(x) = -x log2 x - (1-x) log2 (1-x).

    Evaluated on the smaller of x and 1-x so that arguments near 1 keep
    their precision.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(arr)):
        raise DomainError("binary entropy argument is NaN", {"nan_count": int(np.isnan(arr).sum())})
    if np.any(arr < -H2_SLACK) or np.any(arr > 1.0 + H2_SLACK):
        raise DomainError("binary entropy argument outside [0, 1]",
                          {"min": float(arr.min()), "max": float(arr.max())})
    t = np.minimum(np.clip(arr, 0.0, 1.0), 1.0 - np.clip(arr, 0.0, 1.0))
    h = binary_entropy_small(t)
    return float(h) if np.ndim(h) == 0 else h


def binary_entropy_small(t: ArrayLike) -> ArrayLike:
    """h2(t) for t in [0, 1/2] given directly, without forming 1 - t first."""
    t = np.asarray(t, dtype=np.float64)
    return (entr(t) - xlog1py(1.0 - t, -t)) / LN2


def entropy_of(probs: np.ndarray) -> float:
    """Shannon entropy in bits of a raw probability array (any shape)."""
    return float(np.sum(entr(np.asarray(probs, dtype=np.float64))) / LN2)


def entropy(d: BlockDistribution) -> float:
    return entropy_of(d.probs)


def cond_entropy(joint: BlockDistribution, split: int) -> float:
    """
    H(A | B) for a joint over packed blocks whose low *split* bits are A and
    remaining high bits are B.
    """
    if not 0 <= split <= joint.length:
        raise DomainError(f"invalid split index {split} for block length {joint.length}")
    b_marginal = joint.probs.reshape(1 << (joint.length - split), 1 << split).sum(axis=1)
    return max(entropy(joint) - entropy_of(b_marginal), 0.0)
