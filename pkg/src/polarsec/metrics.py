"""Information functionals of channels and joint distributions (uniform inputs)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import DegradedPair, Dmc

NORM_TOL = 1e-10


@dataclass(frozen=True)
class ChannelMetrics:
    z_param: float
    sym_capacity_bits: float
    sym_capacity_q: float


def pairwise_overlap(probs: np.ndarray) -> np.ndarray:
    """Matrix of sum_y sqrt(W(y|x) W(y|x')) over all input pairs."""
    s = np.sqrt(probs)
    return s @ s.T


def bhattacharyya(w: Dmc) -> float:
    """Z(W) averaged over ordered pairs of distinct inputs.

    Uses the normalisation 1/(q(q-1)), so Z is 0 for a noiseless channel and 1
    for a channel whose rows are identical.
    """
    q = w.input_size
    if q < 2:
        return 0.0
    ov = pairwise_overlap(w.probs)
    off = ov.sum() - np.trace(ov)
    return float(np.clip(off / (q * (q - 1)), 0.0, 1.0))


def xlogx_sum(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(np.sum(p * np.log2(p)))


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    return max(-xlogx_sum(p), 0.0)


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])


def symmetric_capacity(w: Dmc) -> float:
    """I(X;Y) in bits for uniform X."""
    q = w.input_size
    joint = w.probs / q
    return exact_mutual_information(joint)


def channel_metrics(w: Dmc) -> ChannelMetrics:
    bits = symmetric_capacity(w)
    return ChannelMetrics(bhattacharyya(w), bits, bits / np.log2(w.input_size))


def secrecy_capacity(pair: DegradedPair) -> float:
    return max(symmetric_capacity(pair.main) - symmetric_capacity(pair.wiretap), 0.0)


def exact_mutual_information(joint) -> float:
    """I(A;B) in bits from a 2-D joint probability table."""
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2:
        raise ValueError("joint table must be 2-D")
    if np.any(p < 0):
        raise ValueError("joint table has negative entries")
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"joint table sums to {total!r}, not 1")
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    mi = xlogx_sum(p) - xlogx_sum(pa) - xlogx_sum(pb)
    return float(min(max(mi, 0.0), np.log2(min(p.shape))))
