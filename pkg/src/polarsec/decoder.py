"""Successive-cancellation decoding of q-ary polar codes.

Posteriors are carried in the linear domain and renormalised to sum to one
after every combine step.  Symbols are decided in index order; at a free
position the most likely symbol wins and ties go to the smallest symbol.
All routines accept a batch of received blocks, shape ``(B, N)``, or a
single block of shape ``(N,)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Dmc
from .transform import TransformSpec, bit_reversal_permutation

# relative gap below which two posterior values count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DecodeContext:
    channel: Dmc
    spec: TransformSpec
    frozen_positions: np.ndarray  # 0-based
    frozen_values: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.frozen_positions, dtype=np.int64).ravel()
        val = np.asarray(self.frozen_values, dtype=np.int64).ravel()
        if pos.size != val.size:
            raise ValueError(
                f"{pos.size} frozen positions but {val.size} frozen values"
            )
        if pos.size and (pos.min() < 0 or pos.max() >= self.spec.N or np.unique(pos).size != pos.size):
            raise ValueError("frozen positions must be distinct indices in 0..N-1")
        if val.size and (val.min() < 0 or val.max() >= self.spec.q):
            raise ValueError(f"frozen values must lie in 0..{self.spec.q - 1}")
        if self.channel.input_size != self.spec.q:
            raise ValueError("channel input alphabet does not match the transform")
        object.__setattr__(self, "frozen_positions", pos)
        object.__setattr__(self, "frozen_values", val)

    def frozen_mask(self) -> tuple[np.ndarray, np.ndarray]:
        mask = np.zeros(self.spec.N, dtype=bool)
        vals = np.zeros(self.spec.N, dtype=np.int64)
        mask[self.frozen_positions] = True
        vals[self.frozen_positions] = self.frozen_values
        return mask, vals


def _normalize(p: np.ndarray) -> np.ndarray:
    s = p.sum(axis=-1, keepdims=True)
    dead = s <= 0
    if dead.any():
        # an all-zero vector only arises after a wrong earlier decision
        p = np.where(dead, 1.0, p)
        s = np.where(dead, p.shape[-1], s)
    p /= s
    return p


def _shift_index(q: int) -> np.ndarray:
    return (np.arange(q)[:, None] + np.arange(q)[None, :]) % q


def _minus(l1: np.ndarray, l2: np.ndarray) -> np.ndarray:
    """P(c) proportional to sum_d l1(c + d) l2(d)."""
    q = l1.shape[-1]
    g = l1[..., _shift_index(q)]  # g[..., c, d] = l1[..., c + d]
    return _normalize(np.matmul(g, l2[..., :, None])[..., 0])


def _plus(l1: np.ndarray, l2: np.ndarray, e: np.ndarray) -> np.ndarray:
    """P(d) proportional to l1(e + d) l2(d)."""
    q = l1.shape[-1]
    idx = (e[..., None] + np.arange(q)) % q
    return _normalize(np.take_along_axis(l1, idx, axis=-1) * l2)


def decide(post: np.ndarray) -> np.ndarray:
    """Most likely symbol per row; ties resolved toward the smallest symbol."""
    top = post.max(axis=-1, keepdims=True)
    return np.argmax(post >= top * (1.0 - TIE_RTOL), axis=-1)


class _Run:
    def __init__(self, mask, vals, q, genie=None, keep_post=False, upto=None):
        self.mask, self.vals, self.q = mask, vals, q
        self.genie = genie
        self.upto = len(mask) if upto is None else upto
        self.u_hat = None
        self.post = None
        self.keep_post = keep_post

    def run(self, L: np.ndarray):
        B, N, q = L.shape
        self.u_hat = np.zeros((B, N), dtype=np.int64)
        if self.keep_post:
            self.post = np.zeros((B, N, q))
        self._node(L, 0)

    def _node(self, L: np.ndarray, lo: int) -> np.ndarray:
        """Decode indices lo..lo+M-1; returns the re-encoded x estimate."""
        M = L.shape[1]
        if M == 1:
            return self._leaf(L[:, 0, :], lo)[:, None]
        h = M // 2
        l1, l2 = L[:, :h], L[:, h:]
        e = self._node(_minus(l1, l2), lo)
        if lo + h >= self.upto:
            return np.concatenate([e, np.zeros_like(e)], axis=1)
        d = self._node(_plus(l1, l2, e), lo + h)
        return np.concatenate([(e + d) % self.q, d], axis=1)

    def _leaf(self, p: np.ndarray, i: int) -> np.ndarray:
        if self.keep_post:
            self.post[:, i] = p
        if self.mask[i]:
            if self.vals.ndim == 2:
                dec = self.vals[:, i].copy()
            else:
                dec = np.full(p.shape[0], self.vals[i], dtype=np.int64)
        else:
            dec = decide(p)
        self.u_hat[:, i] = dec
        if self.genie is not None:
            return self.genie[:, i]
        return dec


def _initial_likelihoods(y, w: Dmc, spec: TransformSpec) -> tuple[np.ndarray, bool]:
    y = np.asarray(y)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != spec.N:
        raise ValueError(f"expected received blocks of length {spec.N}, got {y.shape[1]}")
    if y.size and (
        not np.issubdtype(y.dtype, np.integer) or y.min() < 0 or y.max() >= w.output_size
    ):
        raise ValueError(f"channel outputs must be integers in 0..{w.output_size - 1}")
    L = w.probs.T[y]  # (B, N, q)
    # codeword positions leave the encoder in bit-reversed order
    L = L[:, bit_reversal_permutation(spec.n), :]
    return _normalize(L.astype(float)), single


def sc_decode(y, ctx: DecodeContext) -> np.ndarray:
    """Estimate u_1^N from received symbols by successive cancellation."""
    L, single = _initial_likelihoods(y, ctx.channel, ctx.spec)
    mask, vals = ctx.frozen_mask()
    run = _Run(mask, vals, ctx.spec.q)
    run.run(L)
    return run.u_hat[0] if single else run.u_hat


def decode_blocks(y, w: Dmc, spec: TransformSpec, mask: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """SC decoding of a batch where frozen values may differ per row.

    ``mask`` (N,) marks frozen positions; ``vals`` is (N,) or (B, N) and is
    read only where ``mask`` is set.
    """
    L, _ = _initial_likelihoods(np.atleast_2d(y), w, spec)
    vals = np.asarray(vals, dtype=np.int64)
    if vals.ndim == 2 and vals.shape != L.shape[:2]:
        raise ValueError("per-row frozen values must have shape (B, N)")
    run = _Run(np.asarray(mask, dtype=bool), vals, spec.q)
    run.run(L)
    return run.u_hat


def sc_decode_genie(y, true_u, ctx: DecodeContext) -> np.ndarray:
    """Per-index correctness flags when every earlier symbol is set to its true value."""
    L, single = _initial_likelihoods(y, ctx.channel, ctx.spec)
    true_u = np.atleast_2d(np.asarray(true_u, dtype=np.int64))
    if true_u.shape != L.shape[:2]:
        raise ValueError("true_u must have the same shape as y")
    mask, vals = ctx.frozen_mask()
    run = _Run(mask, vals, ctx.spec.q, genie=true_u)
    run.run(L)
    ok = run.u_hat == true_u
    return ok[0] if single else ok


def genie_posteriors(y, true_u, w: Dmc, spec: TransformSpec, upto: int | None = None) -> np.ndarray:
    """Posterior of u_i given (y, true u_1^{i-1}) for every i <= upto; shape (B, N, q).

    Entries past ``upto`` are left at zero.
    """
    L, _ = _initial_likelihoods(y, w, spec)
    true_u = np.atleast_2d(np.asarray(true_u, dtype=np.int64))
    mask = np.zeros(spec.N, dtype=bool)
    run = _Run(mask, np.zeros(spec.N, dtype=np.int64), spec.q, genie=true_u, keep_post=True, upto=upto)
    run.run(L)
    return run.post
