"""The polar transform over Z_q and the synthesized (split) channels.

Index convention: split channel ``i`` (1-based) is obtained from ``W`` by
walking the bits of ``i - 1`` from most to least significant and applying the
``minus`` combine for a 0 bit and the ``plus`` combine for a 1 bit.  This is
the order in which the successive-cancellation decoder visits the symbols.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Dmc
from .errors import ResourceError
from .metrics import bhattacharyya, symmetric_capacity
from .ring import Alphabet

EXACT_CAP = 8
BRUTE_FORCE_BUDGET = 20_000_000
# sqrt-posterior grid used to merge columns carrying the same posterior
MERGE_GRID = 1e-13


@dataclass(frozen=True)
class TransformSpec:
    n: int
    alphabet: Alphabet

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def q(self) -> int:
        return self.alphabet.q

    @classmethod
    def of(cls, q: int, n: int) -> "TransformSpec":
        return cls(n, Alphabet(q))


def bit_reversal_permutation(n: int) -> np.ndarray:
    N = 1 << n
    idx = np.arange(N)
    rev = np.zeros(N, dtype=np.int64)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return rev


def _check_block(u, spec: TransformSpec) -> np.ndarray:
    u = np.asarray(u)
    if u.shape[-1:] != (spec.N,):
        raise ValueError(f"expected blocks of length {spec.N}, got shape {u.shape}")
    if u.size and (not np.issubdtype(u.dtype, np.integer) or u.min() < 0 or u.max() >= spec.q):
        raise ValueError(f"symbols must be integers in 0..{spec.q - 1}")
    return u.astype(np.int64)


def _butterflies(x: np.ndarray, q: int, sign: int) -> np.ndarray:
    N = x.shape[-1]
    lead = x.shape[:-1]
    h = N // 2
    while h >= 1:
        v = x.reshape(*lead, N // (2 * h), 2, h)
        v[..., 0, :] = (v[..., 0, :] + sign * v[..., 1, :]) % q
        h //= 2
    return x


def encode_transform(u, spec: TransformSpec) -> np.ndarray:
    """x = u G_N over Z_q, with G_N = B_N F^{(x)n} and kernel (a, b) -> (a + b, b).

    Works on a single block or on a batch stacked along leading axes.
    """
    x = _check_block(u, spec).copy()
    x = _butterflies(x, spec.q, +1)
    return x[..., bit_reversal_permutation(spec.n)]


def invert_transform(x, spec: TransformSpec) -> np.ndarray:
    x = _check_block(x, spec)
    u = x[..., bit_reversal_permutation(spec.n)].copy()
    return _butterflies(u, spec.q, -1)


def generator_matrix(spec: TransformSpec) -> np.ndarray:
    """Dense G_N = B_N F^{(x)n} with F = [[1, 0], [1, 1]]."""
    f = np.array([[1, 0], [1, 1]], dtype=np.int64)
    g = np.ones((1, 1), dtype=np.int64)
    for _ in range(spec.n):
        g = np.kron(g, f)
    return g[bit_reversal_permutation(spec.n)] % spec.q


# -- split channels ---------------------------------------------------------

def merge_columns(probs: np.ndarray) -> np.ndarray:
    """Drop all-zero columns and merge columns with equal posteriors.

    Columns that are scalar multiples of each other carry the same posterior
    and are merged by summation; Z and I are unchanged by this.
    """
    col = probs.sum(axis=0)
    keep = col > 0
    p = probs[:, keep]
    col = col[keep]
    key = np.rint(np.sqrt(p / col) / MERGE_GRID).astype(np.int64)
    _, inv = np.unique(key.T, axis=0, return_inverse=True)
    inv = inv.ravel()
    out = np.zeros((p.shape[0], inv.max() + 1))
    for x in range(p.shape[0]):
        out[x] = np.bincount(inv, weights=p[x], minlength=out.shape[1])
    return out


def minus_combine(probs: np.ndarray) -> np.ndarray:
    """W^-(y1, y2 | c) = (1/q) sum_d W(y1 | c + d) W(y2 | d)."""
    q, m = probs.shape
    out = np.zeros((q, m, m))
    for d in range(q):
        out += np.roll(probs, -d, axis=0)[:, :, None] * probs[d][None, None, :]
    return merge_columns(out.reshape(q, m * m) / q)


def plus_combine(probs: np.ndarray) -> np.ndarray:
    """W^+(y1, y2, c | d) = (1/q) W(y1 | c + d) W(y2 | d)."""
    q, m = probs.shape
    out = np.empty((q, q, m, m))
    for c in range(q):
        out[:, c] = np.roll(probs, -c, axis=0)[:, :, None] * probs[:, None, :]
    return merge_columns(out.reshape(q, q * m * m) / q)


def index_path(i: int, n: int) -> list[int]:
    """Bits of i-1, most significant first: 0 = minus, 1 = plus."""
    return [((i - 1) >> (n - 1 - k)) & 1 for k in range(n)]


@dataclass(frozen=True)
class SynthesizedChannel:
    index: int
    law: Dmc

    @property
    def z(self) -> float:
        return bhattacharyya(self.law)

    @property
    def capacity(self) -> float:
        return symmetric_capacity(self.law)


def _check_index(i: int, spec: TransformSpec) -> None:
    if not 1 <= i <= spec.N:
        raise ValueError(f"channel index must be in 1..{spec.N}, got {i}")


def synthesize_exact(w: Dmc, spec: TransformSpec, i: int, cap: int = EXACT_CAP) -> SynthesizedChannel:
    """Exact law of the i-th split channel (1-based), for N <= cap.

    Built by composing the two-channel kernel along the index path; columns
    with identical posteriors are merged after each step so the output
    alphabet stays small without changing the channel's statistics.
    """
    if spec.N > cap:
        raise ResourceError(f"exact synthesis capped at N={cap}, requested N={spec.N}")
    if w.input_size != spec.q:
        raise ValueError("channel input alphabet does not match the transform")
    _check_index(i, spec)
    p = np.array(w.probs)
    for bit in index_path(i, spec.n):
        p = plus_combine(p) if bit else minus_combine(p)
    p = p / p.sum(axis=1, keepdims=True)
    return SynthesizedChannel(i, Dmc(p))


def synthesize_bruteforce(
    w: Dmc, spec: TransformSpec, i: int, budget: int = BRUTE_FORCE_BUDGET
) -> SynthesizedChannel:
    """Literal splitting sum over all u_{i+1..N}, without any merging.

    The output symbol is the pair (y_1^N, u_1^{i-1}) flattened with y as the
    major index.  Meant as a reference at very small sizes.
    """
    _check_index(i, spec)
    q, N, ny = spec.q, spec.N, w.output_size
    if q**N * ny**N > budget:
        raise ResourceError(f"brute-force synthesis needs {q**N * ny**N} entries, budget {budget}")
    us = np.indices((q,) * N).reshape(N, -1).T
    xs = encode_transform(us, spec)
    table = w.probs[xs[:, 0]]
    for k in range(1, N):
        table = (table[:, :, None] * w.probs[xs[:, k]][:, None, :]).reshape(len(us), -1)
    t = table.reshape((q,) * N + (ny**N,))
    t = t.sum(axis=tuple(range(i, N))) if i < N else t
    t = np.moveaxis(t, i - 1, 0)
    # remaining axes: u_1..u_{i-1}, y
    t = np.moveaxis(t, -1, 1).reshape(q, -1) / q ** (N - 1)
    return SynthesizedChannel(i, Dmc(t))


def qec_z_recursion(eps: float, spec: TransformSpec) -> np.ndarray:
    """Erasure probabilities of all split channels of QEC(eps), in index order."""
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    z = np.array([eps])
    for _ in range(spec.n):
        nxt = np.empty(2 * z.size)
        nxt[0::2] = 2 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


def monte_carlo_z(
    w: Dmc, spec: TransformSpec, i: int, trials: int, seed: int
) -> tuple[float, float]:
    """Estimate Z of split channel ``i`` by genie-aided sampling.

    Each trial draws a uniform u and channel outputs, runs the SC recursion
    with all earlier symbols set to their true values, and averages
    ``((sum_x sqrt(post(x)))^2 - 1) / (q - 1)`` over the posterior at ``i``.
    That summand has expectation exactly Z(W_N^(i)).  Returns the estimate and
    a 95% normal-approximation halfwidth.
    """
    _check_index(i, spec)
    est = genie_statistics(w, spec, trials, seed, upto=i)
    return float(est.z[i - 1]), float(est.z_halfwidth[i - 1])


@dataclass
class GenieEstimate:
    z: np.ndarray
    z_halfwidth: np.ndarray
    capacity: np.ndarray


def genie_statistics(
    w: Dmc, spec: TransformSpec, trials: int, seed: int, upto: int | None = None, batch: int = 2048
) -> GenieEstimate:
    """Monte-Carlo Z and capacity (bits) of split channels 1..upto.

    Trial ``t`` uses its own random stream derived from ``(seed, t)``, so the
    result does not depend on how trials are batched.
    """
    from .decoder import genie_posteriors
    from .sim import sample_uniform_blocks

    if trials < 1:
        raise ValueError("trials must be >= 1")
    upto = spec.N if upto is None else upto
    q = spec.q
    s1 = np.zeros(upto)
    s2 = np.zeros(upto)
    hsum = np.zeros(upto)
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        u, y = sample_uniform_blocks(w, spec, seed, start, stop)
        post = np.clip(genie_posteriors(y, u, w, spec, upto=upto)[:, :upto, :], 0.0, None)
        root = np.sqrt(post).sum(axis=2)
        zv = np.clip((root**2 - 1.0) / (q - 1), 0.0, 1.0)
        s1 += zv.sum(axis=0)
        s2 += (zv**2).sum(axis=0)
        safe = np.where(post > 0, post, 1.0)
        hsum -= (post * np.log2(safe)).sum(axis=(0, 2))
    mean = s1 / trials
    if trials > 1:
        var = np.maximum(s2 - trials * mean**2, 0.0) / (trials - 1)
        hw = 1.96 * np.sqrt(var / trials)
    else:
        hw = np.full(upto, np.inf)
    cap = np.maximum(math.log2(q) - hsum / trials, 0.0)
    return GenieEstimate(np.clip(mean, 0.0, 1.0), hw, cap)


# -- polarization profile ---------------------------------------------------

@dataclass
class PolarizationProfile:
    z: np.ndarray
    capacity: np.ndarray
    method: list[str]
    halfwidth: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.capacity = np.asarray(self.capacity, dtype=float)
        if np.any(self.z < 0) or np.any(self.z > 1):
            raise ValueError("Z estimates must lie in [0, 1]")

    def __len__(self):
        return self.z.size

    def fraction_below(self, t: float) -> float:
        return float(np.mean(self.z < t))

    def fraction_above(self, t: float) -> float:
        return float(np.mean(self.z > t))

    def write_table(self, path, delimiter: str = ",") -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            wr.writerow(["index", "z", "capacity", "method"])
            for k in range(len(self)):
                wr.writerow([k + 1, repr(float(self.z[k])), repr(float(self.capacity[k])), self.method[k]])

    @classmethod
    def read_table(cls, path, delimiter: str = ",") -> "PolarizationProfile":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh, delimiter=delimiter))
        return cls(
            np.array([float(r["z"]) for r in rows]),
            np.array([float(r["capacity"]) for r in rows]),
            [r["method"] for r in rows],
        )


def _is_qec(w: Dmc) -> float | None:
    """Return eps if ``w`` is exactly QEC(eps) in the canonical layout."""
    q = w.input_size
    p = w.probs
    if p.shape != (q, q + 1):
        return None
    eps = p[0, q]
    expect = np.zeros_like(p)
    expect[np.arange(q), np.arange(q)] = 1.0 - eps
    expect[:, q] = eps
    return float(eps) if np.array_equal(p, expect) else None


def polarization_profile(
    w: Dmc | float,
    spec: TransformSpec,
    method: str = "auto",
    trials: int = 10_000,
    seed: int = 0,
    cap: int = EXACT_CAP,
) -> PolarizationProfile:
    """Per-index Z and capacity (bits) using the cheapest exact route available.

    ``w`` may be a channel or a bare erasure probability.  ``method`` is one of
    ``auto``, ``recursion``, ``exact`` or ``mc``.
    """
    if method not in ("auto", "recursion", "exact", "mc"):
        raise ValueError(f"unknown method {method!r}")
    log_q = math.log2(spec.q)
    eps = None
    if isinstance(w, (int, float)):
        eps = float(w)
        if method in ("exact", "mc"):
            from .channel import make_qec

            w = make_qec(spec.alphabet, eps)
    else:
        eps = _is_qec(w)

    if method == "recursion" or (method == "auto" and eps is not None):
        if eps is None:
            raise ValueError("the erasure recursion applies only to q-ary erasure channels")
        z = qec_z_recursion(eps, spec)
        return PolarizationProfile(z, (1.0 - z) * log_q, ["erasure-recursion"] * spec.N)

    if method == "exact" or (method == "auto" and spec.N <= cap):
        chans = [synthesize_exact(w, spec, i, cap=cap) for i in range(1, spec.N + 1)]
        return PolarizationProfile(
            [c.z for c in chans], [c.capacity for c in chans], ["exact"] * spec.N
        )

    est = genie_statistics(w, spec, trials, seed)
    return PolarizationProfile(est.z, est.capacity, ["monte-carlo"] * spec.N, est.z_halfwidth)
