"""Secret encoding, legitimate decoding and eavesdropper analysis.

The input block ``u`` carries the message on ``partition.info``, uniform
random symbols on ``partition.random`` and a fixed frozen vector on
``partition.frozen``; the codeword is ``u G_N``.  Exact quantities are
obtained by enumerating messages, random symbols and channel outputs and are
only available for tiny blocks; Monte-Carlo counterparts cover the rest.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import DegradedPair, Dmc
from .construction import IndexPartition
from .decoder import decode_blocks
from .errors import ConsistencyError, ResourceError
from .metrics import binary_entropy, entropy, exact_mutual_information
from .sim import trial_rng
from .transform import TransformSpec, encode_transform

EXHAUSTIVE_CAP = 8
DEFAULT_BUDGET = 20_000_000
DECODE_CHUNK = 1 << 15

STREAM_TRIALS = 1
STREAM_FROZEN = 2


# -- messages ---------------------------------------------------------------

@dataclass(frozen=True)
class MessageDist:
    """Distribution of the secret message: i.i.d. symbols, uniform by default."""

    symbol_probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.symbol_probs is not None:
            p = np.asarray(self.symbol_probs, dtype=float)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
                raise ValueError("message symbol probabilities must be nonnegative and sum to 1")
            object.__setattr__(self, "symbol_probs", tuple(float(v) for v in p))

    @property
    def uniform(self) -> bool:
        return self.symbol_probs is None

    def _symbol(self, q: int) -> np.ndarray:
        if self.symbol_probs is None:
            return np.full(q, 1.0 / q)
        if len(self.symbol_probs) != q:
            raise ValueError(f"message distribution has {len(self.symbol_probs)} symbols, alphabet has {q}")
        return np.asarray(self.symbol_probs)

    def probabilities(self, q: int, k: int) -> np.ndarray:
        """Probability of every message, in the order of ``all_words(q, k)``."""
        p = np.ones(1)
        sym = self._symbol(q)
        for _ in range(k):
            p = np.outer(p, sym).ravel()
        return p

    def entropy(self, q: int, k: int) -> float:
        return k * entropy(self._symbol(q))

    def sample(self, q: int, k: int, rng: np.random.Generator) -> np.ndarray:
        if self.symbol_probs is None:
            return rng.integers(q, size=k)
        return rng.choice(q, size=k, p=self._symbol(q))

    def to_json(self):
        return "uniform" if self.symbol_probs is None else list(self.symbol_probs)

    @classmethod
    def from_json(cls, value) -> "MessageDist":
        if value in (None, "uniform"):
            return cls()
        if isinstance(value, (list, tuple)):
            return cls(tuple(value))
        raise ValueError(f"message_dist must be 'uniform' or a list of symbol probabilities, got {value!r}")


def all_words(q: int, length: int) -> np.ndarray:
    """All words of the given length, first symbol most significant."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices((q,) * length).reshape(length, -1).T.astype(np.int64)


def message_entropy_rate(dist: MessageDist, q: int, k: int, N: int) -> float:
    """H(M) / N in bits per channel use."""
    return dist.entropy(q, k) / N


# -- the code ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WiretapCode:
    partition: IndexPartition
    frozen_vector: np.ndarray
    pair: DegradedPair
    spec: TransformSpec

    def __post_init__(self):
        fv = np.asarray(self.frozen_vector, dtype=np.int64).ravel()
        if fv.size != self.partition.frozen.size:
            raise ValueError(
                f"frozen vector has {fv.size} symbols, partition freezes {self.partition.frozen.size}"
            )
        if fv.size and (fv.min() < 0 or fv.max() >= self.spec.q):
            raise ValueError(f"frozen symbols must lie in 0..{self.spec.q - 1}")
        if self.partition.N != self.spec.N:
            raise ValueError("partition length does not match the transform")
        if self.pair.q != self.spec.q:
            raise ValueError("channel alphabet does not match the transform")
        object.__setattr__(self, "frozen_vector", fv)

    @property
    def k(self) -> int:
        return self.partition.k

    @property
    def r(self) -> int:
        return self.partition.r

    @property
    def q(self) -> int:
        return self.spec.q

    def with_frozen(self, frozen_vector) -> "WiretapCode":
        return WiretapCode(self.partition, frozen_vector, self.pair, self.spec)

    def assemble(self, m, u_random) -> np.ndarray:
        """Place message, random and frozen symbols into u (batched on leading axes)."""
        m = np.asarray(m, dtype=np.int64)
        u_random = np.asarray(u_random, dtype=np.int64)
        if m.shape[-1:] != (self.k,):
            raise ValueError(f"message must have {self.k} symbols, got shape {m.shape}")
        if u_random.shape[-1:] != (self.r,):
            raise ValueError(f"random vector must have {self.r} symbols, got shape {u_random.shape}")
        lead = np.broadcast_shapes(m.shape[:-1], u_random.shape[:-1])
        u = np.empty(lead + (self.spec.N,), dtype=np.int64)
        u[..., self.partition.info] = m
        u[..., self.partition.random] = u_random
        u[..., self.partition.frozen] = self.frozen_vector
        return u


def secret_encode(m, u_random, code: WiretapCode) -> np.ndarray:
    return encode_transform(code.assemble(m, u_random), code.spec)


def _frozen_layout(code: WiretapCode) -> tuple[np.ndarray, np.ndarray]:
    mask = np.zeros(code.spec.N, dtype=bool)
    vals = np.zeros(code.spec.N, dtype=np.int64)
    mask[code.partition.frozen] = True
    vals[code.partition.frozen] = code.frozen_vector
    return mask, vals


def bob_decode(y, code: WiretapCode) -> tuple[np.ndarray, np.ndarray]:
    """SC-decode main-channel outputs; returns (message, random symbols)."""
    y = np.asarray(y)
    mask, vals = _frozen_layout(code)
    u = decode_blocks(y, code.pair.main, code.spec, mask, vals)
    if y.ndim == 1:
        u = u[0]
    return u[..., code.partition.info], u[..., code.partition.random]


def eve_decode_random(z, m, code: WiretapCode) -> np.ndarray:
    """Eve's SC estimate of the random symbols with message and frozen symbols revealed."""
    z = np.atleast_2d(np.asarray(z))
    m = np.atleast_2d(np.asarray(m, dtype=np.int64))
    mask, vals = _frozen_layout(code)
    mask[code.partition.info] = True
    rows = np.broadcast_to(vals, (z.shape[0], code.spec.N)).copy()
    rows[:, code.partition.info] = m
    u = decode_blocks(z, code.pair.wiretap, code.spec, mask, rows)
    return u[:, code.partition.random]


def lemma1_bound(z_main, partition: IndexPartition) -> float:
    """Union bound on SC block error: sum of Z over the non-frozen indices."""
    return float(np.sum(np.asarray(z_main)[partition.a_main]))


def lemma3_bound(code: WiretapCode, p_e: float) -> float:
    """H_b(p_e) + r log2(q) p_e, bounding H(U_R | Z, U_I, U_F)."""
    if not 0.0 <= p_e <= 1.0:
        raise ValueError(f"p_e must lie in [0, 1], got {p_e}")
    return binary_entropy(p_e) + code.r * math.log2(code.q) * p_e


# -- exact analysis ---------------------------------------------------------

def _check_exhaustive(code: WiretapCode, entries: int, budget: int) -> None:
    if code.spec.N > EXHAUSTIVE_CAP:
        raise ResourceError(f"exhaustive analysis capped at N={EXHAUSTIVE_CAP}, got N={code.spec.N}")
    if entries > budget:
        raise ResourceError(f"exhaustive analysis needs {entries} table entries, budget is {budget}")


def block_likelihoods(w: Dmc, xs: np.ndarray) -> np.ndarray:
    """W^N(y | x) for every row of ``xs`` and every y, y_1 most significant."""
    table = w.probs[xs[:, 0]]
    for j in range(1, xs.shape[1]):
        table = (table[:, :, None] * w.probs[xs[:, j]][:, None, :]).reshape(xs.shape[0], -1)
    return table


def _path_likelihood(w: Dmc, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.prod(w.probs[xs, ys], axis=1)


def eve_joint(code: WiretapCode, dist: MessageDist | None = None, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Exact p(m, u_R, z) given the frozen vector; shape (q^k, q^r, |Z|^N)."""
    dist = dist or MessageDist()
    q, k, r, N = code.q, code.k, code.r, code.spec.N
    nz = code.pair.wiretap.output_size
    _check_exhaustive(code, q ** (k + r) * nz**N, budget)
    pm = dist.probabilities(q, k)
    ms = all_words(q, k)
    rs = all_words(q, r)
    u = code.assemble(ms[:, None, :], rs[None, :, :]).reshape(-1, N)
    lik = block_likelihoods(code.pair.wiretap, encode_transform(u, code.spec))
    return lik.reshape(q**k, q**r, -1) * pm[:, None, None] / q**r


def exact_leakage(code: WiretapCode, dist: MessageDist | None = None, budget: int = DEFAULT_BUDGET) -> float:
    """I(M; Z_1^N) / k in bits per message symbol (0 when k = 0)."""
    if code.k == 0:
        return 0.0
    joint = eve_joint(code, dist, budget).sum(axis=1)
    return exact_mutual_information(joint / joint.sum()) / code.k


@dataclass
class EveExact:
    leakage: float  # I(M;Z)/k
    mutual_information: float  # I(M;Z)
    equivocation: float  # H(U_R | Z, U_I, U_F)
    map_error: float  # MAP error for U_R given (Z, U_I, U_F)
    sc_error: float  # SC decoder error for U_R given (Z, U_I, U_F)


def _sc_random_error(code: WiretapCode, pm: np.ndarray) -> float:
    """Exact block error of Eve's SC estimate of U_R, by enumerating (m, z)."""
    q, N = code.q, code.spec.N
    w = code.pair.wiretap
    ms = all_words(q, code.k)
    zs = all_words(w.output_size, N)
    correct = 0.0
    for mi, m in enumerate(ms):
        if pm[mi] == 0:
            continue
        for s in range(0, zs.shape[0], DECODE_CHUNK):
            z = zs[s : s + DECODE_CHUNK]
            r_hat = eve_decode_random(z, np.broadcast_to(m, (z.shape[0], code.k)), code)
            x = encode_transform(code.assemble(np.broadcast_to(m, (z.shape[0], code.k)), r_hat), code.spec)
            correct += pm[mi] * _path_likelihood(w, x, z).sum() / q**code.r
    return float(min(max(1.0 - correct, 0.0), 1.0))


def exact_eve_analysis(
    code: WiretapCode, dist: MessageDist | None = None, budget: int = DEFAULT_BUDGET
) -> EveExact:
    dist = dist or MessageDist()
    t = eve_joint(code, dist, budget)
    t = t / t.sum()
    pmz = t.sum(axis=1)
    mi = exact_mutual_information(pmz) if code.k else 0.0
    # H(U_R | Z, M) = H(M, U_R, Z) - H(M, Z); frozen symbols are fixed
    equiv = max(entropy(t) - entropy(pmz), 0.0)
    map_err = float(min(max(1.0 - t.max(axis=1).sum(), 0.0), 1.0))
    sc_err = _sc_random_error(code, dist.probabilities(code.q, code.k))
    return EveExact(mi / code.k if code.k else 0.0, mi, equiv, map_err, sc_err)


def exact_bob_bler(code: WiretapCode, dist: MessageDist | None = None, budget: int = DEFAULT_BUDGET) -> float:
    """Exact SC block-error probability of Bob for this frozen vector.

    Every main-channel output block is decoded once; the probability of a
    correct decision is the sum over y of p(u = u_hat(y)) W^N(y | u_hat(y) G_N).
    """
    dist = dist or MessageDist()
    q, N = code.q, code.spec.N
    w = code.pair.main
    _check_exhaustive(code, w.output_size**N, budget)
    ys = all_words(w.output_size, N)
    sym = dist._symbol(q)
    correct = 0.0
    for s in range(0, ys.shape[0], DECODE_CHUNK):
        y = ys[s : s + DECODE_CHUNK]
        m_hat, r_hat = bob_decode(y, code)
        pm = np.prod(sym[m_hat], axis=1) if code.k else np.ones(y.shape[0])
        x = secret_encode(m_hat, r_hat, code)
        correct += float(np.sum(pm * _path_likelihood(w, x, y))) / q**code.r
    return float(min(max(1.0 - correct, 0.0), 1.0))


# -- Monte-Carlo trials -----------------------------------------------------

@dataclass
class TrialCounts:
    trials: int = 0
    bob_errors: int = 0
    eve_errors: int = 0

    def __add__(self, other: "TrialCounts") -> "TrialCounts":
        return TrialCounts(
            self.trials + other.trials,
            self.bob_errors + other.bob_errors,
            self.eve_errors + other.eve_errors,
        )


def _trial_chunk(code: WiretapCode, dist: MessageDist, seed: int, start: int, stop: int, eve: bool) -> TrialCounts:
    q, k, r, N = code.q, code.k, code.r, code.spec.N
    B = stop - start
    ms = np.empty((B, k), dtype=np.int64)
    rs = np.empty((B, r), dtype=np.int64)
    ys = np.empty((B, N), dtype=np.int64)
    zs = np.empty((B, N), dtype=np.int64)
    for row, t in enumerate(range(start, stop)):
        rng = trial_rng(seed, t, STREAM_TRIALS)
        ms[row] = dist.sample(q, k, rng)
        rs[row] = rng.integers(q, size=r)
        x = encode_transform(code.assemble(ms[row], rs[row]), code.spec)
        ys[row] = code.pair.main.sample(x, rng)
        # Eve observes Bob's output passed through the degrading channel
        zs[row] = code.pair.degrader.sample(ys[row], rng)
    m_hat, r_hat = bob_decode(ys, code)
    bob_err = int(np.sum(np.any(m_hat != ms, axis=1) | np.any(r_hat != rs, axis=1)))
    eve_err = 0
    if eve and r:
        eve_err = int(np.sum(np.any(eve_decode_random(zs, ms, code) != rs, axis=1)))
    return TrialCounts(B, bob_err, eve_err)


def run_trials(
    code: WiretapCode,
    trials: int,
    seed: int,
    dist: MessageDist | None = None,
    eve: bool = True,
    workers: int = 1,
    chunk: int | None = None,
) -> TrialCounts:
    """Simulate ``trials`` transmissions; counts Bob block errors and Eve U_R errors.

    Trial ``t`` draws everything from the stream for ``(seed, t)``, so the
    counts are identical for any ``workers`` and ``chunk``.
    """
    dist = dist or MessageDist()
    if chunk is None:
        chunk = int(min(4096, max(64, (1 << 22) // code.spec.N)))
    spans = [(s, min(trials, s + chunk)) for s in range(0, trials, chunk)]
    total = TrialCounts()
    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_trial_chunk, code, dist, seed, a, b, eve) for a, b in spans]
            for f in futs:
                total = total + f.result()
    else:
        for a, b in spans:
            total = total + _trial_chunk(code, dist, seed, a, b, eve)
    return total


def chain_leakage_bound(code: WiretapCode, wire_capacity_bits: float, p_e: float) -> float:
    """Upper estimate of I(M;Z)/k from N I(W_w) - r log2 q + H_b(P_e) + r log2(q) P_e.

    Clipped to [0, log2 q].  Used when exact enumeration is out of budget.
    """
    if code.k == 0:
        return 0.0
    N, r, lq = code.spec.N, code.r, math.log2(code.q)
    val = N * wire_capacity_bits - r * lq + lemma3_bound(code, p_e)
    return float(min(max(val / code.k, 0.0), lq))


# -- frozen-vector ensemble -------------------------------------------------

@dataclass
class EnsembleResult:
    best: np.ndarray
    candidates: list[np.ndarray]
    bob_bler: np.ndarray
    leak_proxy: np.ndarray
    exhaustive: bool
    method: str
    average_bler: float = field(init=False)
    average_leak: float = field(init=False)

    def __post_init__(self):
        self.average_bler = float(np.mean(self.bob_bler))
        self.average_leak = float(np.mean(self.leak_proxy))


def ensemble_search(
    code: WiretapCode,
    samples: int,
    seed: int,
    trials_per_sample: int,
    dist: MessageDist | None = None,
    budget: int = DEFAULT_BUDGET,
    wire_capacity_bits: float | None = None,
    workers: int = 1,
) -> EnsembleResult:
    """Pick a frozen vector from the polar-code ensemble.

    ``code.frozen_vector`` is ignored.  Candidates are enumerated when
    ``q^|frozen| <= samples``, otherwise drawn uniformly.  Each candidate gets
    Bob's block-error rate and a leakage proxy (exact when enumeration fits the
    budget, simulated otherwise); the lexicographic minimum is returned.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    dist = dist or MessageDist()
    q, nf = code.q, code.partition.frozen.size
    exhaustive = q**nf <= samples
    if exhaustive:
        cands = list(all_words(q, nf))
    else:
        cands = [trial_rng(seed, s, STREAM_FROZEN).integers(q, size=nf) for s in range(samples)]

    N = code.spec.N
    bob_exact = N <= EXHAUSTIVE_CAP and code.pair.main.output_size**N <= budget
    nz = code.pair.wiretap.output_size
    eve_exact = N <= EXHAUSTIVE_CAP and q ** (code.k + code.r) * nz**N <= budget
    if not eve_exact and wire_capacity_bits is None:
        from .metrics import symmetric_capacity

        wire_capacity_bits = symmetric_capacity(code.pair.wiretap)

    blers, leaks = [], []
    for fv in cands:
        c = code.with_frozen(fv)
        counts = None
        if bob_exact:
            blers.append(exact_bob_bler(c, dist, budget))
        else:
            counts = run_trials(c, trials_per_sample, seed, dist, eve=not eve_exact, workers=workers)
            blers.append(counts.bob_errors / counts.trials)
        if eve_exact:
            leaks.append(exact_leakage(c, dist, budget))
        else:
            if counts is None:
                counts = run_trials(c, trials_per_sample, seed, dist, eve=True, workers=workers)
            leaks.append(chain_leakage_bound(c, wire_capacity_bits, counts.eve_errors / counts.trials))
    blers = np.array(blers)
    leaks = np.array(leaks)
    order = np.lexsort((leaks, blers))
    best = int(order[0])
    res = EnsembleResult(
        np.asarray(cands[best], dtype=np.int64),
        [np.asarray(c, dtype=np.int64) for c in cands],
        blers,
        leaks,
        exhaustive,
        "exact" if bob_exact else "monte-carlo",
    )
    if blers[best] > res.average_bler + 1e-12:
        raise ConsistencyError("best frozen vector is worse than the ensemble average")
    return res
