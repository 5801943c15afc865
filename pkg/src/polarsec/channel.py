"""Discrete memoryless channels as explicit transition matrices.

A channel is stored as a ``q x |Y|`` row-stochastic matrix with
``probs[x, y] = W(y|x)``.  For the q-ary erasure channel the erasure symbol is
always the last output index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ring import Alphabet

ROW_TOL = 1e-12
DEGRADED_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Dmc:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"transition matrix must be 2-D and non-empty, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("transition probabilities must be finite and nonnegative")
        dev = np.max(np.abs(p.sum(axis=1) - 1.0))
        if dev > ROW_TOL:
            raise ValueError(f"rows must sum to 1 (max deviation {dev:.3e})")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def input_size(self) -> int:
        return self.probs.shape[0]

    @property
    def output_size(self) -> int:
        return self.probs.shape[1]

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.input_size)

    def __repr__(self):
        return f"Dmc(q={self.input_size}, outputs={self.output_size})"

    def allclose(self, other: "Dmc", atol: float = 1e-12) -> bool:
        return self.probs.shape == other.probs.shape and bool(
            np.allclose(self.probs, other.probs, rtol=0.0, atol=atol)
        )

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one channel output per input symbol (any array shape)."""
        x = np.asarray(x)
        cdf = np.cumsum(self.probs, axis=1)
        cdf[:, -1] = 1.0
        u = rng.random(x.shape)
        y = (u[..., None] >= cdf[x]).sum(axis=-1)
        return np.minimum(y, self.output_size - 1)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "q": self.input_size,
            "output_size": self.output_size,
            "rows": self.probs.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Dmc":
        try:
            q, size, rows = int(doc["q"]), int(doc["output_size"]), doc["rows"]
        except KeyError as exc:
            raise ValueError(f"channel document missing field {exc}") from None
        w = cls(np.array(rows, dtype=float))
        if w.input_size != q or w.output_size != size:
            raise ValueError(
                f"channel document declares {q}x{size} but rows are {w.input_size}x{w.output_size}"
            )
        return w

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "Dmc":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class DegradedPair:
    main: Dmc
    wiretap: Dmc
    degrader: Dmc

    def __post_init__(self):
        if self.main.input_size != self.wiretap.input_size:
            raise ValueError("main and wiretap channels must share the input alphabet")
        if self.degrader.input_size != self.main.output_size:
            raise ValueError("degrader input alphabet must match main output alphabet")
        if self.degrader.output_size != self.wiretap.output_size:
            raise ValueError("degrader output alphabet must match wiretap output alphabet")
        err = np.max(np.abs(self.main.probs @ self.degrader.probs - self.wiretap.probs))
        if err > DEGRADED_TOL:
            raise ValueError(f"wiretap is not main followed by degrader (max error {err:.3e})")

    @property
    def q(self) -> int:
        return self.main.input_size


def _check_prob(name: str, value: float, hi: float = 1.0) -> float:
    value = float(value)
    if not 0.0 <= value <= hi:
        raise ValueError(f"{name} must lie in [0, {hi:g}], got {value}")
    return value


def make_qec(alphabet: Alphabet, eps: float) -> Dmc:
    eps = _check_prob("eps", eps)
    q = alphabet.q
    p = np.zeros((q, q + 1))
    p[np.arange(q), np.arange(q)] = 1.0 - eps
    p[:, q] = eps
    return Dmc(p)


def make_qsc(alphabet: Alphabet, p: float) -> Dmc:
    q = alphabet.q
    p = _check_prob("p", p, (q - 1) / q)
    m = np.full((q, q), p / (q - 1))
    np.fill_diagonal(m, 1.0 - p)
    return Dmc(m)


def identity_channel(size: int) -> Dmc:
    return Dmc(np.eye(size))


def qec_degrader(alphabet: Alphabet, eps_main: float, eps_wire: float) -> Dmc:
    """Channel on QEC outputs turning QEC(eps_main) into QEC(eps_wire).

    Each unerased symbol is erased with probability
    ``(eps_wire - eps_main) / (1 - eps_main)``; erasures stay erasures.
    """
    eps_main = _check_prob("eps_main", eps_main)
    eps_wire = _check_prob("eps_wire", eps_wire)
    if eps_wire < eps_main:
        raise ValueError(
            f"QEC({eps_wire}) is not degraded with respect to QEC({eps_main}): need eps_wire >= eps_main"
        )
    delta = 0.0 if eps_main == 1.0 else (eps_wire - eps_main) / (1.0 - eps_main)
    q = alphabet.q
    b = np.zeros((q + 1, q + 1))
    b[np.arange(q), np.arange(q)] = 1.0 - delta
    b[:q, q] = delta
    b[q, q] = 1.0
    return Dmc(b)


def compose_degraded(main: Dmc, degrader: Dmc) -> DegradedPair:
    if degrader.input_size != main.output_size:
        raise ValueError(
            f"degrader takes {degrader.input_size} inputs but main channel has {main.output_size} outputs"
        )
    wire = main.probs @ degrader.probs
    # re-normalise away rounding so the product passes the row check
    wire = wire / wire.sum(axis=1, keepdims=True)
    return DegradedPair(main, Dmc(wire), degrader)


def qec_pair(alphabet: Alphabet, eps_main: float, eps_wire: float) -> DegradedPair:
    return compose_degraded(make_qec(alphabet, eps_main), qec_degrader(alphabet, eps_main, eps_wire))


def project_rows_to_simplex(m: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex."""
    n = m.shape[1]
    s = -np.sort(-m, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    ks = np.arange(1, n + 1)
    cond = s - css / ks > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(m.shape[0]), rho] / (rho + 1)
    return np.maximum(m - theta[:, None], 0.0)


def verify_degraded(
    main: Dmc, wiretap: Dmc, tol: float = 1e-8, max_iter: int = 10_000
) -> tuple[bool, Dmc | None]:
    """Search for a degrader ``B`` with ``main.probs @ B == wiretap.probs``.

    Alternates between the affine set of exact solutions and the set of
    row-stochastic matrices.  Returns ``(True, B)`` once the stochastic iterate
    reproduces the wiretap matrix within ``tol`` in every entry, else
    ``(False, None)``.
    """
    if main.input_size != wiretap.input_size:
        raise ValueError("channels must share the input alphabet")
    m, c = main.probs, wiretap.probs
    # Frobenius projection onto {B : m B = c} is B - pinv(m) (m B - c)
    pinv = np.linalg.pinv(m)
    b = project_rows_to_simplex(pinv @ c)
    for _ in range(max_iter):
        resid = m @ b - c
        if np.max(np.abs(resid)) <= tol:
            b = b / b.sum(axis=1, keepdims=True)
            return True, Dmc(b)
        b = project_rows_to_simplex(b - pinv @ resid)
    return False, None
