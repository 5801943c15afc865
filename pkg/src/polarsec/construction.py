"""Index-set construction for the wiretap polar code.

From per-index Bhattacharyya values of the main and wiretap split channels:

* ``a_main``: good for Bob, ``z_main <= threshold_main``
* ``f_wire``: bad for Eve, ``z_wire >= threshold_wiretap``
* ``f_main`` / ``a_wire``: the respective complements

Message symbols go on ``a_main \\ a_wire``, uniform random symbols on
``a_wire`` and frozen symbols on ``f_main``.  All index sets are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyError
from .ring import Alphabet
from .transform import TransformSpec

DEFAULT_BETA = 0.25


def default_threshold(spec: TransformSpec, beta: float) -> float:
    """((q - 1) / N) * 2^(-N^beta)."""
    return (spec.q - 1) / spec.N * 2.0 ** (-(spec.N**beta))


@dataclass(frozen=True)
class CodeParams:
    spec: TransformSpec
    beta: float = DEFAULT_BETA
    threshold_main: float | None = None
    threshold_wiretap: float | None = None

    def __post_init__(self):
        if not 0.0 < self.beta < 0.5:
            raise ValueError(f"beta must lie in (0, 1/2), got {self.beta}")
        t = default_threshold(self.spec, self.beta)
        if self.threshold_main is None:
            object.__setattr__(self, "threshold_main", t)
        if self.threshold_wiretap is None:
            object.__setattr__(self, "threshold_wiretap", t)


def _idx(mask: np.ndarray) -> np.ndarray:
    return np.flatnonzero(mask).astype(np.int64)


@dataclass(frozen=True, eq=False)
class IndexPartition:
    N: int
    a_main: np.ndarray
    f_main: np.ndarray
    a_wire: np.ndarray
    f_wire: np.ndarray
    beta: float | None = None
    threshold_main: float | None = None
    threshold_wiretap: float | None = None

    def __post_init__(self):
        for name in ("a_main", "f_main", "a_wire", "f_wire"):
            object.__setattr__(self, name, np.sort(np.asarray(getattr(self, name), dtype=np.int64)))
        full = np.arange(self.N)
        if not np.array_equal(np.union1d(self.a_main, self.f_main), full) or np.intersect1d(
            self.a_main, self.f_main
        ).size:
            raise ConsistencyError("a_main and f_main must partition the index range")
        if not np.array_equal(np.union1d(self.a_wire, self.f_wire), full) or np.intersect1d(
            self.a_wire, self.f_wire
        ).size:
            raise ConsistencyError("a_wire and f_wire must partition the index range")
        stray = np.setdiff1d(self.a_wire, self.a_main)
        if stray.size:
            raise ConsistencyError(
                f"index {int(stray[0])} is good for the wiretap channel but not for the main "
                "channel; either the pair is not degraded or threshold_wiretap exceeds "
                "threshold_main by too much"
            )

    @property
    def info(self) -> np.ndarray:
        return np.setdiff1d(self.a_main, self.a_wire)

    @property
    def random(self) -> np.ndarray:
        return self.a_wire

    @property
    def frozen(self) -> np.ndarray:
        return self.f_main

    @property
    def k(self) -> int:
        return int(self.info.size)

    @property
    def r(self) -> int:
        return int(self.random.size)

    def roles(self) -> np.ndarray:
        """Per-index role code: 0 frozen, 1 information, 2 random."""
        out = np.zeros(self.N, dtype=np.int64)
        out[self.info] = 1
        out[self.random] = 2
        return out

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "index_base": 0,
            "beta": self.beta,
            "threshold_main": self.threshold_main,
            "threshold_wiretap": self.threshold_wiretap,
            "k": self.k,
            "r": self.r,
            "a_main": self.a_main.tolist(),
            "f_main": self.f_main.tolist(),
            "a_wire": self.a_wire.tolist(),
            "f_wire": self.f_wire.tolist(),
            "info": self.info.tolist(),
            "random": self.random.tolist(),
            "frozen": self.frozen.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IndexPartition":
        p = cls(
            int(doc["N"]),
            doc["a_main"],
            doc["f_main"],
            doc["a_wire"],
            doc["f_wire"],
            doc.get("beta"),
            doc.get("threshold_main"),
            doc.get("threshold_wiretap"),
        )
        if "k" in doc and (p.k, p.r) != (doc["k"], doc["r"]):
            raise ConsistencyError("stored k, r disagree with the stored index sets")
        return p

    def save(self, path, extra: dict | None = None) -> None:
        doc = self.to_dict()
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "IndexPartition":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_partition(z_main, z_wire, params: CodeParams) -> IndexPartition:
    z_main = np.asarray(z_main, dtype=float)
    z_wire = np.asarray(z_wire, dtype=float)
    N = params.spec.N
    if z_main.shape != (N,) or z_wire.shape != (N,):
        raise ValueError(f"expected {N} Z values per channel")
    for z in (z_main, z_wire):
        if np.any(z < 0) or np.any(z > 1):
            raise ValueError("Z values must lie in [0, 1]")
    good_main = z_main <= params.threshold_main
    bad_wire = z_wire >= params.threshold_wiretap
    return IndexPartition(
        N,
        _idx(good_main),
        _idx(~good_main),
        _idx(~bad_wire),
        _idx(bad_wire),
        params.beta,
        float(params.threshold_main),
        float(params.threshold_wiretap),
    )


def achieved_rate(partition: IndexPartition, alphabet: Alphabet) -> float:
    """k log2(q) / N bits per channel use."""
    return partition.k * math.log2(alphabet.q) / partition.N
