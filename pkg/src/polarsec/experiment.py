"""Experiment configuration, orchestration and reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import DegradedPair, Dmc, compose_degraded, qec_pair, verify_degraded
from .construction import CodeParams, IndexPartition, achieved_rate, build_partition
from .errors import ResourceError
from .metrics import secrecy_capacity, symmetric_capacity
from .ring import Alphabet
from .transform import TransformSpec, polarization_profile
from .wiretap import (
    DEFAULT_BUDGET,
    MessageDist,
    WiretapCode,
    chain_leakage_bound,
    ensemble_search,
    exact_eve_analysis,
    lemma1_bound,
    lemma3_bound,
    message_entropy_rate,
    run_trials,
)

FROZEN_POLICIES = ("fixed", "sampled", "exhaustive")


@dataclass
class ExperimentConfig:
    q: int = 3
    n: int = 4
    eps_main: float | None = None
    eps_wire: float | None = None
    main_channel: str | None = None
    wire_channel: str | None = None
    beta: float = 0.25
    threshold_main: float | None = None
    threshold_wiretap: float | None = None
    frozen_policy: str = "sampled"
    frozen_vector: list[int] | None = None
    frozen_samples: int = 32
    frozen_trials: int = 200
    message_dist: str | list[float] = "uniform"
    bob_trials: int = 1000
    eve_trials: int | None = None
    eve_budget: int = DEFAULT_BUDGET
    profile_method: str = "auto"
    profile_trials: int = 2000
    seed: int = 0

    def __post_init__(self):
        Alphabet(self.q)
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError("n must be a nonnegative integer")
        by_eps = self.eps_main is not None or self.eps_wire is not None
        by_file = self.main_channel is not None or self.wire_channel is not None
        if by_eps == by_file:
            raise ValueError("give either eps_main/eps_wire or main_channel/wire_channel")
        if by_eps and (self.eps_main is None or self.eps_wire is None):
            raise ValueError("both eps_main and eps_wire are required")
        if by_file and (self.main_channel is None or self.wire_channel is None):
            raise ValueError("both main_channel and wire_channel are required")
        if self.frozen_policy not in FROZEN_POLICIES:
            raise ValueError(f"frozen_policy must be one of {FROZEN_POLICIES}")
        if self.frozen_policy == "fixed" and self.frozen_vector is None:
            raise ValueError("frozen_policy 'fixed' needs frozen_vector")
        for name in ("bob_trials", "frozen_samples", "frozen_trials", "profile_trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        MessageDist.from_json(self.message_dist)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SimulationReport:
    q: int
    n: int
    N: int
    k: int
    r: int
    frozen_size: int
    beta: float
    threshold_main: float
    threshold_wiretap: float
    capacity_main: float
    capacity_wire: float
    secrecy_capacity: float
    achieved_rate: float
    message_entropy_rate: float
    bob_trials: int
    bob_block_errors: int
    bob_bler: float
    bob_bler_sigma: float
    bob_lemma1_bound: float
    eve_trials: int
    eve_random_error: float
    eve_random_error_method: str
    eve_equivocation_bound: float
    eve_equivocation_exact: float | None
    leak_bits_per_symbol: float
    leak_method: str
    frozen_policy: str
    frozen_vector: list[int]
    ensemble_average_bler: float | None
    profile_method: str
    seed: int
    partition: dict = field(repr=False)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    CSV_FIELDS = (
        "q", "n", "N", "k", "r", "frozen_size", "beta", "threshold_main", "threshold_wiretap",
        "capacity_main", "capacity_wire", "secrecy_capacity", "achieved_rate",
        "message_entropy_rate", "bob_trials", "bob_block_errors", "bob_bler", "bob_bler_sigma",
        "bob_lemma1_bound", "eve_trials", "eve_random_error", "eve_random_error_method",
        "eve_equivocation_bound", "eve_equivocation_exact", "leak_bits_per_symbol",
        "leak_method", "frozen_policy", "profile_method", "seed",
    )

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        if header:
            wr.writerow(self.CSV_FIELDS)
        d = asdict(self)
        wr.writerow(["" if d[f] is None else (repr(d[f]) if isinstance(d[f], float) else d[f]) for f in self.CSV_FIELDS])
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "SimulationReport":
        return cls(**json.loads(text))


def build_pair(cfg: ExperimentConfig) -> DegradedPair:
    a = Alphabet(cfg.q)
    if cfg.eps_main is not None:
        return qec_pair(a, cfg.eps_main, cfg.eps_wire)
    main = Dmc.load(cfg.main_channel)
    wire = Dmc.load(cfg.wire_channel)
    if main.input_size != cfg.q or wire.input_size != cfg.q:
        raise ValueError("channel files do not match q")
    ok, degrader = verify_degraded(main, wire)
    if not ok:
        raise ValueError("wiretap channel is not stochastically degraded with respect to the main channel")
    return compose_degraded(main, degrader)


def _profile_z(w: Dmc, eps: float | None, spec: TransformSpec, cfg: ExperimentConfig):
    src = eps if eps is not None else w
    prof = polarization_profile(src, spec, cfg.profile_method, cfg.profile_trials, cfg.seed)
    return prof.z, prof.method[0]


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> SimulationReport:
    """Build the code, pick the frozen vector, simulate Bob and evaluate Eve.

    The result depends only on ``cfg``; ``workers`` changes speed, not output.
    """
    spec = TransformSpec.of(cfg.q, cfg.n)
    pair = build_pair(cfg)
    dist = MessageDist.from_json(cfg.message_dist)
    lq = math.log2(cfg.q)

    z_main, method = _profile_z(pair.main, cfg.eps_main, spec, cfg)
    z_wire, _ = _profile_z(pair.wiretap, cfg.eps_wire, spec, cfg)
    # Monte-Carlo noise can break the pointwise order that degradation guarantees
    z_wire = np.maximum(z_wire, z_main)
    params = CodeParams(spec, cfg.beta, cfg.threshold_main, cfg.threshold_wiretap)
    part = build_partition(z_main, z_wire, params)

    cap_m = symmetric_capacity(pair.main)
    cap_w = symmetric_capacity(pair.wiretap)
    template = WiretapCode(part, np.zeros(part.frozen.size, dtype=np.int64), pair, spec)

    ens_avg = None
    if cfg.frozen_policy == "fixed":
        code = template.with_frozen(cfg.frozen_vector)
    else:
        if cfg.frozen_policy == "exhaustive":
            size = cfg.q ** part.frozen.size
            if size > cfg.eve_budget:
                raise ResourceError(f"exhaustive frozen search over {size} vectors exceeds budget")
            samples = size
        else:
            samples = cfg.frozen_samples
        ens = ensemble_search(
            template, samples, cfg.seed, cfg.frozen_trials, dist, cfg.eve_budget, cap_w, workers
        )
        code = template.with_frozen(ens.best)
        ens_avg = ens.average_bler

    eve_trials = cfg.eve_trials if cfg.eve_trials is not None else cfg.bob_trials
    counts = run_trials(code, cfg.bob_trials, cfg.seed, dist, eve=False, workers=workers)
    bler = counts.bob_errors / counts.trials
    sigma = math.sqrt(max(bler * (1 - bler), 0.0) / counts.trials)

    exact = None
    try:
        exact = exact_eve_analysis(code, dist, cfg.eve_budget)
    except ResourceError:
        pass
    if exact is not None:
        p_e, p_method = exact.sc_error, "exact"
        leak, leak_method = exact.leakage, "exact"
        equiv = exact.equivocation
        eve_n = 0
    else:
        ec = run_trials(code, eve_trials, cfg.seed, dist, eve=True, workers=workers)
        p_e = ec.eve_errors / ec.trials if code.r else 0.0
        p_method = "monte-carlo"
        leak, leak_method = chain_leakage_bound(code, cap_w, p_e), "monte-carlo"
        equiv = None
        eve_n = ec.trials

    return SimulationReport(
        q=cfg.q,
        n=cfg.n,
        N=spec.N,
        k=part.k,
        r=part.r,
        frozen_size=int(part.frozen.size),
        beta=cfg.beta,
        threshold_main=float(params.threshold_main),
        threshold_wiretap=float(params.threshold_wiretap),
        capacity_main=cap_m,
        capacity_wire=cap_w,
        secrecy_capacity=secrecy_capacity(pair),
        achieved_rate=achieved_rate(part, spec.alphabet),
        message_entropy_rate=message_entropy_rate(dist, cfg.q, part.k, spec.N),
        bob_trials=counts.trials,
        bob_block_errors=counts.bob_errors,
        bob_bler=bler,
        bob_bler_sigma=sigma,
        bob_lemma1_bound=lemma1_bound(z_main, part),
        eve_trials=eve_n,
        eve_random_error=p_e,
        eve_random_error_method=p_method,
        eve_equivocation_bound=lemma3_bound(code, p_e),
        eve_equivocation_exact=equiv,
        leak_bits_per_symbol=leak,
        leak_method=leak_method,
        frozen_policy=cfg.frozen_policy,
        frozen_vector=code.frozen_vector.tolist(),
        ensemble_average_bler=ens_avg,
        profile_method=method,
        seed=cfg.seed,
        partition=part.to_dict(),
    )
