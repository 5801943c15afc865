"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 resource cap exceeded,
4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import Dmc, make_qec, qec_pair
from .construction import CodeParams, IndexPartition, achieved_rate, build_partition
from .errors import ConsistencyError, ResourceError
from .experiment import ExperimentConfig, run_experiment
from .metrics import secrecy_capacity
from .ring import Alphabet
from .transform import EXACT_CAP, TransformSpec, polarization_profile, qec_z_recursion
from .wiretap import DEFAULT_BUDGET, MessageDist, WiretapCode, exact_eve_analysis, lemma3_bound

EXIT_USAGE, EXIT_RESOURCE, EXIT_CONSISTENCY = 2, 3, 4


class UsageError(ValueError):
    pass


def _alphabet(q: int) -> Alphabet:
    try:
        return Alphabet(q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _qec_profiles(q: int, n: int, eps_main: float, eps_wire: float):
    if eps_wire < eps_main:
        raise UsageError(
            f"eps-wire ({eps_wire}) < eps-main ({eps_main}): the wiretap channel must be "
            "degraded with respect to the main channel"
        )
    pair = qec_pair(_alphabet(q), eps_main, eps_wire)
    spec = TransformSpec.of(q, n)
    return pair, spec, qec_z_recursion(eps_main, spec), qec_z_recursion(eps_wire, spec)


def cmd_profile(args) -> int:
    spec = TransformSpec(args.n, _alphabet(args.q))
    if (args.eps is None) == (args.channel_file is None):
        raise UsageError("give exactly one of --eps or --channel-file")
    if args.channel_file:
        src = Dmc.load(args.channel_file)
        if src.input_size != args.q:
            raise UsageError("channel file input size does not match --q")
    else:
        src = args.eps
    if args.method == "exact" and spec.N > args.cap:
        raise ResourceError(f"exact synthesis capped at N={args.cap}, requested N={spec.N}")
    prof = polarization_profile(src, spec, args.method, args.trials, args.seed, cap=args.cap)
    prof.write_table(args.out)
    print(
        f"profile: q={args.q} N={spec.N} method={prof.method[0] if len(prof) else '-'} "
        f"Z<0.01: {prof.fraction_below(0.01):.4f}  Z>0.99: {prof.fraction_above(0.99):.4f}  -> {args.out}"
    )
    return 0


def cmd_construct(args) -> int:
    pair, spec, zm, zw = _qec_profiles(args.q, args.n, args.eps_main, args.eps_wire)
    try:
        params = CodeParams(spec, args.beta, args.threshold_main, args.threshold_wire)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    part = build_partition(zm, zw, params)
    rate = achieved_rate(part, spec.alphabet)
    cs = secrecy_capacity(pair)
    part.save(
        args.out,
        {"q": args.q, "n": args.n, "achieved_rate": rate, "secrecy_capacity": cs,
         "eps_main": args.eps_main, "eps_wire": args.eps_wire},
    )
    print(f"construct: N={spec.N} k={part.k} r={part.r} frozen={part.frozen.size} "
          f"rate={rate:.6f} C_s={cs:.6f} bits/use -> {args.out}")
    if part.k == 0:
        print("warning: no information indices (k = 0); nothing can be sent securely", file=sys.stderr)
    return 0


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        doc = json.loads(path.read_text())
        if "config" in doc and "tool" in doc:  # a run manifest
            doc = doc["config"]
        return ExperimentConfig.from_dict(doc)
    doc = {
        k: v
        for k, v in {
            "q": args.q, "n": args.n, "eps_main": args.eps_main, "eps_wire": args.eps_wire,
            "beta": args.beta, "threshold_main": args.threshold_main,
            "threshold_wiretap": args.threshold_wire, "frozen_policy": args.frozen_policy,
            "bob_trials": args.bob_trials, "seed": args.seed,
        }.items()
        if v is not None
    }
    return ExperimentConfig.from_dict(doc)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def cmd_simulate(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    started = _now()
    rep = run_experiment(cfg, workers=args.workers)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"report": out / "report.json", "summary": out / "report.csv", "manifest": out / "manifest.json"}
    files["report"].write_text(rep.to_json())
    files["summary"].write_text(rep.to_csv())
    manifest = {
        "tool": "polarsec",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "started": started,
        "finished": _now(),
        "outputs": {k: str(v) for k, v in files.items()},
    }
    files["manifest"].write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(
        f"simulate: N={rep.N} k={rep.k} r={rep.r} rate={rep.achieved_rate:.6f} (C_s={rep.secrecy_capacity:.6f}) "
        f"bob_bler={rep.bob_bler:.3e} (bound {rep.bob_lemma1_bound:.3e}) "
        f"eve_P_e={rep.eve_random_error:.3e} leak/k={rep.leak_bits_per_symbol:.4f} [{rep.leak_method}] -> {out}"
    )
    return 0


def cmd_leakage(args) -> int:
    pair, spec, zm, zw = _qec_profiles(args.q, args.n, args.eps_main, args.eps_wire)
    if spec.N > EXACT_CAP:
        raise ResourceError(f"exact leakage is limited to N <= {EXACT_CAP}")
    params = CodeParams(spec, args.beta, args.threshold_main, args.threshold_wire)
    part = build_partition(zm, zw, params)
    fv = args.frozen_vector if args.frozen_vector is not None else [0] * part.frozen.size
    try:
        code = WiretapCode(part, np.asarray(fv, dtype=np.int64), pair, spec)
        dist = MessageDist.from_json(args.message_dist)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ev = exact_eve_analysis(code, dist, args.budget)
    doc = {
        "q": args.q, "n": args.n, "N": spec.N, "k": part.k, "r": part.r,
        "eps_main": args.eps_main, "eps_wire": args.eps_wire,
        "frozen_vector": code.frozen_vector.tolist(),
        "message_dist": dist.to_json(),
        "leak_bits_per_symbol": ev.leakage,
        "mutual_information_bits": ev.mutual_information,
        "equivocation_random": ev.equivocation,
        "eve_map_error": ev.map_error,
        "eve_sc_error": ev.sc_error,
        "lemma3_bound_map": lemma3_bound(code, ev.map_error),
        "message_entropy_rate": dist.entropy(args.q, part.k) / spec.N,
        "achieved_rate": achieved_rate(part, spec.alphabet),
        "partition": part.to_dict(),
    }
    Path(args.out).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"leakage: N={spec.N} k={part.k} r={part.r} I(M;Z)/k={ev.leakage:.6f} bits "
          f"H(U_R|Z,U_I,U_F)={ev.equivocation:.6f} P_e(MAP)={ev.map_error:.6f} -> {args.out}")
    return 0


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()] if text.strip() else []


def _message_dist(text: str):
    if text == "uniform":
        return text
    return [float(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polarsec", description="Nonbinary polar codes for degraded wiretap channels")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--workers", type=int, default=1, help="cap on worker processes")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="per-index Z and capacity of the split channels")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--channel-file")
    p.add_argument("--method", choices=["auto", "exact", "recursion", "mc"], default="auto")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=EXACT_CAP, help="largest N for exact synthesis")
    p.add_argument("--out", default="profile.csv")
    p.set_defaults(func=cmd_profile)

    def code_flags(p):
        p.add_argument("--q", type=int, required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--eps-main", type=float, required=True)
        p.add_argument("--eps-wire", type=float, required=True)
        p.add_argument("--beta", type=float, default=0.25)
        p.add_argument("--threshold-main", type=float)
        p.add_argument("--threshold-wire", type=float)

    p = sub.add_parser("construct", help="build the information/random/frozen partition")
    code_flags(p)
    p.add_argument("--out", default="partition.json")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", help="run a full experiment and write report files")
    p.add_argument("--config")
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--eps-main", type=float)
    p.add_argument("--eps-wire", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--threshold-main", type=float)
    p.add_argument("--threshold-wire", type=float)
    p.add_argument("--frozen-policy", choices=["fixed", "sampled", "exhaustive"])
    p.add_argument("--bob-trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", default="run")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("leakage", help="exact I(M;Z)/k by enumeration (N <= 8)")
    code_flags(p)
    p.add_argument("--frozen-vector", type=_int_list)
    p.add_argument("--message-dist", type=_message_dist, default="uniform")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out", default="leakage.json")
    p.set_defaults(func=cmd_leakage)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.workers < 1:
        ap.error("--workers must be >= 1")
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
