import json
import subprocess
import sys

import numpy as np
import pytest

from polarsec.channel import make_qsc
from polarsec.cli import main
from polarsec.construction import IndexPartition
from polarsec.ring import Alphabet
from polarsec.transform import PolarizationProfile, TransformSpec, qec_z_recursion


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    return code


def test_profile_recursion_table(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["profile", "--q", 3, "--n", 10, "--eps", 0.3, "--out", out]) == 0
    prof = PolarizationProfile.read_table(out)
    assert len(prof) == 1024
    assert np.array_equal(prof.z, qec_z_recursion(0.3, TransformSpec.of(3, 10)))


def test_profile_single_row(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["profile", "--q", 3, "--n", 0, "--eps", 0.3, "--out", out]) == 0
    assert PolarizationProfile.read_table(out).z.tolist() == [0.3]


def test_profile_rejects_composite_q(tmp_path, capsys):
    assert run(["profile", "--q", 4, "--n", 2, "--eps", 0.3, "--out", tmp_path / "p.csv"]) == 2
    assert "q must be prime" in capsys.readouterr().err


def test_profile_exact_cap(tmp_path):
    assert run(["profile", "--q", 3, "--n", 4, "--eps", 0.3, "--method", "exact", "--out", tmp_path / "p.csv"]) == 3


def test_profile_channel_file(tmp_path):
    make_qsc(Alphabet(3), 0.1).save(tmp_path / "w.json")
    out = tmp_path / "p.csv"
    assert run(["profile", "--q", 3, "--n", 2, "--channel-file", tmp_path / "w.json", "--out", out]) == 0
    assert set(PolarizationProfile.read_table(out).method) == {"exact"}
    assert run(["profile", "--q", 3, "--n", 2, "--channel-file", tmp_path / "missing.json", "--out", out]) == 2


def test_bad_flags_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["profile", "--q", "3"])
    assert exc.value.code == 2


def test_construct(tmp_path, capsys):
    out = tmp_path / "part.json"
    assert run(["construct", "--q", 3, "--n", 10, "--eps-main", 0.1, "--eps-wire", 0.4, "--out", out]) == 0
    doc = json.loads(out.read_text())
    part = IndexPartition.load(out)
    assert (doc["k"], doc["r"]) == (part.k, part.r) == (371, 392)
    assert doc["achieved_rate"] == pytest.approx(371 * np.log2(3) / 1024)
    assert doc["secrecy_capacity"] == pytest.approx(0.3 * np.log2(3))


def test_construct_equal_channels_warns(tmp_path, capsys):
    assert run(["construct", "--q", 3, "--n", 6, "--eps-main", 0.3, "--eps-wire", 0.3, "--out", tmp_path / "p.json"]) == 0
    assert "k = 0" in capsys.readouterr().err


def test_construct_not_degraded(tmp_path, capsys):
    assert run(["construct", "--q", 3, "--n", 6, "--eps-main", 0.4, "--eps-wire", 0.1, "--out", tmp_path / "p.json"]) == 2
    assert "degraded" in capsys.readouterr().err


def test_construct_nesting_violation_exit_4(tmp_path):
    args = ["construct", "--q", 3, "--n", 1, "--eps-main", 0.25, "--eps-wire", 0.25,
            "--threshold-main", 0.25, "--threshold-wire", 0.5, "--out", tmp_path / "p.json"]
    assert run(args) == 4


def _simulate(tmp_path, name, extra=()):
    out = tmp_path / name
    args = ["simulate", "--q", 3, "--n", 4, "--eps-main", 0.1, "--eps-wire", 0.5,
            "--bob-trials", 300, "--seed", 7, "--out-dir", out, *extra]
    assert run(args) == 0
    return out


def test_simulate_outputs_and_determinism(tmp_path):
    a = _simulate(tmp_path, "a")
    b = _simulate(tmp_path, "b")
    for f in ("report.json", "report.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 7 and set(man["outputs"]) == {"report", "summary", "manifest"}
    # the manifest alone reproduces the run
    c = tmp_path / "c"
    assert run(["simulate", "--config", a / "manifest.json", "--out-dir", c]) == 0
    assert (c / "report.json").read_bytes() == (a / "report.json").read_bytes()


def test_simulate_workers_flag(tmp_path):
    a = _simulate(tmp_path, "a")
    out = tmp_path / "w"
    args = ["--workers", 2, "simulate", "--q", 3, "--n", 4, "--eps-main", 0.1, "--eps-wire", 0.5,
            "--bob-trials", 300, "--seed", 7, "--out-dir", out]
    assert run(args) == 0
    assert (out / "report.json").read_bytes() == (a / "report.json").read_bytes()


def test_simulate_missing_config(tmp_path, capsys):
    assert run(["simulate", "--config", tmp_path / "nope.json", "--out-dir", tmp_path / "o"]) == 2
    assert "not found" in capsys.readouterr().err


def test_simulate_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"q": 3, "n": 2, "eps_main": 0.1, "eps_wire": 0.2, "extra": 1}))
    assert run(["simulate", "--config", cfg, "--out-dir", tmp_path / "o"]) == 2


def test_leakage(tmp_path):
    out = tmp_path / "leak.json"
    args = ["leakage", "--q", 3, "--n", 2, "--eps-main", 0.1, "--eps-wire", 0.7,
            "--threshold-main", 0.05, "--threshold-wire", 0.75, "--out", out]
    assert run(args) == 0
    doc = json.loads(out.read_text())
    assert doc["leak_bits_per_symbol"] == pytest.approx(0.27246, abs=5e-6)
    assert doc["equivocation_random"] <= doc["lemma3_bound_map"] + 1e-9
    assert run(args[:-2] + ["--n", 4, "--out", out]) == 3
    assert run(args + ["--frozen-vector", "0,1"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "polarsec", "profile", "--q", "3", "--n", "2", "--eps", "0.5",
         "--out", str(tmp_path / "p.csv")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "N=4" in proc.stdout
