import json
import math

import numpy as np
import pytest

from polarsec.channel import make_qec, make_qsc
from polarsec.errors import ResourceError
from polarsec.experiment import ExperimentConfig, SimulationReport, build_pair, run_experiment
from polarsec.ring import Alphabet

A3 = Alphabet(3)


def test_identical_channels_degenerate():
    rep = run_experiment(ExperimentConfig(q=3, n=3, eps_main=0.3, eps_wire=0.3, bob_trials=50))
    assert rep.k == 0 and rep.achieved_rate == 0.0 and rep.leak_bits_per_symbol == 0.0
    assert rep.secrecy_capacity == pytest.approx(0.0, abs=1e-12)


def test_small_exact_report():
    cfg = ExperimentConfig(q=3, n=3, eps_main=0.1, eps_wire=0.7, threshold_main=0.05,
                           threshold_wiretap=0.75, frozen_policy="exhaustive", bob_trials=500)
    rep = run_experiment(cfg)
    assert (rep.k, rep.r, rep.frozen_size) == (1, 4, 3)
    assert rep.leak_method == "exact" and rep.eve_random_error_method == "exact"
    assert rep.eve_equivocation_exact <= rep.eve_equivocation_bound + 1e-9
    assert rep.ensemble_average_bler is not None
    assert rep.message_entropy_rate == pytest.approx(rep.achieved_rate)


@pytest.mark.slow
def test_reference_experiment_n1024():
    cfg = ExperimentConfig(q=3, n=10, eps_main=0.1, eps_wire=0.4, frozen_policy="fixed",
                           frozen_vector=[0] * 261, bob_trials=10_000, eve_trials=500, seed=1)
    rep = run_experiment(cfg)
    assert (rep.k, rep.r) == (371, 392)
    bound = rep.bob_lemma1_bound
    assert rep.bob_bler <= bound + 3 * math.sqrt(bound * (1 - bound) / rep.bob_trials)
    assert rep.leak_method == "monte-carlo" and rep.eve_trials == 500
    assert rep.achieved_rate == pytest.approx(371 * math.log2(3) / 1024)
    # rate exceeds C_s at this length; see the regression fixture in test_construction
    assert rep.achieved_rate > rep.secrecy_capacity


def test_determinism_and_worker_independence():
    cfg = ExperimentConfig(q=3, n=5, eps_main=0.1, eps_wire=0.5, bob_trials=400,
                           frozen_samples=3, frozen_trials=50, seed=4)
    a = run_experiment(cfg).to_json()
    assert a == run_experiment(cfg).to_json()
    assert a == run_experiment(cfg, workers=2).to_json()


def test_report_round_trip():
    rep = run_experiment(ExperimentConfig(q=3, n=2, eps_main=0.1, eps_wire=0.7, bob_trials=20))
    back = SimulationReport.from_json(rep.to_json())
    assert back.to_json() == rep.to_json()
    head, row = rep.to_csv().splitlines()
    assert head.split(",") == list(SimulationReport.CSV_FIELDS)
    assert len(row.split(",")) == len(SimulationReport.CSV_FIELDS)


def test_channel_files(tmp_path):
    main, wire = make_qsc(A3, 0.05), make_qsc(A3, 0.2)
    main.save(tmp_path / "m.json")
    wire.save(tmp_path / "w.json")
    cfg = ExperimentConfig(q=3, n=2, main_channel=str(tmp_path / "m.json"),
                           wire_channel=str(tmp_path / "w.json"), bob_trials=50,
                           threshold_main=0.2, threshold_wiretap=0.2)
    assert build_pair(cfg).wiretap.allclose(wire, atol=1e-7)
    rep = run_experiment(cfg)
    assert rep.profile_method == "exact"
    # reversed roles are rejected
    bad = ExperimentConfig(q=3, n=2, main_channel=str(tmp_path / "w.json"),
                           wire_channel=str(tmp_path / "m.json"))
    with pytest.raises(ValueError, match="degraded"):
        build_pair(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(q=4, n=2, eps_main=0.1, eps_wire=0.2)
    with pytest.raises(ValueError):
        ExperimentConfig(q=3, n=2, eps_main=0.1)
    with pytest.raises(ValueError):
        ExperimentConfig(q=3, n=2, eps_main=0.1, eps_wire=0.2, frozen_policy="fixed")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"q": 3, "n": 2, "eps_main": 0.1, "eps_wire": 0.2, "bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig(q=3, n=2, eps_main=0.1, eps_wire=0.2, message_dist=[0.5, 0.4])


def test_exhaustive_policy_budget():
    cfg = ExperimentConfig(q=3, n=6, eps_main=0.1, eps_wire=0.5, frozen_policy="exhaustive",
                           eve_budget=1000, bob_trials=10)
    with pytest.raises(ResourceError):
        run_experiment(cfg)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(q=5, n=3, eps_main=0.2, eps_wire=0.6, message_dist=[0.2] * 5)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(path) == cfg
