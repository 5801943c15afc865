import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polarsec.channel import (
    DegradedPair,
    Dmc,
    compose_degraded,
    identity_channel,
    make_qec,
    make_qsc,
    qec_degrader,
    qec_pair,
    verify_degraded,
)
from polarsec.metrics import symmetric_capacity
from polarsec.ring import Alphabet

A3, A5 = Alphabet(3), Alphabet(5)


def test_qec_examples():
    w0 = make_qec(A3, 0.0)
    assert np.array_equal(w0.probs, np.hstack([np.eye(3), np.zeros((3, 1))]))
    assert np.array_equal(make_qec(A3, 1.0).probs, np.tile([0, 0, 0, 1.0], (3, 1)))
    half = make_qec(A3, 0.5).probs
    assert np.allclose(half, [[0.5, 0, 0, 0.5], [0, 0.5, 0, 0.5], [0, 0, 0.5, 0.5]])


def test_qsc_examples():
    assert np.array_equal(make_qsc(A3, 0.0).probs, np.eye(3))
    p = make_qsc(A3, 0.2).probs
    assert np.allclose(np.diag(p), 0.8) and np.allclose(p[~np.eye(3, dtype=bool)], 0.1)
    p = make_qsc(A5, 0.4).probs
    assert np.allclose(np.diag(p), 0.6) and np.allclose(p[~np.eye(5, dtype=bool)], 0.1)


@pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
def test_parameter_domain(bad):
    with pytest.raises(ValueError):
        make_qec(A3, bad)
    with pytest.raises(ValueError):
        make_qsc(A3, bad)


def test_dmc_validation():
    with pytest.raises(ValueError):
        Dmc([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValueError):
        Dmc([[1.2, -0.2], [0.5, 0.5]])


def test_compose_qec_matches_closed_form():
    # erase each non-erased symbol with prob 1/3, keep erasures
    B = np.zeros((4, 4))
    B[:3, :3] = np.eye(3) * (2 / 3)
    B[:3, 3] = 1 / 3
    B[3, 3] = 1
    pair = compose_degraded(make_qec(A3, 0.1), Dmc(B))
    assert pair.wiretap.allclose(make_qec(A3, 1 - 0.9 * (2 / 3)), atol=1e-12)
    assert np.allclose(qec_degrader(A3, 0.1, 0.4).probs, B)


def test_compose_identity():
    w = make_qsc(A3, 0.13)
    assert compose_degraded(w, identity_channel(3)).wiretap.allclose(w)


def test_compose_qsc_cascade():
    # cascade of two q-ary symmetric channels: p' = p1 + p2 - p1 p2 q/(q-1)
    p1, p2, q = 0.1, 0.1, 3
    pair = compose_degraded(make_qsc(A3, p1), make_qsc(A3, p2))
    expect = p1 + p2 - p1 * p2 * q / (q - 1)
    assert pair.wiretap.allclose(make_qsc(A3, expect), atol=1e-14)
    assert abs(expect - 0.185) < 1e-15


def test_compose_dimension_mismatch():
    with pytest.raises(ValueError):
        compose_degraded(make_qec(A3, 0.1), make_qsc(A3, 0.1))


def test_degraded_pair_checks_product():
    with pytest.raises(ValueError):
        DegradedPair(make_qsc(A3, 0.1), make_qsc(A3, 0.3), make_qsc(A3, 0.1))


def test_verify_degraded_examples():
    ok, deg = verify_degraded(make_qec(A3, 0.1), make_qec(A3, 0.4))
    assert ok
    assert np.allclose(make_qec(A3, 0.1).probs @ deg.probs, make_qec(A3, 0.4).probs, atol=1e-8)
    w = make_qsc(A5, 0.2)
    ok, deg = verify_degraded(w, w)
    assert ok and np.allclose(w.probs @ deg.probs, w.probs, atol=1e-8)
    ok, deg = verify_degraded(make_qec(A3, 0.4), make_qec(A3, 0.1))
    assert not ok and deg is None
    # the contradiction behind the negative case
    assert symmetric_capacity(make_qec(A3, 0.1)) > symmetric_capacity(make_qec(A3, 0.4))


GRID = [0.0, 0.2, 0.5, 0.8, 1.0]


@pytest.mark.parametrize("em", GRID)
@pytest.mark.parametrize("ew", GRID)
def test_verify_degraded_qec_grid(em, ew):
    # QEC(ew) is a degraded QEC(em) iff ew >= em
    ok, _ = verify_degraded(make_qec(A3, em), make_qec(A3, ew))
    assert ok == (ew >= em)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_verify_degraded_recovers_random_composition(seed):
    rng = np.random.default_rng(seed)
    main = make_qsc(A3, float(rng.uniform(0, 0.5)))
    deg = Dmc(rng.dirichlet(np.ones(4), size=3))
    pair = compose_degraded(main, deg)
    ok, found = verify_degraded(pair.main, pair.wiretap)
    assert ok
    assert np.allclose(main.probs @ found.probs, pair.wiretap.probs, atol=1e-7)


def test_sample_frequencies():
    w = make_qsc(A3, 0.3)
    rng = np.random.default_rng(7)
    x = np.zeros(200_000, dtype=np.int64)
    y = w.sample(x, rng)
    freq = np.bincount(y, minlength=3) / y.size
    assert np.allclose(freq, w.probs[0], atol=5e-3)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    w = Dmc(rng.dirichlet(np.ones(6), size=5))
    path = tmp_path / "w.json"
    w.save(path)
    back = Dmc.load(path)
    assert back.probs.shape == w.probs.shape
    assert np.max(np.abs(back.probs - w.probs)) <= 1e-15


def test_qec_pair_rejects_reversed_order():
    with pytest.raises(ValueError):
        qec_pair(A3, 0.4, 0.1)
