"""Shared oracles and fixtures."""

import itertools

import numpy as np
import pytest

from polarsec.channel import qec_pair
from polarsec.construction import CodeParams, build_partition
from polarsec.ring import Alphabet
from polarsec.transform import TransformSpec, qec_z_recursion
from polarsec.wiretap import WiretapCode


def dense_generator(q: int, n: int) -> np.ndarray:
    """B_N F^{(x)n} over Z_q, built without the package's transform code."""
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    G = np.ones((1, 1), dtype=np.int64)
    for _ in range(n):
        G = np.kron(G, F) % q
    N = 1 << n
    rev = [int(format(j, f"0{n}b")[::-1] or "0", 2) for j in range(N)]
    B = np.zeros((N, N), dtype=np.int64)
    for j, rj in enumerate(rev):
        B[j, rj] = 1
    return (B @ G) % q


def dense_encode(u, q: int, n: int) -> np.ndarray:
    return (np.asarray(u, dtype=np.int64) @ dense_generator(q, n)) % q


def all_tuples(q: int, length: int):
    return [np.array(t, dtype=np.int64) for t in itertools.product(range(q), repeat=length)]


def qec_code(q, n, eps_m, eps_w, tm, tw, frozen=None):
    """Wiretap code on a QEC pair with erasure-recursion Z values and explicit thresholds."""
    spec = TransformSpec.of(q, n)
    pair = qec_pair(Alphabet(q), eps_m, eps_w)
    zm = qec_z_recursion(eps_m, spec)
    zw = qec_z_recursion(eps_w, spec)
    part = build_partition(zm, zw, CodeParams(spec, threshold_main=tm, threshold_wiretap=tw))
    fv = np.zeros(part.frozen.size, dtype=np.int64) if frozen is None else frozen
    return WiretapCode(part, fv, pair, spec), zm, zw


# q=3, QEC (0.1, 0.7), thresholds 0.05 / 0.75 at both N=4 and N=8
LEAK_FIXTURES = {2: 0.27246, 3: 0.07640}


@pytest.fixture
def leak_code_n4():
    return qec_code(3, 2, 0.1, 0.7, 0.05, 0.75)[0]


@pytest.fixture
def leak_code_n8():
    return qec_code(3, 3, 0.1, 0.7, 0.05, 0.75)[0]
