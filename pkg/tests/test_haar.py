import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from ctxlab import quantum as qc
from ctxlab.haar import SeedSpec, haar_unitary, random_pure_state, random_pure_states


def test_unitarity():
    for k in range(50):
        u = haar_unitary(SeedSpec(3, k))
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-10


def test_state_norm():
    for k in range(50):
        psi = random_pure_state(SeedSpec(11, k))
        assert abs(np.linalg.norm(psi) - 1) <= 1e-12


def test_deterministic_across_processes():
    code = "from ctxlab.haar import *; print(haar_unitary(SeedSpec(0, 0)).tobytes().hex())"
    a = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
    b = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
    assert a == b
    assert a.strip() == haar_unitary(SeedSpec(0, 0)).tobytes().hex()


def test_batch_matches_scalar_bitwise():
    batch = random_pure_states(5, 100, 140)
    for i, k in enumerate(range(100, 140)):
        assert batch[i].tobytes() == random_pure_state(SeedSpec(5, k)).tobytes()


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1, 0)
    with pytest.raises(ValueError):
        SeedSpec(0, 2**64)
    SeedSpec(2**64 - 1, 2**64 - 1).generator()


def test_streams_differ():
    assert not np.array_equal(random_pure_state(SeedSpec(1, 0)), random_pure_state(SeedSpec(1, 1)))
    assert not np.array_equal(random_pure_state(SeedSpec(1, 0)), random_pure_state(SeedSpec(2, 0)))


@pytest.fixture(scope="module")
def big_sample():
    return random_pure_states(2024, 0, 100_000)


def test_first_moment_of_components(big_sample):
    # uniform unit vector in C^4: E|psi_0|^2 = 1/4
    assert abs(np.mean(np.abs(big_sample[:, 0]) ** 2) - 0.25) <= 0.005


def test_unitary_entry_moment():
    vals = [abs(haar_unitary(SeedSpec(77, k))[0, 0]) ** 2 for k in range(100_000)]
    assert abs(np.mean(vals) - 0.25) <= 0.005


def test_traceless_observable_mean_and_square(big_sample):
    yy = qc.expectations(big_sample, qc.pauli_product("yy"))
    assert abs(np.mean(yy)) <= 0.005
    # Tr(A^2) / (d (d + 1)) = 4 / 20
    assert abs(np.mean(yy**2) - 0.2) <= 0.01


def test_unitary_invariance_ks():
    a = qc.pauli_product("zx")
    v = haar_unitary(SeedSpec(999, 0))
    s1 = random_pure_states(31, 0, 10_000)
    s2 = random_pure_states(32, 0, 10_000)
    x1 = qc.expectations(s1, a)
    x2 = qc.expectations(s2, v.conj().T @ a @ v)
    assert stats.ks_2samp(x1, x2).pvalue > 1e-3


def test_stream_independence(big_sample):
    yy = qc.expectations(big_sample, qc.pauli_product("yy"))
    n = len(yy) // 2
    # neighbouring stream indices paired up
    r = np.corrcoef(yy[0:2 * n:2], yy[1:2 * n:2])[0, 1]
    assert abs(r) <= 3 / np.sqrt(n)
