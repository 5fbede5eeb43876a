import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from racetrack_ecc import _kernels as K
from racetrack_ecc.ecc import make_scheme
from racetrack_ecc.senseamp import draw_faults, make_rng

needs_numba = pytest.mark.skipif(K.issue_outcomes_nb is None, reason="numba path disabled")


@needs_numba
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(2, 7), st.sampled_from([1e-3, 1e-2, 0.1]),
       st.integers(0, 2 ** 31 - 1))
def test_issue_kernels_agree(t, n, p, seed):
    rng = make_rng(seed)
    width = 64 + (make_scheme(t).r if t else 0)
    counts = K.random_counts(rng, (64, 512), n)
    ops = rng.integers(0, 6, 64).astype(np.int8)
    f = draw_faults(rng, 64, 8 * width, p)
    a = K.issue_outcomes_np(counts, ops, *f, n, width, t)
    b = K.issue_outcomes_nb(counts, ops, *f, n, width, t)
    assert (a == b).all()


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.sampled_from([3, 5, 7]), st.integers(2, 7), st.integers(0, 2 ** 31 - 1))
def test_mr_kernels_agree(copies, n, seed):
    rng = make_rng(seed)
    counts = K.random_counts(rng, (64, 512), n)
    ops = rng.integers(0, 6, 64).astype(np.int8)
    faults = [draw_faults(rng, 64, 512, 0.2) for _ in range(copies)]
    a = K.mr_outcomes_np(counts, ops, faults, n, copies)
    b = K.mr_outcomes_nb(counts, ops, faults, n, copies)
    assert (a == b).all()


def test_random_counts_are_binomial():
    c = K.random_counts(make_rng(0), 200000, 4)
    freq = np.bincount(c, minlength=5) / c.size
    assert np.allclose(freq, np.array([1, 4, 6, 4, 1]) / 16, atol=0.005)


def test_no_faults_no_outcomes():
    counts = K.random_counts(make_rng(0), (5, 512), 3)
    empty = np.empty(0, dtype=np.int64)
    out = K.issue_outcomes(counts, np.zeros(5, np.int8), empty, empty, np.empty(0), 3, 72, 1)
    assert not out.any()


def test_env_flag_selects_numpy():
    code = "from racetrack_ecc import _kernels as K; print(K.USE_NUMBA, K.issue_outcomes.__name__)"
    env = dict(os.environ, RACETRACK_ECC_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["False", "issue_outcomes_np"]
