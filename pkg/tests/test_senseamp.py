import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from racetrack_ecc.senseamp import (CimOp, FaultModel, ModelError, apply_faults, derive_logic,
                                    draw_faults, make_rng, reference_logic, sense)

OPS = list(CimOp)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.sampled_from(OPS), st.integers(0, 2 ** 31 - 1))
def test_derive_logic_matches_bitwise(n, op, seed):
    rows = np.random.default_rng(seed).integers(0, 2, (n, 64))
    assert (derive_logic(rows.sum(axis=0), n, op) == reference_logic(rows, op)).all()


def test_derive_logic_scalar_and_names():
    assert derive_logic(3, 3, "AND") == 1
    assert derive_logic(0, 3, "nor") == 1
    assert derive_logic(2, 3, CimOp.XNOR) == 1
    with pytest.raises(ModelError):
        derive_logic(4, 3, "AND")
    with pytest.raises(ValueError):
        CimOp.parse("NOPE")


def test_op_properties():
    assert CimOp.NAND.base is CimOp.AND and CimOp.NAND.inverted
    assert not CimOp.XOR.inverted


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2 ** 31 - 1))
def test_faults_are_single_level_and_flip_parity(n, seed):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, n + 1, 200)
    cols = np.flatnonzero(rng.random(200) < 0.3)
    up = rng.random(cols.size)
    sensed = apply_faults(counts, n, cols, up)
    diff = sensed - counts
    assert (np.abs(diff[cols]) == 1).all()
    assert np.count_nonzero(diff) == cols.size
    assert ((sensed >= 0) & (sensed <= n)).all()
    assert ((sensed[cols] ^ counts[cols]) & 1).all()
    assert (diff[cols][counts[cols] == 0] == 1).all()
    assert (diff[cols][counts[cols] == n] == -1).all()


def test_direction_is_uniform_inside():
    rng = make_rng(4, 0)
    counts = np.full(200000, 2)
    cols = np.arange(counts.size)
    sensed = apply_faults(counts, 4, cols, rng.random(cols.size))
    frac_up = np.mean(sensed == 3)
    assert abs(frac_up - 0.5) < 5 * np.sqrt(0.25 / counts.size)


@pytest.mark.parametrize("p", [1e-3, 0.05, 0.5])
def test_draw_faults_rate(p):
    rng = make_rng(1, 2)
    rows, cols, up = draw_faults(rng, 400, 500, p)
    size = 400 * 500
    assert abs(rows.size - size * p) < 5 * np.sqrt(size * p * (1 - p))
    flat = rows * 500 + cols
    assert (np.diff(flat) > 0).all()
    assert up.size == rows.size


def test_draw_faults_edges():
    rng = make_rng(0)
    assert draw_faults(rng, 3, 5, 0.0)[0].size == 0
    assert draw_faults(rng, 3, 5, 1.0)[0].size == 15


def test_rng_streams():
    a = make_rng(7, 1).random(4)
    assert (a == make_rng(7, 1).random(4)).all()
    assert not (a == make_rng(7, 2).random(4)).any()


def test_sense_reading():
    fm = FaultModel(1.0, seed=3)
    r = sense(np.array([0, 1, 2, 3]), 3, fm)
    assert r.faulted.all()
    assert r.sensed_count[0] == 1 and r.sensed_count[3] == 2
    assert r.fault_columns.tolist() == [0, 1, 2, 3]
    assert not sense(np.array([1, 2]), 3, FaultModel(0.0)).faulted.any()
    with pytest.raises(ModelError):
        sense(np.array([5]), 3, fm)
    with pytest.raises(ModelError):
        FaultModel(1.5)
