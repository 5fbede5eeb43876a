import numpy as np
import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from hypothesis import given, settings, strategies as st

from racetrack_ecc.senseamp import CimOp
from racetrack_ecc.workloads import (CimMachine, LintError, Trace, TraceError, encrypt_block,
                                     gen_synthetic_trace, make_engine, run_aes, run_counter,
                                     run_mmm, run_trace, simulate_synthetic)
from racetrack_ecc.workloads.aes import SBOX, gf256_mul
from racetrack_ecc.workloads.counter import ints_to_planes, planes_to_ints

FIPS_KEY = bytes(range(16))
FIPS_PT = bytes.fromhex("00112233445566778899aabbccddeeff")
FIPS_CT = "69c4e0d86a7b0430d8cdb78070b4c55a"


def machine(t=1, p=0.0, seed=0, protection="ecc"):
    return CimMachine(make_engine(protection, t, p, seed=seed))


# -- synthetic traces

def test_trace_is_reproducible():
    a, b = gen_synthetic_trace(500, seed=4), gen_synthetic_trace(500, seed=4)
    assert (a.ops == b.ops).all() and (a.srcs == b.srcs).all()
    assert not (gen_synthetic_trace(500, seed=5).srcs == a.srcs).all()


def test_trace_rejects():
    with pytest.raises(TraceError):
        gen_synthetic_trace(0)
    with pytest.raises(TraceError):
        gen_synthetic_trace(10, distribution="zipf")
    with pytest.raises(TraceError):
        gen_synthetic_trace(10, n_operands=1)


def test_trace_op_mix():
    tr = gen_synthetic_trace(10 ** 6, seed=1)
    n = len(tr)
    ands = int((tr.ops == CimOp.AND).sum())
    assert abs(ands - n / 2) < 4 * np.sqrt(n / 4)
    assert set(np.unique(tr.ops)) == {int(CimOp.AND), int(CimOp.OR)}
    s = np.sort(tr.srcs[:1000], axis=1)
    assert (s[:, 1:] != s[:, :-1]).all()


def test_trace_file_roundtrip(tmp_path):
    tr = gen_synthetic_trace(50, n_operands=4, seed=2, distribution="bernoulli:0.3")
    path = tmp_path / "t.trace"
    tr.write(path)
    text = path.read_text()
    assert text.startswith("# trace seed=2 n_ops=50 n_operands=4")
    first = text.splitlines()[1].split()
    assert first[0] in ("AND", "OR") and len(first) == 6 and ":" in first[1]
    back = Trace.read(path)
    assert (back.ops == tr.ops).all() and (back.srcs == tr.srcs).all()
    assert (back.dst == tr.dst).all() and back.distribution == tr.distribution
    assert back.dumps() == text
    with pytest.raises(TraceError):
        Trace.parse("AND 1:0 1:1 1:2")


def test_trace_replay_determinism():
    tr = gen_synthetic_trace(300, seed=3)
    reps = [run_trace(machine(1, 1e-2, seed=8), tr) for _ in range(2)]
    assert reps[0].stats == reps[1].stats
    clean = run_trace(machine(2), tr)
    assert clean.verdict and clean.stats.bit_errors == 0


def test_fast_path_fault_free():
    r = simulate_synthetic(2000, "ecc2", 0.0)
    assert r.issues == 2000 and r.row_fault_rate == 0 and r.injected == 0
    r = simulate_synthetic(2000, "mr3", 0.0)
    assert r.bit_errors == 0


def test_fast_path_deterministic():
    a = simulate_synthetic(5000, "ecc1", 1e-2, seed=3)
    b = simulate_synthetic(5000, "ecc1", 1e-2, seed=3)
    assert a == b
    assert a.reissues > 0 and a.issues == a.instructions + a.reissues


# -- counter

def test_counter_identities():
    rep = run_counter(machine(), width=8, increments=0, initial=np.arange(512) % 256)
    assert rep.verdict and rep.instructions == 0
    rep = run_counter(machine(), width=8, increments=1, initial=np.zeros(512))
    assert rep.verdict and rep.bit_errors == 0


def test_counter_wraps():
    rep = run_counter(machine(), width=4, increments=20, seed=1)
    assert rep.verdict and rep.details["increments"] == 20


def test_planes_roundtrip():
    v = np.random.default_rng(0).integers(0, 2 ** 20, 512).astype(np.uint64)
    assert (planes_to_ints(ints_to_planes(v, 20)) == v).all()


def test_counter_under_faults_taints_honestly():
    rep = run_counter(machine(1, 2e-3, seed=4), width=8, increments=30, seed=2)
    assert rep.untainted_mismatches == 0
    assert rep.stats.injected_faults > 0


# -- AES

def test_reference_sbox():
    assert SBOX[0x00] == 0x63 and SBOX[0x53] == 0xED
    assert gf256_mul(0x57, 0x83) == 0xC1


def test_fips_vector_reference():
    assert encrypt_block(FIPS_PT, FIPS_KEY).hex() == FIPS_CT


@settings(max_examples=25, deadline=None)
@given(st.binary(min_size=16, max_size=16), st.binary(min_size=16, max_size=16))
def test_reference_matches_library(block, key):
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    assert encrypt_block(block, key) == enc.update(block) + enc.finalize()


def test_cim_aes_fips_vector():
    rep = run_aes(machine(), [FIPS_PT], FIPS_KEY)
    assert rep.details["ciphertexts"] == [FIPS_CT]
    assert rep.verdict


def test_aes_rejects_bad_sizes():
    with pytest.raises(ValueError):
        run_aes(machine(), [FIPS_PT], b"short")
    with pytest.raises(ValueError):
        encrypt_block(b"abc", FIPS_KEY)


# -- MMM

def test_mmm_identity_and_zero():
    rng = np.random.default_rng(0)
    m = rng.integers(0, 256, (6, 6))
    rep = run_mmm(machine(), np.eye(6, dtype=int), m)
    assert rep.verdict and rep.details["exact"]
    rep = run_mmm(machine(), np.zeros((4, 4), dtype=int), m[:4, :4])
    assert rep.verdict


def test_mmm_random_small():
    rng = np.random.default_rng(1)
    rep = run_mmm(machine(3), rng.integers(0, 16, (5, 3)), rng.integers(0, 16, (3, 7)), bitwidth=4)
    assert rep.verdict and rep.details["shape"] == [5, 3, 7]


def test_mmm_rejects():
    with pytest.raises(ValueError):
        run_mmm(machine(), np.ones((2, 3), dtype=int), np.ones((2, 2), dtype=int))
    with pytest.raises(ValueError):
        run_mmm(machine(), np.full((2, 2), 300), np.ones((2, 2), dtype=int))


# -- machine

def test_lint_and_stream_ops():
    m = machine()
    run_counter(m, width=3, increments=2)
    m.lint()
    assert {op for op, _ in m.log} <= {CimOp.AND, CimOp.OR, CimOp.XOR}
    m.log.append((CimOp.NAND, 2))
    with pytest.raises(LintError):
        m.lint()


def test_wide_xor_is_a_tree():
    m = machine()
    rng = np.random.default_rng(2)
    rows = rng.integers(0, 2, (17, 512)).astype(np.uint8)
    addrs = [m.load(r) for r in rows]
    out = m.xor(addrs)
    assert (m.read(out) == np.bitwise_xor.reduce(rows, axis=0)).all()
    assert all(2 <= n <= m.trd for _, n in m.log)


def test_move_permutes_lanes():
    m = machine()
    bits = (np.arange(512) % 3 == 0).astype(np.uint8)
    perm = np.roll(np.arange(512), 5)
    assert (m.read(m.move(m.load(bits), perm)) == bits[perm]).all()
