"""Acceptance criteria, each at its stated tolerance; one PASS/FAIL line per criterion."""

import math
import time

import numpy as np
import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from racetrack_ecc.analytics import config_row_rate, op_fault_rate
from racetrack_ecc.ecc import make_scheme
from racetrack_ecc.engine import FaultKind, classify_fault
from racetrack_ecc.experiment import rows_to_csv, run_experiment, validate_config
from racetrack_ecc.senseamp import derive_logic, make_rng
from racetrack_ecc.workloads import (CimMachine, make_engine, measure_op_error_rates, run_aes,
                                     run_counter, run_mmm, simulate_synthetic)

FIPS_KEY = bytes(range(16))
FIPS_PT = bytes.fromhex("00112233445566778899aabbccddeeff")
FIPS_CT = bytes.fromhex("69c4e0d86a7b0430d8cdb78070b4c55a")


@pytest.fixture
def verdict(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE criterion {num}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return emit


def test_criterion_1_homomorphism(verdict):
    t0 = time.perf_counter()
    rng = make_rng(2024, 1)
    bad = 0
    for t in (1, 2, 3):
        s = make_scheme(t)
        a = rng.integers(0, 2, (10 ** 4, 64), dtype=np.uint8)
        b = rng.integers(0, 2, (10 ** 4, 64), dtype=np.uint8)
        bad += int(np.any(s.encode(a) ^ s.encode(b) != s.encode(a ^ b), axis=1).sum())
    dt = time.perf_counter() - t0
    verdict(1, bad == 0 and dt < 5.0, f"3 x 10^4 pairs, {bad} mismatches, {dt:.2f} s (< 5 s)")


def _enumerate(sensed, n, op):
    outs = {derive_logic(c, n, op) for c in (sensed - 1, sensed + 1) if 0 <= c <= n}
    if outs == {derive_logic(sensed, n, op)}:
        return FaultKind.NON_ERROR, None
    if len(outs) == 1:
        return FaultKind.DETERMINISTIC, outs.pop()
    return FaultKind.AMBIGUOUS, None


def test_criterion_2_classification(verdict):
    cases = mism = 0
    for op in ("AND", "OR"):
        for n in range(2, 8):
            for sensed in range(n + 1):
                got = classify_fault(sensed, n, op)
                cases += 1
                mism += (got.kind, got.bit) != _enumerate(sensed, n, op)
    amb = {op: [s for s in range(4) if classify_fault(s, 3, op).kind is FaultKind.AMBIGUOUS]
           for op in ("AND", "OR")}
    ok = mism == 0 and amb == {"AND": [2], "OR": [1]}
    verdict(2, ok, f"{cases} cases, {mism} mismatches; n=3 ambiguous cells {amb}")


def test_criterion_3_eq1_monte_carlo(verdict):
    t0 = time.perf_counter()
    m = measure_op_error_rates(4, 1e-3, 10 ** 7, seed=3)
    dt = time.perf_counter() - t0
    want = op_fault_rate(1e-3, 4)
    rel = {k: abs(m[k] - want) / want for k in ("AND", "OR")}
    iid = measure_op_error_rates(4, 1e-3, 10 ** 6, seed=4, distribution="uniform")
    ok = max(rel.values()) <= 0.10 and dt < 60
    verdict(3, ok, f"AND={m['AND']:.4g} OR={m['OR']:.4g} vs {want:.4g} "
                   f"(rel err {rel['AND']:.3f}/{rel['OR']:.3f} <= 0.10), {dt:.1f} s; "
                   f"i.i.d.-bit operands give AND={iid['AND']:.3g} (closed form {1e-3 * 6 / 32:.3g})")


def test_criterion_4_row_fault_rates(verdict):
    configs = ("none", "ecc1", "ecc2", "ecc3", "mr3", "mr5")
    agree, notes, sim = [], [], {}
    for p in (1e-2, 1e-3, 1e-4):
        for i, cfg in enumerate(configs):
            r = simulate_synthetic(10 ** 6, cfg, p, n_operands=3, seed=100 + i)
            a = config_row_rate(cfg, p, 3)
            tol = max(4 * r.stderr(), 0.10)
            sim[p, cfg] = (r.row_fault_rate, a)
            agree.append(abs(r.row_fault_rate - a) <= tol)
            if not agree[-1]:
                notes.append(f"{cfg}@{p:g}: {r.row_fault_rate:.3g} vs {a:.3g}")
    order = []
    for p in (1e-2, 1e-3, 1e-4):
        for e, m in (("ecc1", "mr3"), ("ecc3", "mr5")):
            ratio = abs(math.log10(config_row_rate(e, p, 3) / config_row_rate(m, p, 3)))
            order.append(ratio <= 1.0)
            if ratio > 1.0:
                notes.append(f"|log10 {e}/{m}|@{p:g}={ratio:.2f}")
    raw = [abs(math.log10(config_row_rate(e, p, 3) / config_row_rate(m, p, 3, q_mode="raw"))) <= 1
           for p in (1e-2, 1e-3, 1e-4) for e, m in (("ecc1", "mr3"), ("ecc3", "mr5"))]
    ok = all(agree) and all(order)
    verdict(4, ok, f"analytic agreement {sum(agree)}/{len(agree)}, "
                   f"order-of-magnitude pairs {sum(order)}/{len(order)} "
                   f"(q=p alternative: {sum(raw)}/{len(raw)})"
                   + (f"; {'; '.join(notes)}" if notes else ""))


def _overheads(rows):
    out = {}
    for r in rows:
        if r["protection"] != "none":
            out.setdefault(r["fault_rate"], []).append(
                (r["normalized_energy"] - 1, r["normalized_time"] - 1))
    return {p: tuple(np.mean(v, axis=0)) for p, v in out.items()}


def test_criterion_5_overhead_trend(verdict):
    cfg = validate_config(dict(workload="synthetic", n_ops=20000, protection=["ecc"],
                               ecc_t=[1, 2, 3], fault_rate=[1e-4, 1e-3, 1e-2], seed=[0]))
    ov = _overheads(run_experiment(cfg))
    lo, mid, hi = ov[1e-4], ov[1e-3], ov[1e-2]
    ok = (max(lo) <= 0.01 and min(hi) >= 0.10
          and all(h >= 10 * m for h, m in zip(hi, mid)))
    verdict(5, ok, "mean ECC overhead (energy/time): "
                   f"1e-4 {lo[0]:.2%}/{lo[1]:.2%}, 1e-3 {mid[0]:.2%}/{mid[1]:.2%}, "
                   f"1e-2 {hi[0]:.2%}/{hi[1]:.2%}")


def test_criterion_6_uber_monotone(verdict):
    cfg = validate_config(dict(workload=["synthetic", "counter", "aes", "mmm"], n_ops=5000,
                               increments=200, aes_blocks=32, mmm_size=8,
                               protection=["ecc"], ecc_t=[0, 1, 2, 3],
                               fault_rate=[0.0, 1e-3], seed=[0]))
    rows = run_experiment(cfg)
    monotone, zero, seen = True, True, {}
    for r in rows:
        if r["fault_rate"] == 0.0:
            zero &= r["uber"] == 0.0 and r["uncorrectable_words"] == 0
        else:
            seen.setdefault(r["workload"], []).append(r["uncorrectable_words"])
    for w, unc in seen.items():
        monotone &= all(a >= b for a, b in zip(unc, unc[1:]))
    verdict(6, monotone and zero, f"uncorrectable words t=0..3 at 1e-3: {seen}; "
                                  f"UBER=0 at p=0: {zero}")


def _engine(t, p, seed=0):
    return CimMachine(make_engine("ecc", t, p, seed=seed))


def test_criterion_7_workload_oracles(verdict):
    rng = make_rng(7, 7)
    blocks = [FIPS_PT] + [bytes(rng.integers(0, 256, 16, dtype=np.uint8)) for _ in range(100)]
    enc = Cipher(algorithms.AES(FIPS_KEY), modes.ECB()).encryptor()
    lib = [enc.update(b) for b in blocks]
    a = rng.integers(0, 256, (16, 16))
    b = rng.integers(0, 256, (16, 16))

    clean = dict(
        counter=run_counter(_engine(1, 0.0), 16, 1000, seed=1),
        aes=run_aes(_engine(1, 0.0), blocks, FIPS_KEY),
        mmm=run_mmm(_engine(1, 0.0), a, b, 8),
    )
    aes_ct = [bytes.fromhex(c) for c in clean["aes"].details["ciphertexts"]]
    exact = (all(r.verdict for r in clean.values()) and aes_ct == lib
             and aes_ct[0] == FIPS_CT and clean["mmm"].details["exact"])

    faulty = dict(
        counter=run_counter(_engine(1, 1e-4, 11), 16, 1000, seed=1),
        aes=run_aes(_engine(1, 1e-4, 12), blocks, FIPS_KEY),
        mmm=run_mmm(_engine(1, 1e-4, 13), a, b, 8),
    )
    flagged_ok = all(r.untainted_mismatches == 0 for r in faulty.values())
    summary = {k: (r.stats.injected_faults, r.tainted_bits, r.untainted_mismatches)
               for k, r in faulty.items()}
    verdict(7, exact and flagged_ok,
            f"fault-free bit-exact: {exact}; t=1 p=1e-4 (faults, tainted bits, "
            f"untainted mismatches) {summary}")


def test_criterion_8_determinism(verdict):
    raw = dict(workload=["synthetic", "counter"], n_ops=400, increments=10, counter_width=8,
               protection=["ecc", "mr3"], ecc_t=[1, 3], fault_rate=[1e-2], seed=[0, 1])
    first = rows_to_csv(run_experiment(validate_config(raw))).encode()
    second = rows_to_csv(run_experiment(validate_config(raw))).encode()
    pooled = rows_to_csv(run_experiment(validate_config(dict(raw, workers=2)))).encode()
    ok = first == second == pooled
    n_rows = len(first.splitlines()) - 1
    verdict(8, ok, f"{n_rows} rows; rerun identical: {first == second}; "
                   f"2-worker pool identical: {first == pooled}")
