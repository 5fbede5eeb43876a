"""Experiment grids: config validation, cell execution, CSV/JSON emission."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .engine import ConfigurationError, CostModel, SimStats
from .rtm import LayoutError, SpanError
from .senseamp import make_rng
from .workloads.aes import run_aes
from .workloads.counter import run_counter
from .workloads.machine import CimMachine, make_engine
from .workloads.mmm import run_mmm
from .workloads.synthetic import TraceError, gen_synthetic_trace, run_trace

WORKLOADS = ("synthetic", "counter", "aes", "mmm")
PROTECTIONS = ("none", "ecc", "mr3", "mr5", "mr7")
COST_KEYS = tuple(f.name for f in dataclasses.fields(CostModel))
FIPS_KEY = "000102030405060708090a0b0c0d0e0f"

DEFAULTS = dict(
    workload=["synthetic"],
    protection=["none", "ecc"],
    ecc_t=[1],
    fault_rate=[0.0],
    seed=[0],
    max_reissues=16,
    m_columns=None,
    data_len=32,
    overhead_len=None,
    port_positions=[8, 24],
    trd=7,
    n_ops=10000,
    n_operands=3,
    distribution="uniform",
    counter_width=16,
    increments=1000,
    aes_blocks=100,
    aes_key=FIPS_KEY,
    mmm_size=16,
    bitwidth=8,
    out_dir=None,
    name="results",
    workers=1,
)
DEFAULTS.update({k: None for k in COST_KEYS})

LIST_KEYS = ("workload", "protection", "ecc_t", "fault_rate", "seed", "port_positions")

STAT_FIELDS = tuple(f.name for f in dataclasses.fields(SimStats))
CSV_COLUMNS = (("workload", "protection", "fault_rate", "seed") + STAT_FIELDS
               + ("output_bits", "output_bit_errors", "tainted_bits", "untainted_mismatches",
                  "verdict", "normalized_energy", "normalized_time", "uber", "row_fault_rate"))


def _as_list(v):
    if isinstance(v, str) and "," in v:
        return [x.strip() for x in v.split(",") if x.strip()]
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _coerce(key, value, kind):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key}: cannot interpret {value!r} as {kind.__name__}") from None


def validate_config(raw: dict) -> dict:
    """Merge ``raw`` over the defaults and validate every key before anything runs."""
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in raw.items() if v is not None})
    for k in LIST_KEYS:
        cfg[k] = _as_list(cfg[k])

    for w in cfg["workload"]:
        if w not in WORKLOADS:
            raise ConfigurationError(f"workload: {w!r} not in {WORKLOADS}")
    for pr in cfg["protection"]:
        if pr not in PROTECTIONS:
            raise ConfigurationError(f"protection: {pr!r} not in {PROTECTIONS}")
    cfg["ecc_t"] = [_coerce("ecc_t", t, int) for t in cfg["ecc_t"]]
    for t in cfg["ecc_t"]:
        if t not in (0, 1, 2, 3):
            raise ConfigurationError(f"ecc_t: {t} not in {{0, 1, 2, 3}}")
    cfg["fault_rate"] = [_coerce("fault_rate", p, float) for p in cfg["fault_rate"]]
    for p in cfg["fault_rate"]:
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"fault_rate: {p} outside [0, 1]")
    cfg["seed"] = [_coerce("seed", s, int) for s in cfg["seed"]]
    cfg["port_positions"] = [_coerce("port_positions", x, int) for x in cfg["port_positions"]]
    ints = dict(max_reissues=0, data_len=1, trd=2, n_ops=1, n_operands=2, counter_width=1,
                increments=0, aes_blocks=1, mmm_size=1, bitwidth=1, workers=1)
    for k, lo in ints.items():
        cfg[k] = _coerce(k, cfg[k], int)
        if cfg[k] < lo:
            raise ConfigurationError(f"{k}: must be >= {lo}, got {cfg[k]}")
    for k in ("m_columns", "overhead_len"):
        if cfg[k] is not None:
            cfg[k] = _coerce(k, cfg[k], int)
    if cfg["n_operands"] > cfg["trd"]:
        raise ConfigurationError(f"n_operands: {cfg['n_operands']} exceeds trd={cfg['trd']}")
    if cfg["counter_width"] > 64:
        raise ConfigurationError("counter_width: must be <= 64")
    if cfg["mmm_size"] > 32:
        raise ConfigurationError("mmm_size: desk scale allows at most 32")
    try:
        key = bytes.fromhex(str(cfg["aes_key"]))
    except ValueError:
        raise ConfigurationError("aes_key: not a hex string") from None
    if len(key) != 16:
        raise ConfigurationError(f"aes_key: AES-128 needs 16 bytes, got {len(key)}")
    for k in COST_KEYS:
        if cfg[k] is not None:
            cfg[k] = _coerce(k, cfg[k], float)
    CostModel.from_overrides(cost_overrides(cfg))
    for k in ("distribution", "name"):
        cfg[k] = str(cfg[k])
    try:
        gen_synthetic_trace(1, cfg["n_operands"], 0, cfg["distribution"])
    except TraceError as exc:
        raise ConfigurationError(f"distribution: {exc}") from None
    # geometry is checked by building one engine per protection level
    for label, prot, t in protection_levels(cfg):
        try:
            _engine(cfg, prot, t, 0.0, 0, 0)
        except (LayoutError, SpanError) as exc:
            raise ConfigurationError(f"geometry: {exc}") from None
    return cfg


def cost_overrides(cfg: dict) -> dict:
    return {k: cfg[k] for k in COST_KEYS if cfg.get(k) is not None}


def protection_levels(cfg: dict) -> list[tuple[str, str, int]]:
    """(label, protection, t); the unprotected baseline is always included."""
    out = {"none": ("none", "none", 0)}
    for pr in cfg["protection"]:
        if pr == "ecc":
            for t in cfg["ecc_t"]:
                label = f"ecc{t}" if t else "none"
                out[label] = (label, "ecc" if t else "none", t)
        else:
            out[pr] = (pr, pr, 0)
    return sorted(out.values(), key=lambda x: _level_order(x[0]))


def _level_order(label: str):
    kinds = {"none": 0, "ecc": 1, "mr": 2}
    kind = "none" if label == "none" else label[:3] if label.startswith("ecc") else "mr"
    return kinds[kind], int(label[len(kind):] or 0)


def cell_stream(workload: str, label: str, fault_rate: float, seed: int) -> int:
    return zlib.crc32(f"{workload}|{label}|{fault_rate!r}|{seed}".encode())


def _engine(cfg, prot, t, p, seed, stream):
    return make_engine(prot, t, p, seed=seed, stream=stream, max_reissues=cfg["max_reissues"],
                       cost=cost_overrides(cfg), data_len=cfg["data_len"],
                       overhead_len=cfg["overhead_len"], port_positions=cfg["port_positions"],
                       trd=cfg["trd"], m_columns=cfg["m_columns"] if prot == "none" else None)


def run_cell(cfg: dict, workload: str, label: str, prot: str, t: int, p: float, seed: int):
    """One (workload, protection, fault rate, seed) simulation; workload data depends on (workload, seed) only."""
    engine = _engine(cfg, prot, t, p, seed, cell_stream(workload, label, p, seed))
    m = CimMachine(engine)
    if workload == "synthetic":
        trace = gen_synthetic_trace(cfg["n_ops"], cfg["n_operands"], seed, cfg["distribution"],
                                    data_len=cfg["data_len"])
        rep = run_trace(m, trace)
    elif workload == "counter":
        rep = run_counter(m, cfg["counter_width"], cfg["increments"], seed)
    elif workload == "aes":
        rng = make_rng(seed, 0xAE5)
        blocks = [bytes(rng.integers(0, 256, 16, dtype=np.uint8)) for _ in range(cfg["aes_blocks"])]
        rep = run_aes(m, blocks, bytes.fromhex(cfg["aes_key"]))
    else:
        rng = make_rng(seed, 0x3A3)
        size, hi = cfg["mmm_size"], 1 << cfg["bitwidth"]
        a = rng.integers(0, hi, (size, size))
        b = rng.integers(0, hi, (size, size))
        rep = run_mmm(m, a, b, cfg["bitwidth"])
    m.lint()
    return rep


def _run_cell_job(args):
    cfg, key = args
    workload, (label, prot, t), p, seed = key
    rep = run_cell(cfg, workload, label, prot, t, p, seed)
    return key, rep


def grid(cfg: dict) -> list:
    return [(w, lvl, p, s) for w in cfg["workload"] for p in cfg["fault_rate"]
            for s in cfg["seed"] for lvl in protection_levels(cfg)]


def run_experiment(cfg: dict) -> list[dict]:
    """Execute every cell and return result rows sorted by cell key."""
    keys = grid(cfg)
    jobs = [(cfg, k) for k in keys]
    if cfg["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            done = list(pool.map(_run_cell_job, jobs))
    else:
        done = [_run_cell_job(j) for j in jobs]
    reports = {(w, lvl[0], p, s): rep for (w, lvl, p, s), rep in done}
    rows = []
    for (w, label, p, s), rep in reports.items():
        base = reports[(w, "none", p, s)].stats
        st = rep.stats
        row = dict(workload=w, protection=label, fault_rate=p, seed=s)
        row.update(st.as_dict())
        row.update(output_bits=rep.output_bits, output_bit_errors=rep.bit_errors,
                   tainted_bits=rep.tainted_bits, untainted_mismatches=rep.untainted_mismatches,
                   verdict=int(rep.verdict),
                   normalized_energy=st.energy / base.energy if base.energy else 1.0,
                   normalized_time=st.time / base.time if base.time else 1.0,
                   uber=rep.bit_errors / rep.output_bits if rep.output_bits else 0.0,
                   row_fault_rate=st.row_fault_rate)
        rows.append(row)
    rows.sort(key=lambda r: (r["workload"], r["fault_rate"], r["seed"], _level_order(r["protection"])))
    return rows


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def summary(cfg: dict, rows: list[dict]) -> dict:
    return dict(
        config={k: v for k, v in cfg.items() if k != "out_dir"},
        cells=len(rows),
        results=[{k: r[k] for k in ("workload", "protection", "fault_rate", "seed", "verdict",
                                    "normalized_energy", "normalized_time", "uber",
                                    "row_fault_rate", "uncorrectable_words")} for r in rows],
    )


def write_outputs(cfg: dict, rows: list[dict], out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{cfg['name']}.csv"
    json_path = out / f"{cfg['name']}.json"
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8")
    json_path.write_text(json.dumps(summary(cfg, rows), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    return csv_path, json_path


SUMMARY_METRICS = ("normalized_energy", "normalized_time", "uber", "row_fault_rate",
                   "uncorrectable_words", "reissue_count")


def summarize_rows(rows: list[dict]) -> list[dict]:
    """Mean and 95% normal-approximation half-width per (workload, protection, fault_rate)."""
    groups: dict = {}
    for r in rows:
        key = (r["workload"], r["protection"], float(r["fault_rate"]))
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[2], _level_order(k[1]))):
        g = groups[key]
        row = dict(workload=key[0], protection=key[1], fault_rate=key[2], runs=len(g))
        for m in SUMMARY_METRICS:
            x = np.array([float(r[m]) for r in g])
            row[f"{m}_mean"] = float(x.mean())
            half = 1.96 * x.std(ddof=1) / math.sqrt(len(x)) if len(x) > 1 else 0.0
            row[f"{m}_ci95"] = float(half)
        out.append(row)
    return out


def summary_columns() -> tuple:
    cols = ["workload", "protection", "fault_rate", "runs"]
    for m in SUMMARY_METRICS:
        cols += [f"{m}_mean", f"{m}_ci95"]
    return tuple(cols)
