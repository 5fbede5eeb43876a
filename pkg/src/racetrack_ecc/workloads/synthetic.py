"""Synthetic AND/OR traces: generation, trace files, engine replay, batched Monte Carlo."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as K
from ..ecc import make_scheme
from ..rtm import RowAddress
from ..senseamp import CimOp, apply_faults, derive_logic, draw_faults, make_rng
from .machine import CimMachine, WorkloadReport

DATA_BITS = 64
WORDS = 8
LANES = WORDS * DATA_BITS


class TraceError(ValueError):
    pass


def _parse_distribution(dist: str) -> float:
    if dist == "uniform":
        return 0.5
    if dist.startswith("bernoulli:"):
        d = float(dist.split(":", 1)[1])
        if not 0.0 <= d <= 1.0:
            raise TraceError(f"ones density must be in [0, 1], got {d}")
        return d
    raise TraceError(f"unknown operand distribution {dist!r}")


@dataclass
class Trace:
    """AND/OR instructions over a pool of operand rows and a ring of scratch rows."""

    ops: np.ndarray
    srcs: np.ndarray
    dst: np.ndarray
    seed: int
    n_operands: int
    pool: int = 32
    scratch: int = 8
    distribution: str = "uniform"
    data_len: int = 32
    header: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ops)

    def src_address(self, idx: int) -> RowAddress:
        lin = self.data_len + int(idx)
        return RowAddress(lin // self.data_len, lin % self.data_len)

    def dst_address(self, idx: int) -> RowAddress:
        lin = self.data_len + self.pool + int(idx)
        return RowAddress(lin // self.data_len, lin % self.data_len)

    def __iter__(self):
        for i in range(len(self.ops)):
            yield (CimOp(int(self.ops[i])), [self.src_address(s) for s in self.srcs[i]],
                   self.dst_address(self.dst[i]))

    def pool_data(self) -> np.ndarray:
        density = _parse_distribution(self.distribution)
        rng = make_rng(self.seed, 0xDA7A)
        return (rng.random((self.pool, LANES)) < density).astype(np.uint8)

    # -- file format: '# key=value ...' header, then 'OP dst src1 src2 ...'
    def dump(self, fh) -> None:
        meta = dict(seed=self.seed, n_ops=len(self), n_operands=self.n_operands, pool=self.pool,
                    scratch=self.scratch, distribution=self.distribution, data_len=self.data_len)
        meta.update(self.header)
        fh.write("# trace " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        for op, srcs, dst in self:
            fh.write(" ".join([op.name, str(dst)] + [str(s) for s in srcs]) + "\n")

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.dump(fh)

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def read(cls, path) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def parse(cls, text: str) -> "Trace":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# trace"):
            raise TraceError("missing '# trace' header line")
        meta = dict(kv.split("=", 1) for kv in lines[0].split()[2:])
        try:
            data_len = int(meta.pop("data_len"))
            pool = int(meta.pop("pool"))
            scratch = int(meta.pop("scratch"))
            seed = int(meta.pop("seed"))
            n = int(meta.pop("n_operands"))
            n_ops = int(meta.pop("n_ops"))
            dist = meta.pop("distribution")
        except KeyError as exc:
            raise TraceError(f"trace header lacks {exc}") from None
        ops, srcs, dst = [], [], []
        for ln, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            try:
                op = CimOp.parse(parts[0])
            except ValueError:
                raise TraceError(f"line {ln}: bad op {parts[0]!r}") from None
            addrs = [RowAddress.parse(p) for p in parts[1:]]
            lin = [a.dbc_index * data_len + a.row for a in addrs]
            if len(lin) != n + 1:
                raise TraceError(f"line {ln}: expected {n} sources")
            ops.append(int(op))
            dst.append(lin[0] - data_len - pool)
            srcs.append([x - data_len for x in lin[1:]])
        if len(ops) != n_ops:
            raise TraceError(f"header says {n_ops} instructions, found {len(ops)}")
        return cls(np.array(ops, dtype=np.int8), np.array(srcs, dtype=np.int32).reshape(-1, n),
                   np.array(dst, dtype=np.int32), seed, n, pool, scratch, dist, data_len, meta)


def gen_synthetic_trace(n_ops: int = 10 ** 6, n_operands: int = 3, seed: int = 0,
                        distribution: str = "uniform", pool: int = 32, scratch: int = 8,
                        data_len: int = 32) -> Trace:
    if n_ops < 1:
        raise TraceError(f"n_ops must be >= 1, got {n_ops}")
    if not 2 <= n_operands <= pool:
        raise TraceError(f"n_operands must be in [2, {pool}]")
    _parse_distribution(distribution)
    rng = make_rng(seed, 0x7ACE)
    ops = rng.integers(0, 2, size=n_ops).astype(np.int8)  # AND or OR
    srcs = rng.integers(0, pool, size=(n_ops, n_operands), dtype=np.int32)
    while True:
        s = np.sort(srcs, axis=1)
        dup = (s[:, 1:] == s[:, :-1]).any(axis=1)
        if not dup.any():
            break
        srcs[dup] = rng.integers(0, pool, size=(int(dup.sum()), n_operands), dtype=np.int32)
    dst = (np.arange(n_ops) % scratch).astype(np.int32)
    return Trace(ops, srcs, dst, seed, n_operands, pool, scratch, distribution, data_len)


def run_trace(machine: CimMachine, trace: Trace) -> WorkloadReport:
    eng = machine.engine
    if trace.data_len != eng.geometry.data_len:
        raise TraceError("trace geometry does not match the engine")
    for i, bits in enumerate(trace.pool_data()):
        machine.load(bits, trace.src_address(i))
    for op, srcs, dst in trace:
        machine.op(op, srcs, dst)
    s = eng.stats
    return machine.report("synthetic", s.bit_errors == 0, output_bits=s.result_bits,
                          bit_errors=s.bit_errors, details=dict(n_ops=len(trace)))


# ---------------------------------------------------------------- batched Monte Carlo

@dataclass
class SyntheticResult:
    protection: str
    p: float
    n_operands: int
    instructions: int = 0
    issues: int = 0
    reissues: int = 0
    injected: int = 0
    detected: int = 0
    corrections: int = 0
    ambiguous: int = 0
    uncorrectable_words: int = 0
    uncorrectable_issues: int = 0
    uncorrectable_instructions: int = 0
    exhausted: int = 0
    bit_errors: int = 0

    @property
    def row_fault_rate(self) -> float:
        """Per-issue probability that a row carries an unprotected word."""
        return self.uncorrectable_issues / self.issues if self.issues else 0.0

    @property
    def instruction_fault_rate(self) -> float:
        return self.uncorrectable_instructions / self.instructions if self.instructions else 0.0

    def stderr(self) -> float:
        r = self.row_fault_rate
        return float(np.sqrt(r * (1 - r) / self.issues)) if self.issues else 0.0


def _protection_params(protection: str):
    if protection == "none":
        return "none", 0, 1
    if protection.startswith("ecc"):
        t = int(protection[3:])
        return ("ecc", t, 1) if t else ("none", 0, 1)
    if protection.startswith("mr"):
        return "mr", 0, int(protection[2:])
    raise ValueError(f"unknown protection {protection!r}")


def simulate_synthetic(n_ops: int, protection: str, p: float, n_operands: int = 3, seed: int = 0,
                       batch: int = 20000, max_reissues: int = 16) -> SyntheticResult:
    """Monte Carlo of random AND/OR instructions on uniform 512-bit operands.

    Equivalent to replaying the engine pipeline instruction by instruction:
    each issue draws fresh faults, reissues only the instructions left with an
    ambiguous fault, and stops at the first uncorrectable word.
    """
    kind, t, copies = _protection_params(protection)
    width = DATA_BITS + (make_scheme(t).r if t else 0)
    m = WORDS * width
    rng = make_rng(seed, 0x5EED)
    res = SyntheticResult(protection, p, n_operands)
    for start in range(0, n_ops, batch):
        b = min(batch, n_ops - start)
        ops = rng.integers(0, 2, size=b).astype(np.int8)
        counts = K.random_counts(rng, (b, LANES), n_operands)
        res.instructions += b
        if kind == "mr":
            faults = [draw_faults(rng, b, LANES, p) for _ in range(copies)]
            out = K.mr_outcomes(counts, ops, faults, n_operands, copies)
            res.issues += b
            res.injected += int(out[:, 0].sum())
            res.bit_errors += int(out[:, 1].sum())
            res.uncorrectable_words += int(out[:, 2].sum())
            lost = int((out[:, 2] > 0).sum())
            res.uncorrectable_issues += lost
            res.uncorrectable_instructions += lost
            continue
        pending = np.arange(b)
        for attempt in range(max_reissues + 1):
            rows, cols, up = draw_faults(rng, pending.size, m, p)
            out = K.issue_outcomes(counts[pending], ops[pending], rows, cols, up, n_operands, width, t)
            res.issues += pending.size
            res.injected += int(out[:, K.INJECTED].sum())
            res.detected += int(out[:, K.DETECTED].sum())
            res.corrections += int(out[:, K.CORRECTED].sum())
            res.ambiguous += int(out[:, K.AMBIGUOUS].sum())
            res.uncorrectable_words += int(out[:, K.UNC_WORDS].sum())
            unc = out[:, K.UNC_WORDS] > 0
            res.uncorrectable_issues += int(unc.sum())
            res.uncorrectable_instructions += int(unc.sum())
            amb = (out[:, K.AMBIGUOUS] > 0) & ~unc
            # an uncorrectable issue keeps the ambiguous bits as sensed
            res.bit_errors += int(out[~amb, K.BIT_ERRORS].sum() + out[unc, K.AMB_ERRORS].sum())
            if not amb.any():
                break
            if attempt == max_reissues:
                res.exhausted += int(amb.sum())
                res.uncorrectable_instructions += int(amb.sum())
                res.bit_errors += int((out[amb, K.BIT_ERRORS] + out[amb, K.AMB_ERRORS]).sum())
                break
            res.reissues += int(amb.sum())
            pending = pending[amb]
    return res


def fault_uniform_counts(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    """Counts under which every (level, direction) fault event is equally likely.

    The two extreme levels admit one fault direction and interior levels two,
    so levels are weighted 1 : 2 : ... : 2 : 1.
    """
    w = np.full(n + 1, 2.0)
    w[0] = w[n] = 1.0
    return rng.choice(n + 1, size=size, p=w / w.sum())


def measure_op_error_rates(n: int, p: float, columns: int, seed: int = 0,
                           distribution: str = "fault-uniform", batch: int = 10 ** 6) -> dict:
    """Monte Carlo AND/OR error rates per sensed column through sense + derive_logic."""
    rng = make_rng(seed, 0xE41)
    errors = {"AND": 0, "OR": 0}
    faults = 0
    done = 0
    while done < columns:
        b = min(batch, columns - done)
        if distribution == "fault-uniform":
            counts = fault_uniform_counts(rng, b, n)
        else:
            density = _parse_distribution(distribution)
            counts = (rng.random((n, b)) < density).sum(axis=0)
        _, cols, up = draw_faults(rng, 1, b, p)
        sensed = apply_faults(counts, n, cols, up)
        faults += cols.size
        for name in errors:
            errors[name] += int(np.count_nonzero(
                derive_logic(sensed[cols], n, name) != derive_logic(counts[cols], n, name)))
        done += b
    return dict(columns=columns, faults=faults,
                AND=errors["AND"] / columns, OR=errors["OR"] / columns)
