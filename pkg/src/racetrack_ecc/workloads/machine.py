"""Row allocation, data movement and taint tracking on top of an Engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..engine import CostModel, Engine, ReissuePolicy, SimStats
from ..rtm import RowAddress
from ..senseamp import CimOp, FaultModel

ALLOWED_OPS = (CimOp.AND, CimOp.OR, CimOp.XOR)


def make_engine(protection="ecc", ecc_t=1, fault_rate=0.0, seed=0, stream=0, max_reissues=16,
                cost=None, **geometry) -> Engine:
    return Engine(protection, ecc_t, FaultModel(fault_rate, seed, stream),
                  cost if isinstance(cost, CostModel) else CostModel.from_overrides(cost),
                  ReissuePolicy(max_reissues), **geometry)


@dataclass
class WorkloadReport:
    name: str
    instructions: int
    verdict: bool
    stats: SimStats
    output_bits: int = 0
    bit_errors: int = 0
    tainted_bits: int = 0
    untainted_mismatches: int = 0
    details: dict = field(default_factory=dict)

    @property
    def uncorrectable_words(self) -> int:
        return self.stats.uncorrectable_words


class LintError(AssertionError):
    pass


class CimMachine:
    """Executes bulk-bitwise programs as CIM instructions over 512-lane rows.

    Rows live in DBCs 1 and up (DBC 0 is the engine's compute cluster). Every
    row carries a per-lane taint bit set when any instruction in its history
    reported an uncorrectable or unresolved word covering that lane.
    """

    def __init__(self, engine: Engine):
        self.engine = engine
        self.lanes = engine.layout.data_width
        self.data_len = engine.geometry.data_len
        self.trd = engine.trd
        self._next = self.data_len  # first row of DBC 1
        self._free: list[int] = []
        self.taint: dict[RowAddress, np.ndarray] = {}
        self.log: list[tuple[CimOp, int]] = []
        self._consts: dict[int, RowAddress] = {}
        self._word_lanes = engine.layout.data_bits_per_word

    # -- rows
    def alloc(self) -> RowAddress:
        idx = self._free.pop() if self._free else self._take()
        return RowAddress(idx // self.data_len, idx % self.data_len)

    def _take(self) -> int:
        idx = self._next
        self._next += 1
        return idx

    def free(self, *addrs):
        consts = set(self._consts.values())
        for a in addrs:
            if a is None or a in consts:
                continue
            self.taint.pop(a, None)
            self._free.append(a.dbc_index * self.data_len + a.row)

    def load(self, bits, addr: RowAddress | None = None) -> RowAddress:
        addr = addr or self.alloc()
        self.engine.store_protected_row(addr, np.asarray(bits, dtype=np.uint8))
        self.taint[addr] = np.zeros(self.lanes, dtype=bool)
        return addr

    def read(self, addr: RowAddress) -> np.ndarray:
        return self.engine.load_row(addr)

    def const(self, bit: int) -> RowAddress:
        if bit not in self._consts:
            self._consts[bit] = self.load(np.full(self.lanes, bit, dtype=np.uint8))
        return self._consts[bit]

    def move(self, src: RowAddress, perm=None) -> RowAddress:
        """Copy a row, optionally permuting lanes (``out[l] = in[perm[l]]``)."""
        bits = self.read(src)
        taint = self.taint[src]
        if perm is not None:
            bits = bits[perm]
            taint = taint[perm]
        dst = self.alloc()
        self.engine.store_protected_row(dst, bits)
        self.taint[dst] = taint.copy()
        return dst

    # -- instructions
    def op(self, op, srcs, dst: RowAddress | None = None) -> RowAddress:
        op = CimOp.parse(op)
        dst = dst or self.alloc()
        res = self.engine.execute(op, list(srcs), dst)
        self.log.append((op, len(srcs)))
        taint = np.zeros(self.lanes, dtype=bool)
        for s in srcs:
            taint |= self.taint[s]
        for w, st in enumerate(res.word_status):
            if st in ("uncorrectable", "unresolved"):
                taint[w * self._word_lanes:(w + 1) * self._word_lanes] = True
        self.taint[dst] = taint
        return dst

    def AND(self, *srcs):
        return self.op(CimOp.AND, srcs)

    def OR(self, *srcs):
        return self.op(CimOp.OR, srcs)

    def xor(self, srcs) -> RowAddress:
        """XOR of any number of rows, folded into trees of at most ``trd`` operands."""
        srcs = list(srcs)
        if not srcs:
            return self.move(self.const(0))
        if len(srcs) == 1:
            return self.move(srcs[0])
        temps = []
        while len(srcs) > self.trd:
            group, srcs = srcs[:self.trd], srcs[self.trd:]
            r = self.op(CimOp.XOR, group)
            temps.append(r)
            srcs.append(r)
        out = self.op(CimOp.XOR, srcs)
        self.free(*temps)
        return out

    def lint(self) -> None:
        for op, n in self.log:
            if op not in ALLOWED_OPS:
                raise LintError(f"instruction uses {op.name}")
            if not 2 <= n <= self.trd:
                raise LintError(f"instruction with {n} operands (trd={self.trd})")

    def report(self, name, verdict, **kw) -> WorkloadReport:
        return WorkloadReport(name, len(self.log), bool(verdict), self.engine.stats.copy(), **kw)


def check_outputs(got_bits: np.ndarray, want_bits: np.ndarray, taint: np.ndarray) -> dict:
    """Compare output planes against the oracle, split by taint."""
    wrong = got_bits != want_bits
    return dict(
        output_bits=int(wrong.size),
        bit_errors=int(wrong.sum()),
        tainted_bits=int(taint.sum()),
        untainted_mismatches=int((wrong & ~taint).sum()),
    )
