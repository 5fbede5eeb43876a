"""Protected bulk-bitwise operations on racetrack memory.

Every TR is sensed across data and parity columns at once. The parity of each
sensed count is the XOR of the operands, and XOR commutes with any linear
code, so the XOR bits of a word form a codeword whenever sensing was clean.
Decoding that codeword locates the faulty columns; each one is then judged
against the requested op (left alone, corrected, or reissued).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .ecc import ConfigurationError, EccScheme, make_scheme
from .rtm import Geometry, LayoutError, Memory, RowAddress
from .senseamp import CimOp, FaultModel, ModelError, apply_faults, derive_logic

DATA_BITS = 64
PROTECTIONS = ("none", "ecc", "mr3", "mr5", "mr7")


class FaultKind(Enum):
    NON_ERROR = "non_error"
    DETERMINISTIC = "deterministic_error"
    AMBIGUOUS = "ambiguous"


class FaultClass(NamedTuple):
    kind: FaultKind
    bit: int | None = None

    def __repr__(self):
        if self.kind is FaultKind.DETERMINISTIC:
            return f"DeterministicError({self.bit})"
        return "Ambiguous" if self.kind is FaultKind.AMBIGUOUS else "NonError"


NON_ERROR = FaultClass(FaultKind.NON_ERROR)
AMBIGUOUS = FaultClass(FaultKind.AMBIGUOUS)


def classify_fault(sensed_count: int, n: int, op) -> FaultClass:
    """Judge a located +-1 sensing fault from the sensed count alone."""
    op = CimOp.parse(op)
    if not 0 <= sensed_count <= n:
        raise ModelError(f"sensed count {sensed_count} outside [0, {n}]")
    base = op.base
    if base is CimOp.AND:
        if sensed_count == n:
            cls = FaultClass(FaultKind.DETERMINISTIC, 0)
        elif sensed_count == n - 1:
            cls = AMBIGUOUS
        else:
            cls = NON_ERROR
    elif base is CimOp.OR:
        if sensed_count == 0:
            cls = FaultClass(FaultKind.DETERMINISTIC, 1)
        elif sensed_count == 1:
            cls = AMBIGUOUS
        else:
            cls = NON_ERROR
    else:
        cls = FaultClass(FaultKind.DETERMINISTIC, 1 - (sensed_count & 1))
    if op.inverted and cls.kind is FaultKind.DETERMINISTIC:
        cls = FaultClass(FaultKind.DETERMINISTIC, 1 - cls.bit)
    return cls


@dataclass
class CostModel:
    """Energy and latency per primitive, in arbitrary normalized units."""

    tr_energy: float = 2.0
    shift_energy: float = 0.3
    read_energy: float = 1.0
    write_energy: float = 1.0
    decode_energy: float = 0.5
    tr_latency: float = 2.0
    shift_latency: float = 0.3
    read_latency: float = 1.0
    write_latency: float = 1.0
    decode_latency: float = 0.5

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigurationError(f"cost {f.name} must be non-negative")

    @classmethod
    def from_overrides(cls, overrides: dict | None) -> "CostModel":
        overrides = dict(overrides or {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ConfigurationError(f"unknown cost keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in overrides.items()})

    def energy_of(self, s: "SimStats") -> float:
        return (s.tr_count * self.tr_energy + s.shift_count * self.shift_energy
                + s.read_count * self.read_energy + s.write_count * self.write_energy
                + s.decode_count * self.decode_energy)

    def time_of(self, s: "SimStats") -> float:
        return (s.tr_count * self.tr_latency + s.shift_count * self.shift_latency
                + s.read_count * self.read_latency + s.write_count * self.write_latency
                + s.decode_count * self.decode_latency)


@dataclass
class SimStats:
    instructions: int = 0
    issue_count: int = 0
    tr_count: int = 0
    shift_count: int = 0
    read_count: int = 0
    write_count: int = 0
    decode_count: int = 0
    reissue_count: int = 0
    injected_faults: int = 0
    detected_faults: int = 0
    deterministic_corrections: int = 0
    ambiguous_events: int = 0
    uncorrectable_words: int = 0
    uncorrectable_issues: int = 0
    exhausted_words: int = 0
    silent_miscorrections: int = 0
    bit_errors: int = 0
    result_bits: int = 0
    energy: float = 0.0
    time: float = 0.0

    def __add__(self, other: "SimStats") -> "SimStats":
        return SimStats(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                           for f in dataclasses.fields(self)})

    def __sub__(self, other: "SimStats") -> "SimStats":
        return SimStats(**{f.name: getattr(self, f.name) - getattr(other, f.name)
                           for f in dataclasses.fields(self)})

    def copy(self) -> "SimStats":
        return dataclasses.replace(self)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def uber(self) -> float:
        return self.bit_errors / self.result_bits if self.result_bits else 0.0

    @property
    def row_fault_rate(self) -> float:
        """Fraction of issues whose row held at least one unprotected word."""
        return self.uncorrectable_issues / self.issue_count if self.issue_count else 0.0


@dataclass
class ReissuePolicy:
    max_reissues: int = 16

    def __post_init__(self):
        if self.max_reissues < 0:
            raise ConfigurationError("max_reissues must be >= 0")


@dataclass
class ProtectedLayout:
    """Word-interleaved row layout: each word is 64 data columns then its parity."""

    words_per_row: int = 8
    scheme: EccScheme | None = None
    data_bits_per_word: int = DATA_BITS

    @property
    def parity_bits(self) -> int:
        return self.scheme.r if self.scheme else 0

    @property
    def word_width(self) -> int:
        return self.data_bits_per_word + self.parity_bits

    @property
    def m_columns(self) -> int:
        return self.words_per_row * self.word_width

    @property
    def data_width(self) -> int:
        return self.words_per_row * self.data_bits_per_word

    @property
    def t(self) -> int:
        return self.scheme.t if self.scheme else 0

    def data_columns(self) -> np.ndarray:
        w = np.arange(self.words_per_row)[:, None] * self.word_width
        return (w + np.arange(self.data_bits_per_word)[None, :]).ravel()

    def to_row(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=np.uint8)
        if data.shape != (self.data_width,):
            raise LayoutError(f"row data width {data.shape} != ({self.data_width},)")
        words = data.reshape(self.words_per_row, self.data_bits_per_word)
        if self.scheme is None:
            return words.ravel().copy()
        return self.scheme.encode(words).ravel()

    def from_row(self, row) -> np.ndarray:
        return np.asarray(row)[self.data_columns()]

    def words(self, row) -> np.ndarray:
        return np.asarray(row).reshape(self.words_per_row, self.word_width)


class ProtectedResult(NamedTuple):
    data: np.ndarray
    result_row: np.ndarray
    xor_row: np.ndarray | None
    word_status: list
    issues: int
    stats: SimStats


class Engine:
    """Owns a racetrack memory, one fault stream and the protection policy.

    DBC 0 is the compute cluster: its first ``trd`` rows form the TR window
    that operands are staged into.
    """

    def __init__(self, protection: str = "ecc", ecc_t: int = 1, fault_model: FaultModel | None = None,
                 cost: CostModel | None = None, policy: ReissuePolicy | None = None,
                 words_per_row: int = 8, data_len: int = 32, overhead_len: int | None = None,
                 port_positions: Sequence[int] = (8, 24), trd: int = 7, m_columns: int | None = None):
        if protection not in PROTECTIONS:
            raise ConfigurationError(f"protection must be one of {PROTECTIONS}, got {protection!r}")
        self.protection = protection
        scheme = None
        if protection == "ecc":
            if ecc_t == 0:
                self.protection = protection = "none"
            else:
                scheme = make_scheme(ecc_t)
        self.copies = int(protection[2:]) if protection.startswith("mr") else 1
        self.layout = ProtectedLayout(words_per_row, scheme)
        if m_columns is not None and m_columns != self.layout.m_columns:
            raise ConfigurationError(
                f"m_columns={m_columns} does not match layout width {self.layout.m_columns}")
        self.geometry = Geometry(self.layout.m_columns, data_len, overhead_len, tuple(port_positions), trd)
        self.memory = Memory(self.geometry)
        self.compute = self.memory.dbc(0)
        self.fm = fault_model or FaultModel(0.0)
        self.cost = cost or CostModel()
        self.policy = policy or ReissuePolicy()
        self.stats = SimStats()
        self._data_cols = self.layout.data_columns()
        self.last_transcript: list = []

    @property
    def trd(self) -> int:
        return self.geometry.trd

    def window(self, n: int) -> list[RowAddress]:
        return [RowAddress(0, i) for i in range(n)]

    # -- accounting
    def _sync_costs(self, before):
        after = self.memory.totals()
        d_shift = after.shifts - before.shifts
        d_read = after.reads - before.reads
        d_write = after.writes - before.writes
        d_tr = after.trs - before.trs
        s, c = self.stats, self.cost
        s.shift_count += d_shift
        s.read_count += d_read
        s.write_count += d_write
        s.tr_count += d_tr
        s.energy += (d_shift * c.shift_energy + d_read * c.read_energy
                     + d_write * c.write_energy + d_tr * c.tr_energy)
        s.time += (d_shift * c.shift_latency + d_read * c.read_latency
                   + d_write * c.write_latency + d_tr * c.tr_latency)

    def _charge_decode(self, k: int):
        if k:
            self.stats.decode_count += k
            self.stats.energy += k * self.cost.decode_energy
            self.stats.time += k * self.cost.decode_latency

    # -- row access
    def store_protected_row(self, addr: RowAddress, data) -> None:
        before = self.memory.totals()
        self.memory[addr].write_row(addr, self.layout.to_row(data))
        self._sync_costs(before)

    def load_row(self, addr: RowAddress) -> np.ndarray:
        before = self.memory.totals()
        row = self.memory[addr].read_row(addr)
        self._sync_costs(before)
        return self.layout.from_row(row)

    def peek(self, addr: RowAddress) -> np.ndarray:
        return self.layout.from_row(self.memory[addr].peek_row(addr))

    def _stage(self, rows: Sequence[RowAddress]) -> list[RowAddress]:
        n = len(rows)
        if not 2 <= n <= self.trd:
            raise ConfigurationError(f"operand count {n} outside [2, {self.trd}]")
        first = rows[0]
        contiguous = all(r.dbc_index == first.dbc_index and r.row == first.row + i
                         for i, r in enumerate(rows))
        if contiguous:
            return list(rows)
        win = self.window(n)
        for src, dst in zip(rows, win):
            bits = self.memory[src].read_row(src)
            self.compute.write_row(dst, bits)
        return win

    # -- operations
    def execute(self, op, rows: Sequence[RowAddress], dst: RowAddress | None = None) -> ProtectedResult:
        op = CimOp.parse(op)
        if self.protection.startswith("mr"):
            return self.modular_redundancy_op(rows, op, dst)
        return self.protected_op(rows, op, dst)

    def protected_op(self, rows: Sequence[RowAddress], op, dst: RowAddress | None = None) -> ProtectedResult:
        op = CimOp.parse(op)
        start = self.stats.copy()
        before = self.memory.totals()
        lay = self.layout
        t = lay.t
        n = len(rows)
        span = self._stage(list(rows))
        dbc = self.memory[span[0]]
        self.last_transcript = []
        issues = 0
        status = ["clean"] * lay.words_per_row
        while True:
            issues += 1
            self.stats.issue_count += 1
            counts = dbc.transverse_read(span, n)
            _, fcols, up = self.fm.draw(1, lay.m_columns)
            sensed = apply_faults(counts, n, fcols, up)
            self.last_transcript.append((counts.copy(), fcols.copy(), up.copy()))
            self.stats.injected_faults += fcols.size
            truth = derive_logic(counts[self._data_cols], n, op)
            result = derive_logic(sensed[self._data_cols], n, op)
            word_of = fcols // lay.word_width
            injected = np.bincount(word_of, minlength=lay.words_per_row)
            xor_words = lay.words(sensed & 1).astype(np.uint8)
            if t == 0:
                bad = np.flatnonzero(injected)
                self.stats.uncorrectable_words += bad.size
                self.stats.uncorrectable_issues += int(bad.size > 0)
                for w in bad:
                    status[w] = "uncorrectable"
                break
            ambiguous = []
            unc = []
            synd = (xor_words.astype(np.int64) @ lay.scheme._h_int.T) & 1
            dirty = np.flatnonzero(synd.any(axis=1))
            self._charge_decode(dirty.size)
            for w in dirty:
                located = lay.scheme.locate(xor_words[w])
                if injected[w] > t:
                    # the simulator knows the true fault count; the decoder may not
                    unc.append(w)
                    if located:
                        self.stats.silent_miscorrections += 1
                    continue
                truth_pos = sorted(int(c) % lay.word_width for c in fcols[word_of == w])
                if located != truth_pos:
                    raise AssertionError(f"decoder located {located}, injected {truth_pos}")
                self.stats.detected_faults += len(located)
                if status[w] == "clean":
                    status[w] = "corrected"
                for pos in located:
                    if pos >= DATA_BITS:
                        continue
                    col = w * lay.word_width + pos
                    di = w * DATA_BITS + pos
                    cls = classify_fault(int(sensed[col]), n, op)
                    if cls.kind is FaultKind.DETERMINISTIC:
                        result[di] = cls.bit
                        self.stats.deterministic_corrections += 1
                    elif cls.kind is FaultKind.AMBIGUOUS:
                        ambiguous.append((w, di))
                        self.stats.ambiguous_events += 1
                xor_words[w, located] ^= 1
            # words whose true fault count hides under a zero syndrome are also lost
            for w in np.flatnonzero(injected > t):
                if w not in dirty:
                    unc.append(w)
            if unc:
                self.stats.uncorrectable_words += len(unc)
                self.stats.uncorrectable_issues += 1
                for w in unc:
                    status[w] = "uncorrectable"
                # no reissue, so ambiguous bits elsewhere stay as sensed
                for w, _ in ambiguous:
                    if status[w] != "uncorrectable":
                        status[w] = "unresolved"
                break
            if ambiguous:
                if issues - 1 < self.policy.max_reissues:
                    self.stats.reissue_count += 1
                    for w, _ in ambiguous:
                        status[w] = "reissued"
                    continue
                lost = sorted({w for w, _ in ambiguous})
                self.stats.exhausted_words += len(lost)
                self.stats.uncorrectable_words += len(lost)
                for w in lost:
                    status[w] = "uncorrectable"
            break
        self.stats.bit_errors += int(np.count_nonzero(result != truth))
        self.stats.result_bits += result.size
        self.stats.instructions += 1
        row = lay.to_row(result)
        if dst is not None:
            self.memory[dst].write_row(dst, row)
        self._sync_costs(before)
        return ProtectedResult(result, row, xor_words.ravel() if t else None, status, issues,
                               self.stats - start)

    def modular_redundancy_op(self, rows: Sequence[RowAddress], op, dst: RowAddress | None = None,
                              copies: int | None = None) -> ProtectedResult:
        op = CimOp.parse(op)
        copies = self.copies if copies is None else copies
        if copies < 1 or copies % 2 == 0:
            raise ConfigurationError(f"modular redundancy needs an odd copy count, got {copies}")
        start = self.stats.copy()
        before = self.memory.totals()
        lay = self.layout
        n = len(rows)
        span = self._stage(list(rows))
        dbc = self.memory[span[0]]
        self.last_transcript = []
        votes = np.zeros(lay.data_width, dtype=np.int64)
        self.stats.issue_count += 1
        truth = None
        for _ in range(copies):
            counts = dbc.transverse_read(span, n)
            _, fcols, up = self.fm.draw(1, lay.m_columns)
            self.last_transcript.append((counts.copy(), fcols.copy(), up.copy()))
            self.stats.injected_faults += fcols.size
            sensed = apply_faults(counts, n, fcols, up)
            truth = derive_logic(counts[self._data_cols], n, op)
            votes += derive_logic(sensed[self._data_cols], n, op)
        result = (votes * 2 > copies).astype(np.uint8)
        wrong = result != truth
        bad_words = np.flatnonzero(wrong.reshape(lay.words_per_row, -1).any(axis=1))
        status = ["clean"] * lay.words_per_row
        for w in bad_words:
            status[w] = "uncorrectable"
        self.stats.uncorrectable_words += bad_words.size
        self.stats.uncorrectable_issues += int(bad_words.size > 0)
        self.stats.bit_errors += int(wrong.sum())
        self.stats.result_bits += result.size
        self.stats.instructions += 1
        row = lay.to_row(result)
        if dst is not None:
            self.memory[dst].write_row(dst, row)
        self._sync_costs(before)
        return ProtectedResult(result, row, None, status, copies, self.stats - start)


def energy_replay(stats: SimStats, cost: CostModel) -> tuple[float, float]:
    return cost.energy_of(stats), cost.time_of(stats)
