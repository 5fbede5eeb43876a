"""Functional racetrack memory: nanowires, domain-wall block clusters, transverse read.

A DBC is a ``(domains, M)`` bit matrix. Column ``j`` is nanowire ``j``; all
wires shift together, so one signed offset describes the whole cluster. Row
``r`` currently sits at data-frame position ``r + offset``. Storage is kept in
the home frame and the physical picture is produced on demand, so a shift is
pure bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

MAX_TRD = 7


class AddressError(IndexError):
    pass


class LayoutError(ValueError):
    pass


class SpanError(ValueError):
    pass


class RowAddress(NamedTuple):
    dbc_index: int
    row: int

    def __str__(self):
        return f"{self.dbc_index}:{self.row}"

    @classmethod
    def parse(cls, text: str) -> "RowAddress":
        dbc, row = text.split(":")
        return cls(int(dbc), int(row))


@dataclass
class Nanowire:
    """Snapshot of a single wire of a DBC."""

    domains: np.ndarray
    data_len: int
    overhead_len: int
    offset: int

    def data_bits(self) -> np.ndarray:
        start = self.overhead_len + self.offset
        return self.domains[start:start + self.data_len]


@dataclass
class Geometry:
    m_columns: int = 576
    data_len: int = 32
    overhead_len: int | None = None
    port_positions: tuple[int, ...] = (8, 24)
    trd: int = 7

    def __post_init__(self):
        if self.overhead_len is None:
            self.overhead_len = self.data_len // 2
        self.port_positions = tuple(sorted(int(p) for p in self.port_positions))
        if self.m_columns < 1 or self.data_len < 1:
            raise LayoutError("m_columns and data_len must be positive")
        if not 2 <= self.trd <= MAX_TRD:
            raise SpanError(f"trd must lie in [2, {MAX_TRD}], got {self.trd}")
        if not self.port_positions:
            raise LayoutError("at least one access port is required")
        for p in self.port_positions:
            if not 0 <= p < self.data_len:
                raise LayoutError(f"port position {p} outside data frame [0, {self.data_len})")
        # every row must be able to reach some port without losing data
        worst = max(min(abs(r - p) for p in self.port_positions) for r in range(self.data_len))
        if worst > self.overhead_len:
            raise LayoutError(
                f"overhead_len={self.overhead_len} too small: a row needs {worst} shift steps")

    @property
    def total_len(self) -> int:
        return self.data_len + 2 * self.overhead_len


@dataclass
class AccessCounts:
    shifts: int = 0
    reads: int = 0
    writes: int = 0
    trs: int = 0


class Dbc:
    """A cluster of ``m_columns`` lock-stepped nanowires."""

    def __init__(self, geometry: Geometry | None = None, index: int = 0,
                 counts: AccessCounts | None = None):
        self.geometry = geometry or Geometry()
        self.index = index
        g = self.geometry
        self._store = np.zeros((g.total_len, g.m_columns), dtype=np.uint8)
        self.offset = 0
        self.counts = counts if counts is not None else AccessCounts()

    @property
    def m(self) -> int:
        return self.geometry.m_columns

    @property
    def trd(self) -> int:
        return self.geometry.trd

    @property
    def domains(self) -> np.ndarray:
        """Physical domain contents after the current shift."""
        return np.roll(self._store, self.offset, axis=0)

    def wire(self, j: int) -> Nanowire:
        g = self.geometry
        return Nanowire(self.domains[:, j], g.data_len, g.overhead_len, self.offset)

    def _row_index(self, row) -> int:
        r = row.row if isinstance(row, RowAddress) else int(row)
        if isinstance(row, RowAddress) and row.dbc_index != self.index:
            raise AddressError(f"address {row} does not belong to DBC {self.index}")
        if not 0 <= r < self.geometry.data_len:
            raise AddressError(f"row {r} outside [0, {self.geometry.data_len})")
        return r

    def nearest_port(self, row) -> int:
        r = self._row_index(row)
        pos = r + self.offset
        # only ports the row can reach without exceeding the padding
        legal = [p for p in self.geometry.port_positions
                 if abs(p - r) <= self.geometry.overhead_len]
        return min(legal, key=lambda p: (abs(p - pos), p))

    def shift(self, steps: int):
        """Move every wire by ``steps`` domains (positive = towards higher positions)."""
        if steps == 0:
            return
        new = self.offset + steps
        if abs(new) > self.geometry.overhead_len:
            raise AddressError(f"shift to offset {new} would push data off the wire")
        self.offset = new
        self.counts.shifts += abs(steps)

    def shift_to(self, row) -> int:
        """Align ``row`` with its nearest access port; return the steps taken."""
        r = self._row_index(row)
        port = self.nearest_port(r)
        steps = port - (r + self.offset)
        self.shift(steps)
        return abs(steps)

    def _home(self, r: int) -> int:
        return self.geometry.overhead_len + r

    def write_row(self, row, bits) -> int:
        r = self._row_index(row)
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (self.m,):
            raise LayoutError(f"row width {bits.shape} != ({self.m},)")
        steps = self.shift_to(r)
        self._store[self._home(r)] = bits & 1
        self.counts.writes += 1
        return steps

    def read_row(self, row) -> np.ndarray:
        r = self._row_index(row)
        self.shift_to(r)
        self.counts.reads += 1
        return self._store[self._home(r)].copy()

    def peek_row(self, row) -> np.ndarray:
        """Read without moving the wires or charging an access (debug/oracle use)."""
        return self._store[self._home(self._row_index(row))].copy()

    def transverse_read(self, rows: Sequence, n: int | None = None) -> np.ndarray:
        """Exact per-column count of ones across ``n`` contiguous rows."""
        idx = [self._row_index(r) for r in rows]
        n = len(idx) if n is None else n
        if n != len(idx):
            raise SpanError(f"n={n} but {len(idx)} rows given")
        if not 2 <= n <= self.trd:
            raise SpanError(f"TR operand count {n} outside [2, {self.trd}]")
        first = min(idx)
        if sorted(idx) != list(range(first, first + n)):
            raise SpanError(f"TR rows {idx} are not contiguous")
        self.shift_to(first)
        start = self._home(first)
        self.counts.trs += 1
        return self._store[start:start + n].sum(axis=0, dtype=np.int64)

    def data_image(self) -> np.ndarray:
        start = self._home(0)
        return self._store[start:start + self.geometry.data_len].copy()


@dataclass
class Memory:
    """A growable bank of DBCs sharing one geometry."""

    geometry: Geometry = field(default_factory=Geometry)
    dbcs: list = field(default_factory=list)
    counts: AccessCounts = field(default_factory=AccessCounts)

    def dbc(self, i: int) -> Dbc:
        while len(self.dbcs) <= i:
            self.dbcs.append(Dbc(self.geometry, len(self.dbcs), self.counts))
        return self.dbcs[i]

    def __getitem__(self, addr: RowAddress) -> Dbc:
        return self.dbc(addr.dbc_index)

    def totals(self) -> AccessCounts:
        """Snapshot of the access counters shared by every DBC of this memory."""
        return AccessCounts(**vars(self.counts))
