"""Sense amplifier model: single-level fault injection and count-to-logic decoding."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class ModelError(ValueError):
    pass


class CimOp(IntEnum):
    AND = 0
    OR = 1
    XOR = 2
    NAND = 3
    NOR = 4
    XNOR = 5

    @property
    def base(self) -> "CimOp":
        return CimOp(self % 3)

    @property
    def inverted(self) -> bool:
        return self >= 3

    @classmethod
    def parse(cls, name) -> "CimOp":
        if isinstance(name, CimOp):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ModelError(f"unknown CIM op {name!r}") from None


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct ``stream`` ids give independent sequences."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


class FaultModel:
    """Per-column, per-TR probability ``p_sense`` of a +-1 sensing fault."""

    def __init__(self, p_sense: float = 0.0, seed: int = 0, rng_stream_id: int = 0):
        if not 0.0 <= p_sense <= 1.0:
            raise ModelError(f"p_sense must be a probability, got {p_sense}")
        self.p_sense = float(p_sense)
        self.seed = int(seed)
        self.rng_stream_id = int(rng_stream_id)
        self.rng = make_rng(seed, rng_stream_id)

    def draw(self, n_rows: int, n_cols: int):
        return draw_faults(self.rng, n_rows, n_cols, self.p_sense)


def draw_faults(rng: np.random.Generator, n_rows: int, n_cols: int, p: float):
    """Sample a Bernoulli(p) fault pattern over an ``n_rows x n_cols`` grid.

    Returns ``(rows, cols, up)`` where ``up`` is a uniform draw per fault used to
    pick the fault direction. Geometric gap sampling keeps the cost proportional
    to the number of faults rather than the grid size.
    """
    size = n_rows * n_cols
    if p <= 0.0 or size == 0:
        flat = np.empty(0, dtype=np.int64)
    elif p >= 1.0:
        flat = np.arange(size, dtype=np.int64)
    else:
        chunks = []
        pos = -1
        mean = size * p
        while True:
            k = int(mean + 6.0 * np.sqrt(mean) + 16)
            gaps = rng.geometric(p, size=k)
            idx = pos + np.cumsum(gaps)
            chunks.append(idx)
            pos = int(idx[-1])
            if pos >= size:
                break
        flat = np.concatenate(chunks)
        flat = flat[flat < size]
    up = rng.random(flat.size)
    return flat // n_cols, flat % n_cols, up


def apply_faults(true_counts: np.ndarray, n: int, cols: np.ndarray, up: np.ndarray) -> np.ndarray:
    """Sensed counts after +-1 faults at ``cols``; boundaries force the only legal direction."""
    sensed = np.array(true_counts, dtype=np.int64, copy=True)
    if cols.size:
        c = sensed[cols]
        step = np.where(up < 0.5, 1, -1)
        step = np.where(c == 0, 1, np.where(c == n, -1, step))
        sensed[cols] = c + step
    return sensed


@dataclass
class SenseReading:
    """Column-wise readings of one TR (arrays of width M)."""

    true_count: np.ndarray
    sensed_count: np.ndarray
    n: int

    @property
    def faulted(self) -> np.ndarray:
        return self.sensed_count != self.true_count

    @property
    def fault_columns(self) -> np.ndarray:
        return np.flatnonzero(self.faulted)


def sense(true_counts, n: int, fm: FaultModel) -> SenseReading:
    true_counts = np.asarray(true_counts, dtype=np.int64)
    if true_counts.size and (true_counts.min() < 0 or true_counts.max() > n):
        raise ModelError(f"true counts must lie in [0, {n}]")
    _, cols, up = fm.draw(1, true_counts.size)
    return SenseReading(true_counts, apply_faults(true_counts, n, cols, up), n)


def derive_logic(count, n: int, op) -> np.ndarray | int:
    """Logic output from a (sensed) ones-count; works on scalars and arrays."""
    op = CimOp.parse(op)
    c = np.asarray(count)
    if c.size and (c.min() < 0 or c.max() > n):
        raise ModelError(f"count outside [0, {n}]")
    base = op.base
    if base is CimOp.AND:
        out = c == n
    elif base is CimOp.OR:
        out = c >= 1
    else:
        out = (c & 1) == 1
    out = out.astype(np.uint8)
    if op.inverted:
        out ^= 1
    return int(out) if out.ndim == 0 else out


def reference_logic(operands: np.ndarray, op) -> np.ndarray:
    """Bitwise reference over operand rows (shape ``(n, M)``), independent of counts."""
    op = CimOp.parse(op)
    rows = np.asarray(operands, dtype=np.uint8)
    base = op.base
    if base is CimOp.AND:
        out = np.bitwise_and.reduce(rows, axis=0)
    elif base is CimOp.OR:
        out = np.bitwise_or.reduce(rows, axis=0)
    else:
        out = np.bitwise_xor.reduce(rows, axis=0)
    return out ^ 1 if op.inverted else out
