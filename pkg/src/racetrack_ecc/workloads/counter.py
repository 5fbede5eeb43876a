"""In-memory counters: one counter per lane, one row per bit plane."""

from __future__ import annotations

import numpy as np

from ..senseamp import make_rng
from .machine import CimMachine, WorkloadReport, check_outputs


def planes_to_ints(planes: np.ndarray) -> np.ndarray:
    out = np.zeros(planes.shape[1], dtype=np.uint64)
    for b in range(planes.shape[0]):
        out |= planes[b].astype(np.uint64) << np.uint64(b)
    return out


def ints_to_planes(values: np.ndarray, width: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.uint64)
    return np.array([(v >> np.uint64(b)) & np.uint64(1) for b in range(width)], dtype=np.uint8)


def run_counter(machine: CimMachine, width: int = 16, increments: int = 1000, seed: int = 0,
                initial=None) -> WorkloadReport:
    """Increment every lane's counter ``increments`` times with half-adder chains."""
    if not 1 <= width <= 64:
        raise ValueError(f"counter width must be in [1, 64], got {width}")
    lanes = machine.lanes
    if initial is None:
        rng = make_rng(seed, 0xC0)
        initial = rng.integers(0, 1 << min(width, 63), size=lanes, dtype=np.uint64)
    initial = np.asarray(initial, dtype=np.uint64)
    mask = np.uint64((1 << width) - 1) if width < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    initial &= mask
    bits = [machine.load(p) for p in ints_to_planes(initial, width)]
    ones = machine.const(1)
    for _ in range(increments):
        carry = ones
        for i in range(width):
            s = machine.op("XOR", [bits[i], carry])
            if i < width - 1:
                nxt = machine.op("AND", [bits[i], carry])
            else:
                nxt = None
            machine.free(bits[i])
            if carry is not ones:
                machine.free(carry)
            bits[i] = s
            carry = nxt
    got = np.array([machine.read(b) for b in bits])
    taint = np.array([machine.taint[b] for b in bits])
    want_vals = (initial + np.uint64(increments)) & mask
    want = ints_to_planes(want_vals, width)
    cmp = check_outputs(got, want, taint)
    return machine.report("counter", cmp["bit_errors"] == 0, **cmp,
                          details=dict(width=width, increments=increments))
