"""Bit-serial integer matrix multiply: one lane per output element."""

from __future__ import annotations

import numpy as np

from .counter import ints_to_planes, planes_to_ints
from .machine import CimMachine, WorkloadReport, check_outputs


def full_adder(m: CimMachine, a, b, c):
    s = m.xor([a, b, c])
    ab, ac, bc = m.AND(a, b), m.AND(a, c), m.AND(b, c)
    carry = m.OR(ab, ac, bc)
    m.free(ab, ac, bc)
    return s, carry


def half_adder(m: CimMachine, a, b):
    return m.xor([a, b]), m.AND(a, b)


def accumulate(m: CimMachine, acc: list, addend: list, offset: int, top: int):
    """acc += addend << offset, rippling carries no further than bit ``top``."""
    carry = None
    pos = offset
    for bit in addend:
        old = acc[pos]
        if carry is None:
            acc[pos], nxt = half_adder(m, old, bit)
        else:
            acc[pos], nxt = full_adder(m, old, bit, carry)
            m.free(carry)
        m.free(old)
        carry = nxt
        pos += 1
    while carry is not None and pos < top:
        old = acc[pos]
        if pos == top - 1:
            # the bound guarantees no carry out of the top bit
            acc[pos], nxt = m.xor([old, carry]), None
        else:
            acc[pos], nxt = half_adder(m, old, carry)
        m.free(old, carry)
        carry = nxt
        pos += 1
    if carry is not None:
        m.free(carry)


def run_mmm(m: CimMachine, a, b, bitwidth: int = 8) -> WorkloadReport:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    rows, inner = a.shape
    inner_b, cols = b.shape
    if inner != inner_b:
        raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
    if rows * cols > m.lanes:
        raise ValueError(f"{rows}x{cols} outputs exceed {m.lanes} lanes")
    limit = 1 << bitwidth
    if a.min() < 0 or b.min() < 0 or a.max() >= limit or b.max() >= limit:
        raise ValueError(f"elements must be unsigned {bitwidth}-bit")
    n_out = rows * cols
    max_sum = inner * (limit - 1) ** 2
    acc_bits = max(1, max_sum.bit_length())
    zero = m.const(0)
    acc = [m.move(zero) for _ in range(acc_bits)]
    bound = 0
    ii, jj = np.divmod(np.arange(n_out), cols)
    for k in range(inner):
        x = np.zeros(m.lanes, dtype=np.int64)
        y = np.zeros(m.lanes, dtype=np.int64)
        x[:n_out] = a[ii, k]
        y[:n_out] = b[k, jj]
        xs = [m.load(p) for p in ints_to_planes(x, bitwidth)]
        ys = [m.load(p) for p in ints_to_planes(y, bitwidth)]
        for j in range(bitwidth):
            partial = [m.AND(xs[i], ys[j]) for i in range(bitwidth)]
            bound += (limit - 1) << j
            accumulate(m, acc, partial, j, min(acc_bits, bound.bit_length()))
            m.free(*partial)
        m.free(*xs, *ys)
    planes = np.array([m.read(p) for p in acc])
    taint = np.array([m.taint[p] for p in acc])
    got = planes_to_ints(planes)[:n_out].astype(np.int64).reshape(rows, cols)
    want = a @ b
    want_lanes = np.zeros(m.lanes, dtype=np.int64)
    want_lanes[:n_out] = want.ravel()
    cmp = check_outputs(planes[:, :n_out], ints_to_planes(want_lanes, acc_bits)[:, :n_out],
                        taint[:, :n_out])
    m.free(*acc)
    return m.report("mmm", cmp["bit_errors"] == 0, **cmp,
                    details=dict(shape=[rows, inner, cols], bitwidth=bitwidth,
                                 exact=bool((got == want).all())))
