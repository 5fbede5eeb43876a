"""Batch kernels for Monte Carlo runs.

Each kernel has a numba implementation and a pure-numpy twin that must agree
exactly. ``RACETRACK_ECC_NUMBA=0`` (or a missing numba) selects the numpy path.

Column layout shared by all kernels: column ``c`` belongs to word ``c // width``
at in-word position ``c % width``; positions below 64 are data bits, the rest
are parity. ``t = 0`` means no decoder (every fault is silent).
"""

from __future__ import annotations

import os

import numpy as np

# op codes match senseamp.CimOp
AND, OR, XOR = 0, 1, 2

# outcome columns of issue_outcomes
INJECTED, UNC_WORDS, DETECTED, CORRECTED, AMBIGUOUS, BIT_ERRORS, AMB_ERRORS = range(7)
N_OUT = 7

DATA_BITS = 64


def _want_numba() -> bool:
    if os.environ.get("RACETRACK_ECC_NUMBA", "1").strip().lower() in ("0", "false", "no", "off"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _want_numba()

POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def random_counts(rng: np.random.Generator, shape, n: int) -> np.ndarray:
    """Ones-counts of ``n`` i.i.d. uniform operand bits per cell."""
    raw = rng.integers(0, 1 << n, size=shape, dtype=np.uint8)
    return POPCOUNT8[raw]


# ---------------------------------------------------------------- numpy path

def _logic_np(count, n, op):
    base = op % 3
    return np.where(base == AND, count == n, np.where(base == OR, count >= 1, (count & 1) == 1))


def issue_outcomes_np(counts, ops, rows, cols, up, n, width, t):
    b_count = counts.shape[0]
    n_words = counts.shape[1] // DATA_BITS
    out = np.zeros((b_count, N_OUT), dtype=np.int64)
    if rows.size == 0:
        return out
    word = cols // width
    inword = cols % width
    is_data = inword < DATA_BITS
    data_idx = word * DATA_BITS + np.minimum(inword, DATA_BITS - 1)
    true = np.where(is_data, counts[rows, data_idx].astype(np.int64), 1)
    step = np.where(up < 0.5, 1, -1)
    step = np.where(true == 0, 1, np.where(true == n, -1, step))
    sensed = true + step
    op = ops[rows].astype(np.int64)
    wrong = is_data & (_logic_np(sensed, n, op) != _logic_np(true, n, op))

    np.add.at(out[:, INJECTED], rows, 1)
    key = rows * n_words + word
    per_word = np.bincount(key, minlength=b_count * n_words)
    if t == 0:
        np.add.at(out[:, UNC_WORDS], np.flatnonzero(per_word) // n_words, 1)
        np.add.at(out[:, BIT_ERRORS], rows, wrong)
        return out
    unc_word = per_word > t
    np.add.at(out[:, UNC_WORDS], np.flatnonzero(unc_word) // n_words, 1)
    bad = unc_word[key]
    ok = ~bad
    np.add.at(out[:, BIT_ERRORS], rows, bad & wrong)
    np.add.at(out[:, DETECTED], rows, ok)
    base = op % 3
    amb = ok & is_data & (
        ((base == AND) & (sensed == n - 1)) | ((base == OR) & (sensed == 1)))
    det = ok & is_data & ~amb & (
        (base == XOR) | ((base == AND) & (sensed == n)) | ((base == OR) & (sensed == 0)))
    np.add.at(out[:, CORRECTED], rows, det)
    np.add.at(out[:, AMBIGUOUS], rows, amb)
    np.add.at(out[:, AMB_ERRORS], rows, amb & wrong)
    return out


def mr_outcomes_np(counts, ops, copy_faults, n, copies):
    """Majority-vote errors per instruction. ``copy_faults``: list of (rows, cols, up)."""
    b_count, m = counts.shape
    keys = []
    injected = np.zeros(b_count, dtype=np.int64)
    for rows, cols, up in copy_faults:
        np.add.at(injected, rows, 1)
        true = counts[rows, cols].astype(np.int64)
        step = np.where(up < 0.5, 1, -1)
        step = np.where(true == 0, 1, np.where(true == n, -1, step))
        op = ops[rows].astype(np.int64)
        wrong = _logic_np(true + step, n, op) != _logic_np(true, n, op)
        keys.append((rows * m + cols)[wrong])
    out = np.zeros((b_count, 3), dtype=np.int64)
    out[:, 0] = injected
    if keys:
        allk = np.concatenate(keys)
        if allk.size:
            uniq, cnt = np.unique(allk, return_counts=True)
            lost = uniq[cnt >= copies // 2 + 1]
            np.add.at(out[:, 1], lost // m, 1)
            words = np.unique(lost // DATA_BITS)
            np.add.at(out[:, 2], words * DATA_BITS // m, 1)
    return out


# ---------------------------------------------------------------- numba path

if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _logic_nb(count, n, op):
        base = op % 3
        if base == AND:
            return count == n
        if base == OR:
            return count >= 1
        return (count & 1) == 1

    @njit(cache=True)
    def issue_outcomes_nb(counts, ops, rows, cols, up, n, width, t):
        b_count = counts.shape[0]
        n_words = counts.shape[1] // DATA_BITS
        out = np.zeros((b_count, N_OUT), dtype=np.int64)
        per_word = np.zeros((b_count, n_words), dtype=np.int64)
        for i in range(rows.size):
            per_word[rows[i], cols[i] // width] += 1
            out[rows[i], INJECTED] += 1
        for b in range(b_count):
            for w in range(n_words):
                if per_word[b, w] > t:
                    out[b, UNC_WORDS] += 1
        for i in range(rows.size):
            b = rows[i]
            w = cols[i] // width
            pos = cols[i] % width
            is_data = pos < DATA_BITS
            unc = per_word[b, w] > t
            if not is_data:
                if not unc:
                    out[b, DETECTED] += 1
                continue
            true = np.int64(counts[b, w * DATA_BITS + pos])
            if true == 0:
                sensed = true + 1
            elif true == n:
                sensed = true - 1
            elif up[i] < 0.5:
                sensed = true + 1
            else:
                sensed = true - 1
            op = np.int64(ops[b])
            wrong = _logic_nb(sensed, n, op) != _logic_nb(true, n, op)
            if unc:
                if wrong:
                    out[b, BIT_ERRORS] += 1
                continue
            out[b, DETECTED] += 1
            base = op % 3
            if (base == AND and sensed == n - 1) or (base == OR and sensed == 1):
                out[b, AMBIGUOUS] += 1
                if wrong:
                    out[b, AMB_ERRORS] += 1
            elif base == XOR or (base == AND and sensed == n) or (base == OR and sensed == 0):
                out[b, CORRECTED] += 1
        return out

    @njit(cache=True)
    def _mr_keys_nb(counts, ops, rows, cols, up, n):
        m = counts.shape[1]
        keys = np.empty(rows.size, dtype=np.int64)
        k = 0
        for i in range(rows.size):
            true = np.int64(counts[rows[i], cols[i]])
            if true == 0:
                sensed = true + 1
            elif true == n:
                sensed = true - 1
            elif up[i] < 0.5:
                sensed = true + 1
            else:
                sensed = true - 1
            op = np.int64(ops[rows[i]])
            if _logic_nb(sensed, n, op) != _logic_nb(true, n, op):
                keys[k] = rows[i] * m + cols[i]
                k += 1
        return keys[:k]

    @njit(cache=True)
    def _mr_vote_nb(keys, b_count, m, need):
        out = np.zeros((b_count, 3), dtype=np.int64)
        keys = np.sort(keys)
        i = 0
        last_word = -1
        while i < keys.size:
            j = i
            while j < keys.size and keys[j] == keys[i]:
                j += 1
            if j - i >= need:
                row = keys[i] // m
                out[row, 1] += 1
                word = keys[i] // DATA_BITS
                if word != last_word:
                    out[row, 2] += 1
                    last_word = word
            i = j
        return out

    def mr_outcomes_nb(counts, ops, copy_faults, n, copies):
        b_count, m = counts.shape
        parts = [np.zeros(0, dtype=np.int64)]
        injected = np.zeros(b_count, dtype=np.int64)
        for rows, cols, up in copy_faults:
            injected += np.bincount(rows, minlength=b_count)
            parts.append(_mr_keys_nb(counts, ops, rows, cols, up, n))
        out = _mr_vote_nb(np.concatenate(parts), b_count, m, copies // 2 + 1)
        out[:, 0] = injected
        return out

    issue_outcomes = issue_outcomes_nb
    mr_outcomes = mr_outcomes_nb
else:
    issue_outcomes_nb = None
    mr_outcomes_nb = None
    issue_outcomes = issue_outcomes_np
    mr_outcomes = mr_outcomes_np
