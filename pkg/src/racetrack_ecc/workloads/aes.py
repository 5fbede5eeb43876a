"""Bitsliced AES-128 encryption as CIM instructions.

Lane ``blk * 16 + i`` holds byte ``i`` of block ``blk``; a state is 8 rows, one
per bit plane, so each gate runs on 32 blocks x 16 bytes at once. The S-box is
GF(2^8) inversion (``x^254`` via four multiplications and linear squarings)
followed by the affine map. Multiplications are 64 ANDs plus XOR trees,
squarings and MixColumns are XOR networks, and ShiftRows and the MixColumns
byte rotations are lane permutations (plain read/write data movement). Round
keys are expanded on the host and loaded as data.
"""

from __future__ import annotations

import numpy as np

from .machine import CimMachine, WorkloadReport, check_outputs

AES_POLY = 0x11B
BLOCK = 16


def gf256_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        if a & 0x100:
            a ^= AES_POLY
        b >>= 1
    return out


def _build_sbox():
    inv = [0] * 256
    for x in range(1, 256):
        for y in range(1, 256):
            if gf256_mul(x, y) == 1:
                inv[x] = y
                break
    sbox = []
    for x in range(256):
        b = inv[x]
        s = 0x63
        for k in range(5):
            s ^= ((b << k) | (b >> (8 - k))) & 0xFF
        sbox.append(s)
    return sbox


SBOX = _build_sbox()
RCON = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]


def expand_key(key: bytes) -> list[list[int]]:
    if len(key) != 16:
        raise ValueError(f"AES-128 key must be 16 bytes, got {len(key)}")
    w = [list(key[4 * i:4 * i + 4]) for i in range(4)]
    for i in range(4, 44):
        tmp = list(w[i - 1])
        if i % 4 == 0:
            tmp = tmp[1:] + tmp[:1]
            tmp = [SBOX[b] for b in tmp]
            tmp[0] ^= RCON[i // 4 - 1]
        w.append([a ^ b for a, b in zip(w[i - 4], tmp)])
    return [sum(w[4 * r:4 * r + 4], []) for r in range(11)]


def _xtime(b: int) -> int:
    b <<= 1
    return (b ^ AES_POLY) & 0xFF if b & 0x100 else b


def encrypt_block(block: bytes, key: bytes) -> bytes:
    """Table-driven reference AES-128 (software oracle)."""
    if len(block) != BLOCK:
        raise ValueError(f"AES block must be 16 bytes, got {len(block)}")
    rk = expand_key(key)
    s = [b ^ k for b, k in zip(block, rk[0])]
    for rnd in range(1, 11):
        s = [SBOX[b] for b in s]
        s = [s[(r + 4 * ((c + r) % 4))] for c in range(4) for r in range(4)]
        if rnd != 10:
            out = []
            for c in range(4):
                col = s[4 * c:4 * c + 4]
                for r in range(4):
                    a0, a1, a2, a3 = (col[(r + j) % 4] for j in range(4))
                    out.append(_xtime(a0) ^ _xtime(a1) ^ a1 ^ a2 ^ a3)
            s = out
        s = [b ^ k for b, k in zip(s, rk[rnd])]
    return bytes(s)


# ---------------------------------------------------------------- circuit pieces

def _reduce_pow(k: int) -> int:
    """x^k mod the AES polynomial, as a byte."""
    v = 1
    for _ in range(k):
        v = _xtime(v)
    return v


def _square_matrix(times: int) -> list[int]:
    """Column i = image of x^i under ``times`` squarings (a linear map on bytes)."""
    cols = []
    for i in range(8):
        v = 1 << i
        for _ in range(times):
            v = gf256_mul(v, v)
        cols.append(v)
    return cols


def linear_map(m: CimMachine, planes, cols, const: int = 0):
    out = []
    for bit in range(8):
        srcs = [planes[i] for i in range(8) if (cols[i] >> bit) & 1]
        if (const >> bit) & 1:
            srcs.append(m.const(1))
        out.append(m.xor(srcs))
    return out


def gf_mul_circuit(m: CimMachine, a, b):
    prods = {}
    for i in range(8):
        for j in range(8):
            prods[i, j] = m.AND(a[i], b[j])
    out = []
    for bit in range(8):
        terms = [prods[i, j] for i in range(8) for j in range(8)
                 if (_reduce_pow(i + j) >> bit) & 1]
        out.append(m.xor(terms))
    m.free(*prods.values())
    return out


SQ1 = _square_matrix(1)
SQ2 = _square_matrix(2)
SQ4 = _square_matrix(4)
AFFINE = [sum(1 << ((i + k) % 8) for k in range(5)) for i in range(8)]


def sbox_circuit(m: CimMachine, x):
    x2 = linear_map(m, x, SQ1)
    x3 = gf_mul_circuit(m, x2, x)
    x12 = linear_map(m, x3, SQ2)
    x15 = gf_mul_circuit(m, x12, x3)
    m.free(*x3)
    x240 = linear_map(m, x15, SQ4)
    m.free(*x15)
    x252 = gf_mul_circuit(m, x240, x12)
    m.free(*x240, *x12)
    inv = gf_mul_circuit(m, x252, x2)
    m.free(*x252, *x2)
    out = linear_map(m, inv, AFFINE, 0x63)
    m.free(*inv)
    return out


def _lane_perm(lanes: int, byte_map) -> np.ndarray:
    perm = np.arange(lanes)
    for blk in range(lanes // BLOCK):
        for i in range(BLOCK):
            perm[blk * BLOCK + i] = blk * BLOCK + byte_map(i)
    return perm


def shift_rows_perm(lanes: int) -> np.ndarray:
    return _lane_perm(lanes, lambda i: (i % 4) + 4 * (((i // 4) + (i % 4)) % 4))


def rotate_perm(lanes: int, k: int) -> np.ndarray:
    return _lane_perm(lanes, lambda i: ((i % 4 + k) % 4) + 4 * (i // 4))


def mix_columns_circuit(m: CimMachine, s, rots):
    r = [[m.move(p, rots[k]) for p in s] for k in range(3)]
    u = [m.xor([s[b], r[0][b]]) for b in range(8)]
    out = []
    for b in range(8):
        terms = [u[b - 1]] if b else []
        if b in (0, 1, 3, 4):
            terms.append(u[7])
        terms += [r[0][b], r[1][b], r[2][b]]
        out.append(m.xor(terms))
    m.free(*u, *r[0], *r[1], *r[2])
    return out


def _bytes_to_planes(byte_lanes: np.ndarray) -> np.ndarray:
    return np.array([(byte_lanes >> b) & 1 for b in range(8)], dtype=np.uint8)


def _planes_to_bytes(planes: np.ndarray) -> np.ndarray:
    out = np.zeros(planes.shape[1], dtype=np.uint8)
    for b in range(8):
        out |= planes[b].astype(np.uint8) << b
    return out


def encrypt_batch(m: CimMachine, blocks: list[bytes], key: bytes):
    """Encrypt up to ``lanes // 16`` blocks in one bitsliced pass; returns (ciphertexts, lane taint)."""
    lanes = m.lanes
    cap = lanes // BLOCK
    if len(blocks) > cap:
        raise ValueError(f"at most {cap} blocks per batch")
    rk = expand_key(key)
    data = np.zeros(lanes, dtype=np.uint8)
    for k, blk in enumerate(blocks):
        if len(blk) != BLOCK:
            raise ValueError(f"AES block must be 16 bytes, got {len(blk)}")
        data[k * BLOCK:(k + 1) * BLOCK] = np.frombuffer(bytes(blk), dtype=np.uint8)
    key_lanes = [np.tile(np.array(rk[r], dtype=np.uint8), cap) for r in range(11)]
    sr = shift_rows_perm(lanes)
    rots = [rotate_perm(lanes, k) for k in (1, 2, 3)]

    state = [m.load(p) for p in _bytes_to_planes(data)]

    def add_round_key(st, r):
        keys = [m.load(p) for p in _bytes_to_planes(key_lanes[r])]
        out = [m.xor([st[b], keys[b]]) for b in range(8)]
        m.free(*keys, *st)
        return out

    state = add_round_key(state, 0)
    for rnd in range(1, 11):
        sub = sbox_circuit(m, state)
        m.free(*state)
        shifted = [m.move(p, sr) for p in sub]
        m.free(*sub)
        if rnd != 10:
            mixed = mix_columns_circuit(m, shifted, rots)
            m.free(*shifted)
            shifted = mixed
        state = add_round_key(shifted, rnd)
    planes = np.array([m.read(p) for p in state])
    taint = np.array([m.taint[p] for p in state])
    m.free(*state)
    ct = _planes_to_bytes(planes)
    out = [bytes(ct[k * BLOCK:(k + 1) * BLOCK]) for k in range(len(blocks))]
    return out, planes, taint


def run_aes(m: CimMachine, blocks: list[bytes], key: bytes) -> WorkloadReport:
    if len(key) != 16:
        raise ValueError(f"AES-128 key must be 16 bytes, got {len(key)}")
    cap = m.lanes // BLOCK
    results, got_all, want_all, taint_all = [], [], [], []
    for start in range(0, len(blocks), cap):
        chunk = blocks[start:start + cap]
        cts, planes, taint = encrypt_batch(m, chunk, key)
        results += cts
        want = np.zeros(m.lanes, dtype=np.uint8)
        for k, blk in enumerate(chunk):
            want[k * BLOCK:(k + 1) * BLOCK] = np.frombuffer(encrypt_block(blk, key), dtype=np.uint8)
        used = len(chunk) * BLOCK
        got_all.append(planes[:, :used])
        want_all.append(_bytes_to_planes(want)[:, :used])
        taint_all.append(taint[:, :used])
    cmp = check_outputs(np.concatenate(got_all, axis=1), np.concatenate(want_all, axis=1),
                        np.concatenate(taint_all, axis=1))
    return m.report("aes", cmp["bit_errors"] == 0, **cmp,
                    details=dict(blocks=len(blocks), ciphertexts=[c.hex() for c in results]))
