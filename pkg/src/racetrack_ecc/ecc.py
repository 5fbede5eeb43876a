"""Systematic binary linear codes protecting 64-bit words.

Codeword layout is fixed: data bit ``i`` is codeword bit ``i`` and the ``r`` parity
bits occupy the tail. ``t=1`` is a (72,64) SECDED Hamming code built from
distinct odd-weight check columns; ``t=2`` and ``t=3`` are BCH codes over
GF(2^7) shortened from length 127 to 78 and 85 bits.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

K_DATA = 64
GF_M = 7
GF_SIZE = 1 << GF_M
GF_ORDER = GF_SIZE - 1
GF_POLY = 0b10001001  # x^7 + x^3 + 1


class ConfigurationError(ValueError):
    pass


class LayoutError(ValueError):
    pass


class DecodeStatus(Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    UNCORRECTABLE = "uncorrectable"


class Decoded(NamedTuple):
    data: np.ndarray
    status: DecodeStatus
    positions: tuple = ()


def int_to_bits(value: int, width: int = K_DATA) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for i, b in enumerate(np.asarray(bits, dtype=np.uint8)):
        if b:
            out |= 1 << i
    return out


def _gf_tables():
    exp = np.zeros(2 * GF_ORDER, dtype=np.int64)
    log = np.full(GF_SIZE, -1, dtype=np.int64)
    x = 1
    for i in range(GF_ORDER):
        exp[i] = x
        if log[x] != -1:
            raise AssertionError("GF polynomial is not primitive")
        log[x] = i
        x <<= 1
        if x & GF_SIZE:
            x ^= GF_POLY
    exp[GF_ORDER:] = exp[:GF_ORDER]
    return exp, log


GF_EXP, GF_LOG = _gf_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF_EXP[GF_LOG[a] + GF_LOG[b]])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("inverse of 0 in GF(2^7)")
    return int(GF_EXP[(GF_ORDER - GF_LOG[a]) % GF_ORDER])


def gf_pow_alpha(e: int) -> int:
    return int(GF_EXP[e % GF_ORDER])


def cyclotomic_coset(i: int) -> list[int]:
    coset, j = [], i % GF_ORDER
    while j not in coset:
        coset.append(j)
        j = (j * 2) % GF_ORDER
    return coset


def minimal_polynomial(i: int) -> int:
    """Minimal polynomial of alpha^i over GF(2), as an int with bit d = coeff of x^d."""
    poly = [1]  # GF(2^7) coefficients, lowest degree first
    for j in cyclotomic_coset(i):
        root = gf_pow_alpha(j)
        nxt = [0] * (len(poly) + 1)
        for d, c in enumerate(poly):
            nxt[d + 1] ^= c
            nxt[d] ^= gf_mul(c, root)
        poly = nxt
    if any(c not in (0, 1) for c in poly):
        raise AssertionError("minimal polynomial has non-binary coefficients")
    return sum(c << d for d, c in enumerate(poly))


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def bch_generator(t: int) -> int:
    g, seen = 1, set()
    for i in range(1, 2 * t, 2):
        rep = min(cyclotomic_coset(i))
        if rep not in seen:
            seen.add(rep)
            g = poly_mul(g, minimal_polynomial(i))
    return g


class EccScheme:
    """A systematic (k + r, k) code with generator ``[I | P]`` and check ``[P^T | I]``."""

    def __init__(self, name: str, t: int, parity_matrix: np.ndarray, kind: str, note: str = ""):
        self.name = name
        self.t = t
        self.kind = kind
        self.note = note
        self.k = parity_matrix.shape[0]
        self.r = parity_matrix.shape[1]
        self.n = self.k + self.r
        self.parity_matrix = parity_matrix.astype(np.uint8)
        self.generator = np.concatenate(
            [np.eye(self.k, dtype=np.uint8), self.parity_matrix], axis=1)
        self.parity_check = np.concatenate(
            [self.parity_matrix.T, np.eye(self.r, dtype=np.uint8)], axis=1)
        self._h_int = self.parity_check.astype(np.int64)
        self._p_int = self.parity_matrix.astype(np.int64)
        self._locate_cache: dict = {}
        self._column_index = {
            bits_to_int(self.parity_check[:, j]): j for j in range(self.n)}

    def __repr__(self):
        return f"EccScheme({self.name}, n={self.n}, k={self.k}, t={self.t})"

    @property
    def overhead(self) -> float:
        return self.r / self.k

    def _check(self, bits, width):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape[-1] != width:
            raise LayoutError(f"expected width {width}, got {bits.shape[-1]}")
        return bits

    def encode(self, data) -> np.ndarray:
        data = self._check(data, self.k)
        parity = (data.astype(np.int64) @ self._p_int) & 1
        return np.concatenate([data, parity.astype(np.uint8)], axis=-1)

    def syndrome(self, received) -> np.ndarray:
        received = self._check(received, self.n)
        return ((received.astype(np.int64) @ self._h_int.T) & 1).astype(np.uint8)

    def locate(self, received) -> list[int] | None:
        """Error positions implied by the syndrome; ``None`` when uncorrectable."""
        received = self._check(received, self.n)
        s = self.syndrome(received)
        if not s.any():
            return []
        if self.kind == "secded":
            j = self._column_index.get(bits_to_int(s))
            return None if j is None else [j]
        key = bits_to_int(s)
        hit = self._locate_cache.get(key)
        if hit is None:
            hit = self._locate_cache[key] = self._bch_locate(s)
        return None if hit is False else list(hit)

    # BCH: codeword bit b carries exponent r + b (data) or b - k (parity)
    def _exponent(self, b: int) -> int:
        return self.r + b if b < self.k else b - self.k

    def _bit_of_exponent(self, e: int) -> int:
        return e - self.r if e >= self.r else self.k + e

    def _bch_locate(self, s) -> tuple | bool:
        # the binary syndrome is the received polynomial mod g, so S_j = s(alpha^j)
        t = self.t
        exps = np.flatnonzero(s).tolist()
        synd = []
        for j in range(1, 2 * t + 1):
            acc = 0
            for e in exps:
                acc ^= gf_pow_alpha(j * e)
            synd.append(acc)
        locator = berlekamp_massey(synd)
        deg = len(locator) - 1
        if deg == 0 or deg > t:
            return False
        # Chien search over the shortened positions only: a root at alpha^{-e}
        # marks an error at exponent e
        e = np.arange(self.n)
        acc = np.zeros(self.n, dtype=np.int64)
        for i, c in enumerate(locator):
            if c:
                acc ^= GF_EXP[(int(GF_LOG[c]) - i * e) % GF_ORDER]
        roots = np.flatnonzero(acc == 0).tolist()
        if len(roots) != deg:
            return False
        return tuple(sorted(self._bit_of_exponent(e) for e in roots))

    def decode(self, received) -> Decoded:
        received = self._check(received, self.n)
        pos = self.locate(received)
        if pos is None:
            return Decoded(received[:self.k].copy(), DecodeStatus.UNCORRECTABLE)
        if not pos:
            return Decoded(received[:self.k].copy(), DecodeStatus.CLEAN)
        fixed = received.copy()
        fixed[pos] ^= 1
        return Decoded(fixed[:self.k], DecodeStatus.CORRECTED, tuple(pos))

    def is_codeword(self, received) -> bool:
        return not self.syndrome(received).any()


def berlekamp_massey(synd: list[int]) -> list[int]:
    """Shortest LFSR (error locator, lowest degree first) generating ``synd``."""
    c, b = [1], [1]
    length, shift, last = 0, 1, 1
    for i, s in enumerate(synd):
        d = s
        for j in range(1, length + 1):
            if j < len(c):
                d ^= gf_mul(c[j], synd[i - j])
        if d == 0:
            shift += 1
            continue
        coef = gf_mul(d, gf_inv(last))
        nc = c + [0] * max(0, len(b) + shift - len(c))
        for j, bj in enumerate(b):
            nc[j + shift] ^= gf_mul(coef, bj)
        if 2 * length <= i:
            b, last = c, d
            length = i + 1 - length
            shift = 1
        else:
            shift += 1
        c = nc
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _secded_parity() -> np.ndarray:
    r = 8
    cols = []
    for v in range(1, 1 << (r - 1)):
        if bin(v).count("1") < 2:
            continue
        top = int_to_bits(v, r - 1)
        extra = 1 - (int(top.sum()) & 1)  # make the full column odd weight
        cols.append(np.append(top, extra))
        if len(cols) == K_DATA:
            break
    return np.array(cols, dtype=np.uint8)  # (k, r): row i = check column of data bit i


def _bch_parity(t: int) -> tuple[np.ndarray, int]:
    g = bch_generator(t)
    r = g.bit_length() - 1
    rows = []
    for i in range(K_DATA):
        rem = poly_mod(1 << (r + i), g)
        rows.append(int_to_bits(rem, r))
    return np.array(rows, dtype=np.uint8), g


@lru_cache(maxsize=None)
def make_scheme(t: int) -> EccScheme:
    if t == 1:
        return EccScheme("secded72_64", 1, _secded_parity(), "secded",
                         "odd-weight-column SECDED Hamming (72,64)")
    if t in (2, 3):
        p, g = _bch_parity(t)
        n = K_DATA + p.shape[1]
        mother_k = GF_ORDER - p.shape[1]
        return EccScheme(f"bch{n}_64", t, p, "bch",
                         f"BCH({GF_ORDER},{mother_k}) shortened to ({n},64), g=0x{g:x}")
    raise ConfigurationError(f"unsupported correction capability t={t}; use 1, 2 or 3")


def encode(scheme: EccScheme, data) -> np.ndarray:
    return scheme.encode(data)


def decode(scheme: EccScheme, received) -> Decoded:
    return scheme.decode(received)


def syndrome_positions(scheme: EccScheme, received) -> list[int] | None:
    return scheme.locate(received)
