"""Closed-form fault-rate models for TR-based logic, ECC words and n-MR voting.

Binomial tails are summed directly over the failing outcomes, with
``(1-p)^m`` evaluated through ``log1p``; nothing subtracts from 1, so tiny
rates keep full relative precision.
"""

from __future__ import annotations

import math
from typing import Iterable

from .ecc import make_scheme

DATA_BITS = 64


class DomainError(ValueError):
    pass


def _prob(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name} must be a probability, got {p}")
    return float(p)


def op_fault_rate(p_xor: float, n: int) -> float:
    """AND/OR (and NAND/NOR) error rate per column, assuming every fault event is equally likely."""
    p_xor = _prob(p_xor, "p_xor")
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    return p_xor / n


def binomial_tail(m: int, p: float, k_min: int) -> float:
    """P[X >= k_min] for X ~ Binomial(m, p)."""
    if k_min <= 0:
        return 1.0
    if k_min > m or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    log_q = math.log1p(-p)
    log_p = math.log(p)
    total = 0.0
    for k in range(k_min, m + 1):
        total += math.comb(m, k) * math.exp(k * log_p + (m - k) * log_q)
    return min(total, 1.0)


def word_uncorrectable_rate(p: float, w: int, t: int) -> float:
    """Probability that a ``w``-bit codeword takes more than ``t`` sensing faults.

    Not every fault is an op error, so this over-counts: it is a worst case.
    """
    p = _prob(p)
    if w < 1 or t < 0:
        raise DomainError(f"need w >= 1 and t >= 0, got w={w}, t={t}")
    return binomial_tail(w, p, t + 1)


def row_fault_rate(word_rate: float, words: int) -> float:
    word_rate = _prob(word_rate, "word_rate")
    if words < 1:
        raise DomainError(f"words must be >= 1, got {words}")
    if word_rate == 1.0:
        return 1.0
    return -math.expm1(words * math.log1p(-word_rate))


def mr_fault_rate(q: float, copies: int) -> float:
    """Probability that a majority of ``copies`` independent copies are wrong."""
    q = _prob(q, "q")
    if copies < 1 or copies % 2 == 0:
        raise DomainError(f"copies must be odd, got {copies}")
    return binomial_tail(copies, q, copies // 2 + 1)


def codeword_bits(t: int) -> int:
    return DATA_BITS if t == 0 else make_scheme(t).n


def mr_bit_rate(p_xor: float, n: int, q_mode: str = "eq1") -> float:
    if q_mode == "eq1":
        return op_fault_rate(p_xor, n)
    if q_mode == "raw":
        return _prob(p_xor, "p_xor")
    raise DomainError(f"q_mode must be 'eq1' or 'raw', got {q_mode!r}")


def ecc_row_rate(p: float, t: int, words: int = 8) -> float:
    return row_fault_rate(word_uncorrectable_rate(p, codeword_bits(t), t), words)


def mr_row_rate(p: float, copies: int, n: int, words: int = 8, q_mode: str = "eq1") -> float:
    bit = mr_fault_rate(mr_bit_rate(p, n, q_mode), copies)
    return row_fault_rate(bit, words * DATA_BITS)


def config_row_rate(config: str, p: float, n: int, words: int = 8, q_mode: str = "eq1") -> float:
    """Row-level rate for a protection label: ``none``, ``ecc1``..``ecc3``, ``mr3``/``mr5``/``mr7``."""
    if config == "none":
        return ecc_row_rate(p, 0, words)
    if config.startswith("ecc"):
        return ecc_row_rate(p, int(config[3:]), words)
    if config.startswith("mr"):
        return mr_row_rate(p, int(config[2:]), n, words, q_mode)
    raise DomainError(f"unknown configuration {config!r}")


CURVE_COLUMNS = ("p", "n", "model", "level", "rate")
DEFAULT_CONFIGS = ("none", "ecc1", "ecc2", "ecc3", "mr3", "mr5", "mr7")


def analytic_curves(p_values: Iterable[float], n: int = 3, words: int = 8,
                    configs: Iterable[str] = DEFAULT_CONFIGS, q_mode: str = "eq1") -> list[dict]:
    """Rows of the closed-form curves: the per-column op rate, then one row-level rate per config."""
    rows = []
    for p in p_values:
        rows.append(dict(p=p, n=n, model="op", level=0, rate=op_fault_rate(p, n)))
        for cfg in configs:
            if cfg == "none":
                model, level = "none", 0
            elif cfg.startswith("ecc"):
                model, level = "ecc", int(cfg[3:])
            else:
                model, level = "mr", int(cfg[2:])
            rows.append(dict(p=p, n=n, model=model, level=level,
                             rate=config_row_rate(cfg, p, n, words, q_mode)))
    return rows
