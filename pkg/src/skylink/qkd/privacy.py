"""Privacy amplification by modified Toeplitz hashing, plus output randomness tests."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import erfc, gammaincc

from ..errors import KeyLengthError


def toeplitz_seed(n: int, m: int, seed: int) -> np.ndarray:
    """Public random bits defining an ``m x (n - m)`` Toeplitz matrix."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x7E9,)))
    return rng.integers(0, 2, max(n - 1, 1), dtype=np.uint8)


def toeplitz_product(t: np.ndarray, x: np.ndarray, m: int) -> np.ndarray:
    """``T x mod 2`` with ``T[i, j] = t[i - j + len(x) - 1]``, via FFT convolution."""
    L = x.size
    if L == 0:
        return np.zeros(m, dtype=np.uint8)
    conv = fftconvolve(t[: m + L - 1].astype(float), x.astype(float))
    return (np.rint(conv[L - 1 : L - 1 + m]).astype(np.int64) & 1).astype(np.uint8)


def toeplitz_product_direct(t: np.ndarray, x: np.ndarray, m: int) -> np.ndarray:
    """Reference dense matrix product, for small sizes."""
    L = x.size
    i = np.arange(m)[:, None]
    j = np.arange(L)[None, :]
    T = t[i - j + L - 1]
    return ((T.astype(np.int64) @ x.astype(np.int64)) & 1).astype(np.uint8)


def privacy_amplification(bits: np.ndarray, output_length: int, seed: int = 0) -> np.ndarray:
    """Compress ``bits`` to ``output_length`` bits: ``x[:m] xor T'(x[m:])``."""
    x = np.asarray(bits, dtype=np.uint8)
    n = x.size
    m = int(output_length)
    if m < 0 or m > n:
        raise KeyLengthError(f"output length {m} outside [0, {n}]")
    if m == 0:
        return np.zeros(0, dtype=np.uint8)
    t = toeplitz_seed(n, m, seed)
    return x[:m] ^ toeplitz_product(t, x[m:], m)


def monobit_pvalue(bits: np.ndarray) -> float:
    """Frequency test p-value."""
    b = np.asarray(bits)
    n = b.size
    s = abs(2 * int(b.sum()) - n) / math.sqrt(n)
    return float(erfc(s / math.sqrt(2.0)))


def serial_pvalue(bits: np.ndarray) -> float:
    """Serial test with block length 2 (first p-value)."""
    b = np.asarray(bits, dtype=np.int64)
    n = b.size

    def psi2(m: int) -> float:
        if m == 0:
            return 0.0
        ext = np.concatenate([b, b[: m - 1]])
        codes = np.zeros(n, dtype=np.int64)
        for k in range(m):
            codes = (codes << 1) | ext[k : k + n]
        counts = np.bincount(codes, minlength=2**m)
        return float((2**m) / n * np.sum(counts.astype(float) ** 2) - n)

    d1 = psi2(2) - psi2(1)
    return float(gammaincc(2 ** (2 - 2) / 2.0, d1 / 2.0))
