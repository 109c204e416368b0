"""Cascade error reconciliation with a universal-hash verification step."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import KeyLengthError, ReconciliationError

HASH_BITS = 64
MAX_EXTRA_PASSES = 8


@dataclass(frozen=True)
class ReconciliationResult:
    corrected: np.ndarray = field(repr=False)
    leaked_bits: int
    passes: int
    errors_corrected: int
    hash_bits: int = HASH_BITS

    @property
    def disclosed_bits(self) -> int:
        return self.leaked_bits + self.hash_bits


def verification_hash(bits: np.ndarray, seed: int, n_bits: int = HASH_BITS) -> np.ndarray:
    """Random linear hash over GF(2): ``n_bits`` parities of seeded random subsets.

    Distinct inputs collide with probability ``2**-n_bits``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x4A5,)))
    out = np.empty(n_bits, dtype=np.uint8)
    x = bits.astype(bool)
    for i in range(n_bits):
        mask = rng.integers(0, 2, bits.size, dtype=np.uint8).astype(bool)
        out[i] = np.count_nonzero(x & mask) & 1
    return out


class _Cascade:
    def __init__(self, alice: np.ndarray, bob: np.ndarray, k1: int, seed: int):
        self.a = alice.astype(np.uint8)
        self.b = bob.astype(np.uint8).copy()
        self.n = alice.size
        self.k1 = k1
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xCA5,)))
        self.perms: list[np.ndarray] = []
        self.pos: list[np.ndarray] = []
        self.sizes: list[int] = []
        self.diff: list[np.ndarray] = []
        self.leaked = 0
        self.fixed = 0

    def _block(self, j: int, blk: int) -> np.ndarray:
        k = self.sizes[j]
        return self.perms[j][blk * k : (blk + 1) * k]

    def _locate(self, idx: np.ndarray) -> int:
        # binary search on a block known to hold an odd number of errors
        while idx.size > 1:
            half = idx[: idx.size // 2]
            self.leaked += 1
            if (int(self.a[half].sum()) ^ int(self.b[half].sum())) & 1:
                idx = half
            else:
                idx = idx[idx.size // 2 :]
        return int(idx[0])

    def _flip(self, p: int) -> None:
        self.b[p] ^= 1
        self.fixed += 1
        for j in range(len(self.perms)):
            self.diff[j][self.pos[j][p] // self.sizes[j]] ^= 1

    def _settle(self) -> None:
        while True:
            for j in range(len(self.perms)):
                odd = np.flatnonzero(self.diff[j])
                if odd.size:
                    self._flip(self._locate(self._block(j, int(odd[0]))))
                    break
            else:
                return

    def run_pass(self, i: int) -> None:
        # keep at least four blocks so late passes still localise error pairs
        k = max(1, min(self.k1 * (2**i), self.n // 4))
        perm = np.arange(self.n) if i == 0 else self.rng.permutation(self.n)
        pos = np.empty(self.n, dtype=np.int64)
        pos[perm] = np.arange(self.n)
        n_blocks = math.ceil(self.n / k)
        pad = n_blocks * k - self.n
        x = np.concatenate([(self.a ^ self.b)[perm], np.zeros(pad, dtype=np.uint8)])
        diff = (x.reshape(n_blocks, k).sum(axis=1) & 1).astype(np.uint8)
        self.perms.append(perm)
        self.pos.append(pos)
        self.sizes.append(k)
        self.diff.append(diff)
        self.leaked += n_blocks
        self._settle()


def error_correction(
    alice: np.ndarray,
    bob: np.ndarray,
    qber_estimate: float = 0.02,
    passes: int = 4,
    seed: int = 0,
) -> ReconciliationResult:
    """Correct ``bob`` towards ``alice``; returns Bob's corrected string.

    The strings are compared by a 64-bit hash first, so identical inputs
    reveal only that hash.  Otherwise Cascade runs with first block size
    ``0.73 / qber_estimate`` doubling each pass, and a fresh hash verifies
    the result; on a mismatch further passes run, each followed by a new
    hash, up to ``MAX_EXTRA_PASSES``.  ``leaked_bits`` counts disclosed
    parities; the hash bits are reported separately in ``hash_bits``.
    """
    alice = np.asarray(alice)
    bob = np.asarray(bob)
    if alice.shape != bob.shape or alice.ndim != 1:
        raise KeyLengthError("alice and bob must be 1-D strings of equal length")
    n = alice.size
    if n == 0:
        raise KeyLengthError("empty strings")
    if np.any((alice > 1) | (bob > 1)):
        raise ValueError("strings must contain only 0/1")
    if np.array_equal(verification_hash(alice, seed), verification_hash(bob, seed)):
        return ReconciliationResult(bob.astype(np.uint8).copy(), 0, 0, 0, HASH_BITS)
    q = min(max(qber_estimate, 1e-4), 0.25)
    k1 = max(4, int(math.ceil(0.73 / q)))
    cas = _Cascade(alice, bob, k1, seed)
    for i in range(passes):
        cas.run_pass(i)
    hashes = HASH_BITS
    done = passes
    # residual error pairs survive with small probability; extra passes until the hash agrees
    while True:
        hashes += HASH_BITS
        check = seed + 1 + done - passes
        if np.array_equal(verification_hash(alice, check), verification_hash(cas.b, check)):
            break
        if done >= passes + MAX_EXTRA_PASSES:
            raise ReconciliationError(f"verification hash mismatch after {done} Cascade passes")
        cas.run_pass(done)
        done += 1
    if cas.leaked + hashes >= n:
        raise ReconciliationError(f"reconciliation disclosed {cas.leaked + hashes} bits of a {n}-bit string")
    return ReconciliationResult(cas.b, cas.leaked, done, cas.fixed, hashes)
