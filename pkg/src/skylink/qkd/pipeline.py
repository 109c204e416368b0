"""Sift, reconcile and amplify one transcript into a shared key."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bb84 import SiftResult
from .cascade import error_correction
from .privacy import privacy_amplification


@dataclass(frozen=True)
class DistilledKey:
    alice: np.ndarray = field(repr=False)
    bob: np.ndarray = field(repr=False)
    sifted_bits: int
    leaked_bits: int
    qber: float

    @property
    def length(self) -> int:
        return int(self.alice.size)

    @property
    def agreed(self) -> bool:
        return bool(np.array_equal(self.alice, self.bob))


def distill_key(sift: SiftResult, secure_fraction: float, seed: int = 0) -> DistilledKey:
    """Error-correct the sifted strings, then compress to the secure length.

    The output length is ``secure_fraction`` of the sifted length minus every
    bit disclosed during reconciliation.  A reconciliation failure propagates
    and no key is produced.
    """
    rec = error_correction(sift.alice_key, sift.bob_key, qber_estimate=max(sift.qber, 0.005), seed=seed)
    n = sift.sifted_bits
    m = max(0, min(n, int(math.floor(secure_fraction * n)) - rec.disclosed_bits))
    a = privacy_amplification(sift.alice_key, m, seed)
    b = privacy_amplification(rec.corrected, m, seed)
    return DistilledKey(a, b, n, rec.disclosed_bits, sift.qber)


def bits_to_bytes(bits: np.ndarray) -> bytes:
    """Pack bits MSB-first, dropping any trailing partial byte."""
    n = (bits.size // 8) * 8
    return np.packbits(bits[:n].astype(np.uint8)).tobytes()
