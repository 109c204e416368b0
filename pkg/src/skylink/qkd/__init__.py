"""Quantum key distribution protocols and post-processing."""

from .bb84 import (
    BasisBit,
    DecoyStats,
    SiftResult,
    Transcript,
    bb84_round,
    bbm92_transcript,
    expected_decoy_stats,
    sample_decoy_stats,
    sift_and_qber,
)
from .cascade import ReconciliationResult, error_correction
from .keyrate import (
    DecoyBounds,
    SecureKeyResult,
    binary_entropy,
    bbm92_key_length,
    decoy_bounds,
    secure_key_length,
)
from .otp import KeyMaterial, RelayResult, otp_crypt, relay_exchange
from .pipeline import DistilledKey, bits_to_bytes, distill_key
from .privacy import monobit_pvalue, privacy_amplification, serial_pvalue

__all__ = [
    "BasisBit",
    "DecoyBounds",
    "DecoyStats",
    "DistilledKey",
    "KeyMaterial",
    "ReconciliationResult",
    "RelayResult",
    "SecureKeyResult",
    "SiftResult",
    "Transcript",
    "bb84_round",
    "bbm92_key_length",
    "bbm92_transcript",
    "binary_entropy",
    "bits_to_bytes",
    "decoy_bounds",
    "distill_key",
    "error_correction",
    "expected_decoy_stats",
    "monobit_pvalue",
    "otp_crypt",
    "privacy_amplification",
    "relay_exchange",
    "sample_decoy_stats",
    "secure_key_length",
    "serial_pvalue",
    "sift_and_qber",
]
