"""One-time-pad encryption and trusted-relay key exchange."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientKeyError, KeyLengthError, KeyReuseError


@dataclass
class KeyMaterial:
    """Secret key shared by an owner pair, with the passes that produced it."""

    key_id: str
    data: bytes = field(repr=False)
    owners: tuple[str, str] = ("", "")
    provenance: tuple[str, ...] = ()
    consumed: bool = False

    def __len__(self) -> int:
        return len(self.data)

    def take(self) -> bytes:
        if self.consumed:
            raise KeyReuseError(f"key {self.key_id} already consumed")
        self.consumed = True
        return self.data


def _xor(a: bytes, b: bytes) -> bytes:
    return (np.frombuffer(a, np.uint8) ^ np.frombuffer(b, np.uint8)).tobytes()


def otp_crypt(
    message: bytes,
    key: bytes,
    *,
    key_id: str | None = None,
    ledger: set[str] | None = None,
) -> bytes:
    """XOR ``message`` with the first ``len(message)`` key bytes.

    Passing a ``ledger`` set with a ``key_id`` enforces single use: a repeat
    id raises :class:`KeyReuseError`.
    """
    if len(key) < len(message):
        raise InsufficientKeyError(f"key has {len(key)} bytes, message needs {len(message)}")
    if ledger is not None:
        if key_id is None:
            raise KeyLengthError("key_id required when a ledger is supplied")
        if key_id in ledger:
            raise KeyReuseError(f"key {key_id} already used")
        ledger.add(key_id)
    return _xor(message, key[: len(message)])


@dataclass(frozen=True)
class RelayResult:
    broadcast: bytes = field(repr=False)
    key_at_a: bytes = field(repr=False)
    key_at_b: bytes = field(repr=False)

    @property
    def shared(self) -> bool:
        return self.key_at_a == self.key_at_b


def relay_exchange(ma: KeyMaterial, mb: KeyMaterial) -> RelayResult:
    """Trusted relay: the satellite holds keys shared with sites A and B.

    It broadcasts ``ma xor mb``; site A recovers ``mb`` from its copy of
    ``ma``.  Both inputs are marked consumed.
    """
    if len(ma) != len(mb):
        raise KeyLengthError("relay keys must have equal length")
    a = ma.take()
    b = mb.take()
    broadcast = _xor(a, b)
    return RelayResult(broadcast, _xor(broadcast, a), b)
