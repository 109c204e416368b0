"""Persistent store of shared key material with single-use bookkeeping.

Each key is a ``<id>.bin`` file plus a ``<id>.json`` sidecar holding the owner
pair, length, provenance and consumed flag.  A store without a directory
lives in memory only.  All mutations go through one lock.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .errors import InsufficientKeyError, KeyReuseError, ValidationError
from .qkd.otp import KeyMaterial


class KeyStore:
    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        self._keys: dict[str, KeyMaterial] = {}
        self._lock = threading.Lock()
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            for meta in sorted(self.directory.glob("*.json")):
                self._load(meta)

    def _load(self, meta_path: Path) -> None:
        meta = json.loads(meta_path.read_text())
        data = meta_path.with_suffix(".bin").read_bytes()
        if len(data) != meta["length"]:
            raise ValidationError(f"key file {meta_path.stem} length does not match its sidecar")
        self._keys[meta["key_id"]] = KeyMaterial(
            meta["key_id"], data, tuple(meta["owners"]), tuple(meta["provenance"]), meta["consumed"]
        )

    def persist(self, km: KeyMaterial) -> None:
        """Write one key and its sidecar; a no-op for an in-memory store."""
        if self.directory is None:
            return
        (self.directory / f"{km.key_id}.bin").write_bytes(km.data)
        meta = {
            "key_id": km.key_id,
            "owners": list(km.owners),
            "length": len(km.data),
            "provenance": list(km.provenance),
            "consumed": km.consumed,
        }
        (self.directory / f"{km.key_id}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    def add(self, km: KeyMaterial) -> None:
        with self._lock:
            if km.key_id in self._keys:
                raise KeyReuseError(f"key id {km.key_id} already present")
            self._keys[km.key_id] = km
            self.persist(km)

    def get(self, key_id: str) -> KeyMaterial:
        try:
            return self._keys[key_id]
        except KeyError:
            raise InsufficientKeyError(f"no key with id {key_id}") from None

    def consume(self, key_id: str) -> bytes:
        """Return the key bytes and mark the key consumed; a second call raises."""
        with self._lock:
            km = self.get(key_id)
            data = km.take()
            self.persist(km)
            return data

    def split(self, key_id: str, sizes: list[int]) -> list[str]:
        """Carve an unused key into fresh segments; the parent becomes consumed."""
        with self._lock:
            km = self.get(key_id)
            if sum(sizes) > len(km):
                raise InsufficientKeyError(f"key {key_id} has {len(km)} bytes, {sum(sizes)} requested")
            data = km.take()
            self.persist(km)
            ids, offset = [], 0
            for n in sizes:
                seg = KeyMaterial(
                    f"{key_id}.{offset}-{offset + n}", data[offset : offset + n], km.owners, km.provenance
                )
                self._keys[seg.key_id] = seg
                self.persist(seg)
                ids.append(seg.key_id)
                offset += n
            return ids

    def available(self, owners: tuple[str, str] | None = None) -> int:
        """Unconsumed bytes, optionally for one owner pair (order-insensitive)."""
        total = 0
        for km in self._keys.values():
            if km.consumed:
                continue
            if owners is None or set(km.owners) == set(owners):
                total += len(km)
        return total

    def ids(self) -> list[str]:
        return sorted(self._keys)

    def __contains__(self, key_id: str) -> bool:
        return key_id in self._keys
