from __future__ import annotations

import threading

import pytest

from skylink.errors import InsufficientKeyError, KeyReuseError, ValidationError
from skylink.keystore import KeyStore
from skylink.qkd import KeyMaterial


def test_persist_and_reload(tmp_path):
    store = KeyStore(tmp_path)
    store.add(KeyMaterial("ab", b"\x00" * 16, ("a", "b"), ("pass-0",)))
    again = KeyStore(tmp_path)
    assert again.ids() == ["ab"]
    assert again.get("ab").provenance == ("pass-0",)
    assert again.available(("b", "a")) == 16


def test_consume_once(tmp_path):
    store = KeyStore(tmp_path)
    store.add(KeyMaterial("k", b"abc"))
    assert store.consume("k") == b"abc"
    with pytest.raises(KeyReuseError):
        store.consume("k")
    assert KeyStore(tmp_path).get("k").consumed
    with pytest.raises(InsufficientKeyError):
        store.consume("missing")


def test_split(tmp_path):
    store = KeyStore(tmp_path)
    store.add(KeyMaterial("k", bytes(range(10)), ("a", "b")))
    ids = store.split("k", [3, 4])
    assert [store.get(i).data for i in ids] == [bytes([0, 1, 2]), bytes([3, 4, 5, 6])]
    assert store.available() == 7
    with pytest.raises(InsufficientKeyError):
        store.split(ids[0], [10])


def test_duplicate_id_rejected():
    store = KeyStore()
    store.add(KeyMaterial("k", b"x"))
    with pytest.raises(KeyReuseError):
        store.add(KeyMaterial("k", b"y"))


def test_corrupt_sidecar(tmp_path):
    KeyStore(tmp_path).add(KeyMaterial("k", b"abcd"))
    (tmp_path / "k.bin").write_bytes(b"ab")
    with pytest.raises(ValidationError):
        KeyStore(tmp_path)


def test_concurrent_consumers_get_key_once():
    store = KeyStore()
    store.add(KeyMaterial("k", b"secret"))
    wins, errors = [], []

    def grab():
        try:
            wins.append(store.consume("k"))
        except KeyReuseError:
            errors.append(1)

    threads = [threading.Thread(target=grab) for _ in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(wins) == 1 and len(errors) == 15
