from __future__ import annotations

import dataclasses

import pytest

from skylink import constellation_throughput, intercontinental_demo, load_preset, run_scenario
from skylink.errors import DomainError, InsufficientKeyError
from skylink.keystore import KeyStore
from skylink.mission import MISSION_REQUIREMENTS, Requirement, Verdict
from skylink.qkd import KeyMaterial


@pytest.fixture(scope="module")
def qkd_report():
    return run_scenario(load_preset("micius-qkd-xinglong"))


def test_requirement_operators():
    r = Requirement("qkd", "quantum bit error rate", "<=", 0.035, "")
    assert r.check(0.035) and not r.check(0.036)
    assert Verdict(r, 0.01).line().startswith("[PASS] qkd")
    assert Verdict(r, 0.05).line().startswith("[FAIL] qkd")


@pytest.mark.parametrize("row", sorted(MISSION_REQUIREMENTS))
def test_verdict_flips_across_threshold(row):
    for req in MISSION_REQUIREMENTS[row]:
        eps = abs(req.threshold) * 1e-6 + 1e-9
        good = req.threshold + eps if req.op == ">=" else req.threshold - eps
        bad = req.threshold - eps if req.op == ">=" else req.threshold + eps
        assert req.check(good) and not req.check(bad)


def test_downlink_report(qkd_report):
    t = qkd_report.totals
    assert qkd_report.passed
    assert t["min_loss_db"] == pytest.approx(29.0, abs=3.0)
    assert t["max_loss_db"] == pytest.approx(44.0, abs=3.0)
    assert t["mean_qber"] <= 0.02
    assert t["secure_bits_finite"] < t["secure_bits_asymptotic"]
    assert {"rate_vs_time.csv", "loss_vs_elevation.csv"} <= set(qkd_report.plots)
    assert qkd_report.keys and qkd_report.keys[0].data


def test_loss_vs_elevation_is_monotone(qkd_report):
    header, rows = qkd_report.plots["loss_vs_elevation.csv"]
    els = [r[0] for r in rows]
    losses = [r[1] for r in rows]
    assert els == sorted(els)
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))


def test_entanglement_report():
    r = run_scenario(load_preset("micius-entanglement-dlh-ljg"))
    assert r.totals["snr"] >= 5.0
    assert r.totals["chsh_sampled"] > 2.0
    assert 66.0 - 3 <= r.totals["min_loss_db"] and r.totals["max_loss_db"] <= 82.0
    header, rows = r.plots["bell.csv"]
    assert header == ("setting_a", "setting_b", "E", "stderr") and len(rows) == 4


def test_teleport_report():
    r = run_scenario(load_preset("micius-teleport-ngari"))
    assert r.passed
    header, rows = r.plots["classical_limit.csv"]
    assert all(row[1] == pytest.approx(2 / 3) for row in rows)


def test_relay_report():
    r = run_scenario(load_preset("micius-relay-xinglong-graz"))
    assert r.passed
    assert r.totals["shared_bytes"] == 100_000
    assert r.totals["remaining_bytes"] == 100_000 - 5340 - 4900


def _store_with(n_a: int, n_b: int) -> KeyStore:
    store = KeyStore()
    store.add(KeyMaterial("a-sat", bytes(range(256)) * (n_a // 256) + bytes(n_a % 256), ("a", "sat")))
    store.add(KeyMaterial("b-sat", bytes(reversed(range(256))) * (n_b // 256) + bytes(n_b % 256), ("b", "sat")))
    return store


def test_intercontinental_demo_round_trips():
    store = _store_with(12_000, 12_000)
    tr = intercontinental_demo(store, "a-sat", "b-sat", 5340, 4900, seed=1)
    assert tr.success and tr.remaining_bytes == 12_000 - 5340 - 4900
    assert store.get("a-sat").consumed and store.get("b-sat").consumed


def test_intercontinental_demo_detects_tamper():
    store = _store_with(1024, 1024)
    assert not intercontinental_demo(store, "a-sat", "b-sat", 100, 100, tamper=True).success


def test_intercontinental_demo_insufficient_key():
    with pytest.raises(InsufficientKeyError):
        intercontinental_demo(_store_with(100, 100), "a-sat", "b-sat", 80, 80)


def test_gravity_report():
    r = run_scenario(load_preset("micius-gravity-ngari"))
    assert r.checks["injected D recovered within 3 sigma"]
    assert 0.95 < r.totals["D_model_min"] < r.totals["D_model_max"] < 0.99


def test_static_daylight_report():
    r = run_scenario(load_preset("daylight-53km"))
    assert len(r.verdicts) == 0 and r.passed
    assert "loss_vs_elevation.csv" not in r.plots


def test_single_pass_campaign_fails_time_requirement():
    r = run_scenario(load_preset("tiangong2"))
    failed = [v.requirement.quantity for v in r.verdicts if not v.passed]
    assert failed == ["total experimental time"]
    assert all(r.checks.values()) and not r.passed


def test_throughput_arithmetic():
    t = constellation_throughput(3, 100, 2e6, 50)
    assert t.per_station_year_bits == 1e8
    assert t.aggregate_year_bits == 1e10
    with pytest.raises(DomainError):
        constellation_throughput(0, 1, 1.0, 1.0)


def test_seed_changes_results():
    s = load_preset("micius-teleport-ngari")
    a = run_scenario(s).totals["mean_fidelity"]
    b = run_scenario(s.with_seed(s.seeds.seed + 1)).totals["mean_fidelity"]
    assert a != b


def test_passes_scale_campaign():
    s = load_preset("micius-teleport-ngari")
    fewer = dataclasses.replace(s, mission=dataclasses.replace(s.mission, passes=10))
    assert run_scenario(fewer).totals["events"] < run_scenario(s).totals["events"]
