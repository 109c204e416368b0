"""Acceptance gate: criteria AC1-AC12 at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and also to stdout when run with ``-s``.
Criteria that the model does not meet fail honestly.
"""

from __future__ import annotations

import dataclasses
import math
import time

import numpy as np
import pytest

from skylink import emit_report, load_preset, run_scenario
from skylink.entanglement import TSIRELSON, bell_state, sample_chsh, werner_from_fidelity, werner_state
from skylink.geometry import elevation_at_range
from skylink.gravity import EarthModel, EventFormalismParams, angle_sweep, calibrate_coherence_time, delta_t, zenith_closed_form
from skylink.link import (
    DESIGN_BUDGETS,
    fiber_detections,
    fiber_vs_freespace,
    freespace_curve,
    from_db,
    geometric_loss_approx,
    table_budget,
    to_db,
    years_per_sifted_bit,
)
from skylink.mission import detector_model, link_budget_at, sync_model, wcp_source
from skylink.photonics import DetectorModel, SpdcSource, SyncModel, WcpSource, coincidence_rates
from skylink.qkd import (
    KeyMaterial,
    bb84_round,
    bbm92_key_length,
    bbm92_transcript,
    distill_key,
    relay_exchange,
    sample_decoy_stats,
    secure_key_length,
    sift_and_qber,
)
from skylink.scenario import PRESET_NAMES
from skylink.teleport import SIX_STATES, average_fidelity, bsm_success_fraction

RESULTS: dict[str, str] = {}


class Gate:
    """Collects sub-checks for one criterion and records a single verdict line."""

    def __init__(self, ac: str, title: str):
        self.ac, self.title = ac, title
        self.items: list[tuple[str, bool]] = []

    def check(self, label: str, ok: bool) -> None:
        self.items.append((label, bool(ok)))

    def finish(self) -> None:
        ok = all(v for _, v in self.items)
        failed = [k for k, v in self.items if not v]
        detail = "; ".join(k for k, _ in self.items) if ok else "failed: " + "; ".join(failed)
        line = f"{self.ac:5s} {'PASS' if ok else 'FAIL'}  {self.title} ({detail})"
        RESULTS[self.ac] = line
        print(line)
        assert ok, line


def test_ac01_design_budgets():
    g = Gate("AC1", "design-point budgets within 0.5 dB, under 1 ms")
    targets = {"one-downlink": -35.0, "two-downlink": -75.0, "one-uplink": -53.0}
    for name, target in targets.items():
        got = table_budget(name).total_db
        g.check(f"{name} {got:.3f} dB vs {target:g}", abs(got - target) <= 0.5)
    reps = 200
    t0 = time.perf_counter()
    for _ in range(reps):
        for name in DESIGN_BUDGETS:
            table_budget(name).total_db
    per_call = (time.perf_counter() - t0) / (reps * len(DESIGN_BUDGETS))
    g.check(f"{per_call * 1e6:.1f} us per budget", per_call < 1e-3)
    g.finish()


def test_ac02_geometry_approximation():
    g = Gate("AC2", "far-field geometric loss")
    db = to_db(geometric_loss_approx(1.2, 15e-6, 1.0e6))
    g.check(f"{db:.3f} dB vs -18.9 +-0.2", abs(db + 18.9) <= 0.2)
    g.finish()


def test_ac03_fiber_vs_freespace():
    g = Gate("AC3", "fiber against free space")
    d = dict(DESIGN_BUDGETS["one-downlink"])
    d.pop("eta_g")
    fixed = math.prod(d.values())
    cmp = fiber_vs_freespace(0.2, freespace_curve(fixed, 1.2, 15e-6), 1200.0)
    g.check(f"crossover {cmp.crossover_km:.1f} km in [50, 100]", 50.0 <= cmp.crossover_km <= 100.0)
    century = 100 * 365.25 * 86400.0
    det = fiber_detections(0.2, 1000.0, 10e9, century)
    g.check(f"{det:.3f} detections per century vs 0.32 +-5%", abs(det - 0.32) <= 0.05 * 0.32)
    years = years_per_sifted_bit(0.2, 1200.0, 10e9)
    g.check(f"{years:.3g} years per sifted bit vs 6e6 within 2x", 3e6 <= years <= 12e6)
    g.finish()


def test_ac04_downlink_qkd():
    g = Gate("AC4", "downlink QKD loss, rates and QBER")
    s = load_preset("micius-qkd-xinglong")
    st, h = s.stations[0], s.orbit.altitude
    for z, target in ((530.0, 29.0), (1600.0, 44.0)):
        loss = -link_budget_at(s, st, z, elevation_at_range(h, z)).total_db
        g.check(f"loss {loss:.2f} dB at {z:g} km vs {target:g} +-3", abs(loss - target) <= 3.0)
    src, det, sync = wcp_source(s), detector_model(s), sync_model(s)
    n = 10**7
    for z, target in ((645.0, 12e3), (1200.0, 1e3)):
        b = link_budget_at(s, st, z, elevation_at_range(h, z))
        t0 = time.perf_counter()
        sr = sift_and_qber(bb84_round(src, b, det, sync, n, seed=s.seeds.seed, misalignment=s.protocol.misalignment))
        elapsed = time.perf_counter() - t0
        rate = sr.sifted_bits / n * src.rep_rate
        g.check(f"sifted {rate:.0f} bps at {z:g} km vs {target:g} within 2x", target / 2 <= rate <= 2 * target)
        g.check(f"{elapsed:.2f} s for 1e7 pulses", elapsed < 30.0)
    q = run_scenario(s).totals["mean_qber"]
    g.check(f"mean QBER {q:.4f} <= 0.02", q <= 0.02)
    g.finish()


def test_ac05_finite_key():
    g = Gate("AC5", "finite-key properties")
    src, det, sync = WcpSource(), DetectorModel(0.5, 100.0), SyncModel(100e6, 1.2e-9, 2e-9)
    stats = sample_decoy_stats(src, from_db(33.0), det, sync, 3 * 10**10, np.random.default_rng(2017), misalignment=0.008)
    r = secure_key_length(stats, epsilon=1e-9)
    g.check(f"ratio {r.ratio:.3f} at QBER {stats.qber():.4f}", 0.10 <= r.ratio <= 0.30 and abs(stats.qber() - 0.011) <= 5e-4)
    qs = [0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1]
    lengths = [secure_key_length(stats.scaled_errors(q / stats.qber())).secure_bits_finite for q in qs]
    g.check("monotone in QBER", all(b <= a for a, b in zip(lengths, lengths[1:])))
    eps = [1e-3, 1e-6, 1e-9, 1e-12, 1e-15]
    lengths = [secure_key_length(stats, epsilon=e).secure_bits_finite for e in eps]
    g.check("monotone in epsilon", all(b <= a for a, b in zip(lengths, lengths[1:])))
    # error scaling is capped per cell, so step the factor until QBER reaches 11%
    factor = 0.11 / stats.qber()
    while stats.scaled_errors(factor).qber() < 0.11:
        factor *= 1.01
    high = secure_key_length(stats.scaled_errors(factor))
    g.check(f"zero key at QBER {high.qber:.3f}", high.qber >= 0.11 and high.secure_bits_finite == 0)
    agreed = 0
    for seed in range(1000):
        key = distill_key(sift_and_qber(bbm92_transcript(4000, 0.01, seed=seed)), 0.5, seed=seed)
        agreed += key.agreed and key.length > 0
    g.check(f"{agreed}/1000 honest runs agree", agreed == 1000)
    g.finish()


def test_ac06_entanglement_distribution():
    g = Gate("AC6", "two-downlink entanglement")
    eta = 10 ** (-3.2)
    rec = coincidence_rates(SpdcSource(5.9e6), eta, eta, DetectorModel(1.0, 0.0), DetectorModel(1.0, 0.0), SyncModel())
    g.check(f"{rec.coincidences:.3f} Hz at -64 dB", 1.0 <= rec.coincidences <= 3.0)
    snr = run_scenario(load_preset("micius-entanglement-dlh-ljg")).totals["snr"]
    g.check(f"SNR {snr:.2f} >= 5", snr >= 5.0)
    p = werner_from_fidelity(0.869)
    s_an = TSIRELSON * p
    g.check(f"analytic S {s_an:.3f} within 1 sigma of 2.374", abs(s_an - 2.33) < 0.005 and abs(s_an - 2.374) <= 0.093)
    est = sample_chsh(werner_state(p), 1167, np.random.default_rng(2017))
    g.check(f"stderr {est.stderr:.3f} vs 0.09 +-30%", abs(est.stderr - 0.09) <= 0.3 * 0.09)
    g.finish()


def test_ac07_entanglement_qkd():
    g = Gate("AC7", "BBM92 key rate")
    asym = bbm92_key_length(10**6, 0.045, f_ec=1.1, mode="asymptotic").secure_bits / 1e6
    g.check(f"asymptotic {asym:.5f} bit/s in [0.42, 0.44]", 0.42 <= asym <= 0.44)
    fin = bbm92_key_length(3100, 0.045, f_ec=1.1, epsilon=1e-9).secure_bits_finite / 3100
    g.check(f"finite {fin:.4f} bit/s in (0, asymptotic)", 0.0 < fin < asym)
    g.finish()


def test_ac08_teleportation():
    g = Gate("AC8", "teleportation fidelity")
    worst = min(average_fidelity(s, bell_state()) for s in SIX_STATES.values())
    g.check(f"perfect-channel fidelity {worst:.15f}", abs(worst - 1.0) <= 1e-12)
    n = 10**5
    frac = bsm_success_fraction("linear-optics", n, np.random.default_rng(2017))
    g.check(f"linear-optics success {frac:.4f}", abs(frac - 0.5) <= 2 * math.sqrt(0.25 / n))
    r = run_scenario(load_preset("micius-teleport-ngari"))
    f = r.totals["mean_fidelity"]
    g.check(f"preset mean fidelity {f:.3f} in [0.75, 0.85]", 0.75 <= f <= 0.85)
    header, rows = r.plots["classical_limit.csv"]
    g.check("classical limit 2/3 emitted", bool(rows) and all(abs(row[1] - 2 / 3) < 1e-12 for row in rows))
    g.finish()


def test_ac09_gravity_decoherence():
    g = Gate("AC9", "gravity-induced decorrelation")
    earth, h = EarthModel(), 500e3
    for form, approx in (("local_clock", 41.2e-15), ("general", 1.12e-12)):
        dt = delta_t(earth, h, 90.0, form)
        rel = abs(dt / zenith_closed_form(earth, h, form) - 1.0)
        g.check(f"{form} zenith {dt:.4e} s, rel diff {rel:.1e}", rel <= 1e-8 and abs(dt / approx - 1) < 0.01)
    d_t = calibrate_coherence_time(earth, h, 50.0, 0.97)
    thetas = np.linspace(40.0, 60.0, 201)[1:-1]
    D = np.array([row[2] for row in angle_sweep(EventFormalismParams(d_t, h), thetas)])
    g.check(f"D in [{D.min():.4f}, {D.max():.4f}] for 40-60 deg vs [0.96, 0.98]", D.min() >= 0.96 and D.max() <= 0.98)
    s = load_preset("micius-gravity-ngari")
    s = dataclasses.replace(s, protocol=dataclasses.replace(s.protocol, injected_d=0.9))
    r = run_scenario(s)
    d, err = r.totals["D_epr_combined"], r.totals["D_epr_combined_err"]
    g.check(f"injected 0.9 recovered as {d:.4f} +- {err:.4f}", abs(d - 0.9) <= 3 * err)
    g.finish()


def test_ac10_relay_exchange():
    g = Gate("AC10", "trusted-relay exchange")
    rng = np.random.default_rng(2017)
    ok = 0
    for i in range(1000):
        n = int(rng.integers(1, 4096))
        ka, kb = rng.bytes(n), rng.bytes(n)
        res = relay_exchange(KeyMaterial(f"a{i}", ka), KeyMaterial(f"b{i}", kb))
        ok += res.key_at_a == kb and res.key_at_b == kb
    g.check(f"{ok}/1000 XOR recoveries", ok == 1000)
    r = run_scenario(load_preset("micius-relay-xinglong-graz"))
    t = r.totals
    g.check(
        f"{t['forward_bytes']:.0f} B and {t['reverse_bytes']:.0f} B from {t['shared_bytes']:.0f} B",
        (t["forward_bytes"], t["reverse_bytes"], t["shared_bytes"]) == (5340, 4900, 100_000),
    )
    g.check("both round-trips intact", r.passed and all(r.checks.values()))
    g.finish()


def test_ac11_constellation_plan():
    g = Gate("AC11", "constellation plan")
    t = run_scenario(load_preset("constellation-3leo")).totals
    g.check(f"{t['passes_per_day']:.2f} passes/day vs 3.7 +-1.1", abs(t["passes_per_day"] - 3.7) <= 1.1)
    minutes = t["mean_pass_duration_s"] / 60
    g.check(f"mean pass {minutes:.2f} min vs ~5", 4.0 <= minutes <= 6.0)
    g.check("1e8 bit per station-year", t["per_station_year_bits"] == 1e8)
    g.check("1e10 bit aggregate per year", t["aggregate_year_bits"] == 1e10)
    g.finish()


def _bundle_bytes(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


def test_ac12_determinism(tmp_path):
    g = Gate("AC12", "byte-identical reruns across worker counts")
    for name in PRESET_NAMES:
        s = load_preset(name)
        outs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 4)):
            d = tmp_path / f"{name}-{tag}"
            emit_report(run_scenario(s.with_workers(workers)), d)
            outs.append(_bundle_bytes(d))
        g.check(name, outs[0] == outs[1] == outs[2] and len(outs[0]) > 0)
    g.finish()


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
