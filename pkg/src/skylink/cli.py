"""Command-line entry point.

Subcommands: ``run``, ``budget``, ``bell``, ``gravity``, ``plan``, ``keys``.
Every subcommand takes ``--seed``, ``--out`` and ``--preset``.  Exit codes:
0 when every requirement passes, 1 on a requirement failure, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import gravity as grav
from .entanglement import CHSH_ANGLES, TSIRELSON, sample_chsh, werner_fidelity, werner_from_fidelity, werner_state
from .errors import ConfigError, SkylinkError
from .geometry import elevation_at_range, slant_range
from .keystore import KeyStore
from .mission import MissionReport, link_budget_at, run_scenario
from .report import emit_report, render_plot, summary_text, write_csv
from .scenario import PRESET_NAMES, Scenario, load_preset, parse_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser, default_preset: str | None = None) -> None:
    p.add_argument("scenario", nargs="?", help="scenario file")
    p.add_argument("--preset", default=None, help=f"built-in scenario ({', '.join(PRESET_NAMES)})")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.set_defaults(default_preset=default_preset)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skylink", description="Satellite quantum link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write its report bundle")
    _common(p)
    p.add_argument("--workers", type=int, default=None, help="worker threads (results do not depend on it)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("budget", help="link budget along the pass or at one range")
    _common(p, "micius-qkd-xinglong")
    p.add_argument("--range-km", type=float, default=None)
    p.add_argument("--elevation", type=float, default=None, help="deg")
    p.add_argument("--station", default=None, help="station name (default: first)")

    p = sub.add_parser("bell", help="CHSH test on a Werner state")
    _common(p)
    p.add_argument("--fidelity", type=float, default=0.869)
    p.add_argument("--trials", type=int, default=1167)
    p.add_argument("--accidental-fraction", type=float, default=0.0)

    p = sub.add_parser("gravity", help="decorrelation factor versus altitude angle")
    _common(p, "micius-gravity-ngari")

    p = sub.add_parser("plan", help="constellation pass statistics and yearly key volume")
    _common(p, "constellation-3leo")

    p = sub.add_parser("keys", help="list or consume keys in a key store directory")
    _common(p)
    p.add_argument("--consume", default=None, help="key id to consume; prints its hex")
    return parser


def _load(args) -> Scenario | None:
    if args.scenario and args.preset:
        raise ConfigError("give a scenario file or --preset, not both")
    if args.scenario:
        s = parse_scenario(args.scenario)
    elif args.preset:
        s = load_preset(args.preset)
    elif args.default_preset:
        s = load_preset(args.default_preset)
    else:
        return None
    if args.seed is not None:
        s = s.with_seed(args.seed)
    return s


def _require(args) -> Scenario:
    s = _load(args)
    if s is None:
        raise ConfigError("a scenario file or --preset is required")
    return s


def _verdict_code(report: MissionReport) -> int:
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_run(args) -> int:
    s = _require(args)
    if args.workers is not None:
        s = s.with_workers(args.workers)
    report = run_scenario(s)
    print(summary_text(report), end="")
    if args.out is not None:
        bundle = emit_report(report, args.out, plots=not args.no_plots)
        print(f"wrote {len(bundle.files)} files to {bundle.directory}")
    return _verdict_code(report)


def cmd_budget(args) -> int:
    s = _require(args)
    stations = {st.name: st for st in s.stations}
    if args.station is not None and args.station not in stations:
        raise ConfigError(f"no station '{args.station}'", key="station")
    st = stations[args.station] if args.station else s.stations[0]
    h = s.orbit.altitude
    uplink = s.kind == "uplink-teleportation"
    if args.range_km is not None or args.elevation is not None:
        if args.range_km is not None:
            z = args.range_km
            el = elevation_at_range(h, z) if args.elevation is None else args.elevation
        else:
            el = args.elevation
            z = slant_range(h, el)
        b = link_budget_at(s, st, z, el, uplink=uplink)
        for name, v in b.items():
            print(f"{name:8s} {v:12.6g} {10 * math.log10(v):9.3f} dB")
        print(f"{'total':8s} {b.total:12.6g} {b.total_db:9.3f} dB  (range {z:.1f} km, elevation {el:.2f} deg)")
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            b.to_csv(args.out / "budget.csv")
        return EXIT_OK
    lo = max(st.min_elevation, 1.0)
    els = np.linspace(lo, st.peak_elevation, 25)
    rows = []
    for el in els:
        z = slant_range(h, float(el))
        rows.append((float(el), z, -link_budget_at(s, st, z, float(el), uplink=uplink).total_db))
    print("elevation_deg  range_km  loss_db")
    for el, z, loss in rows:
        print(f"{el:13.2f} {z:9.1f} {loss:8.2f}")
    if args.out is not None:
        (args.out / "plots").mkdir(parents=True, exist_ok=True)
        header, data = ("elevation_deg", "loss_db"), [(e, loss) for e, _, loss in rows]
        path = write_csv(args.out / "plots" / "loss_vs_elevation.csv", header, data)
        render_plot(path, path.name, header, data)
    return EXIT_OK


def cmd_bell(args) -> int:
    if not 0.25 <= args.fidelity <= 1.0:
        raise ConfigError("fidelity must be in [0.25, 1]", key="fidelity")
    seed = args.seed if args.seed is not None else 0
    p = werner_from_fidelity(args.fidelity)
    rng = np.random.default_rng(seed)
    est = sample_chsh(werner_state(p), args.trials, rng, accidental_fraction=args.accidental_fraction)
    print(f"Werner p = {p:.6f}  (F = {werner_fidelity(p):.6f})")
    print(f"analytic S = {TSIRELSON * p:.6f}")
    print(f"sampled  S = {est.S:.6f} +/- {est.stderr:.6f}  ({args.trials} trials)")
    print(f"violation of the local bound: {est.violation_sigma:.2f} sigma")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        a1, a2, b1, b2 = (math.degrees(x) for x in CHSH_ANGLES)
        settings = [(a1, b1), (a1, b2), (a2, b1), (a2, b2)]
        data = [
            (a, b, e, math.sqrt(max(1.0 - e * e, 0.0) / n) if n else math.nan)
            for (a, b), e, n in zip(settings, est.correlations, est.counts)
        ]
        header = ("setting_a", "setting_b", "E", "stderr")
        (args.out / "plots").mkdir(parents=True, exist_ok=True)
        path = write_csv(args.out / "plots" / "bell.csv", header, data)
        render_plot(path, path.name, header, data)
    return EXIT_OK if est.S > 2.0 else EXIT_FAIL


def cmd_gravity(args) -> int:
    s = _require(args)
    p = s.protocol
    earth = grav.EarthModel()
    h = s.orbit.altitude * 1e3
    d_t = grav.calibrate_coherence_time(earth, h, p.coherence_angle, p.coherence_target, p.formulation)
    params = grav.EventFormalismParams(d_t, h, p.formulation, earth)
    rows = grav.angle_sweep(params, np.arange(p.angle_min, p.angle_max + 1e-9, p.angle_step))
    print(f"coherence time d_t = {d_t:.6e} s  ({p.formulation})")
    print("theta_deg      delta_t_s          D")
    for th, dt, d in rows:
        print(f"{th:9.2f} {dt:14.6e} {d:10.6f}")
    if args.out is not None:
        (args.out / "plots").mkdir(parents=True, exist_ok=True)
        path = args.out / "plots" / "angle_sweep.csv"
        grav.write_angle_sweep(rows, path)
        render_plot(path, path.name, ("theta_deg", "D"), [(th, d) for th, _, d in rows])
    return EXIT_OK


def cmd_plan(args) -> int:
    s = _require(args)
    if s.kind != "constellation-plan":
        raise ConfigError(f"plan needs a constellation-plan scenario, got '{s.kind}'", key="kind")
    report = run_scenario(s)
    print(summary_text(report), end="")
    if args.out is not None:
        emit_report(report, args.out)
    return _verdict_code(report)


def cmd_keys(args) -> int:
    if args.out is None:
        raise ConfigError("keys needs --out pointing at a report or key store directory", key="out")
    directory = args.out / "keys" if (args.out / "keys").is_dir() else args.out
    store = KeyStore(directory)
    if args.consume is not None:
        print(store.consume(args.consume).hex())
        return EXIT_OK
    print(f"{'key_id':48s} {'bytes':>8s}  consumed  owners")
    for key_id in store.ids():
        km = store.get(key_id)
        print(f"{key_id:48s} {len(km):8d}  {'yes' if km.consumed else 'no':8s}  {'/'.join(km.owners)}")
    print(f"available: {store.available()} bytes")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "budget": cmd_budget,
    "bell": cmd_bell,
    "gravity": cmd_gravity,
    "plan": cmd_plan,
    "keys": cmd_keys,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SkylinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
