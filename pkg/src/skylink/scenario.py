"""Scenario model and the sectioned key-value scenario file format.

A scenario file looks like::

    [mission]
    name = example
    kind = downlink-qkd

    [orbit]
    altitude = 500 km

    [station.xinglong]
    latitude = 40.4 deg
    aperture = 1 m

Every dimensional value carries an explicit unit suffix.  Values are stored
in each field's canonical unit (given in the field metadata) and written
back in that unit.
"""

from __future__ import annotations

import dataclasses
import difflib
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UnitError, ValidationError

MISSION_KINDS = (
    "downlink-qkd",
    "two-downlink-entanglement",
    "uplink-teleportation",
    "relay-exchange",
    "gravity-test",
    "constellation-plan",
)

# canonical unit -> accepted suffixes with their factor to the canonical unit
UNITS: dict[str, dict[str, float]] = {
    "km": {"km": 1.0, "m": 1e-3},
    "m": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "km": 1e3},
    "deg": {"deg": 1.0, "rad": 180.0 / math.pi},
    "urad": {"urad": 1.0, "mrad": 1e3, "nrad": 1e-3, "rad": 1e6},
    "nm": {"nm": 1.0, "um": 1e3},
    "dB": {"dB": 1.0},
    "Hz": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "s": {"s": 1.0, "ms": 1e-3, "min": 60.0, "h": 3600.0},
    "ns": {"ns": 1.0, "ps": 1e-3, "us": 1e3},
    "B": {"B": 1.0, "kB": 1e3},
    "bps": {"bps": 1.0, "kbps": 1e3, "Mbps": 1e6},
}


def _f(unit: str | None = None, default=0.0):
    return field(default=default, metadata={"unit": unit})


@dataclass(frozen=True)
class MissionBlock:
    name: str = "scenario"
    kind: str = "downlink-qkd"
    passes: int = 1
    sample_step: float = _f("s", 10.0)
    geometry: str = "pass"
    static_loss: float = _f("dB", 0.0)
    static_duration: float = _f("s", 0.0)
    key_budget: float = _f("B", 0.0)
    payload_forward: float = _f("B", 0.0)
    payload_reverse: float = _f("B", 0.0)
    stations_served: int = 0
    passes_per_station_year: float = _f(None, 0.0)
    key_per_pass: float = _f(None, 0.0)
    plan_days: int = 365
    key_rate_min: float = _f("bps", 0.0)
    key_rate_max: float = _f("bps", 0.0)


@dataclass(frozen=True)
class OrbitBlock:
    altitude: float = _f("km", 500.0)
    inclination: float = _f("deg", 97.4)
    satellites: int = 1
    satellite_aperture: float = _f("m", 0.3)


@dataclass(frozen=True)
class StationBlock:
    name: str = "station"
    latitude: float = _f("deg", 0.0)
    min_elevation: float = _f("deg", 10.0)
    peak_elevation: float = _f("deg", 90.0)
    time_offset: float = _f("s", 0.0)
    aperture: float = _f("m", 1.0)
    receive_efficiency: float = _f(None, 1.0)
    background: float = _f("Hz", 0.0)


@dataclass(frozen=True)
class SourceBlock:
    kind: str = "wcp"
    wavelength: float = _f("nm", 850.0)
    divergence: float = _f("urad", 10.0)
    tx_aperture: float = _f("m", 0.0)
    tx_efficiency: float = _f(None, 1.0)
    rep_rate: float = _f("Hz", 100e6)
    mu_signal: float = _f(None, 0.8)
    mu_decoy: float = _f(None, 0.1)
    p_signal: float = _f(None, 0.5)
    p_decoy: float = _f(None, 0.25)
    p_vacuum: float = _f(None, 0.25)
    basis_bias: float = _f(None, 0.5)
    pair_rate: float = _f("Hz", 5.9e6)
    fidelity: float = _f(None, 0.907)
    event_rate: float = _f("Hz", 0.0)


@dataclass(frozen=True)
class DetectorBlock:
    efficiency: float = _f(None, 0.5)
    dark_rate: float = _f("Hz", 100.0)
    jitter: float = _f("ns", 0.529)
    window: float = _f("ns", 2.0)
    dead_time: float = _f("ns", 50.0)


@dataclass(frozen=True)
class AtmosphereBlock:
    zenith_transmittance: float = _f(None, 0.5)
    rytov_variance: float = _f(None, 0.0)
    fresnel_ratio: float = _f(None, 0.0)
    pointing_jitter: float = _f("urad", 1.2)
    background_multiplier: float = _f(None, 1.0)


@dataclass(frozen=True)
class ProtocolBlock:
    misalignment: float = _f(None, 0.01)
    f_ec: float = _f(None, 1.16)
    epsilon: float = _f(None, 1e-9)
    transcript_pulses: int = 2_000_000
    coherence_target: float = _f(None, 0.97)
    coherence_angle: float = _f("deg", 50.0)
    formulation: str = "local_clock"
    angle_min: float = _f("deg", 40.0)
    angle_max: float = _f("deg", 60.0)
    angle_step: float = _f("deg", 2.0)
    injected_d: float = _f(None, 1.0)
    counts_per_bin: float = _f(None, 20000.0)


@dataclass(frozen=True)
class SeedsBlock:
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class Scenario:
    mission: MissionBlock = MissionBlock()
    orbit: OrbitBlock = OrbitBlock()
    stations: tuple[StationBlock, ...] = ()
    source: SourceBlock = SourceBlock()
    detectors: DetectorBlock = DetectorBlock()
    atmosphere: AtmosphereBlock = AtmosphereBlock()
    protocol: ProtocolBlock = ProtocolBlock()
    seeds: SeedsBlock = SeedsBlock()

    @property
    def kind(self) -> str:
        return self.mission.kind

    @property
    def name(self) -> str:
        return self.mission.name

    def with_seed(self, seed: int) -> "Scenario":
        return dataclasses.replace(self, seeds=dataclasses.replace(self.seeds, seed=int(seed)))

    def with_workers(self, workers: int) -> "Scenario":
        return dataclasses.replace(self, seeds=dataclasses.replace(self.seeds, workers=int(workers)))


SECTIONS: dict[str, type] = {
    "mission": MissionBlock,
    "orbit": OrbitBlock,
    "station": StationBlock,
    "source": SourceBlock,
    "detectors": DetectorBlock,
    "atmosphere": AtmosphereBlock,
    "protocol": ProtocolBlock,
    "seeds": SeedsBlock,
}

# stations required per mission kind
REQUIRED_STATIONS = {
    "downlink-qkd": 1,
    "two-downlink-entanglement": 2,
    "uplink-teleportation": 1,
    "relay-exchange": 2,
    "gravity-test": 1,
    "constellation-plan": 1,
}

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)(?:\.([A-Za-z0-9_\-]+))?\s*\]$")
_VALUE_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)$")


def _fields(cls) -> dict[str, dataclasses.Field]:
    return {f.name: f for f in dataclasses.fields(cls)}


def _suggest(word: str, options) -> str:
    near = difflib.get_close_matches(word, list(options), n=1, cutoff=0.0)
    return f"; did you mean '{near[0]}'?" if near else ""


def _convert(raw: str, fld: dataclasses.Field, line: int, key: str):
    unit = fld.metadata.get("unit")
    typ = fld.type if isinstance(fld.type, str) else fld.type.__name__
    if typ == "str":
        return raw
    m = _VALUE_RE.match(raw)
    if not m:
        raise ParseError(f"cannot read number from {raw!r}", line=line, key=key)
    number, suffix = m.group(1), m.group(2)
    if typ == "int":
        if suffix:
            raise UnitError(f"count takes no unit, got '{suffix}'", line=line, key=key)
        try:
            return int(number)
        except ValueError:
            raise ParseError(f"expected an integer, got {number!r}", line=line, key=key) from None
    value = float(number)
    if unit is None:
        if suffix:
            raise UnitError(f"dimensionless value takes no unit, got '{suffix}'", line=line, key=key)
        return value
    if not suffix:
        raise UnitError(f"missing unit; expected {unit} (accepted: {', '.join(UNITS[unit])})", line=line, key=key)
    table = UNITS[unit]
    if suffix not in table:
        raise UnitError(
            f"unit '{suffix}' not accepted; expected {unit} (accepted: {', '.join(table)})", line=line, key=key
        )
    return value * table[suffix]


def parse_text(text: str) -> Scenario:
    """Parse scenario text; raises ConfigError subclasses with line and key."""
    blocks: dict[str, dict] = {}
    stations: list[dict] = []
    current: dict | None = None
    current_cls = None
    seen_sections: set[str] = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = _SECTION_RE.match(line)
            if not m:
                raise ParseError(f"malformed section header {line!r}", line=lineno)
            sec, sub = m.group(1), m.group(2)
            if sec not in SECTIONS:
                raise ValidationError(f"unknown section '{sec}'" + _suggest(sec, SECTIONS), line=lineno)
            current_cls = SECTIONS[sec]
            if sec == "station":
                if sub is None:
                    raise ParseError("station sections need a name: [station.NAME]", line=lineno)
                current = {"name": sub, "__line__": lineno}
                stations.append(current)
            else:
                if sub is not None:
                    raise ParseError(f"section '{sec}' takes no sub-name", line=lineno)
                if sec in seen_sections:
                    raise ParseError(f"duplicate section '{sec}'", line=lineno)
                seen_sections.add(sec)
                current = blocks.setdefault(sec, {})
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
        if current is None:
            raise ParseError("key outside any section", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        fields = _fields(current_cls)
        if key not in fields or (current_cls is StationBlock and key == "name"):
            known = [k for k in fields if not (current_cls is StationBlock and k == "name")]
            raise ValidationError(f"unknown key '{key}'" + _suggest(key, known), line=lineno, key=key)
        if key in current:
            raise ParseError(f"duplicate key '{key}'", line=lineno, key=key)
        current[key] = _convert(value, fields[key], lineno, key)
    built = {sec: SECTIONS[sec](**vals) for sec, vals in blocks.items()}
    station_blocks = tuple(StationBlock(**{k: v for k, v in st.items() if k != "__line__"}) for st in stations)
    scenario = Scenario(stations=station_blocks, **built)
    validate(scenario)
    return scenario


def validate(s: Scenario) -> None:
    m = s.mission
    if m.kind not in MISSION_KINDS:
        raise ValidationError(f"unknown mission kind '{m.kind}'" + _suggest(m.kind, MISSION_KINDS), key="kind")
    need = REQUIRED_STATIONS[m.kind]
    if len(s.stations) < need:
        raise ValidationError(f"mission kind '{m.kind}' needs {need} station section(s), found {len(s.stations)}")
    if m.geometry not in ("pass", "static"):
        raise ValidationError("geometry must be 'pass' or 'static'", key="geometry")
    if m.geometry == "static" and (m.static_loss <= 0 or m.static_duration <= 0):
        raise ValidationError("static geometry needs static_loss and static_duration", key="static_loss")
    if m.passes < 1:
        raise ValidationError("passes must be >= 1", key="passes")
    if m.sample_step <= 0:
        raise ValidationError("sample_step must be positive", key="sample_step")
    if s.orbit.altitude <= 0:
        raise ValidationError("altitude must be positive", key="altitude")
    for st in s.stations:
        if not 0 < st.receive_efficiency <= 1:
            raise ValidationError(f"station {st.name}: receive_efficiency outside (0, 1]", key="receive_efficiency")
        if st.peak_elevation < st.min_elevation:
            raise ValidationError(f"station {st.name}: peak_elevation below min_elevation", key="peak_elevation")
    if not 0 < s.detectors.efficiency <= 1:
        raise ValidationError("detector efficiency outside (0, 1]", key="efficiency")
    if not 0 < s.atmosphere.zenith_transmittance <= 1:
        raise ValidationError("zenith_transmittance outside (0, 1]", key="zenith_transmittance")
    if s.seeds.workers < 1:
        raise ValidationError("workers must be >= 1", key="workers")


def parse_scenario(path: str | Path) -> Scenario:
    return parse_text(Path(path).read_text())


def _fmt(value, fld: dataclasses.Field) -> str:
    unit = fld.metadata.get("unit")
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool) and unit is None and fld.type in ("int", int):
        return str(value)
    text = repr(float(value))
    return f"{text} {unit}" if unit else text


def _dump_block(header: str, block, skip=()) -> list[str]:
    lines = [f"[{header}]"]
    for f in dataclasses.fields(block):
        if f.name in skip:
            continue
        lines.append(f"{f.name} = {_fmt(getattr(block, f.name), f)}")
    return lines


def dump_scenario(s: Scenario) -> str:
    """Canonical text form; ``parse_text(dump_scenario(s)) == s``."""
    out: list[str] = []
    out += _dump_block("mission", s.mission)
    out += [""] + _dump_block("orbit", s.orbit)
    for st in s.stations:
        out += [""] + _dump_block(f"station.{st.name}", st, skip=("name",))
    for sec in ("source", "detectors", "atmosphere", "protocol", "seeds"):
        out += [""] + _dump_block(sec, getattr(s, sec))
    return "\n".join(out) + "\n"


PRESET_NAMES = (
    "micius-qkd-xinglong",
    "micius-entanglement-dlh-ljg",
    "micius-teleport-ngari",
    "micius-relay-xinglong-graz",
    "micius-gravity-ngari",
    "tiangong2",
    "daylight-53km",
    "constellation-3leo",
)


def preset_dir() -> Path:
    env = os.environ.get("SKYLINK_PRESET_DIR")
    return Path(env) if env else Path(__file__).parent / "presets"


def preset_path(name: str) -> Path:
    p = preset_dir() / f"{name}.ini"
    if not p.exists():
        available = sorted(q.stem for q in preset_dir().glob("*.ini"))
        raise ValidationError(f"unknown preset '{name}'" + _suggest(name, available), key="preset")
    return p


def load_preset(name: str) -> Scenario:
    return parse_scenario(preset_path(name))
