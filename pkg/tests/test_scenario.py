from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from skylink.errors import ConfigError, ParseError, UnitError, ValidationError
from skylink.scenario import PRESET_NAMES, dump_scenario, load_preset, parse_text

MINIMAL = """
[mission]
name = t
kind = downlink-qkd

[orbit]
altitude = 500 km

[station.s1]
latitude = 40 deg
"""


def test_minimal_scenario():
    s = parse_text(MINIMAL)
    assert s.orbit.altitude == 500.0
    assert s.stations[0].name == "s1"


def test_unit_conversion():
    s = parse_text(MINIMAL.replace("500 km", "500000 m"))
    assert s.orbit.altitude == pytest.approx(500.0)


def test_missing_unit_reports_line_and_key():
    with pytest.raises(UnitError) as info:
        parse_text(MINIMAL.replace("500 km", "500"))
    assert info.value.line == 7 and info.value.key == "altitude"
    assert "missing unit" in str(info.value)


def test_wrong_unit_rejected():
    with pytest.raises(UnitError):
        parse_text(MINIMAL.replace("500 km", "500 deg"))


def test_unknown_key_suggests_nearest():
    with pytest.raises(ValidationError) as info:
        parse_text(MINIMAL.replace("altitude", "altitdue"))
    assert "did you mean 'altitude'" in str(info.value)


def test_unknown_section_and_kind():
    with pytest.raises(ValidationError, match="did you mean 'orbit'"):
        parse_text(MINIMAL.replace("[orbit]", "[orbt]"))
    with pytest.raises(ValidationError, match="downlink-qkd"):
        parse_text(MINIMAL.replace("kind = downlink-qkd", "kind = downlink-qdk"))


def test_structural_errors():
    with pytest.raises(ParseError):
        parse_text(MINIMAL + "garbage line\n")
    with pytest.raises(ParseError):
        parse_text(MINIMAL + "[orbit]\n")
    with pytest.raises(ParseError):
        parse_text("altitude = 5 km\n")


def test_station_count_validated():
    with pytest.raises(ValidationError, match="needs 2"):
        parse_text(MINIMAL.replace("downlink-qkd", "two-downlink-entanglement"))


def test_config_errors_share_base_class():
    assert issubclass(UnitError, ConfigError) and issubclass(ValidationError, ConfigError)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_round_trip(name):
    s = load_preset(name)
    assert parse_text(dump_scenario(s)) == s


def test_unknown_preset_suggests():
    with pytest.raises(ValidationError, match="did you mean 'tiangong2'"):
        load_preset("tiangong")


@given(
    st.floats(200.0, 2000.0),
    st.floats(-80.0, 80.0),
    st.integers(1, 500),
    st.integers(0, 2**31 - 1),
)
def test_dump_parse_round_trip(alt, lat, passes, seed):
    base = parse_text(MINIMAL)
    text = dump_scenario(base).replace("altitude = 500.0 km", f"altitude = {alt!r} km")
    text = text.replace("latitude = 40.0 deg", f"latitude = {lat!r} deg")
    s = parse_text(text.replace("passes = 1\n", f"passes = {passes}\n")).with_seed(seed)
    assert parse_text(dump_scenario(s)) == s
    assert s.orbit.altitude == alt
