"""
Tests for configuration parsing and the shipped scenarios.
"""

import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tat_lab.config import ScenarioConfig, load_config, parse_config, plain, serialize_config
from tat_lab.errors import ConfigError
from tat_lab.scenarios import get_scenario, list_scenarios


class TestParseConfig:
    """Tests for the key = value parser."""

    def test_typed_values(self):
        """Values are converted according to the schema."""
        text = """
        # comment
        [grid]
        n = 128        ; trailing comment
        half_width_auto = no

        [time]
        T = 1.5
        [probe]
        band_limits = 4, 8, 16
        """
        sections = parse_config(text)
        values = plain(sections)
        assert values["grid"] == {"n": 128, "half_width_auto": False}
        assert values["time"]["T"] == 1.5
        assert values["probe"]["band_limits"] == (4.0, 8.0, 16.0)
        assert sections["time"]["T"].line == 8

    def test_unknown_section(self):
        """Unknown sections name their line."""
        with pytest.raises(ConfigError, match=r"line 2: unknown section \[mesh\]"):
            parse_config("\n[mesh]\nn = 4\n")

    def test_unknown_key(self):
        """Unknown keys name their line."""
        with pytest.raises(ConfigError, match="line 3: unknown key 'dt'"):
            parse_config("[time]\nT = 1\ndt = 0.1\n")

    def test_duplicate_key(self):
        """A key may appear once per section."""
        with pytest.raises(ConfigError, match="line 3: duplicate key 'T'"):
            parse_config("[time]\nT = 1\nT = 2\n")

    def test_duplicate_section(self):
        """A section may appear once."""
        with pytest.raises(ConfigError, match="duplicate section"):
            parse_config("[time]\nT = 1\n[time]\ncfl = 0.4\n")

    def test_key_outside_section(self):
        """Keys need a section header first."""
        with pytest.raises(ConfigError, match="line 1: key outside"):
            parse_config("T = 1\n")

    def test_malformed_header(self):
        """Headers need a closing bracket."""
        with pytest.raises(ConfigError, match="malformed section header"):
            parse_config("[time\n")

    def test_missing_equals(self):
        """Lines must be key = value."""
        with pytest.raises(ConfigError, match="expected 'key = value'"):
            parse_config("[time]\nT 1\n")

    def test_bad_values(self):
        """Numbers, integers and booleans are checked."""
        with pytest.raises(ConfigError, match="expected a number"):
            parse_config("[time]\nT = long\n")
        with pytest.raises(ConfigError, match="expected an integer"):
            parse_config("[grid]\nn = 12.5\n")
        with pytest.raises(ConfigError, match="expected true or false"):
            parse_config("[grid]\nhalf_width_auto = maybe\n")

    def test_serialize_round_trip(self):
        """Serialized sections parse back to the same values."""
        text = "[speed]\nkind = bump\nparams = 0.2, 0.0, 0.0, 0.5\n\n[grid]\nn = 64\n"
        sections = parse_config(text)
        assert plain(parse_config(serialize_config(sections))) == plain(sections)


class TestScenarioConfig:
    """Tests for validated scenario configs."""

    def test_defaults(self):
        """An empty config uses the defaults."""
        cfg = ScenarioConfig.from_text("")
        assert cfg.domain_kind == "disk"
        assert cfg.T == 4.0
        assert math.isinf(cfg.tau_const)
        assert cfg.truth() is None

    def test_validation_names_line(self):
        """Inconsistent values report the line of their key."""
        with pytest.raises(ConfigError, match="line 3: T must be non-negative"):
            ScenarioConfig.from_text("[time]\ncfl = 0.4\nT = -1\n")
        with pytest.raises(ConfigError, match="line 2: cfl must be in"):
            ScenarioConfig.from_text("[time]\ncfl = 0.9\n")
        with pytest.raises(ConfigError, match="at least 16 cells"):
            ScenarioConfig.from_text("[grid]\nn = 8\n")

    def test_half_width_needed(self):
        """Disabling the automatic box requires a half width."""
        with pytest.raises(ConfigError, match="needs \\[grid\\] half_width"):
            ScenarioConfig.from_text("[grid]\nhalf_width_auto = false\n")

    def test_observation_mode(self):
        """Only ambient and leaf observation are known."""
        with pytest.raises(ConfigError, match="observation must be"):
            ScenarioConfig.from_text("[foliation]\nobservation = sideways\n")

    def test_unknown_speed_kind(self):
        """Builder errors surface as config errors on the kind line."""
        with pytest.raises(ConfigError, match="line 2"):
            ScenarioConfig.from_text("[speed]\nkind = wobbly\n")

    def test_text_round_trip(self):
        """to_text reproduces the scenario."""
        cfg = get_scenario("twin-speed")
        assert ScenarioConfig.from_text(cfg.to_text(), name=cfg.name) == cfg

    def test_with_resolution(self):
        """with_resolution only changes n."""
        cfg = get_scenario("disk-basic")
        finer = cfg.with_resolution(512)
        assert finer.n == 512
        assert finer.T == cfg.T
        assert finer.cfl == cfg.cfl

    def test_with_resolution_validates(self):
        """Resolutions below the grid minimum are configuration errors."""
        with pytest.raises(ConfigError, match="at least 16"):
            get_scenario("disk-basic").with_resolution(4)

    def test_with_overrides_validates(self):
        """Overrides are validated."""
        cfg = get_scenario("disk-basic")
        assert cfg.with_overrides(seed=3).seed == 3
        with pytest.raises(ConfigError, match="cfl"):
            cfg.with_overrides(cfl=0.9)

    def test_load_config(self, tmp_path):
        """Files load with their stem as name."""
        path = tmp_path / "short.cfg"
        path.write_text("[time]\nT = 0.75\n", encoding="utf-8")
        cfg = load_config(path)
        assert cfg.name == "short"
        assert cfg.T == 0.75

    def test_missing_file(self, tmp_path):
        """A missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="not found"):
            load_config(tmp_path / "none.cfg")


class TestScenarios:
    """Tests for the shipped scenarios."""

    def test_all_scenarios_load(self):
        """Every shipped scenario parses and validates."""
        names = list_scenarios()
        assert "disk-basic" in names
        assert names == sorted(names)
        for name in names:
            cfg = get_scenario(name)
            assert cfg.name == name
            assert cfg.T >= 0

    def test_lookup_case_insensitive(self):
        """Scenario names ignore case."""
        assert get_scenario("Disk-Basic").name == "disk-basic"

    def test_short_observation_time(self):
        """disk-short only shortens T."""
        assert get_scenario("disk-short").T == 0.5

    def test_speed_twin_has_truth(self):
        """Speed twins carry a true speed."""
        assert get_scenario("twin-speed").truth() is not None
        assert get_scenario("twin-harmonic").truth() is not None

    def test_unknown_scenario(self):
        """Unknown names list the shipped ones."""
        with pytest.raises(ConfigError, match="unknown scenario 'nowhere'"):
            get_scenario("nowhere")
