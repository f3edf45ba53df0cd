"""
Scenario configuration: flat `key = value` text with `[section]` headers.

parse_config keeps the line of every key so validation errors can point
at it; serialize_config renders parsed sections back to text.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Union

from .domain import Domain, make_domain
from .errors import ConfigError
from .foliations import FoliationFamily, make_family
from .functions import SmoothFunction, make_source
from .speed import SpeedField, make_speed

logger = logging.getLogger(__name__)

# section -> key -> value type
SCHEMA: dict[str, dict[str, str]] = {
    "domain": {
        "kind": "str",
        "params": "list",
        "gamma_arc": "list",
        "gamma_halfspace": "float",
        "tau_const": "float",
        "tau_table": "list",
    },
    "speed": {"kind": "str", "params": "list"},
    "truth": {"kind": "str", "params": "list"},
    "source": {"kind": "str", "params": "list"},
    "grid": {"n": "int", "half_width_auto": "bool", "half_width": "float"},
    "time": {"T": "float", "cfl": "float"},
    "foliation": {
        "kind": "str",
        "params": "list",
        "s_min": "float",
        "s_max": "float",
        "s_steps": "int",
        "observation": "str",
    },
    "inversion": {"iters": "int", "outer_iters": "int", "floor": "float", "support_radius": "float"},
    "probe": {"ensemble": "int", "band_limits": "list", "seed": "int"},
    "output": {"dir": "str"},
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass(frozen=True)
class Entry:
    value: Any
    line: int


Sections = dict[str, dict[str, Entry]]


def _number(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got '{text}'", line) from None


def _convert(kind: str, text: str, line: int) -> Any:
    if kind == "str":
        if not text:
            raise ConfigError("empty value", line)
        return text
    if kind == "float":
        return _number(text, line)
    if kind == "int":
        value = _number(text, line)
        if not float(value).is_integer():
            raise ConfigError(f"expected an integer, got '{text}'", line)
        return int(value)
    if kind == "bool":
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"expected true or false, got '{text}'", line)
    # list
    if not text.strip():
        return ()
    return tuple(_number(part.strip(), line) for part in text.split(","))


def parse_config(text: str) -> Sections:
    """
    Parse configuration text into sections of typed entries.

    Comments start with '#' or ';'. Every key must belong to a known section.

    Raises:
        ConfigError: With the offending line number
    """
    sections: Sections = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header '{line}'", lineno)
            current = line[1:-1].strip().lower()
            if current not in SCHEMA:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", lineno)
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[current]:
            raise ConfigError(f"unknown key '{key}' in [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key '{key}' in [{current}]", lineno)
        sections[current][key] = Entry(_convert(SCHEMA[current][key], value, lineno), lineno)
    return sections


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(sections: Sections) -> str:
    """Render parsed sections back to configuration text."""
    blocks = []
    for section, entries in sections.items():
        lines = [f"[{section}]"]
        for key, entry in entries.items():
            value = entry.value if isinstance(entry, Entry) else entry
            lines.append(f"{key} = {_render(value)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def plain(sections: Sections) -> dict[str, dict[str, Any]]:
    """Sections with line numbers dropped."""
    return {s: {k: e.value for k, e in entries.items()} for s, entries in sections.items()}


# section, key -> ScenarioConfig field
_FIELD_MAP = {
    ("domain", "kind"): "domain_kind",
    ("domain", "params"): "domain_params",
    ("domain", "gamma_arc"): "gamma_arc",
    ("domain", "gamma_halfspace"): "gamma_halfspace",
    ("domain", "tau_const"): "tau_const",
    ("domain", "tau_table"): "tau_table",
    ("speed", "kind"): "speed_kind",
    ("speed", "params"): "speed_params",
    ("truth", "kind"): "truth_kind",
    ("truth", "params"): "truth_params",
    ("source", "kind"): "source_kind",
    ("source", "params"): "source_params",
    ("grid", "n"): "n",
    ("grid", "half_width_auto"): "half_width_auto",
    ("grid", "half_width"): "half_width",
    ("time", "T"): "T",
    ("time", "cfl"): "cfl",
    ("foliation", "kind"): "foliation_kind",
    ("foliation", "params"): "foliation_params",
    ("foliation", "s_min"): "s_min",
    ("foliation", "s_max"): "s_max",
    ("foliation", "s_steps"): "s_steps",
    ("foliation", "observation"): "observation",
    ("inversion", "iters"): "iters",
    ("inversion", "outer_iters"): "outer_iters",
    ("inversion", "floor"): "floor",
    ("inversion", "support_radius"): "support_radius",
    ("probe", "ensemble"): "ensemble",
    ("probe", "band_limits"): "band_limits",
    ("probe", "seed"): "seed",
    ("output", "dir"): "out_dir",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Validated scenario with defaults for every key.

    Builders turn the flat values into lab objects.
    """

    name: str = "custom"
    domain_kind: str = "disk"
    domain_params: tuple = (1.0,)
    gamma_arc: Optional[tuple] = None
    gamma_halfspace: Optional[float] = None
    tau_const: float = math.inf
    tau_table: Optional[tuple] = None
    speed_kind: str = "constant"
    speed_params: tuple = (1.0,)
    truth_kind: Optional[str] = None
    truth_params: tuple = ()
    source_kind: str = "bump"
    source_params: tuple = (0.0, 0.0, 0.5, 1.0)
    n: int = 256
    half_width_auto: bool = True
    half_width: Optional[float] = None
    T: float = 4.0
    cfl: float = 0.5
    foliation_kind: str = "spheres"
    foliation_params: tuple = (-1.5, 0.0)
    s_min: float = 0.5
    s_max: float = 2.5
    s_steps: int = 21
    observation: str = "ambient"
    iters: int = 15
    outer_iters: int = 5
    floor: float = 0.2
    support_radius: float = 0.6
    ensemble: int = 50
    band_limits: tuple = (4.0, 16.0)
    seed: int = 0
    out_dir: str = "out"

    @classmethod
    def from_sections(cls, sections: Sections, name: str = "custom") -> "ScenarioConfig":
        """
        Build and validate a config from parsed sections.

        Raises:
            ConfigError: Naming the line of the first inconsistent key
        """
        values, lines = {"name": name}, {}
        for section, entries in sections.items():
            for key, entry in entries.items():
                attr = _FIELD_MAP[(section, key)]
                values[attr] = entry.value
                lines[attr] = entry.line
        cfg = cls(**values)
        cfg.validate(lines)
        return cfg

    @classmethod
    def from_text(cls, text: str, name: str = "custom") -> "ScenarioConfig":
        return cls.from_sections(parse_config(text), name)

    def validate(self, lines: Optional[dict] = None) -> None:
        lines = lines or {}

        def fail(attr, message):
            raise ConfigError(message, lines.get(attr))

        if self.T < 0:
            fail("T", f"T must be non-negative, got {self.T}")
        if not 0 < self.cfl <= 0.5:
            fail("cfl", f"cfl must be in (0, 0.5], got {self.cfl}")
        if self.n < 16:
            fail("n", f"grid needs at least 16 cells, got {self.n}")
        if not self.half_width_auto and self.half_width is None:
            fail("half_width_auto", "half_width_auto = false needs [grid] half_width")
        if self.observation.lower() not in ("ambient", "leaf"):
            fail("observation", f"observation must be 'ambient' or 'leaf', got '{self.observation}'")
        if self.s_steps < 2:
            fail("s_steps", f"s_steps must be at least 2, got {self.s_steps}")
        if self.gamma_arc is not None and len(self.gamma_arc) != 2:
            fail("gamma_arc", f"gamma_arc needs two angles, got {len(self.gamma_arc)}")
        for attr, build in [
            ("domain_kind", self.domain),
            ("speed_kind", self.speed),
            ("source_kind", self.source),
            ("truth_kind", self.truth),
            ("foliation_kind", self.family),
        ]:
            try:
                build()
            except (ValueError, IndexError) as exc:
                fail(attr, str(exc))

    # -- builders -----------------------------------------------------------

    def domain(self) -> Domain:
        return make_domain(
            self.domain_kind,
            list(self.domain_params),
            gamma_arc=tuple(self.gamma_arc) if self.gamma_arc else None,
            gamma_halfspace=self.gamma_halfspace,
            tau_const=self.tau_const if self.tau_table is None else math.inf,
            tau_table=tuple(self.tau_table) if self.tau_table else None,
        )

    def speed(self) -> SpeedField:
        return make_speed(self.speed_kind, list(self.speed_params))

    def truth(self) -> Optional[SpeedField]:
        if self.truth_kind is None:
            return None
        return make_speed(self.truth_kind, list(self.truth_params))

    def source(self) -> SmoothFunction:
        return make_source(self.source_kind, list(self.source_params))

    def family(self) -> FoliationFamily:
        return make_family(
            self.foliation_kind, list(self.foliation_params), self.s_min, self.s_max,
            self.s_steps, self.domain(),
        )

    def grid(self, T: Optional[float] = None, c_field: Optional[SpeedField] = None):
        from .wave import Grid

        T = self.T if T is None else T
        c_field = c_field or self.speed()
        half_width = None if self.half_width_auto else self.half_width
        return Grid.for_problem(self.domain(), T, self.n, self.cfl, c_field, half_width)

    def with_resolution(self, n: int) -> "ScenarioConfig":
        """Same scenario at n cells; the grid keeps cfl fixed so dt rescales with h."""
        return self.with_overrides(n=int(n))

    def with_overrides(self, **changes) -> "ScenarioConfig":
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    def to_sections(self) -> Sections:
        """Sections holding every non-default value, with line numbers zeroed."""
        defaults = ScenarioConfig()
        sections: Sections = {}
        for (section, key), attr in _FIELD_MAP.items():
            value = getattr(self, attr)
            if value is None or value == getattr(defaults, attr):
                continue
            sections.setdefault(section, {})[key] = Entry(value, 0)
        return sections

    def to_text(self) -> str:
        return serialize_config(self.to_sections())


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """
    Read and validate a configuration file.

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: On parse or validation errors
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    logger.debug("loading config %s", path)
    return ScenarioConfig.from_text(path.read_text(encoding="utf-8"), name=path.stem)

