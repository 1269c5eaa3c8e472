"""INI run configuration with strict keys and nominal defaults.

Sections are ``[system]``, ``[drive]``, ``[sweep]``, ``[solver]`` and
``[output]``.  Rates are in GHz (rate / 2pi), wavelength in nm, lifetime in
ns.  Detunings accept ``ghz`` or ``pm`` units; powers accept ``w`` or
``n_cav`` (bare-cavity photon number on the upper doublet resonance).
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, ParameterError
from .model import GHZ, SystemParams, power_for_photon_number
from .spectra import TRUNCATION_GATE, pm_to_rad

DETUNING_UNITS = ("ghz", "pm")
POWER_UNITS = ("w", "n_cav")


@dataclass(frozen=True)
class SystemBlock:
    kappa_e: float = 0.171
    kappa_i: float = 0.91
    gamma_beta: float = 1.99
    xi: float = 0.25 * math.pi
    gamma_perp: float = 1.17
    gamma_par: float = 0.55
    lambda0: float = 1300.0
    n_refr: float = 3.4
    tau_sp: float = 1.0
    V_tw: float = 6.4
    eta: float = 0.21
    g_tw: float | None = None


@dataclass(frozen=True)
class DriveBlock:
    power: float = 0.03
    power_unit: str = "n_cav"
    delta_ca: float = 0.0
    delta_ca_unit: str = "ghz"


@dataclass(frozen=True)
class SweepBlock:
    laser_start: float = -8.0
    laser_stop: float = 8.0
    laser_points: int = 161
    laser_unit: str = "ghz"
    cavity_start: float = -120.0
    cavity_stop: float = 120.0
    cavity_points: int = 25
    cavity_unit: str = "pm"
    powers: tuple = (0.001, 0.01, 0.03, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0)
    power_unit: str = "n_cav"
    saturation_delta_ca: float | None = None
    prominence: float = 0.02


@dataclass(frozen=True)
class SolverBlock:
    n_fock: int = 6
    basis: str = "traveling"
    truncation_gate: float = TRUNCATION_GATE
    max_n_cav: float = 1.0
    allow_above_ceiling: bool = False


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    prefix: str = "wgm"
    float_format: str = ".10g"


SECTIONS = {
    "system": SystemBlock,
    "drive": DriveBlock,
    "sweep": SweepBlock,
    "solver": SolverBlock,
    "output": OutputBlock,
}


@dataclass(frozen=True)
class RunConfig:
    system: SystemBlock = field(default_factory=SystemBlock)
    drive: DriveBlock = field(default_factory=DriveBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def __post_init__(self):
        for unit, allowed in ((self.drive.delta_ca_unit, DETUNING_UNITS),
                              (self.sweep.laser_unit, DETUNING_UNITS),
                              (self.sweep.cavity_unit, DETUNING_UNITS),
                              (self.drive.power_unit, POWER_UNITS),
                              (self.sweep.power_unit, POWER_UNITS)):
            if unit not in allowed:
                raise ConfigError(f"unit {unit!r} not one of {allowed}")
        if self.solver.basis not in ("traveling", "standing"):
            raise ConfigError(f"unknown basis {self.solver.basis!r}")
        if self.solver.n_fock < 2:
            raise ConfigError("n_fock must be >= 2")
        try:
            format(1.0, self.output.float_format)
        except ValueError as exc:
            raise ConfigError(f"bad float_format: {exc}") from None
        try:
            self.params  # noqa: B018 - validate eagerly
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def params(self) -> SystemParams:
        return SystemParams.from_ghz(**asdict(self.system))

    def _detuning(self, values, unit):
        arr = np.asarray(values, dtype=float)
        return pm_to_rad(arr, self.params.lambda0) if unit == "pm" else arr * GHZ

    def _power(self, values, unit):
        arr = np.asarray(values, dtype=float)
        if unit == "w":
            return arr
        return np.array([power_for_photon_number(self.params, v) for v in np.atleast_1d(arr)]).reshape(arr.shape)

    def laser_grid(self) -> np.ndarray:
        s = self.sweep
        if s.laser_points < 1:
            return np.array([])
        return self._detuning(np.linspace(s.laser_start, s.laser_stop, s.laser_points), s.laser_unit)

    def cavity_grid(self) -> np.ndarray:
        s = self.sweep
        if s.cavity_points < 1:
            return np.array([])
        return self._detuning(np.linspace(s.cavity_start, s.cavity_stop, s.cavity_points), s.cavity_unit)

    def drive_power(self) -> float:
        return float(self._power(self.drive.power, self.drive.power_unit))

    def delta_ca(self) -> float:
        return float(self._detuning(self.drive.delta_ca, self.drive.delta_ca_unit))

    def saturation_delta_ca(self) -> float:
        """Cavity-exciton detuning of the power series; default puts the upper standing mode on the exciton."""
        if self.sweep.saturation_delta_ca is None:
            return self.params.gamma_beta
        return float(self._detuning(self.sweep.saturation_delta_ca, self.drive.delta_ca_unit))

    def power_list(self) -> np.ndarray:
        return self._power(self.sweep.powers, self.sweep.power_unit)

    def replace(self, section: str, **changes) -> "RunConfig":
        return replace(self, **{section: replace(getattr(self, section), **changes)})


def _convert(raw: str, ftype, name: str):
    text = raw.strip()
    t = str(ftype)
    if "None" in t and text.lower() in ("", "none", "auto"):
        return None
    if "tuple" in t:
        parts = [x for x in text.replace(",", " ").split() if x]
        return tuple(float(x) for x in parts)
    if "bool" in t:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if "int" in t and "float" not in t:
        return int(text)
    if "float" in t:
        return float(text)
    return text


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _line_numbers(text: str) -> dict:
    """``(section, key) -> line number`` for error reporting."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            out[(section, None)] = no
        elif section is not None:
            for sep in ("=", ":"):
                if sep in s:
                    out[(section, s.split(sep, 1)[0].strip().lower())] = no
                    break
    return out


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse INI text; unknown sections or keys raise :class:`ConfigError` with the line number."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line) from None
    lines = _line_numbers(text)
    values = {name: {} for name in SECTIONS}
    for section in cp.sections():
        key = section.lower()
        if key not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", lines.get((key, None)))
        known = {f.name.lower(): f for f in fields(SECTIONS[key])}
        for name, raw in cp.items(section):
            if name not in known:
                raise ConfigError(f"unknown key {name!r} in [{section}]", lines.get((key, name)))
            f = known[name]
            try:
                values[key][f.name] = _convert(raw, f.type, name)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {name}: {exc}", lines.get((key, name))) from None
    for dotted, raw in (overrides or {}).items():
        sec, _, name = dotted.partition(".")
        sec = sec.lower()
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section in override {dotted!r}")
        known = {f.name.lower(): f for f in fields(SECTIONS[sec])}
        f = known.get(name.lower())
        if f is None:
            raise ConfigError(f"unknown key in override {dotted!r}")
        try:
            values[sec][f.name] = _convert(str(raw), f.type, name)
        except ValueError as exc:
            raise ConfigError(f"override {dotted}: {exc}") from None
    try:
        blocks = {sec: cls(**values[sec]) for sec, cls in SECTIONS.items()}
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(**blocks)


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    if path is None:
        return parse_config("", overrides)
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def dump_config(cfg: RunConfig) -> str:
    """INI text that parses back to an identical :class:`RunConfig`."""
    buf = io.StringIO()
    for sec in SECTIONS:
        block = getattr(cfg, sec)
        buf.write(f"[{sec}]\n")
        for f in fields(block):
            buf.write(f"{f.name} = {_format(getattr(block, f.name))}\n")
        buf.write("\n")
    return buf.getvalue()
