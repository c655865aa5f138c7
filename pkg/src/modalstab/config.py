"""Experiment configuration read from INI files.

Sections mirror the package modules::

    [spectral]   plant = scalar | coupled, physical parameters
    [modal]      actuation and sensing, number of modes for tables
    [design]     state and observer targets
    [dimfind]    slow-order range and sweep tolerances
    [sim]        simulation horizon, step and initial data
    [assumptions] slow order and mode range for the checks

Every key is typed and validated on load; unknown sections or keys raise
:class:`~modalstab.errors.ConfigError` naming the offending key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .spectral import Boundary, CoupledPlant, InDomain, ScalarPlant

PRESETS = ("scalar-boundary", "scalar-indomain-1", "scalar-indomain-2", "scalar-indomain-3", "coupled")


def _float(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {text!r}")
    return v


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _floats(key, text):
    parts = [p for p in text.replace(",", " ").split()]
    return tuple(_float(key, p) for p in parts)


def _bool(key, text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def parse_range(key, text) -> tuple[int, int]:
    """``"A..B"`` (inclusive) or a single integer."""
    t = text.strip()
    if ".." in t:
        a, _, b = t.partition("..")
        lo, hi = _int(key, a.strip()), _int(key, b.strip())
    else:
        lo = hi = _int(key, t)
    if lo > hi:
        raise ConfigError(key, f"empty range {text!r}")
    return lo, hi


def _choice(*options):
    def parse(key, text):
        t = text.strip().lower()
        if t not in options:
            raise ConfigError(key, f"expected one of {', '.join(options)}, got {text!r}")
        return t

    return parse


def _optional_float(key, text):
    return None if text.strip().lower() in ("", "auto") else _float(key, text)


def _str(key, text):
    return text.strip()


SCHEMA = {
    "spectral": {
        "plant": (_choice("scalar", "coupled"), "scalar"),
        "r": (_float, "15"),
        "alpha": (_float, "10"),
        "r12": (_float, "5"),
        "r21": (_float, "10"),
        "d": (_floats, "1, 2"),
    },
    "modal": {
        "control": (_choice("boundary", "indomain"), "boundary"),
        "zeta": (_floats, "0.5"),
        "eps": (_floats, "0.05"),
        "xi": (_floats, "0.25"),
        "sign": (_choice("derived", "paper"), "derived"),
        "modes": (_int, "10"),
    },
    "design": {
        "kappa": (_floats, "-10, -11"),
        "nu": (_floats, "-15, -16"),
    },
    "dimfind": {
        "n": (parse_range, "3..8"),
        "m_max": (_int, "200"),
        "window": (_int, "20"),
        "tol": (_float, "1e-4"),
        "margin": (_float, "1e-3"),
        "dense": (_bool, "false"),
    },
    "sim": {
        "n": (_int, "5"),
        "modes": (_int, "0"),
        "t_end": (_float, "2"),
        "dt": (_float, "1e-4"),
        "record_every": (_int, "1"),
        "initial": (_str, "constant 1"),
        "observer": (_choice("rest", "exact"), "rest"),
        "seed": (_int, "0"),
    },
    "assumptions": {
        "n": (_int, "5"),
        "k_max": (_int, "1000"),
        "alpha": (_optional_float, "auto"),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters, one attribute per section."""

    spectral: dict
    modal: dict
    design: dict
    dimfind: dict
    sim: dict
    assumptions: dict
    name: str = ""

    def plant(self):
        s, m = self.spectral, self.modal
        if s["plant"] == "scalar":
            xi = _single("modal.xi", m["xi"])
            if m["control"] == "boundary":
                control = Boundary()
            else:
                control = InDomain(_single("modal.zeta", m["zeta"]), _single("modal.eps", m["eps"]))
            return ScalarPlant(s["r"], control, xi)
        zeta, eps, xi = (_pair("modal." + k, m[k]) for k in ("zeta", "eps", "xi"))
        return CoupledPlant(
            s["alpha"],
            s["r12"],
            s["r21"],
            d=s["d"],
            actuators=(InDomain(zeta[0], eps[0]), InDomain(zeta[1], eps[1])),
            sensors=xi,
        )

    @property
    def m_max(self) -> int:
        return self.dimfind["m_max"]

    @property
    def sim_modes(self) -> int:
        return self.sim["modes"] or 2 * self.m_max

    def with_overrides(self, **changes) -> "ExperimentConfig":
        """Copy with ``section__key=value`` replacements (already typed)."""
        sections = {name: dict(getattr(self, name)) for name in SCHEMA}
        for dotted, value in changes.items():
            sec, _, key = dotted.partition("__")
            if sec not in SCHEMA or key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
            sections[sec][key] = value
        cfg = ExperimentConfig(name=self.name, **sections)
        _validate(cfg)
        return cfg


def _single(key, values):
    if len(values) != 1:
        raise ConfigError(key, f"scalar plant expects one value, got {len(values)}")
    return values[0]


def _pair(key, values):
    if len(values) != 2:
        raise ConfigError(key, f"coupled plant expects two values, got {len(values)}")
    return tuple(values)


def _validate(cfg: ExperimentConfig):
    m = cfg.modal
    for key in ("xi", "zeta"):
        for v in m[key]:
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"modal.{key}", f"location {v} outside [0, 1]")
    for zeta, eps in zip(m["zeta"], m["eps"]):
        if eps <= 0:
            raise ConfigError("modal.eps", "pulse half-width must be positive")
        if m["control"] == "indomain" or cfg.spectral["plant"] == "coupled":
            if zeta - eps < 0 or zeta + eps > 1:
                raise ConfigError("modal.eps", f"pulse [{zeta - eps}, {zeta + eps}] leaves [0, 1]")
    if m["modes"] < 0:
        raise ConfigError("modal.modes", "must be non-negative")
    d = cfg.design
    if len(d["kappa"]) != len(d["nu"]):
        raise ConfigError("design.nu", "needs as many targets as design.kappa")
    if len(set(d["kappa"])) != len(d["kappa"]) or len(set(d["nu"])) != len(d["nu"]):
        raise ConfigError("design.kappa", "targets must be distinct")
    j = len(d["kappa"])
    f = cfg.dimfind
    if f["n"][0] < max(j, 1):
        raise ConfigError("dimfind.n", f"slow order must be at least {max(j, 1)}")
    if f["m_max"] <= f["n"][1]:
        raise ConfigError("dimfind.m_max", "must exceed the largest slow order")
    if f["window"] < 1:
        raise ConfigError("dimfind.window", "must be positive")
    if f["tol"] <= 0 or f["margin"] < 0:
        raise ConfigError("dimfind.tol", "tolerances must be positive")
    s = cfg.sim
    if s["n"] < max(j, 1):
        raise ConfigError("sim.n", f"slow order must be at least {max(j, 1)}")
    if s["modes"] and s["modes"] <= s["n"]:
        raise ConfigError("sim.modes", "must exceed sim.n")
    if s["t_end"] < 0:
        raise ConfigError("sim.t_end", "must be non-negative")
    if s["dt"] <= 0:
        raise ConfigError("sim.dt", "must be positive")
    if s["record_every"] < 1:
        raise ConfigError("sim.record_every", "must be positive")
    parse_initial(s["initial"])
    a = cfg.assumptions
    if a["n"] < 0:
        raise ConfigError("assumptions.n", "must be non-negative")
    if a["k_max"] <= a["n"] + 1:
        raise ConfigError("assumptions.k_max", "mode range is empty")
    if a["alpha"] is not None and a["alpha"] <= 1:
        raise ConfigError("assumptions.alpha", "decay exponent must exceed 1")
    cfg.plant()


def parse_initial(text: str) -> tuple[str, float | int]:
    """``"constant V"`` (uniform profile), ``"mode K"`` (single mode) or
    ``"random S"`` (coordinates ``S * N(0, 1) / k`` drawn from ``sim.seed``)."""
    parts = text.split()
    if len(parts) != 2 or parts[0] not in ("constant", "mode", "random"):
        raise ConfigError("sim.initial", f"expected 'constant V', 'mode K' or 'random S', got {text!r}")
    if parts[0] == "mode":
        k = _int("sim.initial", parts[1])
        if k < 1:
            raise ConfigError("sim.initial", "mode index starts at 1")
        return "mode", k
    return parts[0], _float("sim.initial", parts[1])


def from_parser(parser: configparser.ConfigParser, name: str = "") -> ExperimentConfig:
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
    sections = {}
    for sec, keys in SCHEMA.items():
        values = {}
        for key, (parse, default) in keys.items():
            text = parser.get(sec, key, fallback=default) if parser.has_section(sec) else default
            values[key] = parse(f"{sec}.{key}", text)
        sections[sec] = values
    cfg = ExperimentConfig(name=name, **sections)
    _validate(cfg)
    return cfg


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(interpolation=None, default_section="\x00none")


def loads(text: str, name: str = "") -> ExperimentConfig:
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{exc.section}.{exc.option}", "given twice") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(exc.section, "section given twice") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}", "key outside any section") from None
    except configparser.Error as exc:
        raise ConfigError("syntax", str(exc).splitlines()[0]) from None
    return from_parser(parser, name)


def load(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(str(p), exc.strerror or "cannot read file") from None
    except UnicodeDecodeError:
        raise ConfigError(str(p), "not a text file") from None
    return loads(text, p.stem)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("modalstab").joinpath("presets", f"{name}.ini").read_text()


def load_preset(name: str) -> ExperimentConfig:
    return loads(preset_text(name), name)
