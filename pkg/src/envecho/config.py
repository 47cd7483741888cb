"""Experiment configuration files.

A config is an INI-style key/value file: one key per line, an
``[experiment]`` section with run-level settings and one section named
after the experiment kind with model parameters.  Example::

    [experiment]
    kind = dephasing
    t_max = 5.0
    n_points = 50
    seed = 7
    output_path = dephasing.csv

    [dephasing]
    n_c = 2
    dim_env = 64
    coupling = gue

Lists are comma separated; complex numbers use Python syntax (``1+0.5j``).
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError

KINDS = ("dephasing", "dephasing-pipulse", "oscillator", "oscillator-markov", "shorttime")
MAX_JOINT_DIM = 4096


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    parse.__name__ = "choice"
    return parse


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _complex(text):
    return complex(text.replace(" ", ""))


def _int(text):
    return int(text)


_DEPHASING = {
    "n_c": (_int, 2),
    "dim_env": (_int, 64),
    "eps": (_floats, None),
    "env_variance": (float, 1.0),
    "coupling": (_choice("gue", "proportional", "none"), "gue"),
    "coupling_variance": (float, 0.01),
    "f": (_floats, None),
    "a": (_floats, None),
    "j": (_int, 0),
    "k": (_int, 1),
}

SCHEMA = {
    "experiment": {
        "kind": (_choice(*KINDS), None),
        "t_max": (float, None),
        "n_points": (_int, None),
        "seed": (_int, None),
        "output_path": (str, None),
        "ensemble_samples": (_int, 1),
        "residual_tolerance": (float, None),
        "fit_t_min": (float, None),
        "fit_t_max": (float, None),
    },
    "dephasing": _DEPHASING,
    "dephasing-pipulse": {k: v for k, v in _DEPHASING.items() if k not in ("j", "k")},
    "oscillator": {
        "Omega": (float, 1.0),
        "omega": (_floats, [1.0]),
        "g": (_floats, [0.3]),
        "fock_cutoff": (_int, 20),
        "z1": (_complex, 1.0),
        "z2": (_complex, -1.0),
        "dt": (float, None),
        "normalization": (_choice("orthogonal", "exact"), "orthogonal"),
        "fidelity_route": (_choice("fock", "driven-echo"), "fock"),
    },
    "oscillator-markov": {
        "L": (_int, 300),
        "gamma": (float, 1.0),
        "Omega": (float, 0.0),
        "omega_min": (float, -314.1592653589793),
        "omega_max": (float, 314.1592653589793),
        "z1": (_complex, 1.0),
        "z2": (_complex, -1.0),
        "dt": (float, None),
    },
    "shorttime": {
        "dim_env": (_int, 64),
        "s": (_floats, [1.0, -1.0]),
        "central_variance": (float, 1.0),
        "env_variance": (float, 1.0),
        "coupling_variance": (float, 0.01),
        "s_index": (_int, 0),
        "s_prime_index": (_int, 1),
    },
}

REQUIRED = ("kind", "t_max", "n_points")
RANDOM_KINDS = ("dephasing", "dephasing-pipulse", "shorttime")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    t_max: float
    n_points: int
    seed: int | None = None
    output_path: str | None = None
    ensemble_samples: int = 1
    residual_tolerance: float | None = None
    fit_t_min: float | None = None
    fit_t_max: float | None = None
    params: dict = field(default_factory=dict)
    source: str = "<config>"

    def with_param(self, name: str, value) -> "ExperimentConfig":
        params = dict(self.params)
        params[name] = value
        return replace(self, params=params)


def _key_lines(text: str) -> dict:
    """Map ``(section, key)`` to its 1-based line number in the raw file."""
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = no
    return lines


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, source=str(path))


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    lines = _key_lines(text)

    def where(section, key=None):
        no = lines.get((section, key)) if key else None
        return f"{source}:{no}" if no else source

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section [{section}]")
    if not parser.has_section("experiment"):
        raise ConfigError(f"{source}: missing [experiment] section")

    def read(section):
        schema = SCHEMA[section]
        values = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in schema:
                    raise ConfigError(f"{where(section, key)}: [{section}] unknown key '{key}'")
                parse = schema[key][0]
                try:
                    values[key] = parse(raw.strip())
                except ValueError as exc:
                    raise ConfigError(f"{where(section, key)}: [{section}] {key}: cannot parse {raw.strip()!r} ({exc})") from None
        for key, (_, default) in schema.items():
            values.setdefault(key, default)
        return values

    exp = read("experiment")
    for key in REQUIRED:
        if exp[key] is None:
            raise ConfigError(f"{source}: [experiment] missing required key '{key}'")
    kind = exp["kind"]
    for section in parser.sections():
        if section not in ("experiment", kind):
            raise ConfigError(f"{where(section)}: section [{section}] does not match kind '{kind}'")
    cfg = ExperimentConfig(
        kind=kind,
        t_max=exp["t_max"],
        n_points=exp["n_points"],
        seed=exp["seed"],
        output_path=exp["output_path"],
        ensemble_samples=exp["ensemble_samples"],
        residual_tolerance=exp["residual_tolerance"],
        fit_t_min=exp["fit_t_min"],
        fit_t_max=exp["fit_t_max"],
        params=read(kind),
        source=source,
    )
    validate(cfg, where=lambda key: where(kind, key))
    return cfg


def validate(cfg: ExperimentConfig, where=None) -> None:
    """Raise :class:`ConfigError` unless ``cfg`` is runnable."""
    loc = where or (lambda key: cfg.source)
    p = cfg.params
    if not cfg.t_max > 0:
        raise ConfigError(f"{cfg.source}: t_max must be positive")
    if cfg.n_points < 2:
        raise ConfigError(f"{cfg.source}: n_points must be at least 2")
    if cfg.ensemble_samples < 1:
        raise ConfigError(f"{cfg.source}: ensemble_samples must be at least 1")
    if cfg.kind in RANDOM_KINDS and cfg.seed is None:
        raise ConfigError(f"{cfg.source}: kind '{cfg.kind}' uses random builders, a seed is mandatory")
    if cfg.seed is not None and not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"{cfg.source}: seed must be an unsigned 64-bit integer")
    if cfg.kind.startswith("oscillator") and cfg.ensemble_samples != 1:
        raise ConfigError(f"{cfg.source}: ensemble averaging applies to random environment states only")

    if cfg.kind in ("dephasing", "dephasing-pipulse"):
        n_c = p["n_c"]
        if cfg.kind == "dephasing-pipulse" and n_c != 2:
            raise ConfigError(f"{loc('n_c')}: pi-pulse protocol needs n_c = 2")
        if n_c < 1 or p["dim_env"] < 1:
            raise ConfigError(f"{loc('dim_env')}: dimensions must be positive")
        if n_c * p["dim_env"] > MAX_JOINT_DIM:
            raise ConfigError(f"{loc('dim_env')}: joint dimension {n_c * p['dim_env']} exceeds cap {MAX_JOINT_DIM}")
        for key in ("eps", "a") + (("f",) if p["coupling"] == "proportional" else ()):
            if p[key] is not None and len(p[key]) != n_c:
                raise ConfigError(f"{loc(key)}: expected {n_c} values, got {len(p[key])}")
        if p["coupling"] == "proportional" and p["f"] is None:
            raise ConfigError(f"{loc('coupling')}: proportional coupling needs the list 'f'")
        if "j" in p:
            for key in ("j", "k"):
                if not 0 <= p[key] < n_c:
                    raise ConfigError(f"{loc(key)}: level {p[key]} out of range 0..{n_c - 1}")
    elif cfg.kind == "oscillator":
        if len(p["omega"]) != len(p["g"]) or not p["omega"]:
            raise ConfigError(f"{loc('g')}: omega and g must be non-empty lists of equal length")
        if len(p["omega"]) > 3:
            raise ConfigError(f"{loc('omega')}: Fock oracle supports at most 3 bath modes")
    elif cfg.kind == "oscillator-markov":
        if p["L"] < 2:
            raise ConfigError(f"{loc('L')}: need at least two bath modes")
        if not p["omega_min"] < p["Omega"] < p["omega_max"]:
            raise ConfigError(f"{loc('Omega')}: band excludes Omega (no resonant damping)")
        if p["gamma"] < 0:
            raise ConfigError(f"{loc('gamma')}: gamma must be non-negative")
    elif cfg.kind == "shorttime":
        n_c = len(p["s"])
        if n_c < 2:
            raise ConfigError(f"{loc('s')}: S needs at least two eigenvalues")
        if n_c * p["dim_env"] > MAX_JOINT_DIM:
            raise ConfigError(f"{loc('dim_env')}: joint dimension {n_c * p['dim_env']} exceeds cap {MAX_JOINT_DIM}")
        for key in ("s_index", "s_prime_index"):
            if not 0 <= p[key] < n_c:
                raise ConfigError(f"{loc(key)}: index {p[key]} out of range 0..{n_c - 1}")
        if p["s"][p["s_index"]] == p["s"][p["s_prime_index"]]:
            raise ConfigError(f"{loc('s_prime_index')}: s and s' must be distinct eigenvalues")


def sweep_axes(kind: str) -> list:
    """Scalar parameters that ``sweep`` can vary for ``kind``; list entries appear as ``name[i]``."""
    axes = []
    for key, (parse, _) in SCHEMA[kind].items():
        if parse is _floats:
            axes.append(f"{key}[i]")
        elif parse in (float, _int, _complex):
            axes.append(key)
    return axes


def apply_axis(cfg: ExperimentConfig, axis: str, raw: str) -> ExperimentConfig:
    """Return ``cfg`` with one scalar parameter (or list entry) replaced by ``raw``."""
    schema = SCHEMA[cfg.kind]
    m = re.fullmatch(r"(\w+)\[(\d+)\]", axis)
    name = m.group(1) if m else axis
    valid = ", ".join(sweep_axes(cfg.kind))
    if name not in schema:
        raise ConfigError(f"unknown sweep axis '{axis}' for kind '{cfg.kind}'; valid axes: {valid}")
    parse = schema[name][0]
    try:
        if m:
            if parse is not _floats:
                raise ConfigError(f"axis '{name}' is not a list; valid axes: {valid}")
            values = list(cfg.params[name] or [])
            i = int(m.group(2))
            if i >= len(values):
                raise ConfigError(f"axis '{axis}' indexes past the {len(values)} configured values")
            values[i] = float(raw)
            new = cfg.with_param(name, values)
        elif parse in (float, _int, _complex):
            new = cfg.with_param(name, parse(raw))
        else:
            raise ConfigError(f"axis '{axis}' is not a scalar parameter; valid axes: {valid}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"sweep value {raw!r} for axis '{axis}': {exc}") from None
    validate(new)
    return new
