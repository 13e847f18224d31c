"""Run configuration: sectioned ``key = value`` text with defaults and validation."""

import configparser
import io
from dataclasses import dataclass

from .profiles import parse_preset


class ConfigError(ValueError):
    pass


def _pos(x):
    return x > 0


def _pow2(n):
    return n >= 16 and n & (n - 1) == 0


def _preset(text):
    try:
        parse_preset(text)
    except ValueError:
        return False
    return True


# section -> key -> (type, default, validator or None, description)
SCHEMA = {
    "run": {
        "seed": (int, 0, lambda v: 0 <= v < 2**64, "seed for random field suites"),
    },
    "equation": {
        "beta": (float, 0.2, None, "cubic coefficient"),
        "gamma": (float, 0.1, None, "quintic coefficient"),
    },
    "grid": {
        "half_length": (float, 40.0, _pos, "grid covers [-L, L)"),
        "n": (int, 1024, _pow2, "number of points, a power of two >= 16"),
    },
    "data": {
        "a": (str, "gaussian(0.3, 2, 0)", _preset, "modulus profile a(y)"),
        "b": (str, "zero", _preset, "phase offset profile b(y)"),
    },
    "forward": {
        "epsilon": (float, 0.05, lambda v: v >= 0, "initial amplitude"),
        "initial": (str, "gaussian(1, 1, 0)", _preset, "initial profile f"),
        "t_start": (float, 1.0, lambda v: v >= 1, "start time"),
        "t_end": (float, 500.0, _pos, "end time"),
        "dt": (float, 5e-3, lambda v: 0 < v <= 0.1, "time step"),
        "snapshots": (int, 80, lambda v: v >= 8, "number of log-spaced snapshots"),
        "fit_min": (float, 1.0, _pos, "rate fit window start"),
        "fit_max": (float, 250.0, _pos, "rate fit window end"),
    },
    "backward": {
        "t_min": (float, 10.0, lambda v: v >= 1, "earliest constructed time"),
        "t_max": (float, 1000.0, _pos, "time where the remainder vanishes"),
        "dt": (float, 1e-2, lambda v: 0 < v <= 0.1, "time step"),
        "snapshots": (int, 40, lambda v: v >= 8, "number of log-spaced snapshots"),
        "max_iters": (int, 6, lambda v: v >= 2, "Picard iterates"),
        "tol": (float, 1e-8, _pos, "stopping tolerance on weighted differences"),
        "order": (int, 0, lambda v: 0 <= v <= 4, "expansion order N of the background"),
        "fit_min": (float, 20.0, _pos, "rate fit window start"),
        "fit_max": (float, 500.0, _pos, "rate fit window end"),
        "log_power_max": (int, 2, lambda v: 0 <= v <= 4, "largest log correction tried"),
    },
    "expand": {
        "order": (int, 2, lambda v: 0 <= v <= 4, "highest series index N"),
        "truncation": (int, 0, lambda v: v >= 0, "kept orders (0 = order + 3)"),
        "s_min": (float, 10.0, lambda v: v >= 1, "residual sampling start"),
        "s_max": (float, 1000.0, _pos, "residual sampling end"),
        "samples": (int, 25, lambda v: v >= 8, "residual samples"),
        "log_power_max": (int, 2, lambda v: 0 <= v <= 4, "largest log correction tried"),
    },
    "verify": {
        "suite_count": (int, 1000, lambda v: v >= 1, "random fields per inequality"),
        "energy_dt": (float, 1e-3, lambda v: 0 < v <= 0.1, "step of the energy-identity march"),
        "energy_tol": (float, 1e-5, _pos, "allowed energy-identity mismatch"),
        "mass_tol": (float, 1e-6, _pos, "allowed relative mass drift"),
        "closed_loop": (bool, True, None, "run backward then forward extraction"),
        "forward_end": (float, 1e4, _pos, "end of the forward leg of the closed loop"),
        "forward_dt": (float, 0.1, lambda v: 0 < v <= 0.1, "step of the forward leg"),
        "a_tol": (float, 5e-3, _pos, "allowed sup error in a"),
        "b_tol": (float, 2e-2, _pos, "allowed masked sup error in b"),
    },
}


class Section(dict):
    """dict with attribute access."""

    __getattr__ = dict.__getitem__


@dataclass(frozen=True)
class RunConfig:
    sections: dict

    def __getattr__(self, name):
        try:
            return self.sections[name]
        except KeyError:
            raise AttributeError(name) from None

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec, body in self.sections.items():
            cp[sec] = {k: _format(v) for k, v in body.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(sec, key, raw):
    typ = SCHEMA[sec][key][0]
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        return typ(raw)
    except ValueError:
        raise ConfigError(f"[{sec}] {key}: cannot read {raw!r} as {typ.__name__}") from None


def load_config(text: str = "", overrides=None) -> RunConfig:
    """Parse config text, fill defaults, reject unknown keys and bad values."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sections = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key [{sec}] {key}")
    for sec, keys in SCHEMA.items():
        body = Section()
        for key, (typ, default, check, _) in keys.items():
            if cp.has_option(sec, key):
                value = _convert(sec, key, cp.get(sec, key))
            else:
                value = default
            if overrides and (sec, key) in overrides:
                value = overrides[(sec, key)]
            if check is not None and not check(value):
                raise ConfigError(f"[{sec}] {key} = {value!r} is out of range ({keys[key][3]})")
            body[key] = value
        sections[sec] = body
    _cross_checks(sections)
    return RunConfig(sections)


def _cross_checks(s):
    f, b, e = s["forward"], s["backward"], s["expand"]
    if not f["t_end"] > f["t_start"]:
        raise ConfigError("[forward] t_end must exceed t_start")
    if not f["fit_max"] > f["fit_min"]:
        raise ConfigError("[forward] fit_max must exceed fit_min")
    if not b["t_max"] > b["t_min"]:
        raise ConfigError("[backward] t_max must exceed t_min")
    if not b["fit_max"] > b["fit_min"]:
        raise ConfigError("[backward] fit_max must exceed fit_min")
    if not e["s_max"] > e["s_min"]:
        raise ConfigError("[expand] s_max must exceed s_min")
    if e["truncation"] and e["truncation"] < e["order"] + 2:
        raise ConfigError("[expand] truncation must be at least order + 2")


def read_config(path=None, overrides=None) -> RunConfig:
    text = ""
    if path is not None:
        with open(path) as fh:
            text = fh.read()
    return load_config(text, overrides)
