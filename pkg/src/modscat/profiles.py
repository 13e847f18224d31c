"""Named presets for the scattering data (a, b) and initial data f.

    gaussian(amplitude, width, center) = amplitude * exp(-(y - center)^2 / (2 width^2))
    sech(amplitude, width)             = amplitude / cosh(y / width)
    poly(amplitude, power)             = amplitude * (1 + y^2)^(-power / 2)
    zero()                             = 0
"""

import ast
import re

import numpy as np


def gaussian(y, amplitude=1.0, width=1.0, center=0.0):
    return amplitude * np.exp(-((y - center) ** 2) / (2.0 * width**2))


def sech(y, amplitude=1.0, width=1.0):
    return amplitude / np.cosh(y / width)


def poly(y, amplitude=1.0, power=8.0):
    return amplitude * (1.0 + y**2) ** (-power / 2.0)


def zero(y):
    return np.zeros_like(y, dtype=float)


PRESETS = {"gaussian": gaussian, "sech": sech, "poly": poly, "zero": zero}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_preset(text):
    """Parse ``"gaussian(0.3, 2, 0)"`` into ``("gaussian", (0.3, 2.0, 0.0))``."""
    m = _CALL.match(text)
    if not m or m.group(1) not in PRESETS:
        raise ValueError(f"unknown profile preset {text!r}")
    name, argtext = m.group(1), m.group(2)
    args = ()
    if argtext and argtext.strip():
        try:
            parsed = ast.literal_eval(f"({argtext},)")
        except (ValueError, SyntaxError) as exc:
            raise ValueError(f"bad arguments in preset {text!r}") from exc
        args = tuple(float(v) for v in parsed)
    return name, args


def evaluate_preset(text, y):
    name, args = parse_preset(text)
    try:
        return np.asarray(PRESETS[name](y, *args), dtype=float)
    except TypeError as exc:
        raise ValueError(f"wrong number of arguments in preset {text!r}") from exc
