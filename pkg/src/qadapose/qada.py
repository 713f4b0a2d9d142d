"""Quadrant photodiode behind a square aperture.

Quadrants are numbered 1..4 = top-right, top-left, bottom-left, bottom-right.
The ideal spot is a uniform square of side ``l`` (the aperture) centred on the
image point, so the quadrant powers are products of the right/top fractions.
Ratios follow left-minus-right and bottom-minus-top over the sum, which makes
the calibrated map (``image_point_from_ratios``) with ``lambda = 1``,
``delta = 0`` and zero offset the exact inverse of the spot model.
"""

import configparser
import io
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, ContractError, OutOfFieldError

CONFIG_SECTION = "calibration"
_KEYS = {
    "h_ap": "h_ap_mm",
    "lam": "lambda",
    "delta": "delta_rad",
    "l": "l_mm",
    "c_x": "c_x_mm",
    "c_y": "c_y_mm",
}


@dataclass(frozen=True)
class CalibrationParams:
    """Receiver constants: aperture height ``h_ap`` (mm), focal adjustment
    ``lam``, misalignment ``delta`` (rad), aperture side ``l`` (mm) and the
    optical-centre offset ``(c_x, c_y)`` (mm)."""

    h_ap: float = 2.55
    lam: float = 1.0
    delta: float = 0.0
    l: float = 2.75  # noqa: E741
    c_x: float = 0.0
    c_y: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ContractError(f"calibration {f.name} is not finite")
        for name in ("h_ap", "lam", "l"):
            if getattr(self, name) <= 0:
                raise ContractError(f"calibration {name} must be positive, got {getattr(self, name)}")
        if abs(self.delta) >= 0.5:
            raise ContractError(f"calibration delta must satisfy |delta| < 0.5 rad, got {self.delta}")

    @property
    def gain(self):
        """Millimeters per unit ratio, ``(l / 2) * lambda``."""
        return 0.5 * self.l * self.lam

    def to_text(self, section=CONFIG_SECTION):
        lines = [f"[{section}]"]
        for attr, key in _KEYS.items():
            lines.append(f"{key} = {getattr(self, attr)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, values):
        known = set(_KEYS.values())
        for key in values:
            if key not in known:
                raise ConfigError(f"calibration: unknown key '{key}'", key=key)
        kwargs = {}
        for attr, key in _KEYS.items():
            if key not in values:
                raise ConfigError(f"calibration: missing key '{key}'", key=key)
            try:
                kwargs[attr] = float(values[key])
            except ValueError:
                raise ConfigError(f"calibration: '{key}' is not a number", key=key) from None
        try:
            return cls(**kwargs)
        except ContractError as exc:
            bad = _KEYS.get(str(exc).split()[1])  # messages read "calibration <attr> ..."
            raise ConfigError(str(exc), key=bad) from None

    @classmethod
    def from_text(cls, text, section=CONFIG_SECTION):
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.read_file(io.StringIO(text))
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section", key=section)
        return cls.from_mapping(parser[section])


REFERENCE_CALIBRATION = CalibrationParams(h_ap=2.55, lam=1.25, delta=0.1, l=2.75, c_x=0.055, c_y=-0.035)
IDEAL_CALIBRATION = CalibrationParams(h_ap=2.55, lam=1.0, delta=0.0, l=2.75, c_x=0.0, c_y=0.0)


@dataclass(frozen=True)
class RatioPair:
    px: float
    py: float
    low_confidence: bool = False

    @property
    def overflow(self):
        return abs(self.px) > 1.0 or abs(self.py) > 1.0

    def as_array(self):
        return np.array([self.px, self.py])


@dataclass(frozen=True)
class QuadrantFractions:
    f1: float
    f2: float
    f3: float
    f4: float
    saturated: bool = False

    def as_array(self):
        return np.array([self.f1, self.f2, self.f3, self.f4])


def quadrant_fractions(xr, yr, l):  # noqa: E741
    """Power fraction per quadrant for a square spot of side ``l`` centred at
    ``(xr, yr)`` mm. Spots partly past the detector edge are clamped and
    flagged ``saturated``."""
    half = 0.5 * l
    if abs(xr) > l or abs(yr) > l:
        raise OutOfFieldError(f"spot ({xr:.3f}, {yr:.3f}) mm misses the detector")
    saturated = abs(xr) > half or abs(yr) > half
    xr = min(max(xr, -half), half)
    yr = min(max(yr, -half), half)
    right = (half + xr) / l
    top = (half + yr) / l
    return QuadrantFractions(
        right * top,
        (1.0 - right) * top,
        (1.0 - right) * (1.0 - top),
        right * (1.0 - top),
        saturated,
    )


def ideal_ratios(f):
    """Difference-over-sum ratios (left - right, bottom - top)."""
    total = f.f1 + f.f2 + f.f3 + f.f4
    px = ((f.f2 + f.f3) - (f.f1 + f.f4)) / total
    py = ((f.f3 + f.f4) - (f.f1 + f.f2)) / total
    return RatioPair(px, py)


def image_point_from_ratios(p, cal):
    """Calibrated image point (mm) from a ratio pair or an (n, 2) array of them."""
    arr = p.as_array() if isinstance(p, RatioPair) else np.asarray(p, dtype=float)
    px, py = arr[..., 0], arr[..., 1]
    x = -cal.gain * (px + cal.delta * py) + cal.c_x
    y = -cal.gain * (-cal.delta * px + py) + cal.c_y
    return np.stack([x, y], axis=-1)


def ratios_from_image_point(xr, cal):
    """Inverse of ``image_point_from_ratios``; accepts (2,) or (n, 2) mm."""
    xr = np.asarray(xr, dtype=float)
    dx = xr[..., 0] - cal.c_x
    dy = xr[..., 1] - cal.c_y
    # M = [[1, d], [-d, 1]], M^-1 = [[1, -d], [d, 1]] / (1 + d^2)
    d = cal.delta
    k = -1.0 / (cal.gain * (1.0 + d * d))
    return np.stack([k * (dx - d * dy), k * (d * dx + dy)], axis=-1)
