"""Scenario configuration and its ``key = value`` file format.

A scenario file has up to four sections::

    [scenario]      room, beacon square, grid, gamma set, trials, SNR, solvers, seed
    [signals]       code family and length, samples per chip, amplitude model, detector
    [robustness]    which transmitter is perturbed, sigma, whether to redraw per trial
    [calibration]   receiver constants (see ``CalibrationParams``)

Every key has a default; an unknown key or a malformed value is a
``ConfigError`` naming the key.
"""

import configparser
import math
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError
from .geometry import square_beacons
from .pnp import SOLVERS
from .qada import CONFIG_SECTION as CAL_SECTION
from .qada import REFERENCE_CALIBRATION, CalibrationParams
from .signals import AMP_MODELS, DETECTORS, FAMILIES, RATIO_RULES, gen_codes

DESK_STEP = 0.25
DESK_TRIALS = 20
FULL_STEP = 0.10
FULL_TRIALS = 50

_SECTIONS = {
    "scenario": (
        "room_x", "room_y", "room_height", "beacon_side", "receiver_z", "grid_step",
        "gammas_deg", "realizations", "snr_db", "solvers", "seed",
    ),
    "signals": (
        "code_family", "chip_length", "samples_per_chip", "code_seed", "amp_model",
        "lambertian_order", "detector", "ratio_rule",
    ),
    "robustness": ("perturb_beacon", "sigma_cm", "redraw"),
}


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _words(text):
    return tuple(str(text).replace(",", " ").split())


@dataclass(frozen=True)
class ScenarioConfig:
    room_x: float = 2.0
    room_y: float = 2.0
    room_height: float = 3.4
    beacon_side: float = 1.2
    receiver_z: float = 0.0
    grid_step: float = DESK_STEP
    gammas_deg: tuple = (0.0, 120.0, 240.0)
    realizations: int = DESK_TRIALS
    snr_db: float = 10.0
    solvers: tuple = ("epnp", "ippe", "rpnp")
    seed: int = 0
    code_family: str = "kasami"
    chip_length: int = 1023
    samples_per_chip: int = 256
    code_seed: object = None
    amp_model: str = "lambertian"
    lambertian_order: float = 1.0
    detector: str = "decorrelating"
    ratio_rule: str = "signed"
    perturb_beacon: int = 0
    sigma_cm: float = 0.0
    redraw: bool = True
    calibration: CalibrationParams = field(default=REFERENCE_CALIBRATION)

    def __post_init__(self):
        object.__setattr__(self, "gammas_deg", tuple(float(g) for g in self.gammas_deg))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        checks = [
            ("grid_step", self.grid_step > 0),
            ("realizations", int(self.realizations) == self.realizations and self.realizations >= 1),
            ("solvers", len(self.solvers) > 0 and all(s in SOLVERS for s in self.solvers)),
            ("gammas_deg", len(self.gammas_deg) > 0 and all(math.isfinite(g) for g in self.gammas_deg)),
            ("room_x", self.room_x > 0),
            ("room_y", self.room_y > 0),
            ("room_height", self.room_height > self.receiver_z),
            ("beacon_side", 0 < self.beacon_side <= min(self.room_x, self.room_y)),
            ("snr_db", not math.isnan(self.snr_db)),
            ("seed", int(self.seed) == self.seed and self.seed >= 0),
            ("code_family", self.code_family in FAMILIES),
            ("amp_model", self.amp_model in AMP_MODELS),
            ("detector", self.detector in DETECTORS),
            ("ratio_rule", self.ratio_rule in RATIO_RULES),
            ("samples_per_chip", self.samples_per_chip >= 1),
            ("sigma_cm", self.sigma_cm >= 0),
            ("perturb_beacon", 0 <= self.perturb_beacon < 4),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for '{key}': {getattr(self, key)!r}", key=key)

    # derived objects -------------------------------------------------------

    @property
    def center(self):
        return (self.room_x / 2.0, self.room_y / 2.0)

    def beacons(self):
        return square_beacons(self.beacon_side, self.center, self.room_height)

    def codebook(self):
        return gen_codes(self.code_family, self.chip_length, 4, seed=self.code_seed,
                         samples_per_chip=self.samples_per_chip)

    def grid(self):
        """Floor grid points, x-major, including both room edges."""
        nx = int(math.floor(self.room_x / self.grid_step + 1e-9)) + 1
        ny = int(math.floor(self.room_y / self.grid_step + 1e-9)) + 1
        return [(round(i * self.grid_step, 12), round(j * self.grid_step, 12)) for i in range(nx) for j in range(ny)]

    def with_(self, **kw):
        return replace(self, **kw)

    def paper_scale(self):
        return replace(self, grid_step=FULL_STEP, realizations=FULL_TRIALS)

    # serialization --------------------------------------------------------

    def to_text(self):
        d = asdict(self)
        d.pop("calibration")
        out = []
        for section, keys in _SECTIONS.items():
            out.append(f"[{section}]")
            for k in keys:
                v = d[k]
                if isinstance(v, tuple):
                    v = " ".join(str(x) for x in v)
                elif v is None:
                    v = "none"
                out.append(f"{k} = {v}")
            out.append("")
        return "\n".join(out) + "\n" + self.calibration.to_text(CAL_SECTION)

    @classmethod
    def from_text(cls, text, base=None):
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        base = base or cls()
        kw = {}
        for section in parser.sections():
            if section == CAL_SECTION:
                kw["calibration"] = CalibrationParams.from_mapping(parser[section])
                continue
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", key=section)
            for key, raw in parser[section].items():
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"unknown key '{key}' in [{section}]", key=key)
                kw[key] = _parse(key, raw, getattr(base, key))
        return replace(base, **kw)

    @classmethod
    def load(cls, path, base=None):
        with open(path) as fh:
            return cls.from_text(fh.read(), base)


def _parse(key, raw, default):
    try:
        if key == "gammas_deg":
            return _floats(raw)
        if key == "solvers":
            return _words(raw)
        if key == "code_seed":
            return None if raw.strip().lower() == "none" else int(raw)
        if isinstance(default, bool):
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except (ValueError, KeyError):
        raise ConfigError(f"cannot parse '{key}' = {raw!r}", key=key) from None

