"""Spreading codes, QADA capture synthesis and matched filtering.

Every beacon emits its own +/-1 code simultaneously; the receiver sees the
sum channel and the two difference channels. Each beacon's ratios are read
from the correlation of the three channels with that beacon's code.
"""

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BehindCameraError,
    CaptureFormatError,
    ConfigError,
    ContractError,
    DetectionError,
    OutOfFieldError,
)
from .geometry import project, world_to_cam
from .qada import RatioPair, quadrant_fractions, ratios_from_image_point

# characteristic polynomial exponents of primitive polynomials, by degree
_PRIMITIVE = {
    5: (5, 2, 0),
    6: (6, 1, 0),
    7: (7, 1, 0),
    8: (8, 4, 3, 2, 0),
    9: (9, 4, 0),
    10: (10, 3, 0),
}
KASAMI_LENGTHS = (63, 255, 1023)
GOLD_LENGTHS = (31, 63, 127, 511, 1023)
FAMILIES = ("kasami", "gold")
RATIO_RULES = ("signed", "paper_literal")
AMP_MODELS = ("unit", "lambertian")
DETECTORS = ("matched", "decorrelating")
DOMINANCE_MIN = 1.2


def m_sequence(degree):
    """One period of the maximal-length 0/1 sequence for ``degree``."""
    taps = [k for k in _PRIMITIVE[degree] if k != degree]
    n = (1 << degree) - 1
    seq = np.zeros(n + degree, dtype=np.uint8)
    seq[0] = 1
    for i in range(n):
        bit = 0
        for k in taps:
            bit ^= seq[i + k]
        seq[i + degree] = bit
    return seq[:n]


def _decimate(seq, q):
    n = seq.size
    return seq[(q * np.arange(n)) % n]


def family_codes(family, chip_length):
    """All members of a code family as a (count, chip_length) +/-1 array."""
    degree = int(round(math.log2(chip_length + 1)))
    if family == "kasami":
        if chip_length not in KASAMI_LENGTHS:
            raise ConfigError(f"kasami chip_length must be one of {KASAMI_LENGTHS}", key="chip_length")
        u = m_sequence(degree)
        w = _decimate(u, (1 << (degree // 2)) + 1)
        period = (1 << (degree // 2)) - 1
        bits = [u] + [u ^ np.roll(w, -k) for k in range(period)]
    elif family == "gold":
        if chip_length not in GOLD_LENGTHS:
            raise ConfigError(f"gold chip_length must be one of {GOLD_LENGTHS}", key="chip_length")
        u = m_sequence(degree)
        # preferred-pair decimation: 2^k + 1 with gcd(degree, k) = 1 or 2
        v = _decimate(u, 3 if degree % 2 else 5)
        bits = [u, v] + [u ^ np.roll(v, -k) for k in range(chip_length)]
    else:
        raise ConfigError(f"unknown code family '{family}'", key="code_family")
    return 1.0 - 2.0 * np.array(bits, dtype=np.float64)


def periodic_xcorr(a, b):
    """Periodic cross-correlation of two equal-length sequences, all lags."""
    return np.real(np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b))))


@dataclass(frozen=True)
class CodeBook:
    family: str
    chip_length: int
    samples_per_chip: int
    codes: np.ndarray = field(repr=False)
    members: tuple = ()
    seed: object = None

    def __len__(self):
        return len(self.codes)

    @property
    def period(self):
        return self.chip_length * self.samples_per_chip

    def waveform(self, index):
        return np.repeat(self.codes[index], self.samples_per_chip)

    def descriptor(self):
        return {
            "code_family": self.family,
            "chip_length": self.chip_length,
            "samples_per_chip": self.samples_per_chip,
            "code_count": len(self.codes),
            "code_seed": "none" if self.seed is None else self.seed,
        }

    @classmethod
    def from_descriptor(cls, d):
        try:
            seed = d["code_seed"]
            seed = None if str(seed).lower() == "none" else int(seed)
            return gen_codes(
                str(d["code_family"]),
                int(d["chip_length"]),
                int(d["code_count"]),
                seed=seed,
                samples_per_chip=int(d["samples_per_chip"]),
            )
        except KeyError as exc:
            raise ConfigError(f"codebook descriptor: missing key '{exc.args[0]}'", key=exc.args[0]) from None


def gen_codes(family="kasami", chip_length=255, count=4, seed=None, samples_per_chip=4):
    """Pick ``count`` codes of a family. With ``seed=None`` the first members
    are used, otherwise a seeded random subset."""
    if samples_per_chip < 1:
        raise ConfigError("samples_per_chip must be >= 1", key="samples_per_chip")
    allc = family_codes(family, chip_length)
    if not 1 <= count <= len(allc):
        raise ConfigError(f"{family}-{chip_length} holds {len(allc)} codes, asked for {count}", key="code_count")
    if seed is None:
        members = tuple(range(count))
    else:
        members = tuple(int(i) for i in np.random.default_rng(seed).choice(len(allc), count, replace=False))
    return CodeBook(family, chip_length, samples_per_chip, allc[list(members)], members, seed)


@dataclass
class QadaCapture:
    v_sum: np.ndarray
    v_bt: np.ndarray
    v_lr: np.ndarray
    snr_db: float = math.inf
    seed: object = None
    codebook: dict = field(default_factory=dict)
    emitters: tuple = ()
    saturated: tuple = ()
    out_of_field: tuple = ()

    def __post_init__(self):
        self.v_sum = np.asarray(self.v_sum, dtype=float)
        self.v_bt = np.asarray(self.v_bt, dtype=float)
        self.v_lr = np.asarray(self.v_lr, dtype=float)
        if not (self.v_sum.shape == self.v_bt.shape == self.v_lr.shape) or self.v_sum.ndim != 1:
            raise ContractError("capture channels must be equal-length 1-D sequences")
        if not all(np.all(np.isfinite(v)) for v in (self.v_sum, self.v_bt, self.v_lr)):
            raise ContractError("capture has non-finite samples")

    @property
    def sample_count(self):
        return self.v_sum.size

    def channels(self):
        """(3, N) array ordered sum, bottom-top, left-right."""
        return np.vstack([self.v_sum, self.v_bt, self.v_lr])

    def header(self):
        h = {
            "sample_count": self.sample_count,
            "snr_db": self.snr_db,
            "seed": "none" if self.seed is None else self.seed,
            "emitters": " ".join(str(i) for i in self.emitters),
            "saturated": " ".join(str(i) for i in self.saturated),
            "out_of_field": " ".join(str(i) for i in self.out_of_field),
        }
        h.update(self.codebook)
        return h

    def save(self, path):
        """Write ``path`` (CSV) and ``path + '.hdr'`` (key = value header)."""
        path = str(path)
        data = np.column_stack([np.arange(self.sample_count), self.channels().T])
        np.savetxt(path, data, delimiter=",", header="index,v_sum,v_bt,v_lr", comments="", fmt=["%d", "%.17g", "%.17g", "%.17g"])
        parser = configparser.ConfigParser()
        parser["capture"] = {k: str(v) for k, v in self.header().items()}
        with open(path + ".hdr", "w") as fh:
            parser.write(fh)

    @classmethod
    def load(cls, path):
        path = str(path)
        parser = configparser.ConfigParser()
        if not parser.read(path + ".hdr") or not parser.has_section("capture"):
            raise CaptureFormatError(f"{path}.hdr: missing or without [capture] section")
        h = dict(parser["capture"])
        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise CaptureFormatError(f"{path}: {exc}") from None
        if data.shape[1] != 4:
            raise CaptureFormatError(f"{path}: expected 4 columns, got {data.shape[1]}")
        try:
            if int(h["sample_count"]) != data.shape[0]:
                raise CaptureFormatError(f"{path}: sample_count mismatch")
            seed = None if h["seed"] == "none" else int(h["seed"])
            ints = lambda key: tuple(int(v) for v in h.get(key, "").split())  # noqa: E731
            book = {k: h[k] for k in ("code_family", "chip_length", "samples_per_chip", "code_count", "code_seed") if k in h}
            return cls(
                data[:, 1], data[:, 2], data[:, 3],
                snr_db=float(h["snr_db"]), seed=seed, codebook=book,
                emitters=ints("emitters"), saturated=ints("saturated"), out_of_field=ints("out_of_field"),
            )
        except KeyError as exc:
            raise CaptureFormatError(f"{path}.hdr: missing key '{exc.args[0]}'") from None


def beacon_amplitude(beacon_pos, pose, p_cam, amp_model="lambertian", order=1.0):
    if amp_model == "unit":
        return 1.0
    if amp_model != "lambertian":
        raise ConfigError(f"unknown amplitude model '{amp_model}'", key="amp_model")
    d = float(np.linalg.norm(p_cam))
    cos_emit = (beacon_pos[2] - pose.z) / d  # LEDs face straight down
    cos_inc = p_cam[2] / d
    if cos_emit <= 0.0 or cos_inc <= 0.0:
        return 0.0
    return cos_emit**order * cos_inc / (d * d)


def synthesize_capture(beacons, pose, cal, book, snr_db=10.0, amp_model="lambertian", seed=0, lambertian_order=1.0):
    """Simulated synchronous capture of every beacon in ``beacons``.

    Each beacon's image point is converted to the ratios the calibrated
    receiver would report, those to quadrant powers, and the code waveform is
    added to the sum, bottom-top and left-right channels. Gaussian noise of
    equal variance is added to each channel so that the noiseless sum-channel
    power over the noise power equals ``snr_db``.
    """
    beacon_list = list(beacons)
    if not beacon_list:
        raise ContractError("no beacons to synthesize")
    # built at chip rate, since every code waveform is constant over a chip
    chans = np.zeros((3, book.chip_length))
    saturated, out_of_field = [], []
    for b in beacon_list:
        if not 0 <= b.id < len(book):
            raise ConfigError(f"beacon id {b.id} has no code in a {len(book)}-code book", key="code_count")
        p_cam = world_to_cam(pose, b.position)
        if p_cam[2] <= 0.0:
            raise BehindCameraError(f"beacon {b.id} is behind the receiver")
        xr = project(p_cam, cal.h_ap)
        px, py = ratios_from_image_point(xr, cal)
        half = 0.5 * cal.l
        try:
            f = quadrant_fractions(-px * half, -py * half, cal.l)
        except OutOfFieldError:
            out_of_field.append(b.id)
            continue
        if f.saturated:
            saturated.append(b.id)
        amp = beacon_amplitude(b.position, pose, p_cam, amp_model, lambertian_order)
        w = amp * book.codes[b.id]
        chans[0] += (f.f1 + f.f2 + f.f3 + f.f4) * w
        chans[1] += ((f.f3 + f.f4) - (f.f1 + f.f2)) * w
        chans[2] += ((f.f2 + f.f3) - (f.f1 + f.f4)) * w

    chans = np.repeat(chans, book.samples_per_chip, axis=1)
    if math.isfinite(snr_db):
        power = float(np.mean(chans[0] ** 2))
        sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0))
        chans = chans + sigma * np.random.default_rng(seed).standard_normal(chans.shape)
    return QadaCapture(
        chans[0], chans[1], chans[2], snr_db=float(snr_db), seed=seed,
        codebook=book.descriptor(), emitters=tuple(b.id for b in beacon_list),
        saturated=tuple(saturated), out_of_field=tuple(out_of_field),
    )


@dataclass
class CorrelationTriple:
    """Correlations of one code with (sum, bottom-top, left-right);
    ``lags[k]`` is the shift of sample ``k``."""

    s: np.ndarray
    t: np.ndarray
    r: np.ndarray
    lags: np.ndarray
    samples_per_chip: int = 1

    def __post_init__(self):
        if not (len(self.s) == len(self.t) == len(self.r) == len(self.lags)):
            raise ContractError("correlation sequences differ in length")


def _next_pow2(n):
    return 1 << (n - 1).bit_length()


def _xcorr_full(x, w):
    """Full linear cross-correlation ``c[k] = sum_n x[.., n + k] w[n]`` via FFT."""
    nx, nw = x.shape[-1], w.size
    nfft = _next_pow2(nx + nw - 1)
    c = np.fft.irfft(np.fft.rfft(x, nfft) * np.conj(np.fft.rfft(w, nfft)), nfft)
    return np.concatenate([c[..., nfft - (nw - 1):], c[..., :nx]], axis=-1)


def correlate(capture, code, samples_per_chip):
    """Matched filter of a chip sequence against all three channels."""
    w = np.repeat(np.asarray(code, dtype=float), samples_per_chip)
    if capture.sample_count < w.size:
        raise ContractError(f"capture of {capture.sample_count} samples is shorter than the {w.size}-sample code")
    c = _xcorr_full(capture.channels(), w)
    lags = np.arange(-(w.size - 1), capture.sample_count)
    return CorrelationTriple(c[0], c[1], c[2], lags, samples_per_chip)


def _peak(s, samples_per_chip):
    """Argmax of the sum correlation, its value and the low-confidence flag."""
    s = np.asarray(s)
    if not np.all(np.isfinite(s)):
        raise DetectionError("non-finite correlation")
    k = int(np.argmax(s))
    peak = float(s[k])
    if not peak > 0.0:
        raise DetectionError(f"sum-channel correlation peak {peak:.3g} is not positive")
    away = np.abs(np.arange(s.size) - k) >= max(samples_per_chip, 1)
    second = float(np.max(s[away])) if np.any(away) else 0.0
    return k, peak, second


def extract_ratios(tri, rule="signed"):
    """Ratios of one beacon from its correlation triple.

    ``signed`` reads the difference channels at the sum-channel peak lag;
    ``paper_literal`` divides the independent maxima.
    """
    k, peak, second = _peak(tri.s, tri.samples_per_chip)
    low = second > 0.0 and peak < DOMINANCE_MIN * second
    if rule == "signed":
        return RatioPair(float(tri.r[k] / peak), float(tri.t[k] / peak), low)
    if rule == "paper_literal":
        return RatioPair(float(np.max(tri.r) / peak), float(np.max(tri.t) / peak), low)
    raise ConfigError(f"unknown ratio rule '{rule}'", key="ratio_rule")


def dominance(tri):
    """Peak of the sum correlation over the best lag outside its main lobe."""
    _, peak, second = _peak(tri.s, tri.samples_per_chip)
    return math.inf if second <= 0 else peak / second


def _shifted(w, lag, n):
    """``w`` delayed by ``lag`` samples inside an ``n``-sample window."""
    out = np.zeros(n)
    lo, hi = max(lag, 0), min(n, lag + w.size)
    if hi > lo:
        out[lo:hi] = w[lo - lag : hi - lag]
    return out


def chip_sums(capture, samples_per_chip):
    """Integrate-and-dump: the (3, chips) per-chip sums of each channel.

    Correlating a chip-constant code waveform with the raw samples at a lag
    that is a whole number of chips equals correlating the chip sequence with
    these sums, so they are a sufficient statistic for chip-aligned detection.
    """
    chips = capture.sample_count // samples_per_chip
    x = capture.channels()[:, : chips * samples_per_chip]
    return x.reshape(3, chips, samples_per_chip).sum(axis=2)


def extract_all(capture, book, ids, rule="signed", detector="matched"):
    """Ratio pairs for every beacon id.

    The capture is reduced to per-chip sums and correlated at whole-chip lags,
    which is exact for the synchronous captures this system assumes and much
    cheaper than sample-rate correlation.

    ``matched`` reads each beacon's own correlation peak, so the residual
    cross-correlation of the other codes leaks into its ratios.
    ``decorrelating`` uses the matched-filter peaks only to find each
    beacon's lag, then fits all delayed code templates jointly by least
    squares, which removes that leakage exactly.
    """
    if detector not in DETECTORS:
        raise ConfigError(f"unknown detector '{detector}'", key="detector")
    if detector == "decorrelating" and rule != "signed":
        raise ConfigError("the decorrelating detector yields signed ratios only", key="ratio_rule")
    if capture.sample_count < book.period:
        raise ContractError(f"capture of {capture.sample_count} samples is shorter than the {book.period}-sample code")
    spc = book.samples_per_chip
    x = chip_sums(capture, spc)
    n = x.shape[1]
    nw = book.chip_length
    nfft = _next_pow2(n + nw - 1)
    spectra = np.fft.rfft(x, nfft)
    lags = np.arange(-(nw - 1), n)
    triples = []
    for i in ids:
        if not 0 <= i < len(book):
            raise ConfigError(f"beacon id {i} has no code in a {len(book)}-code book", key="code_count")
        c = np.fft.irfft(spectra * np.conj(np.fft.rfft(book.codes[i], nfft)), nfft)
        c = np.concatenate([c[..., nfft - (nw - 1):], c[..., :n]], axis=-1)
        triples.append(CorrelationTriple(c[0], c[1], c[2], lags * spc, 1))
    matched = [extract_ratios(tri, rule) for tri in triples]
    if detector == "matched":
        return matched

    shifts = [int(lags[_peak(tri.s, 1)[0]]) for tri in triples]
    templates = np.column_stack([_shifted(book.codes[i], k, n) for i, k in zip(ids, shifts)])
    gram = templates.T @ templates
    try:
        amps = np.linalg.solve(gram, templates.T @ x.T)  # (beacons, 3)
    except np.linalg.LinAlgError:
        raise DetectionError("code templates are linearly dependent at the detected lags") from None
    out = []
    for i, (a_sum, a_bt, a_lr), m in zip(ids, amps, matched):
        if not a_sum > 0.0:
            raise DetectionError(f"beacon {i}: fitted sum amplitude {a_sum:.3g} is not positive")
        out.append(RatioPair(float(a_lr / a_sum), float(a_bt / a_sum), m.low_confidence))
    return out
