"""Monte Carlo studies: floor grid, nine-point sweep and transmitter perturbation.

Every trial draws its noise from a seed derived from (master seed, point,
gamma, trial), so results do not depend on execution order. Reports are kept
in canonical order: point, gamma, trial, solver.
"""

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericalError
from .geometry import Pose, project, world_to_cam
from .pipeline import pose_errors, run_trial

COORDS = ("x", "y", "z", "alpha", "beta", "gamma")
UNITS = ("cm", "cm", "cm", "deg", "deg", "deg")
OUTLIER_SIGMA = 3.0
NINE_POINT_OFFSETS = (
    (0.0, 0.0), (0.0, 0.5), (0.0, 1.0),
    (0.5, 0.0), (0.5, 0.5), (0.5, 1.0),
    (1.0, 0.0), (1.0, 0.5), (1.0, 1.0),
)
NINE_POINT_GAMMAS = tuple(float(g) for g in range(0, 360, 10))


@dataclass
class ErrorRecord:
    point_id: int
    x: float
    y: float
    gamma_deg: float
    trial: int
    solver: str
    truth: Pose
    estimate: object  # Pose, or None when the solver failed
    errors: np.ndarray  # |dx| |dy| |dz| in cm, |d alpha| |d beta| |d gamma| in degrees
    status: str = "ok"
    low_confidence: bool = False

    @property
    def ok(self):
        return self.status == "ok"


@dataclass
class PooledStats:
    n: int
    outliers: int
    mean: np.ndarray
    median: np.ndarray
    std: np.ndarray
    p90: np.ndarray


@dataclass
class McReport:
    records: list
    pooled: dict  # solver -> PooledStats
    cdfs: dict  # (solver, coord) -> (values, fractions)
    point_means: list  # (point_id, x, y, gamma, solver, means[6])
    skipped: list = field(default_factory=list)  # (point_id, x, y, gamma)
    failures: dict = field(default_factory=dict)  # solver -> count

    def errors(self, solver, outliers=True):
        """(n, 6) error matrix of the successful trials of ``solver``."""
        recs = [r for r in self.records if r.solver == solver and r.ok]
        if not outliers:
            keep = _inlier_mask(recs)
            recs = [r for r, k in zip(recs, keep) if k]
        return np.array([r.errors for r in recs]).reshape(-1, 6)


def cdf(errors):
    """Empirical CDF: sorted values and fractions ``i / n``."""
    v = np.sort(np.asarray(errors, dtype=float).ravel())
    if v.size == 0:
        raise ContractError("cdf of an empty sample")
    return v, np.arange(1, v.size + 1) / v.size


def _inlier_mask(records):
    """One 3-sigma pass per coordinate within each (point, gamma, solver) cell."""
    keep = np.ones(len(records), dtype=bool)
    cells = {}
    for i, r in enumerate(records):
        cells.setdefault((r.point_id, r.gamma_deg, r.solver), []).append(i)
    for idx in cells.values():
        e = np.array([records[i].errors for i in idx])
        mu = e.mean(axis=0)
        sd = e.std(axis=0)
        bad = np.any(np.abs(e - mu) > OUTLIER_SIGMA * sd, axis=1)
        keep[np.asarray(idx)[bad]] = False
    return keep


def summarize(records):
    """Pooled mean, median, std and 90th percentile per coordinate after
    dropping 3-sigma outliers (one pass, per cell, see ``_inlier_mask``).

    ``records`` may be ``ErrorRecord`` objects or plain (n, 6) error rows, in
    which case they form a single cell.
    """
    records = list(records)
    if not records:
        raise ContractError("summarize needs at least one record")
    if not isinstance(records[0], ErrorRecord):
        records = [ErrorRecord(0, 0.0, 0.0, 0.0, i, "-", None, None, np.asarray(e, float)) for i, e in enumerate(records)]
    records = [r for r in records if r.ok]
    if not records:
        raise ContractError("summarize: no successful records")
    keep = _inlier_mask(records)
    e = np.array([r.errors for r, k in zip(records, keep) if k])
    return PooledStats(
        n=len(e), outliers=int((~keep).sum()), mean=e.mean(axis=0), median=np.median(e, axis=0),
        std=e.std(axis=0), p90=np.percentile(e, 90, axis=0),
    )


def trial_seed(master, point_id, gamma_idx, trial, stream=0):
    """Independent 63-bit seed for one trial."""
    ss = np.random.SeedSequence([int(master), int(point_id), int(gamma_idx), int(trial), int(stream)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _in_field(cfg, beacons, pose):
    """True when every beacon's ideal spot lies on the detector."""
    cal = cfg.calibration
    for p in beacons.positions:
        pc = world_to_cam(pose, p)
        if pc[2] <= 0:
            return False
        xr = project(pc, cal.h_ap)
        if np.any(np.abs(xr) > cal.l):
            return False
    return True


def _perturbed(cfg, beacons, rng):
    pos = beacons.positions.copy()
    pos[cfg.perturb_beacon] += rng.normal(0.0, cfg.sigma_cm / 100.0, 3)
    return beacons.with_positions(pos, planar=False)


def _run(cfg, points, gammas, progress=None):
    beacons = cfg.beacons()
    book = cfg.codebook()
    fixed_rng = np.random.default_rng(trial_seed(cfg.seed, 0, 0, 0, stream=2))
    fixed = _perturbed(cfg, beacons, fixed_rng) if cfg.sigma_cm > 0 and not cfg.redraw else None
    records, skipped = [], []
    for pid, (x, y) in enumerate(points):
        for gi, g in enumerate(gammas):
            truth = Pose.from_degrees(x, y, cfg.receiver_z, 0.0, 0.0, g)
            if not _in_field(cfg, beacons, truth):
                skipped.append((pid, x, y, g))
                continue
            for k in range(cfg.realizations):
                assumed = fixed
                if cfg.sigma_cm > 0 and cfg.redraw:
                    assumed = _perturbed(cfg, beacons, np.random.default_rng(trial_seed(cfg.seed, pid, gi, k, stream=1)))
                res = run_trial(
                    beacons, truth, cfg.calibration, book, cfg.solvers, cfg.snr_db,
                    seed=trial_seed(cfg.seed, pid, gi, k), amp_model=cfg.amp_model,
                    lambertian_order=cfg.lambertian_order, solver_beacons=assumed,
                    detector=cfg.detector, rule=cfg.ratio_rule,
                )
                for s in cfg.solvers:
                    est = res[s]
                    if isinstance(est, NumericalError):
                        records.append(ErrorRecord(pid, x, y, g, k, s, truth, None, np.full(6, np.nan),
                                                   status=type(est).__name__))
                    else:
                        records.append(ErrorRecord(pid, x, y, g, k, s, truth, est.pose, pose_errors(truth, est.pose),
                                                   low_confidence=bool(est.low_confidence)))
            if progress:
                progress(pid, gi)
    return _report(cfg.solvers, records, skipped)


def _report(solvers, records, skipped):
    pooled, cdfs, failures = {}, {}, {}
    for s in solvers:
        mine = [r for r in records if r.solver == s]
        failures[s] = sum(not r.ok for r in mine)
        good = [r for r in mine if r.ok]
        if not good:
            continue
        pooled[s] = summarize(good)
        e = np.array([r.errors for r in good])
        for j, c in enumerate(COORDS):
            cdfs[(s, c)] = cdf(e[:, j])
    means = {}
    for r in records:
        if r.ok:
            means.setdefault((r.point_id, r.x, r.y, r.gamma_deg, r.solver), []).append(r.errors)
    point_means = [(*key, np.mean(v, axis=0)) for key, v in means.items()]
    return McReport(records, pooled, cdfs, point_means, skipped, failures)


def run_grid(cfg, progress=None):
    """Every floor grid point x every gamma in ``cfg`` x ``cfg.realizations``."""
    return _run(cfg, cfg.grid(), cfg.gammas_deg, progress)


def nine_points(cfg):
    """The nine first-quadrant study points, as offsets from the room centre."""
    cx, cy = cfg.center
    return [(cx + dx, cy + dy) for dx, dy in NINE_POINT_OFFSETS]


def run_nine_points(cfg, gammas=NINE_POINT_GAMMAS, progress=None):
    """The nine study points over a full gamma sweep (10 degree steps)."""
    return _run(cfg, nine_points(cfg), gammas, progress)


def run_robustness(cfg, sigma_cm, progress=None):
    """``run_grid`` with transmitter ``cfg.perturb_beacon`` misplaced in the
    solver's beacon table by N(0, sigma) per axis; the signals still come from
    the true position."""
    if not sigma_cm >= 0:
        raise ContractError(f"sigma must be >= 0, got {sigma_cm}")
    return run_grid(cfg.with_(sigma_cm=float(sigma_cm)), progress)


# -- CSV output --------------------------------------------------------------

def _atomic_csv(path, header, rows):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _g(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def write_report(report, out_dir):
    """records.csv, summary.csv, means.csv and one cdf_<coord>.csv per coordinate."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    rows = []
    for r in report.records:
        est = r.estimate.degrees() if r.estimate is not None else (None,) * 3
        pos = r.estimate.position if r.estimate is not None else (None,) * 3
        rows.append([
            r.point_id, _g(r.x), _g(r.y), _g(r.gamma_deg), r.trial, r.solver, r.status, int(r.low_confidence),
            *[_g(v) for v in pos], *[_g(v) for v in est], *[_g(v) for v in r.errors],
        ])
    paths.append(_atomic_csv(
        os.path.join(out_dir, "records.csv"),
        ["point_id", "x_m", "y_m", "gamma_deg", "trial", "solver", "status", "low_confidence",
         "est_x_m", "est_y_m", "est_z_m", "est_alpha_deg", "est_beta_deg", "est_gamma_deg",
         *[f"err_{c}_{u}" for c, u in zip(COORDS, UNITS)]],
        rows,
    ))
    rows = []
    for s, st in report.pooled.items():
        for j, (c, u) in enumerate(zip(COORDS, UNITS)):
            rows.append([s, c, u, _g(st.mean[j]), _g(st.median[j]), _g(st.std[j]), _g(st.p90[j]), st.n, st.outliers,
                         report.failures.get(s, 0)])
    paths.append(_atomic_csv(
        os.path.join(out_dir, "summary.csv"),
        ["solver", "coordinate", "unit", "mean_abs_error", "median_abs_error", "std_abs_error", "p90_abs_error",
         "n", "outliers", "failures"],
        rows,
    ))
    rows = []
    for pid, x, y, g, s, m in report.point_means:
        for c, v in zip(COORDS, m):
            rows.append([_g(x), _g(y), _g(g), s, c, _g(v)])
    paths.append(_atomic_csv(os.path.join(out_dir, "means.csv"),
                             ["x_m", "y_m", "gamma_deg", "solver", "coordinate", "mean_abs_error"], rows))
    for c in COORDS:
        rows = []
        for (s, cc), (v, f) in report.cdfs.items():
            if cc == c:
                rows.extend([s, _g(a), _g(b)] for a, b in zip(v, f))
        paths.append(_atomic_csv(os.path.join(out_dir, f"cdf_{c}.csv"), ["solver", "abs_error", "fraction"], rows))
    return paths
