"""``qadapose`` command-line entry point.

Every command writes ``manifest.json`` into ``--out`` before it computes
anything. The manifest holds the resolved configuration text and the master
seed, so ``--config <out>/config.ini --seed <seed>`` reproduces a run.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .calib import estimate_calibration, read_observations
from .config import ScenarioConfig
from .errors import CaptureFormatError, ConfigError, ContractError, NumericalError
from .experiments import (
    COORDS, UNITS, ErrorRecord, _report, run_grid, run_nine_points, run_robustness, write_report,
)
from .geometry import Pose
from .pipeline import locate
from .pnp import METHODS
from .signals import QadaCapture, synthesize_capture

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _resolve(args):
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    if args.paper_scale:
        cfg = cfg.paper_scale()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.snr_db is not None:
        kw["snr_db"] = args.snr_db
    if args.solver is not None:
        kw["solvers"] = METHODS if args.solver == "all" else (args.solver,)
    return cfg.with_(**kw) if kw else cfg


def _manifest(args, cfg, outputs):
    os.makedirs(args.out, exist_ok=True)
    cfg_path = _atomic_write(os.path.join(args.out, "config.ini"), cfg.to_text())
    doc = {
        "command": args.command,
        "argv": sys.argv[1:],
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_text(),
        "config_path": cfg_path,
        "outputs": [os.path.join(args.out, o) for o in outputs],
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    _atomic_write(os.path.join(args.out, "manifest.json"), json.dumps(doc, indent=2) + "\n")
    return doc


def _pose_arg(values):
    if len(values) not in (3, 6):
        raise ConfigError("--pose takes x y z [alpha beta gamma]", key="pose")
    return Pose.from_degrees(*values)


def _pose_dict(pose):
    a, b, g = pose.degrees()
    return {"x_m": pose.x, "y_m": pose.y, "z_m": pose.z, "alpha_deg": a, "beta_deg": b, "gamma_deg": g}


# -- commands ----------------------------------------------------------------

def cmd_simulate(args, cfg):
    pose = _pose_arg(args.pose)
    _manifest(args, cfg, ["capture.csv", "capture.csv.hdr"])
    cap = synthesize_capture(cfg.beacons(), pose, cfg.calibration, cfg.codebook(), cfg.snr_db,
                             amp_model=cfg.amp_model, seed=cfg.seed, lambertian_order=cfg.lambertian_order)
    path = os.path.join(args.out, "capture.csv")
    fd, tmp = tempfile.mkstemp(dir=args.out, prefix=".tmp-", suffix=".csv")
    os.close(fd)
    cap.save(tmp)
    os.replace(tmp + ".hdr", path + ".hdr")
    os.replace(tmp, path)
    print(f"wrote {path} ({cap.sample_count} samples)")
    return EXIT_OK


def cmd_solve(args, cfg):
    if (args.capture is None) == (args.pose is None):
        raise ConfigError("solve needs exactly one of --capture or --pose", key="capture")
    solvers = cfg.solvers if args.solver else ("ippe",)
    _manifest(args, cfg, ["solve.json"])
    book = cfg.codebook()
    beacons = cfg.beacons()
    truth = None
    if args.capture is not None:
        cap = QadaCapture.load(args.capture)
    else:
        truth = _pose_arg(args.pose)
        cap = synthesize_capture(beacons, truth, cfg.calibration, book, cfg.snr_db, amp_model=cfg.amp_model,
                                 seed=cfg.seed, lambertian_order=cfg.lambertian_order)
    results = {}
    for s in solvers:
        est = locate(cap, beacons, cfg.calibration, book, solver=s, detector=cfg.detector, rule=cfg.ratio_rule,
                     strict=not args.allow_low_confidence)
        results[s] = {
            "pose": _pose_dict(est.pose),
            "image_mm": {str(i): list(map(float, p)) for i, p in zip(beacons.ids, est.image_mm)},
            "reproj_rms_mm": est.solution.reproj_rms,
            "low_confidence": list(est.low_confidence),
            "diagnostics": {k: v for k, v in est.solution.diagnostics.items() if isinstance(v, (str, int, float))},
        }
        p = est.pose
        print(f"{s:>5}: x={p.x:.4f} y={p.y:.4f} z={p.z:.4f} m  "
              f"alpha={p.degrees()[0]:.3f} beta={p.degrees()[1]:.3f} gamma={p.degrees()[2]:.3f} deg  "
              f"rms={est.solution.reproj_rms:.3g} mm")
    doc = {"truth": _pose_dict(truth) if truth else None, "results": results}
    _atomic_write(os.path.join(args.out, "solve.json"), json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _mc_outputs():
    return ["records.csv", "summary.csv", "means.csv"] + [f"cdf_{c}.csv" for c in COORDS]


def _print_summary(report):
    print(f"{'solver':>8} {'coord':>6} {'mean':>9} {'median':>9} {'p90':>9}  unit")
    for s, st in report.pooled.items():
        for j, (c, u) in enumerate(zip(COORDS, UNITS)):
            print(f"{s:>8} {c:>6} {st.mean[j]:9.3f} {st.median[j]:9.3f} {st.p90[j]:9.3f}  {u}")
    fails = {s: n for s, n in report.failures.items() if n}
    if fails or report.skipped:
        print(f"failures: {fails}  skipped poses: {len(report.skipped)}")


def cmd_mc_grid(args, cfg):
    _manifest(args, cfg, _mc_outputs())
    rep = run_grid(cfg)
    write_report(rep, args.out)
    _print_summary(rep)
    return EXIT_OK


def cmd_mc_nine(args, cfg):
    _manifest(args, cfg, _mc_outputs())
    rep = run_nine_points(cfg)
    write_report(rep, args.out)
    _print_summary(rep)
    return EXIT_OK


def cmd_mc_robust(args, cfg):
    sigmas = args.sigma_cm or [cfg.sigma_cm]
    outputs = [os.path.join(f"sigma_{s:g}", o) for s in sigmas for o in _mc_outputs()]
    _manifest(args, cfg, outputs)
    for s in sigmas:
        rep = run_robustness(cfg, s)
        write_report(rep, os.path.join(args.out, f"sigma_{s:g}"))
        print(f"sigma = {s:g} cm")
        _print_summary(rep)
    return EXIT_OK


def cmd_calibrate(args, cfg):
    _manifest(args, cfg, ["calibration.ini"])
    beacons = cfg.beacons()
    obs = read_observations(args.obs, beacons.ids)
    res = estimate_calibration(obs, beacons, cfg.calibration, free_h_ap=args.free_h_ap)
    text = (f"# gauge: {res.gauge}\n# objective_mm2 = {res.objective!r}\n"
            f"# best_seed lambda, delta = {res.best_seed[0]:g}, {res.best_seed[1]:g}\n" + res.params.to_text())
    _atomic_write(os.path.join(args.out, "calibration.ini"), text)
    print(text, end="")
    return EXIT_OK


def cmd_report(args, cfg):
    path = os.path.join(args.run, "records.csv")
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
    except (OSError, ValueError) as exc:
        raise CaptureFormatError(f"{path}: {exc}") from None
    data = np.atleast_1d(data)
    need = ["point_id", "x_m", "y_m", "gamma_deg", "trial", "solver", "status"]
    names = data.dtype.names or ()
    for n in need + [f"err_{c}_{u}" for c, u in zip(COORDS, UNITS)]:
        if n not in names:
            raise CaptureFormatError(f"{path}: missing column '{n}'")
    records = []
    for row in data:
        err = np.array([float(row[f"err_{c}_{u}"]) for c, u in zip(COORDS, UNITS)])
        records.append(ErrorRecord(int(row["point_id"]), float(row["x_m"]), float(row["y_m"]),
                                   float(row["gamma_deg"]), int(row["trial"]), str(row["solver"]), None, None, err,
                                   status=str(row["status"])))
    solvers = tuple(dict.fromkeys(r.solver for r in records))
    _print_summary(_report(solvers, records, []))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "mc-grid": cmd_mc_grid,
    "mc-nine": cmd_mc_nine,
    "mc-robust": cmd_mc_robust,
    "calibrate": cmd_calibrate,
    "report": cmd_report,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (key = value sections)")
    common.add_argument("--seed", type=int, help="master seed; overrides the config")
    common.add_argument("--solver", choices=(*METHODS, "all"), help="PnP solver(s); overrides the config")
    common.add_argument("--snr-db", type=float, help="sum-channel SNR in dB; overrides the config")
    common.add_argument("--out", default="qadapose-out", help="output directory")
    common.add_argument("--paper-scale", action="store_true", help="0.10 m grid and 50 trials per pose")

    p = argparse.ArgumentParser(prog="qadapose", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="synthesize one capture")
    s.add_argument("--pose", type=float, nargs="+", required=True, metavar="V", help="x y z [alpha beta gamma] (m, deg)")

    s = sub.add_parser("solve", parents=[common], help="estimate the pose from a capture")
    s.add_argument("--capture", help="capture CSV written by 'simulate'")
    s.add_argument("--pose", type=float, nargs="+", metavar="V", help="synthesize at this pose instead")
    s.add_argument("--allow-low-confidence", action="store_true", help="report weak correlation peaks, do not fail")

    sub.add_parser("mc-grid", parents=[common], help="floor-grid Monte Carlo study")
    sub.add_parser("mc-nine", parents=[common], help="nine-point gamma sweep")
    s = sub.add_parser("mc-robust", parents=[common], help="transmitter-position perturbation study")
    s.add_argument("--sigma-cm", type=float, nargs="+", help="perturbation std dev(s) in cm")

    s = sub.add_parser("calibrate", parents=[common], help="fit receiver calibration to observations")
    s.add_argument("--obs", required=True, help="observations CSV")
    s.add_argument("--free-h-ap", action="store_true", help="estimate h_ap and hold lambda instead")

    s = sub.add_parser("report", parents=[common], help="re-summarize a Monte Carlo run directory")
    s.add_argument("run", help="directory holding records.csv")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ContractError) as exc:
        key = getattr(exc, "key", None)
        print(f"qadapose: configuration error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qadapose: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"qadapose: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
