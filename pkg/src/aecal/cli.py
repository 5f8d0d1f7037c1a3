"""Command-line workflow: simulate, detect, calibrate, summarize, predict, response, radiation.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import PROFILES, ExperimentConfig
from .errors import ConvergenceError, DomainError, PreconditionError
from .formats import read_csv, read_trace, write_csv
from .inference import COLUMNS, posterior_predictive
from .physics import SensorResponseParams, phase_delay, sensor_response_spectrum
from .pipeline import build_target, calibrate_sensor, channel_alpha, detect
from .radiation import pattern
from .signal import PickSet, TooFewBounces
from .synthetic import default_truth, generate_synthetic, trace_name, write_synthetic

log = logging.getLogger("aecal")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3

SUMMARY_HEADER = [
    "sensor_id", "alpha",
    "sigma_t2_mean_s2", "sigma_t2_std_s2",
    "v0_mean_m_s", "v0_std_m_s",
    "a_mean", "a_std",
    "omega_s_mean_khz", "omega_s_std_khz",
    "epsilon_mean_khz", "epsilon_std_khz",
    "c_gain_counts_m", "acceptance_rate", "min_ess",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _config(args) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.load(args.config, args.profile) if args.config else \
            ExperimentConfig.from_dict(profile=args.profile)
        if args.seed is not None:
            cfg = cfg.override(mcmc={"seed": args.seed})
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _sensor_list(args, cfg: ExperimentConfig, available=None) -> list[int]:
    known = [s.id for s in cfg.geometry.sensors]
    if args.sensors in (None, "all"):
        ids = sorted(available) if available is not None else known
    else:
        try:
            ids = [int(v) for v in args.sensors.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--sensors must be a comma-separated list of ids, got {args.sensors!r}") from None
        for sid in ids:
            if sid not in known:
                raise UsageError(f"unknown sensor id {sid}")
    if not ids:
        raise UsageError("empty sensor list")
    return ids


def _workers(n_jobs: int) -> int:
    cap = os.environ.get("AE_CAL_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise UsageError(f"AE_CAL_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(limit, n_jobs))


def _map(fn, jobs: list) -> list:
    n = _workers(len(jobs))
    if n == 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, jobs))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def picks_name(sensor_id: int) -> str:
    return f"picks_{sensor_id:02d}.csv"


def _trace_ids(trace_dir: Path) -> list[int]:
    return [int(p.stem.split("_")[1]) for p in sorted(trace_dir.glob("sensor_*.aetr"))]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _config(args)
    sensors = _sensor_list(args, cfg)
    truth = default_truth(cfg, args.v0, args.a, args.omega_s, args.epsilon)
    seed = cfg.mcmc["seed"]
    traces, manifest = generate_synthetic(cfg, truth, args.alpha, seed, sensors)
    out = _out_dir(args)
    write_synthetic(out, traces, manifest)
    cfg.dump(out / "config.json")
    log.info("wrote %d traces to %s", len(traces), out)
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _config(args)
    trace_dir = Path(args.traces)
    sensors = _sensor_list(args, cfg, _trace_ids(trace_dir))
    out = _out_dir(args)
    failed = 0
    for sid in sensors:
        tr = read_trace(trace_dir / trace_name(sid))
        try:
            picks = detect(tr, cfg)
        except TooFewBounces as exc:
            log.error("%s", exc)
            failed += 1
            continue
        (out / picks_name(sid)).write_text(picks.to_csv())
    if failed:
        log.error("%d channel(s) had fewer than 2 bounces", failed)
        return EXIT_DATA
    return EXIT_OK


def _calibrate_job(job) -> dict:
    sid, trace_path, picks_path, cfg_data, out = job
    cfg = ExperimentConfig(cfg_data)
    tr = read_trace(trace_path)
    picks = PickSet.from_csv(Path(picks_path).read_text())
    try:
        target, result = calibrate_sensor(tr, picks, cfg)
    except ConvergenceError as exc:
        return {"sensor_id": sid, "error": str(exc), "convergence": True}
    except (DomainError, PreconditionError) as exc:
        return {"sensor_id": sid, "error": str(exc), "convergence": False}
    out = Path(out)
    np.save(out / f"samples_{sid:02d}.npy", result.samples)
    np.save(out / f"logpost_{sid:02d}.npy", result.trace)
    write_csv(out / f"aligned_{sid:02d}.csv", ["bounce", "pick_s", "modeled_arrival_s"],
              [[k + 1, float(p), float(m)] for k, (p, m) in
               enumerate(zip(picks.arrivals, target.model.arrival_times))])
    s = result.summary
    row = [sid, channel_alpha(tr, target, cfg)]
    for name in ("sigma_t2",) + COLUMNS[:4]:
        row += [s.mean[name], s.std[name]]
    row += [s.c_gain, s.acceptance_rate, float(min(s.ess.values()))]
    write_csv(out / f"summary_{sid:02d}.csv", SUMMARY_HEADER, [row])
    return {"sensor_id": sid, "row": row}


def _merge_summaries(directory: Path, target: Path) -> int:
    rows = []
    for path in sorted(directory.glob("summary_[0-9]*.csv")):
        for rec in read_csv(path):
            rows.append([rec[h] for h in SUMMARY_HEADER])
    rows.sort(key=lambda r: int(r[0]))
    write_csv(target, SUMMARY_HEADER, rows)
    return len(rows)


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    trace_dir, picks_dir = Path(args.traces), Path(args.picks)
    sensors = _sensor_list(args, cfg, _trace_ids(trace_dir))
    out = _out_dir(args)
    jobs, skipped = [], 0
    for sid in sensors:
        tp, pp = trace_dir / trace_name(sid), picks_dir / picks_name(sid)
        if not tp.exists() or not pp.exists():
            log.warning("sensor %d: missing %s, skipped", sid, "trace" if not tp.exists() else "picks")
            skipped += 1
            continue
        jobs.append((sid, str(tp), str(pp), cfg.data, str(out)))
    results = _map(_calibrate_job, jobs)
    failures = [r for r in results if "error" in r]
    for r in failures:
        log.error("sensor %d: %s", r["sensor_id"], r["error"])
    n = _merge_summaries(out, out / "summary.csv")
    log.info("calibrated %d sensor(s); %d skipped, %d failed", n, skipped, len(failures))
    if any(r["convergence"] for r in failures):
        return EXIT_CONVERGENCE
    if len(results) == len(failures):
        return EXIT_DATA
    return EXIT_OK


def cmd_summarize(args) -> int:
    src = Path(args.calibration)
    target = Path(args.out)
    if target.suffix != ".csv":
        target.mkdir(parents=True, exist_ok=True)
        target = target / "summary.csv"
    n = _merge_summaries(src, target)
    if n == 0:
        log.error("no per-sensor summaries in %s", src)
        return EXIT_DATA
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    trace_dir, picks_dir, cal_dir = Path(args.traces), Path(args.picks), Path(args.calibration)
    available = [int(p.stem.split("_")[1]) for p in sorted(cal_dir.glob("samples_*.npy"))]
    sensors = _sensor_list(args, cfg, available)
    out = _out_dir(args)
    for sid in sensors:
        path = cal_dir / f"samples_{sid:02d}.npy"
        if not path.exists():
            raise DomainError(f"sensor {sid}: no posterior samples at {path}")
        samples = np.load(path)
        aligned = [float(r["modeled_arrival_s"]) for r in read_csv(cal_dir / f"aligned_{sid:02d}.csv")]
        tr = read_trace(trace_dir / trace_name(sid))
        picks = PickSet.from_csv((picks_dir / picks_name(sid)).read_text())
        target = build_target(tr, picks, cfg, arrivals=aligned)
        env = posterior_predictive(samples, target, min(args.m_draws, len(samples)))
        lo1, hi1 = env.band(1)
        lo2, hi2 = env.band(2)
        rows = []
        for k in range(env.mean.shape[0]):
            for j in range(env.mean.shape[1]):
                rows.append([k + 1, float(env.times[k, j]), float(env.observed[k, j]), float(env.mean[k, j]),
                             float(lo1[k, j]), float(hi1[k, j]), float(lo2[k, j]), float(hi2[k, j])])
        write_csv(out / f"envelope_{sid:02d}.csv",
                  ["bounce", "time_s", "observed", "mean", "lower_1sigma", "upper_1sigma",
                   "lower_2sigma", "upper_2sigma"], rows)
        write_csv(out / f"intervals_{sid:02d}.csv",
                  ["interval", "observed_s", "predicted_mean_s", "predicted_std_s", "predictive_std_s"],
                  [[k + 1, float(o), float(m), float(s), float(p)] for k, (o, m, s, p) in
                   enumerate(zip(env.interval_observed, env.interval_mean, env.interval_sd, env.interval_pred_sd))])
        log.info("sensor %d: 2-sigma coverage %.4f", sid, env.coverage(2))
    return EXIT_OK


def cmd_response(args) -> int:
    cfg = _config(args)
    if not 0 < args.fmin < args.fmax:
        raise UsageError("need 0 < --fmin < --fmax")
    rows = read_csv(args.summary)
    if not rows:
        raise DomainError(f"{args.summary} has no rows")
    out = _out_dir(args)
    freq = np.geomspace(args.fmin, args.fmax, args.n)
    omega = 2 * np.pi * freq
    conv = cfg.acquisition["frequency_convention"]
    for rec in rows:
        sid = int(rec["sensor_id"])
        c = float(rec["c_gain_counts_m"])
        p = SensorResponseParams(float(rec["omega_s_mean_khz"]), float(rec["epsilon_mean_khz"]), 1.0)
        amp = np.abs(sensor_response_spectrum(omega, p, conv))
        phase = phase_delay(omega, p, conv)
        write_csv(out / f"response_{sid:02d}.csv",
                  ["frequency_hz", "amplitude_per_c", "amplitude_counts_m", "phase_delay_rad"],
                  [[float(f), float(a), float(a * c), float(ph)] for f, a, ph in zip(freq, amp, phase)])
    return EXIT_OK


def cmd_radiation(args) -> int:
    cfg = _config(args)
    try:
        freqs = [float(v) for v in args.freqs.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--freqs must be comma-separated numbers, got {args.freqs!r}") from None
    if not freqs:
        raise UsageError("--freqs is empty")
    theta = np.linspace(0.0, np.pi / 2, args.n_theta, endpoint=False)
    rows = []
    for f in freqs:
        amp, singular = pattern(theta, f, args.radius, cfg.sample)
        for t, a, s in zip(theta, amp, singular):
            rows.append([float(t), float(f), float(a), float(np.cos(t)), int(s)])
    out = Path(args.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "radiation.csv"
    write_csv(out, ["theta_rad", "frequency_hz", "amplitude", "cosine", "singular"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="overrides mcmc.seed (also the synthetic noise seed)")
    common.add_argument("--profile", choices=sorted(PROFILES), help="chain length preset")
    common.add_argument("--out", default=".", help="output directory (or .csv file where noted)")
    common.add_argument("--sensors", help="comma-separated sensor ids, or 'all'")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="aecal", description="Acoustic-emission sensor calibration from ball bounces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic dataset")
    p.add_argument("--alpha", type=float, default=0.01, help="noise-to-signal power ratio")
    p.add_argument("--v0", type=float, default=1.31)
    p.add_argument("--a", type=float, default=0.61)
    p.add_argument("--omega-s", type=float, default=350.0, help="kHz")
    p.add_argument("--epsilon", type=float, default=20.0, help="kHz")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", parents=[common], help="pick bounce arrivals")
    p.add_argument("--traces", required=True, help="directory of sensor_XX.aetr files")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("calibrate", parents=[common], help="sample each sensor's posterior")
    p.add_argument("--traces", required=True)
    p.add_argument("--picks", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("summarize", parents=[common], help="merge per-sensor summaries")
    p.add_argument("--calibration", required=True, help="calibrate output directory")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("predict", parents=[common], help="posterior-predictive envelopes")
    p.add_argument("--traces", required=True)
    p.add_argument("--picks", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--m-draws", type=int, default=200)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("response", parents=[common], help="amplitude and phase response curves")
    p.add_argument("--summary", required=True, help="summary.csv from calibrate")
    p.add_argument("--fmin", type=float, default=1e3, help="Hz")
    p.add_argument("--fmax", type=float, default=1e7, help="Hz")
    p.add_argument("--n", type=int, default=400)
    p.set_defaults(func=cmd_response)

    p = sub.add_parser("radiation", parents=[common], help="transducer pattern vs cosine law")
    p.add_argument("--freqs", default="1e5,4e5,7e5,1e6", help="Hz, comma-separated")
    p.add_argument("--n-theta", type=int, default=91)
    p.add_argument("--radius", type=float, default=5e-3, help="sensor radius (m)")
    p.set_defaults(func=cmd_radiation)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"aecal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"aecal: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, PreconditionError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"aecal: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
