"""``cm`` command-line frontend.

Exit codes: 0 ok, 1 usage error, 2 file or parse error, 3 a BnB result was
not certified and ``--require-certificate`` was given.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import SearchCube, window_discs, write_disc_csv
from .events import (
    CameraIntrinsics,
    EventFormatError,
    EventWindow,
    GroundTruthTrack,
    load_calibration,
    load_events,
    load_ground_truth,
    random_scene,
    save_events,
    serialize_calibration,
    serialize_ground_truth,
    split_windows,
    synthesize,
)
from .image import KernelSpec, contrast, render_continuous, render_discrete, save_image
from .solvers import SolverConfig, error_metrics, grid_oracle, solve_bnb, solve_local, trace_csv

METHODS = ("bnb-discrete", "bnb-continuous", "local-gd", "local-reward", "grid")

RECORD_FIELDS = (
    "window_start", "window_duration", "wx", "wy", "wz", "contrast", "upper_bound",
    "method", "runtime", "iterations", "certified",
)

# solver options that may come from flags, a config file, or these defaults
DEFAULTS = {
    "method": "bnb-discrete",
    "window": 0.010,
    "rmax": 20.0,
    "tau": None,
    "tau_rel": 1e-2,
    "sigma": 1.0,
    "truncation": 6.0,
    "max_iter": 10**6,
    "grid_steps": 41,
    "warm_start": False,
    "parallel": False,
    "require_certificate": False,
    "undistort": False,
}
_BOOL_KEYS = {"warm_start", "parallel", "require_certificate", "undistort"}
_INT_KEYS = {"max_iter", "grid_steps"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def parse_vector(text: str) -> np.ndarray:
    parts = text.replace(" ", "").split(",")
    if len(parts) != 3:
        raise UsageError(f"expected wx,wy,wz, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise UsageError(f"expected wx,wy,wz, got {text!r}") from None


def parse_sensor(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise UsageError(f"expected WxH, got {text!r}") from None


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        val = val.strip()
        if not sep or key not in DEFAULTS:
            raise EventFormatError(f"unknown config entry {line!r}", lineno)
        try:
            if key in _BOOL_KEYS:
                out[key] = val.lower() in ("1", "true", "yes", "on")
            elif key in _INT_KEYS:
                out[key] = int(float(val))
            elif key == "method":
                out[key] = val
            else:
                out[key] = float(val)
        except ValueError:
            raise EventFormatError(f"bad value for {key}: {val!r}", lineno) from None
    return out


def resolve_options(args) -> dict:
    """Flags override the config file, which overrides the defaults."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    opts = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        opts[key] = flag if flag is not None else conf.get(key, default)
    if opts["method"] not in METHODS:
        raise UsageError(f"unknown method {opts['method']!r}; choose from {', '.join(METHODS)}")
    if opts["window"] <= 0:
        raise UsageError("--window must be positive")
    return opts


def make_config(opts: dict, mode: str = "discrete") -> SolverConfig:
    try:
        return SolverConfig(
            r_max=opts["rmax"], tau=opts["tau"], tau_rel=opts["tau_rel"], mode=mode,
            kernel=KernelSpec(opts["sigma"], opts["truncation"]),
            max_iterations=opts["max_iter"], parallel=opts["parallel"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def run_method(method: str, window: EventWindow, intr: CameraIntrinsics, opts: dict, omega_init=None) -> dict:
    """Run one solver on one window and return a record dict (plus the result)."""
    if method.startswith("bnb-"):
        res = solve_bnb(window, intr, make_config(opts, method[4:]))
        omega, c, ub = res.omega, res.contrast, res.upper_bound_at_exit
        runtime, iters, cert = res.runtime, res.iterations, res.certified
    elif method == "grid":
        import time

        start = time.perf_counter()
        omega, c = grid_oracle(window, intr, make_config(opts), opts["grid_steps"])
        ub, runtime, iters, cert, res = None, time.perf_counter() - start, opts["grid_steps"] ** 3, False, None
    else:
        kind = "contrast" if method == "local-gd" else "reward"
        res = solve_local(window, intr, make_config(opts, "continuous"), kind, omega_init)
        omega, c, ub = res.omega, res.contrast, None
        runtime, iters, cert = res.runtime, res.iterations, False
    return {
        "window_start": window.source_offset, "window_duration": window.t_max,
        "omega": np.asarray(omega, dtype=float), "contrast": c, "upper_bound": ub, "method": method,
        "runtime": runtime, "iterations": iters, "certified": cert, "result": res,
    }


def write_records(records, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in sorted(records, key=lambda r: (r["window_start"], r["method"])):
        w.writerow([
            fmt(r["window_start"]), fmt(r["window_duration"]), *(fmt(v) for v in r["omega"]),
            fmt(r["contrast"]), "" if r["upper_bound"] is None else fmt(r["upper_bound"]),
            r["method"], fmt(r["runtime"]), int(r["iterations"]), "true" if r["certified"] else "false",
        ])


def read_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"window_start", "wx", "wy", "wz", "method"} - set(reader.fieldnames or ())
        if missing:
            raise EventFormatError(f"records file lacks columns: {', '.join(sorted(missing))}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append({
                    "window_start": float(row["window_start"]),
                    "window_duration": float(row.get("window_duration") or 0.0),
                    "omega": np.array([float(row["wx"]), float(row["wy"]), float(row["wz"])]),
                    "method": row["method"],
                })
            except (TypeError, ValueError):
                raise EventFormatError("bad record", lineno) from None
    return out


def _load_inputs(args, opts):
    intr = load_calibration(args.calib)
    events = load_events(args.events, intr, undistort=opts["undistort"])
    if not events:
        raise EventFormatError("event file contains no events")
    return intr, events


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_estimate(args) -> int:
    opts = resolve_options(args)
    intr, events = _load_inputs(args, opts)
    windows = split_windows(events, opts["window"])
    records = []
    prev = None
    for k, win in enumerate(windows):
        init = prev if (opts["warm_start"] and prev is not None) else None
        rec = run_method(opts["method"], win, intr, opts, init)
        prev = rec["omega"]
        records.append(rec)
        if args.trace and rec["result"] is not None and rec["result"].trace:
            path = Path(args.trace)
            if len(windows) > 1:
                path = path.with_name(f"{path.stem}_{k:04d}{path.suffix}")
            path.write_text(trace_csv(rec["result"].trace))
        if args.debug_discs and opts["method"].startswith("bnb-"):
            root = SearchCube(np.zeros(3), opts["rmax"])
            write_disc_csv(window_discs(root, win, intr), Path(args.debug_discs) / f"discs_{k:04d}.csv")
    out = _open_out(args.out)
    try:
        write_records(records, out)
    finally:
        if out is not sys.stdout:
            out.close()
    if opts["require_certificate"] and opts["method"].startswith("bnb-"):
        if not all(r["certified"] for r in records):
            print("error: at least one window was not certified", file=sys.stderr)
            return 3
    return 0


def cmd_bound_trace(args) -> int:
    opts = resolve_options(args)
    if not opts["method"].startswith("bnb-"):
        raise UsageError("bound-trace needs a bnb-* method")
    intr, events = _load_inputs(args, opts)
    windows = split_windows(events, opts["window"])
    if not 0 <= args.index < len(windows):
        raise UsageError(f"window index {args.index} out of range (have {len(windows)})")
    rec = run_method(opts["method"], windows[args.index], intr, opts)
    text = trace_csv(rec["result"].trace)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if opts["require_certificate"] and not rec["certified"]:
        return 3
    return 0


def cmd_render(args) -> int:
    intr = load_calibration(args.calib)
    events = load_events(args.events, intr, undistort=bool(args.undistort))
    if not events:
        raise EventFormatError("event file contains no events")
    if args.window is not None:
        windows = split_windows(events, args.window)
        if not 0 <= args.index < len(windows):
            raise UsageError(f"window index {args.index} out of range (have {len(windows)})")
        win = windows[args.index]
    else:
        win = EventWindow.from_events(events, t_max=events[-1].t)
    omega = parse_vector(args.omega)
    if args.mode == "discrete":
        image = render_discrete(win, omega, intr)
    else:
        image = render_continuous(win, omega, intr, KernelSpec(args.sigma, args.truncation))
    try:
        sidecar = save_image(image, args.out, contrast(image))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"wrote {args.out} (contrast {contrast(image):.6g}, sidecar {sidecar})")
    return 0


def evaluate(records, truth: GroundTruthTrack, interp: bool = False, deg: bool = False):
    """Per-method mean / population std of the full and rate-only errors.

    Returns ``(rows, skipped)``; rows are (method, n, mean_eps, mean_phi,
    std_eps, std_phi).
    """
    scale = 180.0 / math.pi if deg else 1.0
    errs: dict[str, list] = {}
    skipped = []
    for r in records:
        start, dur = r["window_start"], r["window_duration"]
        inside = (truth.times >= start) & (truth.times <= start + dur)
        if not inside.any():
            skipped.append(r)
            continue
        mid = start + 0.5 * dur
        gt = truth.interpolate(mid) if interp else truth.omegas[truth.nearest_index(mid)]
        errs.setdefault(r["method"], []).append(error_metrics(gt, r["omega"]))
    rows = []
    for method in sorted(errs):
        e = np.asarray(errs[method]) * scale
        rows.append((method, len(e), *e.mean(axis=0), *e.std(axis=0)))
    return rows, skipped


def cmd_eval(args) -> int:
    records = read_records(args.records)
    truth = load_ground_truth(args.truth)
    rows, skipped = evaluate(records, truth, args.interp, args.deg)
    for r in skipped:
        print(f"warning: no ground truth inside window starting at {r['window_start']!r} ({r['method']}); excluded",
              file=sys.stderr)
    unit = "deg/s" if args.deg else "rad/s"
    header = ("method", "windows", "mean_eps", "mean_phi", "std_eps", "std_phi")
    cells = [header] + [(m, str(n), *(f"{v:.4f}" for v in vals)) for m, n, *vals in rows]
    widths = [max(len(c[k]) for c in cells) for k in range(len(header))]
    print(f"errors in {unit}")
    for c in cells:
        print("  ".join(s.ljust(wd) if k == 0 else s.rjust(wd) for k, (s, wd) in enumerate(zip(c, widths))))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header + ("unit",))
            for m, n, *vals in rows:
                w.writerow([m, n, *(fmt(v) for v in vals), unit])
    return 0


def cmd_synth(args) -> int:
    width, height = parse_sensor(args.sensor)
    focal = args.focal if args.focal is not None else float(width)
    intr = CameraIntrinsics(focal, focal, (width - 1) / 2, (height - 1) / 2, width, height)
    omega = parse_vector(args.omega)
    rng = np.random.default_rng(args.seed)
    try:
        scene = random_scene(args.points, intr, rng, margin=args.margin)
        win, _ = synthesize(scene, omega, intr, args.duration, args.rate, args.noise, rng)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    save_events(args.out_events, win.events)
    n = max(2, int(round(args.duration / args.truth_step)) + 1)
    times = np.linspace(0.0, args.duration, n)
    Path(args.out_truth).write_text(serialize_ground_truth(GroundTruthTrack(times, np.tile(omega, (n, 1)))))
    calib = args.out_calib or str(args.out_events) + ".calib"
    Path(calib).write_text(serialize_calibration(intr))
    print(f"wrote {len(win)} events to {args.out_events}, truth to {args.out_truth}, calibration to {calib}")
    return 0


def _add_solver_flags(p):
    p.add_argument("--events", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--config", help="key=value file; flags take precedence")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--window", type=float, default=None, help="window length in seconds")
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--tau", type=float, default=None, help="absolute gap")
    p.add_argument("--tau-rel", dest="tau_rel", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--truncation", type=float, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--grid-steps", dest="grid_steps", type=int, default=None)
    p.add_argument("--parallel", action="store_true", default=None)
    p.add_argument("--undistort", action="store_true", default=None)
    p.add_argument("--require-certificate", dest="require_certificate", action="store_true", default=None)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cm", description="Rotational motion from events by contrast maximisation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("estimate", help="estimate omega per window")
    _add_solver_flags(p)
    p.add_argument("--warm-start", dest="warm_start", action="store_true", default=None)
    p.add_argument("--trace")
    p.add_argument("--debug-discs", dest="debug_discs", help="directory for root-cube disc dumps")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bound-trace", help="bound evolution of one BnB run")
    _add_solver_flags(p)
    p.add_argument("--index", type=int, default=0, help="which window")
    p.set_defaults(func=cmd_bound_trace)

    p = sub.add_parser("render", help="write a motion-compensated event image")
    p.add_argument("--events", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--omega", required=True, help="wx,wy,wz")
    p.add_argument("--mode", choices=("discrete", "continuous"), default="discrete")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--truncation", type=float, default=6.0)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--undistort", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="error table against ground truth")
    p.add_argument("--records", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--deg", action="store_true")
    p.add_argument("--interp", action="store_true", help="interpolate truth instead of nearest sample")
    p.add_argument("--out", help="CSV copy of the table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="synthetic events with known rotation")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--omega", required=True)
    p.add_argument("--sensor", default="64x64")
    p.add_argument("--focal", type=float, default=None, help="pixels; defaults to the sensor width")
    p.add_argument("--duration", type=float, default=0.01)
    p.add_argument("--rate", type=float, default=5000.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--truth-step", dest="truth_step", type=float, default=0.001)
    p.add_argument("--out-events", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--out-calib")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, EventFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
