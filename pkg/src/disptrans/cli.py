"""Command-line front end: ``disptrans segment | estimate-roll | synth | eval``.

Exit codes: 0 success, 2 input error, 3 degenerate geometry,
4 non-convergence (only raised in ``--strict`` mode), 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import QuadraticRoadModel
from .errors import (DegenerateGeometryError, DegenerateHistogramError, DisptransError,
                     EmptyInputError, InsufficientDataError, NonConvergenceError,
                     RasterFormatError, SizeError, UnderdeterminedError)
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .raster_io import (DEFAULT_PGM_SCALE, atomic_write, guess_format, mask_to_rle,
                        read_disparity, write_disparity, write_json, write_mask_png,
                        write_rgb_png)
from .rollest import estimate_roll_gss, scan_energy_curve
from .synth import Inset, SyntheticSpec, ground_truth_labels, render, run_accuracy_sweep

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("disptrans")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    if isinstance(exc, (RasterFormatError, SizeError, EmptyInputError, OSError)):
        return EXIT_INPUT
    if isinstance(exc, (DegenerateGeometryError, UnderdeterminedError, DegenerateHistogramError,
                        InsufficientDataError)):
        return EXIT_DEGENERATE
    if isinstance(exc, NonConvergenceError):
        return EXIT_NONCONVERGENCE
    if isinstance(exc, (ValueError, argparse.ArgumentTypeError)):
        return EXIT_INPUT
    return EXIT_FAILURE


# --- configuration -----------------------------------------------------------

_CONFIG_FLAGS = {
    # key: (flag, help)
    "gamma_lo": ("--gamma-lo", "lower end of the roll search bracket (rad)"),
    "gamma_hi": ("--gamma-hi", "upper end of the roll search bracket (rad)"),
    "tol": ("--tol", "roll search termination width (rad)"),
    "k": ("--k", "golden section factor"),
    "coarse_scan_steps": ("--coarse-scan-steps", "exhaustive pre-scan points, 0 for bare search"),
    "bin_width": ("--bin-width", "v-disparity bin width"),
    "smoothness": ("--smoothness", "DP penalty per bin of jump"),
    "ransac_iterations": ("--ransac-iterations", "RANSAC hypotheses N"),
    "sample_size": ("--sample-size", "samples per RANSAC hypothesis t"),
    "inlier_tol": ("--inlier-tol", "RANSAC inlier band (disparity units)"),
    "ransac_select": ("--ransac-select", "keep hypothesis with 'largest' or 'smallest' inlier ratio"),
    "rng_seed": ("--rng-seed", "RANSAC seed"),
    "delta": ("--delta", "offset added to transformed disparities"),
    "otsu_bins": ("--otsu-bins", "Otsu histogram bins"),
    "min_contrast": ("--min-contrast", "residual spread below which every valid pixel is road"),
}
_BOOL_FLAGS = {
    "refine_pixels": ("--refine-pixels", "polish the road model on levelled pixels"),
    "strict_segmentation": ("--strict-segmentation", "threshold raw transformed values"),
    "strict": ("--strict", "treat RANSAC non-convergence as an error (exit 4)"),
}


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration (flags override --config)")
    g.add_argument("--config", type=Path, help="TOML file of key = value pipeline settings")
    types = PipelineConfig.keys()
    for key, (flag, help_) in _CONFIG_FLAGS.items():
        g.add_argument(flag, dest=key, type=types[key], default=argparse.SUPPRESS, help=help_)
    for key, (flag, help_) in _BOOL_FLAGS.items():
        g.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction,
                       default=argparse.SUPPRESS, help=help_)


def load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise RasterFormatError(f"{args.config}: unreadable config ({exc})") from None
        try:
            cfg = cfg.updated(**data)
        except KeyError as exc:
            raise RasterFormatError(f"{args.config}: {exc.args[0]}") from None
    flags = {k: v for k, v in vars(args).items() if k in PipelineConfig.keys()}
    return cfg.updated(**flags)


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path, help="disparity map (.pfm, .pgm or .csv)")
    p.add_argument("--format", choices=("pfm", "pgm", "csv"), help="override format detection")
    p.add_argument("--invalid-marker", type=float,
                   help="disparity value meaning 'no match' (default 0 for PFM/PGM)")
    p.add_argument("--pgm-scale", type=float, default=DEFAULT_PGM_SCALE,
                   help="PGM raw values are divided by this to get disparities")


def _read_input(args):
    return read_disparity(args.input, args.format, args.invalid_marker, args.pgm_scale)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--alpha", type=float, nargs=3, default=(100.0, 0.3, 0.1),
                   metavar=("A0", "A1", "A2"), help="road profile d(v) = A0 + A1 v + A2 v^2")
    p.add_argument("--kappa", type=float, default=0.0, help="noise scale")
    p.add_argument("--noise", choices=("uniform", "gaussian"), default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inset", action="append", default=[], metavar="U0,V0,U1,V1,OFFSET",
                   help="rectangle of the level road offset in disparity (repeatable)")
    p.add_argument("--quantize", type=float, help="round disparities to this step")


def _parse_inset(text: str) -> Inset:
    try:
        u0, v0, u1, v1, off = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad inset {text!r}, expected U0,V0,U1,V1,OFFSET") from None
    return Inset(u0, v0, u1, v1, off)


def _spec_from_args(args, gamma: float = 0.0) -> SyntheticSpec:
    return SyntheticSpec(args.width, args.height, QuadraticRoadModel(*args.alpha), gamma, args.kappa,
                         args.seed, tuple(_parse_inset(s) for s in args.inset), args.noise,
                         args.quantize)


def _write_rows_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with atomic_write(path, "w") as fh:
        fh.write(buf.getvalue())


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_suffix(suffix)


# --- subcommands -------------------------------------------------------------

def cmd_segment(args) -> int:
    from .plotting import overlay_rgb, plot_vdisparity

    cfg = load_config(args)
    disp = _read_input(args)
    res = run_pipeline(disp, cfg)

    prefix = str(args.output_prefix)
    fmt = args.format or guess_format(args.input)
    report = res.report(cfg)
    report["input"] = str(args.input)
    outputs = {
        "mask_png": f"{prefix}_mask.png",
        "mask_rle": f"{prefix}_mask.json",
        "transformed": f"{prefix}_transformed.{fmt}",
        "overlay_png": f"{prefix}_overlay.png",
        "vdisparity_png": f"{prefix}_vdisparity.png",
        "path_csv": f"{prefix}_path.csv",
        "model_json": f"{prefix}_model.json",
        "report": f"{prefix}_report.json",
    }
    report["outputs"] = outputs

    write_mask_png(outputs["mask_png"], res.mask.road)
    write_json(outputs["mask_rle"], mask_to_rle(res.mask.road))
    write_disparity(outputs["transformed"], res.transformed, fmt, args.pgm_scale)
    write_rgb_png(outputs["overlay_png"], overlay_rgb(disp, res.mask.road))
    plot_vdisparity(res.histogram, outputs["vdisparity_png"], res.path, res.model)
    _write_rows_csv(outputs["path_csv"], ["v", "d"], res.path.entries)
    write_json(outputs["model_json"], {"schema": 1, "frame": "levelled rows", **res.model.to_dict(),
                                       "gamma_rad": res.roll.gamma})
    write_json(outputs["report"], report)

    print(f"gamma = {res.roll.gamma:.8f} rad ({math.degrees(res.roll.gamma):.5f} deg), "
          f"E_min = {res.roll.e_min:.6g}")
    print("alpha = ({:.6g}, {:.6g}, {:.6g}), threshold = {:.6g}".format(*res.model.coefficients,
                                                                         res.mask.threshold))
    print(f"road pixels {report['road_pixels']} / {report['valid_pixels']} valid; "
          f"{res.timings['total']:.2f} s")
    if cfg.strict and not res.ransac.converged:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_estimate_roll(args) -> int:
    cfg = load_config(args)
    disp = _read_input(args)
    est = estimate_roll_gss(disp, cfg.gss)
    report = {
        "schema": 1,
        "input": str(args.input),
        "gamma_rad": est.gamma,
        "gamma_deg": math.degrees(est.gamma),
        "e_min": est.e_min,
        "iterations": est.iterations,
        "evaluations": est.evaluations,
        "flat": est.flat,
    }
    if args.curve:
        from .plotting import plot_energy_curve

        curve = scan_energy_curve(disp, args.curve_step, cfg.gamma_lo, cfg.gamma_hi)
        _write_rows_csv(args.curve, ["gamma", "e_min"], [(repr(g), repr(e)) for g, e in curve])
        plot_energy_curve(curve, _sibling(args.curve, ".png"), est)
        gmin = min(curve, key=lambda c: c[1])[0]
        report["curve"] = {"path": str(args.curve), "rows": len(curve), "step": args.curve_step,
                           "argmin_gamma_rad": gmin}
    if args.report:
        write_json(args.report, report)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_synth(args) -> int:
    gamma = math.radians(args.gamma_deg) if args.gamma_deg is not None else args.gamma
    spec = _spec_from_args(args, gamma)
    disp = render(spec)
    write_disparity(args.output, disp, args.format, args.pgm_scale)
    if args.labels:
        write_mask_png(args.labels, ground_truth_labels(spec))
    print(f"wrote {spec.width}x{spec.height} map, gamma = {gamma:.8f} rad, "
          f"{disp.n_valid} valid pixels -> {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args)
    base = _spec_from_args(args)
    lo = args.lo if args.lo is not None else -math.pi / 4
    hi = args.hi if args.hi is not None else math.pi / 4
    gammas = np.linspace(lo, hi, args.angles)
    report = run_accuracy_sweep(base, gammas, cfg.gss)

    from .plotting import plot_sweep

    path = Path(args.report_path)
    payload = {"schema": 1, "kappa": base.kappa, "noise": base.noise, "seed": base.seed,
               "width": base.width, "height": base.height, "alpha": list(base.model.coefficients),
               "tol": cfg.tol, "coarse_scan_steps": cfg.coarse_scan_steps, **report.to_dict()}
    write_json(path, payload)
    _write_rows_csv(_sibling(path, ".csv"), ["gamma_true", "gamma_est", "epsilon", "e_min", "error"],
                    [(repr(r.gamma_true), repr(r.gamma_est), repr(r.epsilon), repr(r.e_min),
                      r.error or "") for r in report.records])
    plot_sweep(report, _sibling(path, ".png"))

    print(f"{'angles':>8} {'kappa':>6} {'mean eps (rad)':>15} {'max eps (rad)':>14} "
          f"{'mean (deg)':>11} {'max (deg)':>10} {'failed':>6} {'time (s)':>8}")
    print(f"{len(report.records):>8d} {base.kappa:>6g} {report.mean_error:>15.3e} {report.max_error:>14.3e} "
          f"{math.degrees(report.mean_error):>11.3e} {math.degrees(report.max_error):>10.3e} "
          f"{report.n_failed:>6d} {report.seconds:>8.1f}")
    return EXIT_OK if report.n_failed == 0 else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disptrans", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="estimate roll and road model, transform and segment a map")
    _add_input_args(p)
    p.add_argument("output_prefix", type=Path, help="prefix for every output file")
    _add_config_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("estimate-roll", help="estimate the roll angle of a disparity map")
    _add_input_args(p)
    p.add_argument("--curve", type=Path, help="also write the exhaustive energy curve as CSV (+ PNG)")
    p.add_argument("--curve-step", type=float, default=math.pi / 180, help="curve step (rad)")
    p.add_argument("--report", type=Path, help="write the JSON report here as well as to stdout")
    _add_config_args(p)
    p.set_defaults(func=cmd_estimate_roll)

    p = sub.add_parser("synth", help="write a synthetic rolled road disparity map")
    p.add_argument("output", type=Path)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, default=0.0, help="roll angle (rad)")
    g.add_argument("--gamma-deg", type=float, help="roll angle (deg)")
    _add_model_args(p)
    p.add_argument("--format", choices=("pfm", "pgm", "csv"))
    p.add_argument("--pgm-scale", type=float, default=DEFAULT_PGM_SCALE)
    p.add_argument("--labels", type=Path, help="also write the ground-truth road mask PNG")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="roll-accuracy sweep over synthetic maps")
    p.add_argument("report_path", type=Path, help="JSON report; .csv and .png are written alongside")
    p.add_argument("--angles", type=int, default=65, help="number of roll angles")
    p.add_argument("--lo", type=float, help="smallest angle (rad, default -pi/4)")
    p.add_argument("--hi", type=float, help="largest angle (rad, default pi/4)")
    _add_model_args(p)
    _add_config_args(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DisptransError, OSError, ValueError, argparse.ArgumentTypeError) as exc:
        where = f"[{exc.stage}] " if isinstance(exc, PipelineError) else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
