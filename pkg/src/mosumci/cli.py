"""Command line interface: ``mosumci detect | ci | simulate | limits``.

Every command writes one JSON document ``{schema_version, result, manifest}``.
``result`` depends only on the inputs and the seed; ``manifest`` records how
the run was made (command, inputs, configuration, outputs, version, time).

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import re
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, bootstrap_confidence_intervals
from .detection import DetectionResult, detect_multiscale, detect_single_scale
from .errors import ConfigurationError, DataError, MosumError
from .limits import (
    FixedArgmaxConfig,
    WienerArgmaxConfig,
    quantile_summary,
    sample_fixed_argmax,
    sample_wiener_argmax,
)
from .mosum import Bandwidth, as_series, critical_value
from .seeding import fresh_seed
from .simulation import detection_bandwidths, evaluate_coverage, experiment_from_dict

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
_SPLIT = re.compile(r"[,;\s]+")


class UsageError(Exception):
    """Bad flags or configuration discovered after argument parsing."""


@dataclass
class Series:
    values: np.ndarray
    labels: Optional[list]
    path: str

    def label(self, k: int):
        """Label of observation ``k`` (1-based); the location itself when unlabelled."""
        return int(k) if self.labels is None else self.labels[int(k) - 1]


def _parse_label(tok: str):
    try:
        return int(tok)
    except ValueError:
        try:
            return float(tok)
        except ValueError:
            return tok


def read_series(path: str) -> Series:
    """Read one value per line, or ``label,value`` rows, with an optional header line.

    Blank lines and ``#`` comments are skipped.  A first row that does not
    parse as numbers is taken as a header.
    """
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s and not s.startswith("#"):
            rows.append((lineno, [t for t in _SPLIT.split(s) if t]))
    if rows and not _numeric_row(rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width not in (1, 2):
        raise DataError(f"{path}, line {rows[0][0]}: expected 1 or 2 columns, got {width}")
    values, labels = [], []
    for lineno, toks in rows:
        if len(toks) != width:
            raise DataError(f"{path}, line {lineno}: expected {width} column(s), got {len(toks)}")
        try:
            v = float(toks[-1])
        except ValueError:
            raise DataError(f"{path}, line {lineno}: not a number: {toks[-1]!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}, line {lineno}: non-finite value {toks[-1]!r}")
        values.append(v)
        if width == 2:
            labels.append(_parse_label(toks[0]))
    try:
        x = as_series(values)
    except MosumError as exc:
        raise DataError(f"{path}: {exc}") from None
    return Series(x, labels if width == 2 else None, path)


def _numeric_row(toks) -> bool:
    try:
        [float(t) for t in toks]
        return True
    except ValueError:
        return False


# argument types -----------------------------------------------------------


def _unit_interval(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {v}")
    return v


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _seed(s: str) -> int:
    try:
        v = int(s, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {s!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _bandwidth(s: str) -> Bandwidth:
    """``G`` or ``Gl:Gr``."""
    try:
        parts = [int(p) for p in s.split(":")]
        if len(parts) == 1:
            return Bandwidth.symmetric(parts[0])
        if len(parts) == 2:
            return Bandwidth(*parts)
    except (ValueError, MosumError):
        pass
    raise argparse.ArgumentTypeError(f"bandwidth must be G or Gl:Gr with positive integers, got {s!r}")


def _bandwidth_list(s: str) -> list[Bandwidth]:
    return [_bandwidth(t) for t in s.split(",") if t.strip()]


def _levels(s: str) -> list[float]:
    return [_unit_interval(t) for t in s.split(",") if t.strip()]


# output helpers -----------------------------------------------------------


def _clean(obj):
    """Make numpy scalars and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _manifest(args, command: str, inputs: list, config: dict, outputs: list) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "config": config,
        "outputs": outputs,
        "threads": args.threads,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _emit(args, result: dict, manifest: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "result": _clean(result), "manifest": _clean(manifest)}
    text = json.dumps(doc, indent=2) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc}") from exc


def _bw_repr(bw: Bandwidth):
    return bw.left if bw.is_symmetric else [bw.left, bw.right]


# detection shared by detect and ci ----------------------------------------


def _detect(args, series: Series) -> tuple[DetectionResult, list[Bandwidth]]:
    n = series.values.size
    if args.bandwidth is not None:
        bws = [args.bandwidth]
    elif args.bandwidths:
        bws = args.bandwidths
    else:
        try:
            bws = detection_bandwidths(n)
        except ConfigurationError:
            raise UsageError(
                f"series of length {n} is too short for the default bandwidth grid; pass --bandwidth"
            ) from None
    try:
        if len(bws) == 1:
            res = detect_single_scale(series.values, bws[0], args.alpha, args.eta, args.scale)
        else:
            res = detect_multiscale(series.values, bws, args.alpha, args.eta, args.scale, args.threads)
    except MosumError as exc:
        raise UsageError(str(exc)) from None
    return res, bws


def _detection_payload(series: Series, res: DetectionResult, bws: list[Bandwidth], args) -> dict:
    return {
        "n": series.values.size,
        "alpha": args.alpha,
        "eta": args.eta,
        "scale": args.scale,
        "method": res.method,
        "bandwidths": [_bw_repr(b) for b in bws],
        "thresholds": {str(b): critical_value(series.values.size, b, args.alpha) for b in bws},
        "estimates": [
            {
                "location": e.location,
                "label": series.label(e.location),
                "bandwidth": _bw_repr(e.bandwidth),
                "stat_value": e.stat_value,
            }
            for e in res.estimates
        ],
    }


def _detection_config(args) -> dict:
    return {
        "bandwidth": None if args.bandwidth is None else _bw_repr(args.bandwidth),
        "bandwidths": None if not args.bandwidths else [_bw_repr(b) for b in args.bandwidths],
        "alpha": args.alpha,
        "eta": args.eta,
        "scale": args.scale,
    }


def cmd_detect(args) -> int:
    series = read_series(args.input)
    res, bws = _detect(args, series)
    result = _detection_payload(series, res, bws, args)
    _emit(args, result, _manifest(args, "detect", [args.input], _detection_config(args), [args.output or "-"]))
    return EXIT_OK


def cmd_ci(args) -> int:
    series = read_series(args.input)
    res, bws = _detect(args, series)
    seed = fresh_seed() if args.seed is None else args.seed
    levels = sorted(set(args.levels))
    cfg = BootstrapConfig(args.boot_reps, seed, tuple(round(1 - lv, 12) for lv in levels))
    try:
        boot = bootstrap_confidence_intervals(series.values, res, cfg, args.threads)
    except MosumError as exc:
        raise UsageError(str(exc)) from None

    result = _detection_payload(series, res, bws, args)
    result["seed"] = seed
    result["boot_reps"] = args.boot_reps
    result["levels"] = levels
    windows = boot.deviations.windows
    for j, est in enumerate(result["estimates"]):
        est["jump"] = boot.jumps[j]
        est["variance"] = boot.variances[j]
        est["window"] = windows[j].tolist()
    pw, un = boot.pointwise, boot.uniform
    result["pointwise"] = {}
    result["uniform"] = {}
    for a, level in enumerate(levels):
        key = f"{level:g}"
        result["pointwise"][key] = [
            _interval(series, pw.lower[a, j], pw.upper[a, j], quantile=pw.quantiles[a, j])
            for j in range(res.q)
        ]
        result["uniform"][key] = {
            "quantile": un.quantiles[a],
            "intervals": [
                _interval(series, un.lower[a, j], un.upper[a, j], radius=un.radius[a, j]) for j in range(res.q)
            ],
        }
    if res.q == 0:
        result["notice"] = "no change points detected; interval lists are empty"
    config = _detection_config(args) | {"boot_reps": args.boot_reps, "levels": levels, "seed": seed}
    _emit(args, result, _manifest(args, "ci", [args.input], config, [args.output or "-"]))
    return EXIT_OK


def _interval(series: Series, lo, hi, **extra) -> dict:
    out = {"lower": int(lo), "upper": int(hi)}
    if series.labels is not None:
        out["lower_label"] = series.label(lo)
        out["upper_label"] = series.label(hi)
    return out | extra


def cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    seed = args.seed
    if seed is None and raw.get("bootstrap", {}).get("seed") is None:
        seed = fresh_seed()
    try:
        cfg = experiment_from_dict(raw, seed)
        report = evaluate_coverage(cfg, args.threads)
    except MosumError as exc:
        raise UsageError(str(exc)) from None
    outputs = [args.output or "-"]
    if args.csv:
        try:
            Path(args.csv).write_text(report.to_csv())
        except OSError as exc:
            raise UsageError(f"cannot write {args.csv}: {exc}") from exc
        outputs.append(args.csv)
    config = dict(raw)
    config["bootstrap"] = dict(raw.get("bootstrap", {})) | {"seed": cfg.bootstrap.master_seed}
    _emit(args, report.summary(), _manifest(args, "simulate", [args.config], config, outputs))
    return EXIT_OK


def cmd_limits(args) -> int:
    try:
        if args.law == "wiener":
            wcfg = WienerArgmaxConfig(args.horizon or 60.0, args.grid_step, args.draws, args.seed_value)
            draws = sample_wiener_argmax(wcfg, args.threads)
            config = {"law": "wiener", "horizon": wcfg.horizon, "grid_step": wcfg.grid_step}
        else:
            if args.d is None:
                raise UsageError("--law fixed needs --d")
            residuals = None
            if args.errors == "empirical":
                if not args.residuals:
                    raise UsageError("--errors empirical needs --residuals FILE")
                residuals = read_series(args.residuals).values
            horizon = None if args.horizon is None else int(args.horizon)
            fcfg = FixedArgmaxConfig(
                args.d, horizon, args.errors, args.sd, args.df, residuals, args.draws, args.seed_value
            )
            draws = sample_fixed_argmax(fcfg, args.threads)
            config = {"law": "fixed", "d": fcfg.jump, "horizon": fcfg.horizon, "errors": fcfg.errors,
                      "sd": fcfg.sd, "df": fcfg.df, "residuals": args.residuals}
    except MosumError as exc:
        raise UsageError(str(exc)) from None
    config |= {"draws": args.draws, "seed": args.seed_value}

    result = {"law": args.law, "draws": args.draws, "seed": args.seed_value,
              "mean": float(np.mean(draws)), "sd": float(np.std(draws)),
              "quantiles": quantile_summary(draws)}
    if args.law == "fixed":
        vals, counts = np.unique(draws, return_counts=True)
        result["pmf"] = {str(v): c / draws.size for v, c in zip(vals.tolist(), counts.tolist())}
    outputs = [args.output or "-"]
    if args.csv:
        try:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["draw", "argmax"])
                w.writerows(zip(range(draws.size), draws.tolist()))
        except OSError as exc:
            raise UsageError(f"cannot write {args.csv}: {exc}") from exc
        outputs.append(args.csv)
    _emit(args, result, _manifest(args, "limits", [], config, outputs))
    return EXIT_OK


# parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", help="JSON output path (default: stdout)")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads; results do not depend on it")


def _detection_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="series file ('-' for stdin)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bandwidth", type=_bandwidth, help="single bandwidth G or Gl:Gr")
    g.add_argument("--bandwidths", type=_bandwidth_list,
                   help="comma separated bandwidths for multiscale detection (default: 10, 20, 40, ... up to n/4)")
    p.add_argument("--alpha", type=_unit_interval, default=0.1, help="detection test level (default 0.1)")
    p.add_argument("--eta", type=_unit_interval, default=0.4, help="local maximum radius factor (default 0.4)")
    p.add_argument("--scale", choices=("local", "global"), default="local",
                   help="noise scale in the threshold: local window estimate or its median")
    _common(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mosumci", description="MOSUM change point detection with bootstrap confidence intervals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect change points")
    _detection_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("ci", help="detect change points and bootstrap confidence intervals")
    _detection_flags(p)
    p.add_argument("--boot-reps", type=_positive_int, default=1000, help="bootstrap replicates B (default 1000)")
    p.add_argument("--levels", type=_levels, default=[0.9], help="confidence levels, e.g. 0.8,0.9,0.95")
    p.add_argument("--seed", type=_seed, help="master seed (default: fresh, recorded in the output)")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("simulate", help="run a coverage experiment from a JSON config")
    p.add_argument("config", help="experiment JSON file")
    p.add_argument("--csv", help="write the per change point report CSV here")
    p.add_argument("--seed", type=_seed, help="master seed, overrides bootstrap.seed in the config")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limits", help="sample a limit law of the estimation error")
    p.add_argument("--law", choices=("wiener", "fixed"), required=True)
    p.add_argument("--draws", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, help="master seed (default: fresh, recorded in the output)")
    p.add_argument("--horizon", type=float, help="truncation: c for wiener (default 60), L for fixed (default automatic)")
    p.add_argument("--grid-step", type=float, default=0.05, help="wiener grid step (default 0.05)")
    p.add_argument("--d", type=float, help="jump size for the fixed law")
    p.add_argument("--errors", choices=("gaussian", "t", "empirical"), default="gaussian")
    p.add_argument("--sd", type=float, default=1.0, help="error standard deviation")
    p.add_argument("--df", type=float, default=5.0, help="t degrees of freedom")
    p.add_argument("--residuals", help="residual file for --errors empirical")
    p.add_argument("--csv", help="write the draws here")
    _common(p)
    p.set_defaults(func=cmd_limits)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "limits":
        args.seed_value = fresh_seed() if args.seed is None else args.seed
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mosumci {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"mosumci {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
