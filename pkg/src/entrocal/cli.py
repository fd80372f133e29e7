"""Batch command-line front end.

Subcommands: ``evaluate`` (score a prediction CSV), ``simulate`` (write a
synthetic dataset), ``suite`` (one report per noise level plus a comparison
table), ``gaussian`` (NEES/ECD for Gaussian state estimates from JSON), and
``curve`` (per-datum score curve SVG).

Exit codes: 0 success, 1 usage error (bad flags or parameter values),
2 data error (unreadable or malformed input). Runs with identical flags and
seed produce byte-identical stdout and files; output files are written
atomically (temp file + rename). Seeds are required for ``simulate`` and
``suite`` when stdout is not a terminal; interactive runs draw one from the
OS and announce it on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
import tempfile
from pathlib import Path

import numpy as np

from .binning import BinSpec, build_report, reliability_points
from .gaussian import GaussianPrediction, ecd_gaussian, nees
from .metrics import ClipPolicy, Dataset, ecd_curve
from .report_io import (
    REPORT_FORMATS,
    load_csv,
    render_ecd_curve_svg,
    render_histogram_svg,
    render_reliability_svg,
    render_report,
    write_simulated_csv,
)
from .simulation import SimulationConfig, run_noise_suite, simulate

OUT_DIR_ENV = "ENTROCAL_OUT_DIR"


class UsageError(Exception):
    """Bad flags or parameter combinations; exit code 1."""


class DataError(Exception):
    """Unreadable or malformed input data; exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clip_policy(epsilon: float) -> ClipPolicy:
    try:
        return ClipPolicy(epsilon)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _bin_spec(num_bins: int) -> BinSpec:
    try:
        return BinSpec(num_bins)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _resolve_seed(seed) -> int:
    if seed is not None:
        return seed
    if sys.stdout.isatty():
        drawn = secrets.randbits(63)
        print(f"note: no --seed given, using {drawn}", file=sys.stderr)
        return drawn
    raise UsageError("--seed is required in non-interactive runs")


def _load_dataset(path: str) -> Dataset:
    try:
        return load_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read '{path}': {exc.strerror or exc}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_evaluate(args) -> int:
    policy = _clip_policy(args.clip)
    spec = _bin_spec(args.bins)
    data = _load_dataset(args.input)
    if len(data) < 1:
        raise DataError(f"{args.input}: empty dataset")
    report = build_report(data, spec, policy)
    doc = render_report(report, args.format)
    if args.output:
        _write_atomic(Path(args.output), doc.content)
    else:
        sys.stdout.write(doc.content)
    if args.plots_dir:
        plots = Path(args.plots_dir)
        _write_atomic(plots / "reliability.svg",
                      render_reliability_svg(reliability_points(report.bins)))
        _write_atomic(plots / "histogram.svg", render_histogram_svg(data, args.bins))
    return 0


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        config = SimulationConfig(
            seed=seed,
            n=args.n,
            logodds_halfwidth=args.halfwidth,
            weight=args.weight,
            noise_mean=args.noise_mean,
            noise_sigma=args.noise_sigma,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sim = simulate(config)
    buf = []
    write_simulated_csv(sim, _StringSink(buf), include_true_probs=args.include_true)
    _write_atomic(Path(args.output), "".join(buf))
    print(f"wrote {args.output} (n={config.n}, seed={seed})", file=sys.stderr)
    return 0


class _StringSink:
    def __init__(self, buf: list) -> None:
        self._buf = buf

    def write(self, text: str) -> None:
        self._buf.append(text)


def _parse_sigmas(raw: str) -> list[float]:
    try:
        sigmas = [float(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError(f"invalid --sigmas value '{raw}'") from None
    if not sigmas:
        raise UsageError("--sigmas must list at least one value")
    if any(s < 0 for s in sigmas):
        raise UsageError("sigma values must be >= 0")
    return sigmas


def _cmd_suite(args) -> int:
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV)
    if not out_dir:
        raise UsageError(f"--out-dir is required (or set {OUT_DIR_ENV})")
    sigmas = _parse_sigmas(args.sigmas)
    seed = _resolve_seed(args.seed)
    policy = _clip_policy(args.clip)
    spec = _bin_spec(args.bins)
    try:
        base = SimulationConfig(
            seed=seed, n=args.n, logodds_halfwidth=args.halfwidth, weight=args.weight
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    runs = run_noise_suite(base, sigmas, spec, policy)
    root = Path(out_dir)
    comparison = [
        "| Sigma | Seed | ECE | ESCE | ECD | Brier | NLL |",
        "|-------|------|-----|------|-----|-------|-----|",
    ]
    for run in runs:
        sub = root / f"sigma-{run.sigma:g}"
        buf = []
        write_simulated_csv(run.data, _StringSink(buf), include_true_probs=True)
        _write_atomic(sub / "dataset.csv", "".join(buf))
        _write_atomic(sub / "report.json", render_report(run.report, "json").content)
        if args.format != "json":
            ext = "md" if args.format == "markdown" else args.format
            _write_atomic(sub / f"report.{ext}",
                          render_report(run.report, args.format).content)
        _write_atomic(
            sub / "reliability.svg",
            render_reliability_svg(
                reliability_points(run.report.bins),
                title=f"Reliability diagram (sigma={run.sigma:g})",
            ),
        )
        _write_atomic(
            sub / "histogram.svg",
            render_histogram_svg(
                run.data.dataset(), args.bins,
                title=f"Estimated probability histogram (sigma={run.sigma:g})",
            ),
        )
        r = run.report
        comparison.append(
            f"| {run.sigma:g} | {run.config.seed} | {r.ece:.4f} | {r.esce:.4f} "
            f"| {r.ecd:.4f} | {r.brier:.4f} | {r.nll:.4f} |"
        )
    _write_atomic(root / "comparison.md", "\n".join(comparison) + "\n")
    print(f"wrote {len(runs)} runs under {out_dir} (base seed {seed})", file=sys.stderr)
    return 0


def _as_matrix(value, index: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim == 1 and arr.size == 1:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DataError(f"record {index}: covariance must be a matrix, got shape {arr.shape}")
    return arr


def _cmd_gaussian(args) -> int:
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read '{args.input}': {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.input}: invalid JSON: {exc}") from None
    if isinstance(payload, dict) and "predictions" in payload:
        payload = payload["predictions"]
    if not isinstance(payload, list) or not payload:
        raise DataError(f"{args.input}: expected a non-empty JSON array of records")
    preds = []
    for i, rec in enumerate(payload):
        if not isinstance(rec, dict):
            raise DataError(f"record {i}: expected an object")
        missing = [k for k in ("mean", "covariance", "truth") if k not in rec]
        if missing:
            raise DataError(f"record {i}: missing key(s) {', '.join(missing)}")
        try:
            preds.append(
                GaussianPrediction(
                    mean=np.atleast_1d(np.asarray(rec["mean"], dtype=np.float64)),
                    covariance=_as_matrix(rec["covariance"], i),
                    truth=np.atleast_1d(np.asarray(rec["truth"], dtype=np.float64)),
                )
            )
        except ValueError as exc:
            raise DataError(f"record {i}: {exc}") from None
    try:
        nees_value = nees(preds)
        ecd_value = ecd_gaussian(preds)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    result = {"n": len(preds), "d": preds[0].dim, "nees": nees_value, "ecd": ecd_value}
    sys.stdout.write(json.dumps(result) + "\n")
    return 0


def _cmd_curve(args) -> int:
    policy = _clip_policy(args.clip)
    if args.grid < 2:
        raise UsageError(f"--grid must be >= 2, got {args.grid}")
    svg = render_ecd_curve_svg(ecd_curve(args.grid, policy))
    _write_atomic(Path(args.output), svg)
    print(f"wrote {args.output}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="entrocal",
        description="Entropic calibration difference and companion calibration metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[], help="score a prediction CSV")
    p.add_argument("--input", required=True, help="prediction CSV (prob,label columns)")
    p.add_argument("--bins", type=int, default=10, help="number of bins (default 10)")
    p.add_argument("--clip", type=float, default=1e-4, help="log clip bound (default 1e-4)")
    p.add_argument("--format", choices=REPORT_FORMATS, default="markdown")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--plots-dir", help="also write reliability/histogram SVGs here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate", help="write a synthetic miscalibrated dataset")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--weight", type=float, default=0.5, help="log-odds sharpness weight")
    p.add_argument("--halfwidth", type=float, default=10.0, help="uniform log-odds half-width")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--noise-mean", type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True, help="destination CSV")
    p.add_argument("--include-true", action="store_true",
                   help="append the noise-free true_prob column")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("suite", help="simulate + report across noise levels")
    p.add_argument("--sigmas", default="0,0.5,2", help="comma-separated noise sigmas")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV})")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--weight", type=float, default=0.5)
    p.add_argument("--halfwidth", type=float, default=10.0)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--clip", type=float, default=1e-4)
    p.add_argument("--format", choices=REPORT_FORMATS, default="markdown")
    p.set_defaults(func=_cmd_suite)

    p = sub.add_parser("gaussian", help="NEES and ECD for Gaussian state estimates")
    p.add_argument("--input", required=True,
                   help="JSON array of {mean, covariance, truth} records")
    p.set_defaults(func=_cmd_gaussian)

    p = sub.add_parser("curve", help="write the per-datum score curve SVG")
    p.add_argument("--grid", type=int, default=2001, help="grid size (default 2001)")
    p.add_argument("--clip", type=float, default=1e-4)
    p.add_argument("--output", required=True, help="destination SVG")
    p.set_defaults(func=_cmd_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"entrocal: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"entrocal: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
