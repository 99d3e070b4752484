"""Command-line front end for the experiment suite.

Every run gets its own output directory (command + UTC timestamp + seed)
under --outdir, the BRLAB_OUTPUT_ROOT environment variable, or the current
directory, and always writes a manifest.json with the fully resolved
configuration, tool version, and wall-clock runtime.  CSV outputs are
byte-deterministic for a fixed configuration and seed.  All failures print
a single-line JSON error record to stderr and exit nonzero: 2 validation,
3 budget, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import re
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .bessel import bessel_j, bessel_j_oracle
from .decomposition import (
    DyadicPiece,
    br_apply_separable,
    gamma_decay_check,
    gamma_report_csv,
    make_bump,
    t_j_apply,
)
from .grid import ExponentPair, Grid, field_to_csv, lp_norm, make_test_field
from .kernel import (
    KernelPoint,
    dilation_check,
    envelope_csv,
    envelope_fit,
    kernel_quadrature,
    kernel_radial,
)
from .norms import (
    corollary_experiment,
    decay_csv,
    decay_fit,
    estimate_json,
    lemma1_scaling_experiment,
    scaling_csv,
)
from .operators import (
    DEFAULT_BUDGET,
    BudgetError,
    MultiplierSpec,
    br_apply_kernel,
    br_apply_oracle,
    br_apply_radial,
)
from .regions import region_grid_export, smoothness_index

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_IO = 4

OUTPUT_ROOT_ENV = "BRLAB_OUTPUT_ROOT"

_RATIONAL_RE = re.compile(r"^\d+(/\d+)?$")

#: parameter names recognized when mapping module errors back to CLI keys
_KNOWN_KEYS = (
    "alpha",
    "delta",
    "resolution",
    "p1",
    "p2",
    "trials",
    "radius",
    "width",
    "band",
    "rho",
    "nodes",
    "seed",
    "j_range",
    "k_max",
    "dimension",
)


class CliError(Exception):
    """Validation failure carrying the offending configuration key."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


class _Parser(argparse.ArgumentParser):
    # argparse must not print usage and exit; errors become JSON records
    def error(self, message):
        raise CliError("argv", message)


def _emit_error(kind: str, key: str, message: str) -> None:
    record = {"error": kind, "key": key, "message": message}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _rational(text: str, key: str) -> str:
    """Exponent argument: an 'a/b' string or 'inf'; floats are rejected."""
    if text is None:
        raise CliError(key, f"{key} is required")
    cleaned = text.strip().lower()
    if cleaned in ("inf", "infinity", "oo"):
        return "inf"
    if not _RATIONAL_RE.match(cleaned):
        raise CliError(
            key,
            f"{key} must be a rational 'a/b' string or 'inf', got {text!r}"
            " (floats are rejected for exponents)",
        )
    return cleaned


def _number(text, key: str) -> float:
    """Non-exponent numeric argument: rational string or decimal."""
    if text is None:
        raise CliError(key, f"{key} is required")
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError:
            raise CliError(key, f"{key} must be numeric, got {text!r}") from None


def _int_range(text: str, key: str) -> list[int]:
    """Inclusive integer range written as 'lo:hi'."""
    if text is None:
        raise CliError(key, f"{key} is required")
    parts = text.split(":")
    try:
        if len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise CliError(key, f"{key} must look like 'lo:hi', got {text!r}") from None
    if hi < lo:
        raise CliError(key, f"{key} must satisfy lo <= hi, got {text!r}")
    return list(range(lo, hi + 1))


def _require_seed(args) -> int:
    if args.seed is None:
        raise CliError("seed", "seed is required for randomized experiments")
    return int(args.seed)


def _classify_value_error(err: ValueError) -> CliError:
    message = str(err)
    for key in _KNOWN_KEYS:
        if key in message:
            return CliError(key, message)
    return CliError("config", message)


def _make_run_dir(args) -> str:
    root = args.outdir or os.environ.get(OUTPUT_ROOT_ENV) or "."
    stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%S%f")
    seed = 0 if args.seed is None else int(args.seed)
    path = os.path.join(root, f"{args.command}-{stamp}-seed{seed}")
    os.makedirs(path)
    return path


def _write_manifest(run_dir: str, command: str, config: dict, runtime: float) -> None:
    outputs = sorted(
        name for name in os.listdir(run_dir) if name != "manifest.json"
    )
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "outputs": outputs,
        "runtime_seconds": runtime,
    }
    with open(os.path.join(run_dir, "manifest.json"), "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _rel_l2(a, b) -> float:
    scale = max(lp_norm(a, 2), lp_norm(b, 2))
    if scale == 0:
        return 0.0
    return lp_norm(a - b, 2) / scale


def _grid_from_args(args) -> Grid:
    return Grid(int(args.n), int(args.N), _number(args.L, "L"))


def _cmd_evaluate(args, run_dir: str) -> dict:
    if args.alpha is None:
        raise CliError("alpha", "alpha is required")
    alpha = _number(args.alpha, "alpha")
    grid = _grid_from_args(args)
    known = ("oracle", "radial", "kernel", "separable")
    paths = [p.strip() for p in args.paths.split(",") if p.strip()]
    if not paths:
        raise CliError("paths", "paths must name at least one evaluation path")
    for name in paths:
        if name not in known:
            raise CliError("paths", f"unknown path {name!r}; choose from {known}")
    seed = 0 if args.seed is None else int(args.seed)
    spec = MultiplierSpec(alpha=alpha)
    bump = make_bump()
    f = make_test_field("gaussian", {"width": 1.0}, grid, seed=seed)
    g = make_test_field(
        "gaussian", {"width": 1.5, "center": (grid.L * 0.6,) * grid.n}, grid, seed=seed
    )
    field_to_csv(f, os.path.join(run_dir, "input_f.csv"))
    field_to_csv(g, os.path.join(run_dir, "input_g.csv"))

    outputs = {}
    for name in paths:
        if name == "oracle":
            outputs[name] = br_apply_oracle(f, g, spec, budget=int(args.budget))
        elif name == "radial":
            outputs[name] = br_apply_radial(f, g, spec, nodes=args.nodes)
        elif name == "kernel":
            outputs[name] = br_apply_kernel(f, g, spec, budget=int(args.budget))
        else:
            piece = DyadicPiece(int(args.j), alpha)
            outputs["separable"] = br_apply_separable(f, g, piece, int(args.K), bump)
            outputs["tj_direct"] = t_j_apply(f, g, piece, bump, budget=int(args.budget))
        field_to_csv(
            outputs[name], os.path.join(run_dir, f"field_{name}.csv")
        )
    if "tj_direct" in outputs:
        field_to_csv(outputs["tj_direct"], os.path.join(run_dir, "field_tj_direct.csv"))

    # agreement pairs: full-multiplier paths against each other, and the
    # separable piece path against its direct counterpart
    full = [n for n in ("oracle", "radial", "kernel") if n in outputs]
    pairs = [(full[i], full[k]) for i in range(len(full)) for k in range(i + 1, len(full))]
    if "separable" in outputs:
        pairs.append(("separable", "tj_direct"))
    rows = []
    for a, b in pairs:
        err = _rel_l2(outputs[a], outputs[b])
        rows.append([a, b, repr(err)])
        print(f"agreement {a} vs {b}: relative l2 error {err:.6e}")
    with open(os.path.join(run_dir, "agreement.csv"), "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["path_a", "path_b", "rel_l2_error"])
        writer.writerows(rows)
    if not pairs:
        print("single path requested; no agreement rows")
    return {
        "n": grid.n,
        "N": grid.N,
        "L": grid.L,
        "alpha": alpha,
        "paths": paths,
        "nodes": args.nodes,
        "K": int(args.K),
        "j": int(args.j),
        "budget": int(args.budget),
        "seed": seed,
    }


def _cmd_decay(args, run_dir: str) -> dict:
    if args.mode not in ("tj", "gamma"):
        raise CliError("mode", f"mode must be 'tj' or 'gamma', got {args.mode!r}")
    if args.alpha is None:
        raise CliError("alpha", "alpha is required")
    alpha = _number(args.alpha, "alpha")
    bump = make_bump()
    j_range = _int_range(args.j_range, "j_range")
    if args.mode == "gamma":
        delta = _number(args.delta, "delta")
        k_max = int(args.k_max)
        if k_max < 0:
            raise CliError("k_max", f"k_max must be nonnegative, got {k_max}")
        report = gamma_decay_check(alpha, delta, j_range, range(k_max + 1), bump)
        gamma_report_csv(report, os.path.join(run_dir, "gamma.csv"))
        print(
            f"gamma decay: constant {report.constant:.6g},"
            f" per-level growth ratio {report.growth_ratio:.4f},"
            f" flagged {report.flagged}"
        )
        return {
            "mode": "gamma",
            "alpha": alpha,
            "delta": delta,
            "j_range": j_range,
            "k_max": k_max,
            "seed": 0 if args.seed is None else int(args.seed),
        }
    if len(j_range) < 4:
        raise CliError("j_range", "decay fit needs at least 4 levels in j_range")
    seed = _require_seed(args)
    grid = _grid_from_args(args)
    exponents = ExponentPair(_rational(args.p1, "p1"), _rational(args.p2, "p2"))
    budget = int(args.budget)

    def op_family(j: int):
        piece = DyadicPiece(int(j), alpha)
        return lambda u, v: t_j_apply(u, v, piece, bump, budget=budget)

    fit = decay_fit(op_family, exponents, grid, j_range, int(args.trials), seed)
    decay_csv(fit, os.path.join(run_dir, "decay.csv"))
    print(
        f"decay fit: epsilon {fit.epsilon:.4f}, residual {fit.residual:.4f},"
        f" degenerate {fit.degenerate}"
    )
    return {
        "mode": "tj",
        "n": grid.n,
        "N": grid.N,
        "L": grid.L,
        "alpha": alpha,
        "p1": str(exponents.p1),
        "p2": str(exponents.p2),
        "j_range": j_range,
        "trials": int(args.trials),
        "budget": budget,
        "seed": seed,
    }


def _cmd_regions(args, run_dir: str) -> dict:
    n = int(args.n)
    config = {"n": n, "seed": 0}
    if args.p1 is not None or args.p2 is not None:
        # probe each provided exponent alone so a domain error names it
        # even when the other flag is missing
        if args.p1 is not None:
            ExponentPair(_rational(args.p1, "p1"), 1)
        if args.p2 is not None:
            ExponentPair(1, _rational(args.p2, "p2"))
        pair = ExponentPair(_rational(args.p1, "p1"), _rational(args.p2, "p2"))
        result = smoothness_index(pair, n)
        print(f"{result.region}, threshold {result.chosen_form} = {result.threshold}")
        with open(os.path.join(run_dir, "query.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["inv_p1", "inv_p2", "region", "threshold", "threshold_form"]
            )
            writer.writerow(
                [
                    str(pair.inv1),
                    str(pair.inv2),
                    result.region,
                    repr(float(result.threshold)),
                    str(result.chosen_form),
                ]
            )
        config.update({"mode": "query", "p1": str(pair.p1), "p2": str(pair.p2)})
        return config
    resolution = int(args.resolution)
    csv_path = os.path.join(run_dir, "map.csv")
    svg_path = os.path.join(run_dir, "map.svg")
    region_grid_export(n, resolution, csv_path, svg_path)
    print(f"region map written: {csv_path} and {svg_path}")
    config.update({"mode": "export", "resolution": resolution})
    return config


def _kernel_points(rhos, n: int) -> list[KernelPoint]:
    points = []
    for rho in rhos:
        coord = (float(rho) / math.sqrt(2.0),) + (0.0,) * (n - 1)
        points.append(KernelPoint(coord, coord))
    return points


def _cmd_kernel(args, run_dir: str) -> dict:
    if args.check not in ("sweep", "dilation", "envelope"):
        raise CliError(
            "check", f"check must be sweep, dilation, or envelope, got {args.check!r}"
        )
    n = int(args.n)
    alpha = _number(args.alpha, "alpha")
    config = {"check": args.check, "n": n, "alpha": alpha, "seed": 0}
    if args.check in ("sweep", "dilation"):
        points = int(args.points)
        rho_max = _number(args.rho_max, "rho_max")
        if points < 1:
            raise CliError("points", f"sweep needs at least one point, got {points}")
        if rho_max <= 0:
            raise CliError("rho_max", f"sweep range is empty, got rho_max={rho_max}")
        rhos = [rho_max * (i + 1) / points for i in range(points)]
        config.update({"points": points, "rho_max": rho_max})
    if args.check == "sweep":
        closed = kernel_radial(np.asarray(rhos), alpha, n)
        rows = []
        worst = 0.0
        for rho, closed_value in zip(rhos, closed):
            pt = _kernel_points([rho], n)[0]
            quad = kernel_quadrature(pt, alpha, n)
            diff = abs(float(closed_value) - quad)
            worst = max(worst, diff)
            rows.append([repr(float(rho)), repr(float(closed_value)), repr(quad), repr(diff)])
        with open(os.path.join(run_dir, "kernel.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["rho", "closed_form", "quadrature", "abs_diff"])
            writer.writerows(rows)
        print(f"kernel sweep: max closed-vs-quadrature discrepancy {worst:.6e}")
        return config
    if args.check == "dilation":
        if args.R is None:
            raise CliError("R", "R is required for the dilation check")
        R = _number(args.R, "R")
        rows = []
        worst = 0.0
        for pt in _kernel_points(rhos, n):
            residual = dilation_check(pt, alpha, n, R)
            worst = max(worst, residual)
            rows.append([repr(pt.rho), repr(residual)])
        with open(os.path.join(run_dir, "dilation.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["rho", "residual"])
            writer.writerows(rows)
        print(f"dilation check R={R:g}: max residual {worst:.6e}")
        config.update({"R": R})
        return config
    j_range = _int_range(args.j_range, "j_range")
    M = _number(args.M, "M")
    radii = [0.0, 0.7, 2.1, 3.5, 7.0, 14.0, 28.0]
    points = [
        KernelPoint((a,) + (0.0,) * (n - 1), (b,) + (0.0,) * (n - 1))
        for a in radii
        for b in radii
    ]
    pieces = [DyadicPiece(j, alpha) for j in j_range]
    report = envelope_fit(pieces, n, M, points, make_bump())
    envelope_csv(report, os.path.join(run_dir, "envelope.csv"))
    print(
        f"envelope fit M={M:g}: log10 slope {report.slope:.4f},"
        f" flagged {report.flagged}"
    )
    config.update({"M": M, "j_range": j_range})
    return config


def _cmd_norms(args, run_dir: str) -> dict:
    if args.experiment not in ("lemma1", "corollary"):
        raise CliError(
            "experiment",
            f"experiment must be 'lemma1' or 'corollary', got {args.experiment!r}",
        )
    seed = _require_seed(args)
    grid = _grid_from_args(args)
    if args.experiment == "lemma1":
        if args.p is None:
            raise CliError("p", "p is required for the scaling experiment")
        p = Fraction(_rational(args.p, "p"))
        b = _number(args.b, "b")
        widths = [
            _number(w, "widths") for w in args.widths.split(",") if w.strip()
        ]
        if not widths:
            raise CliError("widths", "widths must name at least one band width")
        report = lemma1_scaling_experiment(p, b, widths, grid, seed)
        scaling_csv(report, os.path.join(run_dir, "scaling.csv"))
        fitted = (
            "none" if report.fitted_exponent is None else f"{report.fitted_exponent:.4f}"
        )
        print(
            f"scaling experiment p={p}: fitted exponent {fitted},"
            f" target {report.target_exponent:.4f}"
        )
        return {
            "experiment": "lemma1",
            "p": str(p),
            "b": b,
            "widths": widths,
            "n": grid.n,
            "N": grid.N,
            "L": grid.L,
            "seed": seed,
        }
    if args.alpha is None:
        raise CliError("alpha", "alpha is required")
    alpha = _number(args.alpha, "alpha")
    estimate = corollary_experiment(alpha, grid, int(args.trials), seed)
    estimate_json(estimate, os.path.join(run_dir, "estimate.json"))
    print(f"corollary estimate: lower bound {estimate.value:.6g}")
    return {
        "experiment": "corollary",
        "alpha": alpha,
        "trials": int(args.trials),
        "n": grid.n,
        "N": grid.N,
        "L": grid.L,
        "seed": seed,
    }


def _cmd_bessel_check(args, run_dir: str) -> dict:
    orders = []
    for token in args.orders.split(","):
        token = token.strip()
        if not token:
            continue
        orders.append(float(Fraction(_rational(token, "orders"))))
    if not orders:
        raise CliError("orders", "orders must name at least one Bessel order")
    points = int(args.points)
    r_min = _number(args.r_min, "r_min")
    r_max = _number(args.r_max, "r_max")
    if points < 1:
        raise CliError("points", f"need at least one radius, got {points}")
    if not 0 < r_min < r_max:
        raise CliError("r_min", f"need 0 < r_min < r_max, got [{r_min}, {r_max}]")
    radii = np.geomspace(r_min, r_max, points)
    worst = 0.0
    rows = []
    for k in orders:
        series = bessel_j(k, radii)
        oracle = bessel_j_oracle(k, radii)
        for r, a, b in zip(radii, np.atleast_1d(series), np.atleast_1d(oracle)):
            diff = abs(float(a) - float(b))
            worst = max(worst, diff)
            rows.append([repr(k), repr(float(r)), repr(float(a)), repr(float(b)), repr(diff)])
    with open(os.path.join(run_dir, "bessel.csv"), "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["order", "r", "series_route", "quadrature_route", "abs_diff"])
        writer.writerows(rows)
    print(f"bessel dual-route check: max |difference| {worst:.3e}")
    return {
        "orders": orders,
        "points": points,
        "r_min": r_min,
        "r_max": r_max,
        "seed": 0,
    }


def _build_parser() -> _Parser:
    parser = _Parser(prog="brlab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--outdir", default=None)
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("evaluate", help="run bilinear paths and compare them")
    common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--L", default="16")
    p.add_argument("--alpha", default=None)
    p.add_argument("--paths", default="oracle,radial")
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--K", type=int, default=256)
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = sub.add_parser("decay", help="piece-norm decay or coefficient decay")
    common(p)
    p.add_argument("--mode", default="tj")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--L", default="32")
    p.add_argument("--alpha", default=None)
    p.add_argument("--delta", default="0.5")
    p.add_argument("--p1", default="1")
    p.add_argument("--p2", default="1")
    p.add_argument("--j-range", dest="j_range", default="0:8")
    p.add_argument("--k-max", dest="k_max", type=int, default=64)
    p.add_argument("--trials", type=int, default=2)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = sub.add_parser("regions", help="region map export or single query")
    common(p)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--p1", default=None)
    p.add_argument("--p2", default=None)

    p = sub.add_parser("kernel", help="kernel sweeps and identities")
    common(p)
    p.add_argument("--check", default="sweep")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--alpha", default="2")
    p.add_argument("--rho-max", dest="rho_max", default="50")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--R", default=None)
    p.add_argument("--M", default="2")
    p.add_argument("--j-range", dest="j_range", default="0:6")

    p = sub.add_parser("norms", help="norm lower-bound experiments")
    common(p)
    p.add_argument("--experiment", default="lemma1")
    p.add_argument("--p", default=None)
    p.add_argument("--b", default="8")
    p.add_argument("--widths", default="1/2,1,2,4")
    p.add_argument("--alpha", default=None)
    p.add_argument("--trials", type=int, default=2)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--L", default="8")

    p = sub.add_parser("bessel-check", help="dual-route Bessel comparison")
    common(p)
    p.add_argument("--orders", default="0,1/2,1,3/2,2,5/2")
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--r-min", dest="r_min", default="0.01")
    p.add_argument("--r-max", dest="r_max", default="200")

    return parser


_HANDLERS = {
    "evaluate": _cmd_evaluate,
    "decay": _cmd_decay,
    "regions": _cmd_regions,
    "kernel": _cmd_kernel,
    "norms": _cmd_norms,
    "bessel-check": _cmd_bessel_check,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if args.command is None:
            raise CliError("command", "a subcommand is required")
        started = time.perf_counter()
        try:
            run_dir = _make_run_dir(args)
        except OSError as err:
            _emit_error("io", "outdir", str(err))
            return EXIT_IO
        config = _HANDLERS[args.command](args, run_dir)
        _write_manifest(run_dir, args.command, config, time.perf_counter() - started)
        print(f"run directory: {run_dir}")
        return EXIT_OK
    except CliError as err:
        _emit_error("validation", err.key, str(err))
        return EXIT_VALIDATION
    except BudgetError as err:
        _emit_error("budget", "budget", str(err))
        return EXIT_BUDGET
    except ValueError as err:
        cli_err = _classify_value_error(err)
        _emit_error("validation", cli_err.key, str(cli_err))
        return EXIT_VALIDATION
    except OSError as err:
        _emit_error("io", getattr(err, "filename", None) or "path", str(err))
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
