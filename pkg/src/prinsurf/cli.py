"""Command-line entry point.

    prinsurf fit IN.csv --out DIR [fit options]
    prinsurf flatten IN.csv --out DIR [fit options] [map options]
    prinsurf simulate --case K --n I --sample M --seed S --out FILE.csv
    prinsurf eval --case K [--n I --sample M] [fit options] [--out DIR]

Exit status: 0 success, 1 data/parse/usage errors, 2 numerical failures.
"""
from __future__ import annotations

import argparse
import datetime
import logging
import sys

from . import __version__
from .core import DataError, FitConfig, NumericalError
from .fitloop import fit_principal_surface
from .flatten import FlattenConfig, flatten_scalar_field
from .io import cloud_digest, manifest_lines, read_cloud_csv, write_cloud_csv, write_outputs
from .simgen import SimCase, generate_case, rmse_to_truth

EXIT_OK, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2
_FIT = FitConfig()
_FLAT = FlattenConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fit_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("fit options")
    g.add_argument("--r", type=float, default=_FIT.r, help="neighbourhood radius in parameter units")
    g.add_argument("--h", type=float, default=_FIT.h, help="Gaussian kernel bandwidth")
    g.add_argument("--n-grid", type=int, default=_FIT.n_grid, help="projection lattice size per axis")
    g.add_argument("--n-knots", type=int, default=_FIT.n_knots, help="spline knot budget")
    lam = g.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, default=None, help="fixed smoothing parameter; None means GCV")
    lam.add_argument("--gcv", action="store_true", help="choose the smoothing parameter by GCV (default)")
    g.add_argument("--max-iter", type=int, default=_FIT.max_iter, help="iteration cap")
    g.add_argument("--thres", type=float, default=_FIT.thres, help="convergence threshold on mean squared change")
    g.add_argument("--k-fallback", type=int, default=_FIT.k_fallback, help="neighbours used for isolated points")
    g.add_argument("--subsample", type=int, default=_FIT.subsample, help="fit on this many random points; None means all")
    g.add_argument("--seed", type=int, default=_FIT.seed, help="random seed")


def _map_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("map options")
    g.add_argument("--g", type=int, default=_FLAT.g, help="map grid size per axis")
    # unset means "follow the fit's --r / --h", whose defaults these equal
    g.add_argument("--smooth-r", type=float, default=argparse.SUPPRESS,
                   help=f"scalar smoothing radius (default: value of --r, {_FLAT.smooth_r})")
    g.add_argument("--smooth-h", type=float, default=argparse.SUPPRESS,
                   help=f"scalar smoothing bandwidth (default: value of --h, {_FLAT.smooth_h})")
    g.add_argument("--min-support", type=int, default=_FLAT.min_support, help="points needed to unmask a cell")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="prinsurf", description="Principal surface fitting and flattening.", formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-iteration progress")
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a principal surface", formatter_class=fmt)
    fit.add_argument("input", help="point cloud CSV")
    fit.add_argument("--out", required=True, help="output directory")
    _fit_options(fit)

    flat = sub.add_parser("flatten", help="fit, then flatten the scalar column", formatter_class=fmt)
    flat.add_argument("input", help="point cloud CSV with a scalar column")
    flat.add_argument("--out", required=True, help="output directory")
    _fit_options(flat)
    _map_options(flat)

    sim = sub.add_parser("simulate", help="write a synthetic benchmark cloud", formatter_class=fmt)
    sim.add_argument("--case", type=int, required=True, choices=(1, 2, 3, 4))
    sim.add_argument("--n", type=int, default=6000, help="points generated")
    sim.add_argument("--sample", type=int, default=1000, help="points kept")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV file")

    ev = sub.add_parser("eval", help="simulate, fit and score against ground truth", formatter_class=fmt)
    ev.add_argument("--case", type=int, required=True, choices=(1, 2, 3, 4))
    ev.add_argument("--n", type=int, default=6000, help="points generated")
    ev.add_argument("--sample", type=int, default=1000, help="points kept")
    ev.add_argument("--out", default=None, help="optional output directory")
    _fit_options(ev)
    return p


def fit_config(args) -> FitConfig:
    return FitConfig(
        r=args.r,
        h=args.h,
        n_grid=args.n_grid,
        n_knots=args.n_knots,
        lambda_policy="gcv" if args.lam is None else args.lam,
        max_iter=args.max_iter,
        thres=args.thres,
        k_fallback=args.k_fallback,
        seed=args.seed,
        subsample=args.subsample,
    )


def flatten_config(args) -> FlattenConfig:
    return FlattenConfig(
        g=args.g,
        smooth_r=getattr(args, "smooth_r", args.r),
        smooth_h=getattr(args, "smooth_h", args.h),
        min_support=args.min_support,
    )


def _stamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _run(args) -> int:
    if args.command == "simulate":
        cloud, _ = generate_case(SimCase(args.case, args.n, args.sample, args.seed))
        write_cloud_csv(args.out, cloud)
        print(f"wrote {cloud.n} points to {args.out}")
        return EXIT_OK

    if args.command == "eval":
        cfg = fit_config(args)
        cloud, truth = generate_case(SimCase(args.case, args.n, args.sample, args.seed))
        result = fit_principal_surface(cloud, cfg)
        rmse = rmse_to_truth(result.model, truth, offset=result.centroid)
        extra = [
            f"case: {args.case}",
            f"n: {args.n}",
            f"sample: {args.sample}",
            f"rmse: {rmse:.17g}",
        ]
        print(f"iterations_used: {result.report.iterations_used}")
        print(f"converged: {str(result.report.converged).lower()}")
        print(f"rmse: {rmse:.6f}")
        if args.out:
            man = manifest_lines(cfg, None, cloud_digest(cloud), __version__)
            write_outputs(result, args.out, manifest=man, extra=extra, timestamp=_stamp())
        return EXIT_OK

    cloud = read_cloud_csv(args.input)
    cfg = fit_config(args)
    fcfg = None
    if args.command == "flatten":
        if cloud.scalars is None:
            raise DataError(f"{args.input}: flatten needs a fourth (scalar) column")
        fcfg = flatten_config(args)
    result = fit_principal_surface(cloud, cfg)
    smap = None if fcfg is None else flatten_scalar_field(result.params, cloud.scalars, fcfg)
    man = manifest_lines(cfg, fcfg, cloud_digest(cloud), __version__)
    write_outputs(result, args.out, smap=smap, manifest=man, timestamp=_stamp())
    r = result.report
    print(f"iterations_used: {r.iterations_used} converged: {str(r.converged).lower()} -> {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _run(args)
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
