"""Command-line entry point: ``haarsel scenario | fit | export``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats
from .design import affine_to_unit, rasterize_covariate
from .errors import ConfigError, FormatError
from .scenarios import bundled_config, load_config, run_scenario
from .select import Criterion, Method, MethodConfig, MuConvention, beta_hat_matrix, intensity_grid, \
    predict_intensity, run_method
from .simulate import GridImage, PointPattern, Window
from .solver import FitResult
from .wavelet import HaarBasis

log = logging.getLogger("haarsel")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _window_arg(text: str) -> Window:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("window must be xmin,xmax,ymin,ymax") from None
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("window must be xmin,xmax,ymin,ymax")
    try:
        return Window(*parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def padded_bbox(points: np.ndarray, frac: float = 0.01) -> Window:
    """Bounding box grown by ``frac`` of its side per side; a zero-width side gets ``frac`` of the other side (or 1)."""
    lo, hi = points.min(0), points.max(0)
    span = hi - lo
    fallback = max(float(span.max()), 1.0)
    pad = np.where(span > 0, frac * span, frac * fallback)
    return Window(lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])


# --------------------------------------------------------------------------
# scenario


def cmd_scenario(args) -> int:
    path = Path(args.config)
    if not path.exists():
        try:
            path = bundled_config(args.config)
        except FileNotFoundError:
            print(f"error: config {args.config} not found (not a file or bundled config name)", file=sys.stderr)
            return EXIT_ERROR
    try:
        cfg = load_config(path)
        if args.replicates is not None:
            cfg = dataclasses.replace(cfg, replicates=args.replicates)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        run = run_scenario(cfg, args.out, args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {run.out_dir / 'summary.csv'} ({len(run.records)} runs)")
    if not run.complete:
        bad = sum(1 for r in run.records if r.error or not r.report.converged)
        print(f"warning: {bad} run(s) failed or did not converge; see replicates.csv", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --------------------------------------------------------------------------
# fit


def _load_covariates(args, points):
    src = Path(args.covariates)
    if src.is_dir():
        images, names = formats.read_grid_dir(src)
        grid_window = images[0].window
        if args.window is not None and args.window != grid_window:
            raise FormatError(f"--window {args.window.bounds()} differs from the grid window {grid_window.bounds()}")
        return images, names, grid_window, "grids"
    samples = formats.read_long_covariates(src)
    if args.window is not None:
        window, source = args.window, "flag"
    else:
        ref = points if points.shape[0] else np.vstack([s[0] for s in samples.values()])
        window, source = padded_bbox(ref), "bbox+1%"
    res = (args.resolution, args.resolution)
    images = [rasterize_covariate(p, v, window, res, args.bandwidth) for p, v in samples.values()]
    return images, tuple(samples), window, source


def cmd_fit(args) -> int:
    try:
        points = formats.read_points(args.points)
        images, names, window, source = _load_covariates(args, points)
        if points.shape[0] == 0:
            log.warning("point file %s is empty; writing an intercept-only fit", args.points)
        if not np.all(window.contains(points)):
            raise FormatError(f"{int((~window.contains(points)).sum())} point(s) fall outside window {window.bounds()}")
        cfg = MethodConfig(Method.parse(args.method), J=args.J, j0=args.j0, dummies=args.dummies,
                           mu_convention=MuConvention(args.mu_convention), criterion=Criterion(args.criterion))
        if cfg.method.localized and not 0 <= args.j0 <= args.J:
            raise ValueError("need 0 <= j0 <= J")
    except (FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    result = run_method(PointPattern(points, window), images, cfg, names)
    out = Path(args.out)
    (out / "covariates").mkdir(parents=True, exist_ok=True)
    for img, name in zip(images, names):
        formats.write_grid(out / "covariates" / f"{name}.csv", img)
    doc = result.to_dict()
    doc.update({
        "window": list(window.bounds()),
        "window_source": source,
        "n_events": int(points.shape[0]),
        "covariates": list(names),
        "dummies": args.dummies,
        "points_file": str(args.points),
        "covariates_source": str(args.covariates),
    })
    formats.write_json(out / "selection.json", doc)
    formats.write_coefficients(out / "coefficients.csv", result)
    formats.write_grid(out / "intensity.csv", intensity_grid(result, images))
    if result.basis is not None:
        formats.write_atoms(out / "atoms.csv", result.basis)
    if result.path is not None:
        formats.write_path(out / "path.csv", result.path, result.scores)
        formats.write_path_coefficients(out / "path_coefficients.csv", result.path, names,
                                        1 if result.basis is None else result.basis.R)
    chosen = ", ".join(names[p] for p in sorted(result.global_active)) or "(none)"
    print(f"{result.method.value}: selected {chosen}; outputs in {out}")
    return EXIT_OK if result.converged else EXIT_PARTIAL


# --------------------------------------------------------------------------
# export


def cmd_export(args) -> int:
    run = Path(args.run_dir)
    try:
        meta = formats.read_json(run / "selection.json")
        names = tuple(meta["covariates"])
        basis = HaarBasis(meta["J"], meta["j0"]) if meta.get("J") is not None else None
        intercept, coef = formats.read_coefficients(run / "coefficients.csv", names, basis)
        images = [formats.read_grid(run / "covariates" / f"{n}.csv") for n in names]
        window = Window(*meta["window"])
    except (FormatError, KeyError, TypeError) as exc:
        print(f"error: incomplete run directory {run}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = Path(args.out) if args.out else run / "export"
    (out / "surfaces").mkdir(parents=True, exist_ok=True)
    G = args.grid
    if G < 1:
        print("error: --grid must be positive", file=sys.stderr)
        return EXIT_ERROR
    template = GridImage(np.zeros((G, G)), window)
    centers = template.center_points()
    unit = affine_to_unit(window, centers)
    surfaces = beta_hat_matrix(coef, basis, len(names), unit)
    active = [names.index(n) for n in meta.get("global_active", [])]
    for p in active:
        formats.write_grid(out / "surfaces" / f"beta_{names[p]}.csv", GridImage(surfaces[:, p].reshape(G, G), window))
    X = np.column_stack([img.interpolate(centers) for img in images])
    refit = FitResult(intercept, coef, lam=0.0, converged=True, iterations=0, loglik=float("nan"),
                      df=int(np.count_nonzero(coef)))
    pi = predict_intensity(refit, X, basis, unit)
    formats.write_grid(out / f"intensity_{G}.csv", GridImage(np.asarray(pi).reshape(G, G), window))
    print(f"wrote {len(active)} surface(s) and intensity_{G}.csv to {out}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="haarsel", description="Local variable selection for spatial point patterns.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", help="run a simulation scenario from a JSON config")
    sc.add_argument("config", help="config file, or the name of a bundled config (e.g. scenario1_desk)")
    sc.add_argument("--out", help="output directory (default: the config's 'output')")
    sc.add_argument("--workers", type=int, help="worker processes (default: $HAARSEL_WORKERS or all cores)")
    sc.add_argument("--replicates", type=int, help="override the replicate count")
    sc.add_argument("--seed", type=int, help="override the master seed")
    sc.set_defaults(func=cmd_scenario)

    ft = sub.add_parser("fit", help="fit one method to an observed point pattern")
    ft.add_argument("points", help="CSV with columns x,y")
    ft.add_argument("covariates", help="long CSV (x,y,name,value) or a directory of grid CSVs")
    ft.add_argument("--method", default="LLI", help="LLI, LLS, LASSO, SCAD or AL (default LLI)")
    ft.add_argument("--J", type=int, default=3, help="finest Haar level, exclusive (default 3)")
    ft.add_argument("--j0", type=int, default=0, help="coarsest Haar level (default 0)")
    ft.add_argument("--dummies", type=int, default=256, help="target dummy-point count (default 256)")
    ft.add_argument("--window", type=_window_arg, help="xmin,xmax,ymin,ymax (default: bounding box + 1%%)")
    ft.add_argument("--resolution", type=int, default=64, help="raster size for long-format covariates")
    ft.add_argument("--bandwidth", type=float, default=None, help="smoothing bandwidth in cells (default 2)")
    ft.add_argument("--criterion", default="wqbic", choices=[c.value for c in Criterion])
    ft.add_argument("--mu-convention", default="observed_count", choices=[c.value for c in MuConvention])
    ft.add_argument("--out", default="haarsel_fit", help="output directory")
    ft.set_defaults(func=cmd_fit)

    ex = sub.add_parser("export", help="grid the fitted surfaces and intensity of a fit directory")
    ex.add_argument("run_dir")
    ex.add_argument("--grid", type=int, default=64, help="cells per side (default 64)")
    ex.add_argument("--out", help="output directory (default RUN_DIR/export)")
    ex.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
