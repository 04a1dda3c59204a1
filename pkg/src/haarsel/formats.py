"""CSV and JSON readers/writers for patterns, grids, paths and fits.

Every layout is described with a worked example in FORMATS.md.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import FormatError
from .select import SelectionResult
from .simulate import GridImage, PointPattern, Window
from .solver import FitPath
from .wavelet import HaarBasis


def _fmt(v: float) -> str:
    return "nan" if isinstance(v, float) and math.isnan(v) else format(float(v), ".17g")


def _rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc.strerror}") from None
    if header is None:
        raise FormatError(f"{path}: empty file, expected a header line")
    return [h.strip() for h in header], rows


def _columns(path, header, required) -> list[int]:
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}; found {', '.join(header)}")
    return [header.index(c) for c in required]


def _floats(path, rows, idx, line0=2) -> np.ndarray:
    out = np.empty((len(rows), len(idx)))
    for i, row in enumerate(rows):
        try:
            out[i] = [float(row[j]) for j in idx]
        except (ValueError, IndexError):
            raise FormatError(f"{path}:{i + line0}: expected numbers in columns {idx}") from None
    if not np.all(np.isfinite(out)):
        raise FormatError(f"{path}: non-finite coordinate or value")
    return out


# --------------------------------------------------------------------------
# points


def read_points(path) -> np.ndarray:
    """(n, 2) coordinates from a CSV with ``x`` and ``y`` columns."""
    header, rows = _rows(path)
    return _floats(path, rows, _columns(path, header, ("x", "y"))).reshape(-1, 2)


def write_points(path, pattern: PointPattern | np.ndarray):
    pts = pattern.points if isinstance(pattern, PointPattern) else np.asarray(pattern).reshape(-1, 2)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "y"))
        w.writerows((_fmt(x), _fmt(y)) for x, y in pts)


def read_long_covariates(path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """``name -> (points, values)`` from a long CSV ``x,y,name,value``; names keep file order."""
    header, rows = _rows(path)
    ix, iy, iname, ival = _columns(path, header, ("x", "y", "name", "value"))
    nums = _floats(path, rows, [ix, iy, ival])
    out: dict[str, list] = {}
    for row, (x, y, v) in zip(rows, nums):
        out.setdefault(row[iname].strip(), []).append((x, y, v))
    if not out:
        raise FormatError(f"{path}: no covariate samples")
    return {k: (np.array(v)[:, :2], np.array(v)[:, 2]) for k, v in out.items()}


# --------------------------------------------------------------------------
# grids


def write_grid(path, image: GridImage):
    """Two header lines (``resolution,nx,ny`` and ``window,xmin,xmax,ymin,ymax``),
    then one line per grid row from the bottom (``iy = 0``) up."""
    nx, ny = image.resolution
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("resolution", nx, ny))
        w.writerow(("window", *(_fmt(b) for b in image.window.bounds())))
        w.writerows([_fmt(v) for v in row] for row in image.values)


def read_grid(path) -> GridImage:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc.strerror}") from None
    if len(lines) < 3:
        raise FormatError(f"{path}: a grid file needs two header lines and at least one row")
    head = [c.strip() for c in lines[0].split(",")]
    win = [c.strip() for c in lines[1].split(",")]
    if head[0] != "resolution" or len(head) != 3:
        raise FormatError(f"{path}:1: expected 'resolution,nx,ny'")
    if win[0] != "window" or len(win) != 5:
        raise FormatError(f"{path}:2: expected 'window,xmin,xmax,ymin,ymax'")
    try:
        nx, ny = int(head[1]), int(head[2])
        window = Window(*(float(b) for b in win[1:]))
    except ValueError as exc:
        raise FormatError(f"{path}: bad grid header: {exc}") from None
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != ny:
        raise FormatError(f"{path}: header says {ny} rows, found {len(body)}")
    values = np.empty((ny, nx))
    for i, ln in enumerate(body):
        cells = ln.split(",")
        if len(cells) != nx:
            raise FormatError(f"{path}:{i + 3}: expected {nx} values, found {len(cells)}")
        try:
            values[i] = [float(c) for c in cells]
        except ValueError:
            raise FormatError(f"{path}:{i + 3}: non-numeric value") from None
    return GridImage(values, window)


def read_grid_dir(path) -> tuple[list[GridImage], tuple[str, ...]]:
    """Every ``*.csv`` grid in a directory, sorted by file name; names are file stems."""
    path = Path(path)
    files = sorted(path.glob("*.csv"))
    if not files:
        raise FormatError(f"{path}: no grid CSV files")
    images = [read_grid(f) for f in files]
    first = images[0]
    for f, img in zip(files, images):
        if img.window != first.window or img.resolution != first.resolution:
            raise FormatError(f"{f}: grid window/resolution differs from {files[0].name}")
    return images, tuple(f.stem for f in files)


# --------------------------------------------------------------------------
# fits


def write_atoms(path, basis: HaarBasis):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("r", "j", "orientation", "k1", "k2"))
        w.writerows((a["r"], a["j"], a["orientation"], a["k1"], a["k2"]) for a in basis.records())


def write_path(path, fp: FitPath, scores=None):
    """One row per path point: ``lambda_index,lambda,df,bt_loglik,converged[,score]``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("lambda_index", "lambda", "df", "bt_loglik", "converged") + (("score",) if scores is not None else ()))
        for i, (lam, fit) in enumerate(zip(fp.lambdas, fp.fits)):
            row = [i, _fmt(lam), fit.df, _fmt(fit.loglik), int(fit.converged)]
            if scores is not None:
                row.append(_fmt(scores[i]))
            w.writerow(row)


def write_path_coefficients(path, fp: FitPath, names, R: int):
    """Long format ``lambda_index,predictor,atom,estimate``; zero estimates are omitted."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("lambda_index", "predictor", "atom", "estimate"))
        for i, fit in enumerate(fp.fits):
            for c in np.flatnonzero(fit.coefficients):
                w.writerow((i, names[c // R], c % R + 1, _fmt(fit.coefficients[c])))


def write_coefficients(path, result: SelectionResult, include_zero: bool = False):
    """Refit coefficients keyed by predictor (and atom for localized methods).

    The first row holds the intercept with empty atom fields.
    """
    coef = result.refit.coefficients
    basis = result.basis
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if basis is None:
            w.writerow(("predictor", "estimate"))
            w.writerow(("(intercept)", _fmt(result.refit.intercept)))
            for p, name in enumerate(result.names):
                w.writerow((name, _fmt(coef[p])))
            return
        w.writerow(("predictor", "r", "j", "orientation", "k1", "k2", "label", "estimate"))
        w.writerow(("(intercept)", "", "", "", "", "", "", _fmt(result.refit.intercept)))
        R = basis.R
        for c in range(coef.size):
            if coef[c] == 0 and not include_zero:
                continue
            a = basis.atoms[c % R]
            w.writerow((result.names[c // R], c % R + 1, a.j, a.orientation.value, a.k1, a.k2, a.label,
                        _fmt(coef[c])))


def read_coefficients(path, names, basis: HaarBasis | None) -> tuple[float, np.ndarray]:
    """Inverse of :func:`write_coefficients`: ``(intercept, coefficient vector)``."""
    header, rows = _rows(path)
    R = 1 if basis is None else basis.R
    coef = np.zeros(len(names) * R)
    intercept = None
    ip, ie = _columns(path, header, ("predictor", "estimate"))
    ir = None if basis is None else _columns(path, header, ("r",))[0]
    index = {n: k for k, n in enumerate(names)}
    for line, row in enumerate(rows, start=2):
        name = row[ip]
        try:
            est = float(row[ie])
        except ValueError:
            raise FormatError(f"{path}:{line}: non-numeric estimate") from None
        if name == "(intercept)":
            intercept = est
            continue
        if name not in index:
            raise FormatError(f"{path}:{line}: unknown predictor {name!r}")
        r = 0 if ir is None else int(row[ir]) - 1
        coef[index[name] * R + r] = est
    if intercept is None:
        raise FormatError(f"{path}: no intercept row")
    return intercept, coef


def write_json(path, doc: dict):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
