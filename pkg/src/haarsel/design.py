"""Covariate rasterization and the localized (covariate x atom) design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .quadrature import QuadratureScheme
from .simulate import GridImage, Window
from .wavelet import HaarBasis

CONSTANT_TOL = 1e-10


def affine_to_unit(window: Window, points) -> np.ndarray:
    """Rescale window coordinates to the unit square, axis by axis."""
    if window.width <= 0 or window.height <= 0:
        raise DomainError("zero-width window")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.column_stack([(pts[:, 0] - window.xmin) / window.width, (pts[:, 1] - window.ymin) / window.height])
    # absorb rounding at the window edges
    return np.clip(out, 0.0, 1.0)


def unit_to_window(window: Window, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.column_stack([window.xmin + pts[:, 0] * window.width, window.ymin + pts[:, 1] * window.height])


def rasterize_covariate(
    points,
    values,
    window: Window,
    resolution: tuple[int, int] = (64, 64),
    bandwidth: float | None = None,
) -> GridImage:
    """Kernel-smooth scattered samples onto cell centers.

    Parameters
    ----------
    points, values
        Sample locations (n, 2) and their values (n,).
    bandwidth
        Gaussian kernel scale in cell widths (default 2). ``0`` assigns
        each cell the value of its nearest sample, which passes through
        samples located at cell centers unchanged.

    Cells whose kernel weights all underflow take the global sample mean.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    vals = np.asarray(values, dtype=float).ravel()
    if pts.shape[0] == 0:
        raise ValueError("rasterize_covariate needs at least one sample")
    if vals.shape[0] != pts.shape[0]:
        raise DimensionError("points and values differ in length")
    nx, ny = resolution
    template = GridImage(np.zeros((ny, nx)), window)
    dx, dy = template.cell_size
    centers = template.center_points()
    bw = 2.0 if bandwidth is None else float(bandwidth)
    out = np.empty(centers.shape[0])
    for start in range(0, centers.shape[0], 2048):
        c = centers[start:start + 2048]
        ux = (c[:, None, 0] - pts[None, :, 0]) / dx
        uy = (c[:, None, 1] - pts[None, :, 1]) / dy
        d2 = ux ** 2 + uy ** 2
        if bw == 0.0:
            out[start:start + 2048] = vals[np.argmin(d2, axis=1)]
            continue
        k = np.exp(-0.5 * d2 / bw ** 2)
        tot = k.sum(1)
        with np.errstate(invalid="ignore", divide="ignore"):
            est = (k @ vals) / tot
        out[start:start + 2048] = np.where(tot > 0, est, vals.mean())
    return GridImage(out.reshape(ny, nx), window)


@dataclass(frozen=True)
class CovariateTable:
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DimensionError("covariate values must be an (M, P) matrix")
        if v.shape[1] != len(self.names):
            raise DimensionError(f"{v.shape[1]} columns but {len(self.names)} names")
        if not np.all(np.isfinite(v)):
            raise DomainError("covariate values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def P(self) -> int:
        return self.values.shape[1]


def default_names(P: int) -> tuple[str, ...]:
    return tuple(f"X{p + 1}" for p in range(P))


def covariates_at_nodes(images, scheme: QuadratureScheme, names=None) -> CovariateTable:
    """Bilinear interpolation of each image at every quadrature node."""
    images = list(images)
    for img in images:
        if img.window != scheme.window:
            raise DomainError(f"image window {img.window} does not match quadrature window {scheme.window}")
    values = np.column_stack([img.interpolate(scheme.nodes) for img in images]) if images else np.zeros((scheme.M, 0))
    return CovariateTable(values, names if names is not None else default_names(len(images)))


def localize(X: np.ndarray, unit_points: np.ndarray, basis: HaarBasis | None) -> np.ndarray:
    """Row-wise products ``X[:, p] * atom_r(t)`` at column ``p * R + r``."""
    X = np.asarray(X, dtype=float)
    if basis is None:
        return X.copy()
    psi = basis.matrix(unit_points)
    if psi.shape[0] != X.shape[0]:
        raise DimensionError("covariate rows and points differ in count")
    return (X[:, :, None] * psi[:, None, :]).reshape(X.shape[0], -1)


@dataclass(frozen=True)
class LocalizedDesign:
    """Design matrix with column map and weighted standardization record.

    ``basis=None`` is the global design: one column per covariate.
    Columns are 0-based: column ``p * R + r`` pairs predictor ``p`` with
    atom ``r``.
    """

    Z: np.ndarray
    column_map: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    constant: np.ndarray
    basis: HaarBasis | None
    names: tuple[str, ...]
    nonzero_span: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.Z.shape[1]

    @property
    def R(self) -> int:
        return 1 if self.basis is None else self.basis.R

    @property
    def P(self) -> int:
        return len(self.names)

    @property
    def localized(self) -> bool:
        return self.basis is not None

    def column_index(self, p: int, r: int) -> int:
        return p * self.R + r

    def standardized(self) -> np.ndarray:
        """Centered and scaled columns; constant columns become zero."""
        Zs = (self.Z - self.center) / np.where(self.constant, 1.0, self.scale)
        Zs[:, self.constant] = 0.0
        return Zs

    def to_original(self, intercept_std: float, coef_std) -> tuple[float, np.ndarray]:
        w = np.asarray(coef_std, dtype=float)
        w = np.where(self.constant, 0.0, w / np.where(self.constant, 1.0, self.scale))
        return float(intercept_std - w @ self.center), w

    def to_standardized(self, intercept: float, coef) -> tuple[float, np.ndarray]:
        w = np.asarray(coef, dtype=float)
        return float(intercept + w @ self.center), w * self.scale

    def rows(self, X, unit_points) -> np.ndarray:
        """Unstandardized design rows for covariate values at new points."""
        return localize(X, unit_points, self.basis)


def build_design(table: CovariateTable, basis: HaarBasis | None, scheme: QuadratureScheme) -> LocalizedDesign:
    if table.values.shape[0] != scheme.M:
        raise DimensionError(f"covariate table has {table.values.shape[0]} rows, scheme has {scheme.M} nodes")
    unit = affine_to_unit(scheme.window, scheme.nodes)
    Z = localize(table.values, unit, basis)
    R = 1 if basis is None else basis.R
    P = table.P
    cmap = np.column_stack([np.repeat(np.arange(P), R), np.tile(np.arange(R), P)]).astype(np.int64)

    w = scheme.weights / scheme.weights.sum()
    center = w @ Z
    scale = np.sqrt(w @ (Z - center) ** 2)
    constant = scale <= CONSTANT_TOL * (1.0 + np.abs(center))
    scale = np.where(constant, 1.0, scale)

    nz = Z != 0
    any_nz = nz.any(0)
    first = np.where(any_nz, nz.argmax(0), 0)
    last = np.where(any_nz, Z.shape[0] - 1 - nz[::-1].argmax(0), -1)
    span = np.column_stack([first, last])
    for arr in (Z, cmap, center, scale, constant, span):
        arr.setflags(write=False)
    return LocalizedDesign(Z, cmap, center, scale, constant, basis, table.names, span)
