"""Ground-truth surfaces, Gaussian random field covariates and point
pattern simulators (inhomogeneous Poisson by thinning, Thomas-modulated
cluster process)."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import DimensionError, DomainError

SQRT2 = np.sqrt(2.0)
N_TRUE_PREDICTORS = 10
MAX_GRF_CELLS = 128 * 128
# above this many parents the kernel sum is truncated at KERNEL_CUTOFF sigmas
DENSE_PARENT_LIMIT = 1000
KERNEL_CUTOFF = 9.0


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replicate_seed(master: int, i: int) -> int:
    """Seed for replicate ``i``: ``master XOR i``."""
    return int(master) ^ int(i)


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window."""

    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise DomainError(f"window needs positive side lengths: {self}")

    @classmethod
    def unit(cls) -> "Window":
        return cls(0.0, 1.0, 0.0, 1.0)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return (
            (pts[:, 0] >= self.xmin) & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin) & (pts[:, 1] <= self.ymax)
        )

    def uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 2))
        return np.column_stack([self.xmin + self.width * u[:, 0], self.ymin + self.height * u[:, 1]])

    def bounds(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)


@dataclass(frozen=True)
class PointPattern:
    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.all(self.window.contains(pts)):
            raise DomainError("pattern has points outside its window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class GridImage:
    """Pixel image; ``values[iy, ix]`` is the cell in row ``iy`` (y) and column ``ix`` (x)."""

    values: np.ndarray
    window: Window

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise DimensionError(f"image values must be a non-empty 2D array, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def resolution(self) -> tuple[int, int]:
        """``(cells in x, cells in y)``."""
        return self.values.shape[1], self.values.shape[0]

    @property
    def cell_size(self) -> tuple[float, float]:
        nx, ny = self.resolution
        return self.window.width / nx, self.window.height / ny

    @property
    def cell_area(self) -> float:
        dx, dy = self.cell_size
        return dx * dy

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as two (ny, nx) arrays."""
        nx, ny = self.resolution
        dx, dy = self.cell_size
        cx = self.window.xmin + (np.arange(nx) + 0.5) * dx
        cy = self.window.ymin + (np.arange(ny) + 0.5) * dy
        return np.meshgrid(cx, cy, indexing="xy")

    def center_points(self) -> np.ndarray:
        gx, gy = self.centers()
        return np.column_stack([gx.ravel(), gy.ravel()])

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def map(self, fn) -> "GridImage":
        return GridImage(fn(self.values), self.window)

    def interpolate(self, points) -> np.ndarray:
        """Bilinear interpolation between cell centers, constant beyond the outer centers.

        The integral of this interpolant over the window equals the cell
        sum times cell area.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        nx, ny = self.resolution
        dx, dy = self.cell_size
        fx = (pts[:, 0] - self.window.xmin) / dx - 0.5
        fy = (pts[:, 1] - self.window.ymin) / dy - 0.5
        ix, tx = _bracket(fx, nx)
        iy, ty = _bracket(fy, ny)
        v = self.values
        ix1 = np.minimum(ix + 1, nx - 1)
        iy1 = np.minimum(iy + 1, ny - 1)
        return (
            (1 - tx) * (1 - ty) * v[iy, ix]
            + tx * (1 - ty) * v[iy, ix1]
            + (1 - tx) * ty * v[iy1, ix]
            + tx * ty * v[iy1, ix1]
        )


def _bracket(f: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        return np.zeros(f.shape, dtype=np.int64), np.zeros(f.shape)
    i = np.clip(np.floor(f), 0, n - 2).astype(np.int64)
    return i, np.clip(f - i, 0.0, 1.0)


@dataclass(frozen=True)
class GrfSpec:
    """Zero-mean Gaussian field with covariance ``sill * exp(-h / range)``."""

    sill: float = 1.0
    range: float = 0.25
    resolution: tuple[int, int] = (64, 64)
    seed: int = 0
    window: Window = Window()

    def __post_init__(self):
        if self.sill <= 0 or self.range <= 0:
            raise DomainError("GRF sill and range must be positive")


@dataclass(frozen=True)
class ThomasSpec:
    kappa: float
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.kappa <= 0 or self.sigma <= 0:
            raise DomainError("Thomas kappa and sigma must be positive")


THOMAS_MODERATE = dict(kappa=80.0, sigma=0.12)
THOMAS_HIGH = dict(kappa=30.0, sigma=0.06)


# --------------------------------------------------------------------------
# coefficient surfaces


def true_beta(p: int, s) -> np.ndarray | float:
    """Coefficient surface ``p`` (1..10) at unit-square point(s) ``s``."""
    if not 1 <= p <= N_TRUE_PREDICTORS:
        raise ValueError(f"predictor index must be in 1..{N_TRUE_PREDICTORS}, got {p}")
    pts = np.asarray(s, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    out = _BETAS[p](x, y).astype(float)
    return float(out[0]) if single else out


def _beta1(x, y):
    return np.select([(x < 0.5) & (y < 0.5), (x >= 0.5) & (y >= 0.5)], [1.0, -1.0], 0.0)


def _beta2(x, y):
    return np.select(
        [
            (x < 0.5) & (y < 0.5),
            (0.5 <= x) & (x < 0.75) & (0.5 <= y) & (y < 0.75),
            (x >= 0.75) & (y >= 0.75),
        ],
        [1.0, 0.5, 0.0],
        -1.0,
    )


def _beta5(x, y):
    return np.select([(x <= 0.5) & (y <= 0.5), (x <= 0.5) & (y > 0.5)], [SQRT2, 1.0], 0.0)


def _beta10(x, y):
    sm, df = x + y, x - y
    band = (0.5 <= sm) & (sm <= 1.5)
    # listed order, first match wins; the fifth case is empty as written
    return np.select(
        [
            band & (df <= -0.5),
            band & (df >= 0.5),
            band & (np.abs(df) <= 0.5),
            (sm <= 0.5) & (np.abs(df) <= 0.5),
            (sm <= 0.5) & (sm >= 1.5),
        ],
        [1.0, 1.0, 0.5, SQRT2, -1.0],
        0.0,
    )


_BETAS = {
    1: _beta1,
    2: _beta2,
    3: lambda x, y: (x <= 0.5) * 1.0,
    4: lambda x, y: (y <= 0.5) * 1.0,
    5: _beta5,
    6: lambda x, y: SQRT2 * (x + y <= 0.5),
    7: lambda x, y: SQRT2 * (x - y <= 0.5),
    8: lambda x, y: SQRT2 * (x + y <= 1.5),
    9: lambda x, y: SQRT2 * (x - y >= -0.5),
    10: _beta10,
}


def true_beta_matrix(s, n_predictors: int = N_TRUE_PREDICTORS) -> np.ndarray:
    """(m, n_predictors) truth; columns past the tenth are zero (noise predictors)."""
    pts = np.asarray(s, dtype=float).reshape(-1, 2)
    out = np.zeros((pts.shape[0], n_predictors))
    for p in range(1, min(n_predictors, N_TRUE_PREDICTORS) + 1):
        out[:, p - 1] = true_beta(p, pts)
    return out


# --------------------------------------------------------------------------
# Gaussian random fields


@functools.lru_cache(maxsize=4)
def _grf_factor(nx: int, ny: int, window: Window, sill: float, rng_range: float) -> np.ndarray:
    img = GridImage(np.zeros((ny, nx)), window)
    pts = img.center_points()
    diff = pts[:, None, :] - pts[None, :, :]
    cov = sill * np.exp(-np.sqrt((diff ** 2).sum(-1)) / rng_range)
    del diff
    cov[np.diag_indices_from(cov)] += 1e-10
    factor = linalg.cholesky(cov, lower=True, overwrite_a=True, check_finite=False)
    factor.setflags(write=False)
    return factor


def simulate_grfs(spec: GrfSpec, count: int, seed=None) -> list[GridImage]:
    """``count`` independent fields sharing one Cholesky factor.

    ``seed`` overrides ``spec.seed`` and may be a Generator.
    """
    nx, ny = spec.resolution
    if nx * ny > MAX_GRF_CELLS:
        raise ValueError(f"GRF grid {nx}x{ny} exceeds the {MAX_GRF_CELLS}-cell Cholesky limit")
    factor = _grf_factor(nx, ny, spec.window, float(spec.sill), float(spec.range))
    rng = make_rng(spec.seed if seed is None else seed)
    z = rng.standard_normal((nx * ny, count))
    fields = factor @ z
    return [GridImage(fields[:, i].reshape(ny, nx), spec.window) for i in range(count)]


def simulate_grf(spec: GrfSpec) -> GridImage:
    return simulate_grfs(spec, 1)[0]


def calibrate_intercept(target_mu: float, field: GridImage) -> float:
    """Intercept ``b0`` such that the cell-sum integral of ``exp(b0 + field)`` is ``target_mu``."""
    if target_mu <= 0:
        raise DomainError("target_mu must be positive")
    lse = logsumexp(field.values)
    if not np.isfinite(lse):
        raise FloatingPointError("degenerate log-intensity field")
    return float(np.log(target_mu) - lse - np.log(field.cell_area))


# --------------------------------------------------------------------------
# point processes


def simulate_ipp(intensity: GridImage, seed=None) -> PointPattern:
    """Lewis-Shedler thinning against ``1.05 * max`` of the image.

    The intensity at a candidate is the bilinear interpolant of the image.
    """
    vals = intensity.values
    if not np.all(np.isfinite(vals)) or vals.min() < 0:
        raise DomainError("intensity values must be finite and non-negative")
    rng = make_rng(seed)
    window = intensity.window
    pi_max = 1.05 * float(vals.max())
    if pi_max == 0.0:
        return PointPattern(np.zeros((0, 2)), window)
    n_cand = rng.poisson(pi_max * window.area)
    cand = window.uniform(n_cand, rng)
    keep = rng.random(n_cand) * pi_max < intensity.interpolate(cand)
    return PointPattern(cand[keep], window)


def homogeneous_poisson(rate: float, window: Window, seed=None) -> PointPattern:
    rng = make_rng(seed)
    return PointPattern(window.uniform(rng.poisson(rate * window.area), rng), window)


def cluster_field(u, parents: np.ndarray, spec: ThomasSpec) -> np.ndarray:
    """``S(u) = (1/kappa) * sum_c G(u - c; sigma)`` with ``G`` the isotropic Gaussian density.

    With more than ``DENSE_PARENT_LIMIT`` parents, terms beyond
    ``KERNEL_CUTOFF * sigma`` are dropped; each is below ``exp(-40)`` of the peak.
    """
    pts = np.asarray(u, dtype=float).reshape(-1, 2)
    par = np.asarray(parents, dtype=float).reshape(-1, 2)
    out = np.zeros(pts.shape[0])
    if par.shape[0] == 0:
        return out
    norm = 1.0 / (2.0 * np.pi * spec.sigma ** 2 * spec.kappa)
    if par.shape[0] > DENSE_PARENT_LIMIT:
        near = cKDTree(pts).sparse_distance_matrix(
            cKDTree(par), KERNEL_CUTOFF * spec.sigma, output_type="coo_matrix")
        np.add.at(out, near.row, np.exp(-near.data ** 2 / (2.0 * spec.sigma ** 2)))
        return norm * out
    for start in range(0, pts.shape[0], 8192):
        chunk = pts[start:start + 8192]
        d2 = ((chunk[:, None, :] - par[None, :, :]) ** 2).sum(-1)
        out[start:start + 8192] = norm * np.exp(-d2 / (2.0 * spec.sigma ** 2)).sum(1)
    return out


class ThomasSample(NamedTuple):
    pattern: PointPattern
    parents: PointPattern
    bound_violations: int


def simulate_thomas(
    base_log_intensity: GridImage,
    spec: ThomasSpec,
    seed=None,
    bound_grid: int = 256,
    bound_safety: float = 1.2,
) -> ThomasSample:
    """Thinning against ``exp(base(u)) * S(u)`` with parents ~ PPP(kappa).

    The dominating rate is ``bound_safety`` times the maximum over a
    ``bound_grid``-square evaluation grid. Candidates above it are accepted
    with probability 1 and counted in ``bound_violations``.
    """
    rng = make_rng(spec.seed if seed is None else seed)
    window = base_log_intensity.window
    parents = homogeneous_poisson(spec.kappa, window, rng)
    empty = PointPattern(np.zeros((0, 2)), window)
    if parents.n == 0:
        return ThomasSample(empty, parents, 0)
    base = base_log_intensity.map(np.exp)

    def rate(u):
        return base.interpolate(u) * cluster_field(u, parents.points, spec)

    probe = GridImage(np.zeros((bound_grid, bound_grid)), window).center_points()
    bound = bound_safety * float(rate(probe).max())
    if not np.isfinite(bound):
        raise FloatingPointError("non-finite Thomas intensity bound")
    if bound == 0.0:
        return ThomasSample(empty, parents, 0)
    n_cand = rng.poisson(bound * window.area)
    cand = window.uniform(n_cand, rng)
    u = rng.random(n_cand)
    lam = rate(cand)
    keep = u * bound < lam
    violations = int((lam > bound).sum())
    return ThomasSample(PointPattern(cand[keep], window), parents, violations)
