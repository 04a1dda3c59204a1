"""Dummy-point quadrature and the resulting Poisson-GLM log-likelihood.

With nodes ``p_m`` (data then dummy), weights ``w_m`` and data labels
``y_m``, the point-process log-likelihood is approximated by

    sum_m  y_m * eta_m - w_m * exp(eta_m),    eta_m = z_m' beta,

which is a Poisson GLM for ``y_m`` with offset ``log w_m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, LinearPredictorOverflow
from .simulate import PointPattern, Window

ETA_GUARD = 700.0


@dataclass(frozen=True)
class QuadratureScheme:
    """Data and dummy nodes with counting-measure weights.

    Attributes
    ----------
    nodes : (M, 2) array
        Data points first, in pattern order, followed by dummy tile centers.
    weights : (M,) array
        Tile area divided by the number of nodes in the tile.
    labels : (M,) int array
        1 for data nodes, 0 for dummies.
    tiles : (M,) int array
        Flat tile index (``ix * q_y + iy``) of every node.
    """

    nodes: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    n_data: int
    window: Window
    grid: tuple[int, int]
    tiles: np.ndarray

    @property
    def M(self) -> int:
        return self.nodes.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        return np.log(self.weights)

    @property
    def data_nodes(self) -> np.ndarray:
        return self.nodes[: self.n_data]


def dummy_grid_for(count: int) -> tuple[int, int]:
    """Square dummy layout ``ceil(sqrt(count))`` per side."""
    q = max(1, math.ceil(math.sqrt(count)))
    return q, q


def build_quadrature(
    pattern: PointPattern,
    window: Window | None = None,
    dummy_grid: tuple[int, int] = (16, 16),
) -> QuadratureScheme:
    window = pattern.window if window is None else window
    qx, qy = (int(q) for q in dummy_grid)
    if qx < 1 or qy < 1:
        raise ValueError("dummy grid needs at least one tile per side")
    data = pattern.points
    if not np.all(window.contains(data)):
        raise DomainError("pattern has points outside the quadrature window")
    dx, dy = window.width / qx, window.height / qy
    cx = window.xmin + (np.arange(qx) + 0.5) * dx
    cy = window.ymin + (np.arange(qy) + 0.5) * dy
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    dummy = np.column_stack([gx.ravel(), gy.ravel()])
    nodes = np.vstack([data, dummy])

    ix = np.minimum(np.floor((nodes[:, 0] - window.xmin) / dx), qx - 1).astype(np.int64)
    iy = np.minimum(np.floor((nodes[:, 1] - window.ymin) / dy), qy - 1).astype(np.int64)
    tiles = ix * qy + iy
    counts = np.bincount(tiles, minlength=qx * qy)
    weights = (dx * dy) / counts[tiles]
    labels = np.concatenate([np.ones(data.shape[0], dtype=np.int64), np.zeros(qx * qy, dtype=np.int64)])
    for arr in (nodes, weights, labels, tiles):
        arr.setflags(write=False)
    return QuadratureScheme(nodes, weights, labels, data.shape[0], window, (qx, qy), tiles)


def _eta(coeffs, design, scheme: QuadratureScheme) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(coeffs, dtype=float)
    Z = np.asarray(design, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != scheme.M:
        raise DimensionError(f"design must have {scheme.M} rows, got shape {Z.shape}")
    if w.shape != (Z.shape[1],):
        raise DimensionError(f"expected {Z.shape[1]} coefficients, got shape {w.shape}")
    eta = Z @ w
    if eta.size and eta.max() > ETA_GUARD:
        raise LinearPredictorOverflow(f"linear predictor {eta.max():.1f} exceeds {ETA_GUARD}")
    return Z, eta


def bt_loglik(coeffs, design, scheme: QuadratureScheme) -> float:
    """Quadrature log-likelihood; include a column of ones for the intercept."""
    _, eta = _eta(coeffs, design, scheme)
    return float(scheme.labels @ eta - scheme.weights @ np.exp(eta))


def bt_score(coeffs, design, scheme: QuadratureScheme) -> np.ndarray:
    Z, eta = _eta(coeffs, design, scheme)
    return Z.T @ (scheme.labels - scheme.weights * np.exp(eta))


def bt_hessian(coeffs, design, scheme: QuadratureScheme) -> np.ndarray:
    Z, eta = _eta(coeffs, design, scheme)
    mu = scheme.weights * np.exp(eta)
    return -(Z.T * mu) @ Z
