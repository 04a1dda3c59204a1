"""Separable 2D Haar atoms on the unit square.

Atoms are evaluated pointwise from their closed form, so irregular
quadrature nodes need no grid transform. Tiles are half-open
``[k 2^-j, (k+1) 2^-j)`` except that a coordinate equal to 1.0 belongs to
the last tile, so every point of the closed square has exactly one tile
per level.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .errors import DimensionError, DomainError


class Orientation(str, enum.Enum):
    SCALING = "SCALING"
    H = "H"
    V = "V"
    D = "D"


# (x uses psi, y uses psi) for each orientation
_USES_PSI = {
    Orientation.SCALING: (False, False),
    Orientation.H: (True, False),
    Orientation.V: (False, True),
    Orientation.D: (True, True),
}
_ORIENT_CODE = {Orientation.SCALING: 0, Orientation.H: 1, Orientation.V: 2, Orientation.D: 3}


class WaveletIndex(NamedTuple):
    """Address of one atom: scale ``j``, orientation and dyadic shift."""

    j: int
    orientation: Orientation
    k1: int
    k2: int

    def validate(self) -> "WaveletIndex":
        if self.j < 0:
            raise IndexError(f"negative scale j={self.j}")
        n = 1 << self.j
        if not (0 <= self.k1 < n and 0 <= self.k2 < n):
            raise IndexError(
                f"shift ({self.k1}, {self.k2}) outside [0, {n}) at scale j={self.j}"
            )
        return self

    @property
    def label(self) -> str:
        """Short label such as ``j=2:H(1,3)``."""
        tag = "LL" if self.orientation is Orientation.SCALING else self.orientation.value
        return f"j={self.j}:{tag}({self.k1},{self.k2})"


def _check_unit(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DimensionError(f"points must have shape (m, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)) or pts.min() < 0.0 or pts.max() > 1.0:
        raise DomainError("points must lie in the closed unit square [0, 1]^2")
    return pts


def _tile(coord: np.ndarray, scale: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tile index and local coordinate in [0, 1] for ``scale = 2**j``."""
    scaled = coord * scale  # exact: scale is a power of two
    k = np.minimum(np.floor(scaled), scale - 1)
    return k, scaled - k


def _factor(local: np.ndarray, use_psi: np.ndarray) -> np.ndarray:
    psi = np.where(local < 0.5, 1.0, -1.0)
    return np.where(use_psi, psi, 1.0)


def eval_atom(idx: WaveletIndex, t) -> float:
    """Value of a single atom at the unit-square point ``t``.

    The atom equals ``2**j`` in magnitude on its tile and 0 elsewhere.
    """
    idx = WaveletIndex(idx.j, Orientation(idx.orientation), idx.k1, idx.k2).validate()
    pt = _check_unit(t)
    if pt.shape[0] != 1:
        raise DimensionError("eval_atom takes a single point")
    scale = float(1 << idx.j)
    kx, ux = _tile(pt[0, 0], scale)
    ky, uy = _tile(pt[0, 1], scale)
    if kx != idx.k1 or ky != idx.k2:
        return 0.0
    px, py = _USES_PSI[idx.orientation]
    return float(scale * _factor(ux, px) * _factor(uy, py))


class HaarBasis:
    """Ordered 2D Haar dictionary for levels ``j0 <= j < J``.

    Ordering: scaling atoms at ``j0`` first (``k1`` outer, ``k2`` inner),
    then for each level the H, V and D families in that order, each
    row-major in ``(k1, k2)``.

    Parameters
    ----------
    J : int
        Finest level, exclusive. ``J == j0`` leaves only the scaling atoms.
    j0 : int
        Coarse level.
    """

    def __init__(self, J: int, j0: int = 0):
        if j0 < 0 or J < j0:
            raise ValueError(f"need 0 <= j0 <= J, got j0={j0}, J={J}")
        self.j0 = int(j0)
        self.J = int(J)
        atoms = []
        n0 = 1 << self.j0
        for k1 in range(n0):
            for k2 in range(n0):
                atoms.append(WaveletIndex(self.j0, Orientation.SCALING, k1, k2))
        for j in range(self.j0, self.J):
            n = 1 << j
            for orient in (Orientation.H, Orientation.V, Orientation.D):
                for k1 in range(n):
                    for k2 in range(n):
                        atoms.append(WaveletIndex(j, orient, k1, k2))
        self.atoms: tuple[WaveletIndex, ...] = tuple(atoms)
        self._j = np.array([a.j for a in atoms], dtype=np.int64)
        self._scale = np.array([float(1 << a.j) for a in atoms])
        self._k1 = np.array([a.k1 for a in atoms], dtype=float)
        self._k2 = np.array([a.k2 for a in atoms], dtype=float)
        self._psi_x = np.array([_USES_PSI[a.orientation][0] for a in atoms])
        self._psi_y = np.array([_USES_PSI[a.orientation][1] for a in atoms])
        for arr in (self._j, self._scale, self._k1, self._k2, self._psi_x, self._psi_y):
            arr.setflags(write=False)

    @property
    def R(self) -> int:
        return len(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[WaveletIndex]:
        return iter(self.atoms)

    def __eq__(self, other) -> bool:
        return isinstance(other, HaarBasis) and (self.j0, self.J) == (other.j0, other.J)

    def __hash__(self) -> int:
        return hash((self.j0, self.J))

    def __repr__(self) -> str:
        return f"HaarBasis(J={self.J}, j0={self.j0}, R={self.R})"

    @property
    def levels(self) -> np.ndarray:
        return self._j

    def index_of(self, idx: WaveletIndex) -> int:
        return self.atoms.index(WaveletIndex(idx.j, Orientation(idx.orientation), idx.k1, idx.k2))

    def support_mask(self, points) -> np.ndarray:
        """Boolean (m, R) mask of points lying on each atom's tile."""
        pts = _check_unit(points)
        kx, _ = _tile(pts[:, :1], self._scale[None, :])
        ky, _ = _tile(pts[:, 1:], self._scale[None, :])
        return (kx == self._k1) & (ky == self._k2)

    def matrix(self, points) -> np.ndarray:
        """Design block with row ``m`` equal to all atoms evaluated at point ``m``."""
        pts = _check_unit(points)
        if pts.shape[0] == 0:
            return np.zeros((0, self.R))
        kx, ux = _tile(pts[:, :1], self._scale[None, :])
        ky, uy = _tile(pts[:, 1:], self._scale[None, :])
        on_tile = (kx == self._k1) & (ky == self._k2)
        vals = self._scale * _factor(ux, self._psi_x) * _factor(uy, self._psi_y)
        return np.where(on_tile, vals, 0.0)

    def records(self) -> list[dict]:
        """Atom dictionary rows ``(r, j, orientation, k1, k2)`` with 1-based ``r``."""
        return [
            {"r": r + 1, "j": a.j, "orientation": a.orientation.value, "k1": a.k1, "k2": a.k2}
            for r, a in enumerate(self.atoms)
        ]


def eval_basis(basis: HaarBasis, t) -> np.ndarray:
    """All ``R`` atoms at a single point, in basis order."""
    pt = _check_unit(t)
    if pt.shape[0] != 1:
        raise DimensionError("eval_basis takes a single point")
    return basis.matrix(pt)[0]


def basis_matrix(basis: HaarBasis, points) -> np.ndarray:
    return basis.matrix(points)


def reconstruct(coeffs, basis: HaarBasis, t):
    """Evaluate ``sum_r coeffs[r] * atom_r(t)``.

    ``t`` may be a single point (scalar result) or an (m, 2) array.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (basis.R,):
        raise DimensionError(f"expected {basis.R} coefficients, got shape {c.shape}")
    pts = np.asarray(t, dtype=float)
    single = pts.ndim == 1
    out = basis.matrix(pts) @ c
    return float(out[0]) if single else out


def cell_centers(level: int) -> np.ndarray:
    """Centers of the ``2**level x 2**level`` dyadic grid, x-major order."""
    n = 1 << level
    c = (np.arange(n) + 0.5) / n
    gx, gy = np.meshgrid(c, c, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def project(func: Callable[[np.ndarray], np.ndarray], basis: HaarBasis, level: int | None = None) -> np.ndarray:
    """L2 projection coefficients of ``func`` by midpoint quadrature.

    ``func`` maps an (m, 2) array of unit-square points to m values. The
    quadrature grid has ``2**level`` cells per side (default ``J + 3``); it
    is exact for functions constant on that dyadic partition.
    """
    level = basis.J + 3 if level is None else level
    if level < basis.J:
        raise ValueError("quadrature level must be at least J")
    pts = cell_centers(level)
    vals = np.asarray(func(pts), dtype=float)
    return basis.matrix(pts).T @ vals / pts.shape[0]
