"""Tuning-parameter choice by WQBIC, active sets, refit and prediction.

``run_method`` chains the whole pipeline for one point pattern:
quadrature, design, penalized path, WQBIC choice, unpenalized refit on
the chosen support.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .design import affine_to_unit, build_design, covariates_at_nodes, LocalizedDesign
from .errors import DimensionError, LinearPredictorOverflow
from .quadrature import ETA_GUARD, QuadratureScheme, build_quadrature, dummy_grid_for
from .simulate import GridImage, PointPattern
from .solver import FitPath, FitResult, PenaltyKind, PenaltySpec, SolverOptions, fit_path, fit_unpenalized
from .wavelet import HaarBasis


class Method(str, enum.Enum):
    LLI = "LLI"
    LLS = "LLS"
    LASSO = "LASSO"
    SCAD = "SCAD"
    AL = "AL"

    @property
    def localized(self) -> bool:
        return self in (Method.LLI, Method.LLS)

    @property
    def penalty_kind(self) -> PenaltyKind:
        return {
            Method.LLI: PenaltyKind.L1,
            Method.LASSO: PenaltyKind.L1,
            Method.LLS: PenaltyKind.SCAD,
            Method.SCAD: PenaltyKind.SCAD,
            Method.AL: PenaltyKind.ADAPTIVE_L1,
        }[self]

    @classmethod
    def parse(cls, name) -> "Method":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown method {name!r}; valid methods: {valid}") from None


class MuConvention(str, enum.Enum):
    """Which effective sample size enters WQBIC."""

    OBSERVED_COUNT = "observed_count"
    WINDOW_AREA = "window_area"


class Criterion(str, enum.Enum):
    """Path selection rule. ``BIC`` is ``-2 loglik + df log(n)``, offered for comparison."""

    WQBIC = "wqbic"
    BIC = "bic"


# --------------------------------------------------------------------------
# WQBIC


def wqbic_score(loglik: float, df: int, mu_hat: float) -> float:
    """``-(2 / mu_hat) * loglik + df * log(mu_hat)``."""
    if not mu_hat > 0:
        raise ValueError(f"mu_hat must be positive, got {mu_hat}")
    return -2.0 / mu_hat * loglik + df * np.log(mu_hat)


def wqbic(path: FitPath | list, mu_hat: float) -> tuple[np.ndarray, int]:
    """Scores for every path point and the index of the minimum.

    Ties go to the earliest point, i.e. the largest lambda. Diverged fits
    (non-finite log-likelihood) score ``inf``.
    """
    fits = list(path.fits if isinstance(path, FitPath) else path)
    if not fits:
        raise ValueError("empty path")
    scores = np.array([wqbic_score(f.loglik, f.df, mu_hat) if np.isfinite(f.loglik) else np.inf for f in fits])
    if not np.any(np.isfinite(scores)):
        raise FloatingPointError("every fit on the path diverged")
    # argmin returns the first occurrence, which is the largest lambda
    return scores, int(np.argmin(scores))


def bic(path: FitPath | list, n: int) -> tuple[np.ndarray, int]:
    """``-2 loglik + df log(n)`` with the same tie rule as :func:`wqbic`."""
    fits = list(path.fits if isinstance(path, FitPath) else path)
    if not fits:
        raise ValueError("empty path")
    scores = np.array([-2.0 * f.loglik + f.df * np.log(max(n, 1)) if np.isfinite(f.loglik) else np.inf
                       for f in fits])
    if not np.any(np.isfinite(scores)):
        raise FloatingPointError("every fit on the path diverged")
    return scores, int(np.argmin(scores))


def effective_mu(convention: MuConvention | str, scheme: QuadratureScheme) -> float:
    convention = MuConvention(convention)
    if convention is MuConvention.OBSERVED_COUNT:
        return float(max(scheme.n_data, 1))
    return float(scheme.window.area)


# --------------------------------------------------------------------------
# active sets and surfaces


def _coefs(fit) -> np.ndarray:
    return np.asarray(fit.coefficients if isinstance(fit, FitResult) else fit, dtype=float)


def _split(coef: np.ndarray, P: int, R: int) -> np.ndarray:
    if coef.shape != (P * R,):
        raise DimensionError(f"expected {P * R} coefficients, got {coef.shape}")
    return coef.reshape(P, R)


def global_active_set(fit, P: int, R: int = 1) -> frozenset:
    """Predictors (0-based) with at least one nonzero coefficient."""
    W = _split(_coefs(fit), P, R)
    return frozenset(int(p) for p in np.flatnonzero(np.any(W != 0, axis=1)))


def local_active_matrix(fit, basis: HaarBasis | None, P: int, points) -> np.ndarray:
    """(m, P) boolean: predictor ``p`` is locally active at unit point ``t_i``.

    Global fits (``basis=None``) are active everywhere for each selected
    predictor.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if basis is None:
        nz = _split(_coefs(fit), P, 1)[:, 0] != 0
        return np.broadcast_to(nz, (pts.shape[0], P)).copy()
    nz = _split(_coefs(fit), P, basis.R) != 0
    support = basis.support_mask(pts).astype(np.int64)
    return (support @ nz.T.astype(np.int64)) > 0


def local_active_set(fit, basis: HaarBasis | None, t, P: int | None = None) -> frozenset:
    """Predictors with a nonzero coefficient on an atom that is nonzero at ``t``."""
    coef = _coefs(fit)
    R = 1 if basis is None else basis.R
    P = coef.size // R if P is None else P
    row = local_active_matrix(coef, basis, P, t)[0]
    return frozenset(int(p) for p in np.flatnonzero(row))


def beta_hat_matrix(fit, basis: HaarBasis | None, P: int, points) -> np.ndarray:
    """(m, P) estimated coefficient surfaces at unit points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if basis is None:
        return np.broadcast_to(_split(_coefs(fit), P, 1)[:, 0], (pts.shape[0], P)).copy()
    W = _split(_coefs(fit), P, basis.R)
    return basis.matrix(pts) @ W.T


def beta_hat_surface(fit, basis: HaarBasis | None, p: int, t):
    """Surface of predictor ``p`` (0-based); scalar for a single point."""
    coef = _coefs(fit)
    R = 1 if basis is None else basis.R
    pts = np.asarray(t, dtype=float)
    vals = beta_hat_matrix(coef, basis, coef.size // R, pts)[:, p]
    return float(vals[0]) if pts.ndim == 1 else vals


def predict_intensity(refit: FitResult, covariates, basis: HaarBasis | None, t):
    """``exp(b0 + z(t)' w)`` with ``covariates`` the (m, P) values at unit points ``t``."""
    pts = np.asarray(t, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    X = np.asarray(covariates, dtype=float).reshape(pts.shape[0], -1)
    coef = _coefs(refit)
    R = 1 if basis is None else basis.R
    if X.shape[1] * R != coef.size:
        raise DimensionError(f"{X.shape[1]} covariates do not match {coef.size} coefficients")
    sel = np.flatnonzero(coef)
    W = coef.reshape(-1, R)
    eta = np.full(pts.shape[0], refit.intercept)
    if sel.size:
        preds = np.unique(sel // R)
        if basis is None:
            eta += X[:, preds] @ W[preds, 0]
        else:
            eta += np.einsum("mp,mp->m", X[:, preds], basis.matrix(pts) @ W[preds].T)
    if eta.size and eta.max() > ETA_GUARD:
        raise LinearPredictorOverflow(f"linear predictor {eta.max():.1f} exceeds {ETA_GUARD}")
    out = np.exp(eta)
    return float(out[0]) if single else out


# --------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class MethodConfig:
    method: Method = Method.LLI
    J: int = 2
    j0: int = 0
    dummies: int = 256
    tau: float = 3.7
    gamma: float = 1.0
    mu_convention: MuConvention = MuConvention.OBSERVED_COUNT
    criterion: Criterion = Criterion.WQBIC
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        object.__setattr__(self, "mu_convention", MuConvention(self.mu_convention))
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if self.dummies < 1:
            raise ValueError("need at least one dummy point")

    @property
    def penalty(self) -> PenaltySpec:
        return PenaltySpec(self.method.penalty_kind, tau=self.tau, gamma=self.gamma)

    def basis(self) -> HaarBasis | None:
        return HaarBasis(self.J, self.j0) if self.method.localized else None


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one method on one pattern.

    Predictor and column indices are 0-based. ``path_fit`` is the path
    solution at the chosen lambda; ``refit`` is the unpenalized fit on
    its support. With no events the path is empty and the refit is
    intercept-only.
    """

    method: Method
    lam: float
    index: int
    scores: np.ndarray
    global_active: frozenset
    coef_active: tuple
    path_fit: FitResult | None
    refit: FitResult
    basis: HaarBasis | None
    names: tuple
    mu_hat: float
    runtime: float
    path: FitPath | None = field(default=None, repr=False)
    scheme: QuadratureScheme | None = field(default=None, repr=False)
    design: LocalizedDesign | None = field(default=None, repr=False)
    criterion: Criterion = Criterion.WQBIC

    @property
    def P(self) -> int:
        return len(self.names)

    @property
    def converged(self) -> bool:
        # no events: the intercept-only boundary fit is the intended answer
        if self.scheme is not None and self.scheme.n_data == 0:
            return True
        path_ok = self.path_fit is None or self.path_fit.converged
        return bool(path_ok and self.refit.converged)

    def local_active(self, unit_points) -> np.ndarray:
        return local_active_matrix(self.path_fit.coefficients if self.path_fit else self.refit, self.basis,
                                   self.P, unit_points)

    def to_dict(self) -> dict:
        R = 1 if self.basis is None else self.basis.R
        return {
            "method": self.method.value,
            "lambda": None if not np.isfinite(self.lam) else float(self.lam),
            "lambda_index": self.index,
            "mu_hat": self.mu_hat,
            "criterion": self.criterion.value,
            "J": None if self.basis is None else self.basis.J,
            "j0": None if self.basis is None else self.basis.j0,
            "global_active": [self.names[p] for p in sorted(self.global_active)],
            "coefficient_active": [
                {"column": int(c), "predictor": self.names[c // R], "atom": int(c % R) + 1} for c in self.coef_active
            ],
            "intercept": self.refit.intercept,
            "refit_converged": self.refit.converged,
            "path_converged": None if self.path_fit is None else self.path_fit.converged,
            "capped": list(self.refit.capped),
            "dropped": list(self.refit.dropped),
            "runtime_s": self.runtime,
        }


def run_method(pattern: PointPattern, covariates, config: MethodConfig | None = None, names=None) -> SelectionResult:
    """Fit one method to ``pattern`` with covariate images on the pattern's window.

    ``runtime`` is wall-clock time for everything from quadrature to refit.
    """
    config = config or MethodConfig()
    images = list(covariates)
    if not images:
        raise ValueError("run_method needs at least one covariate image")
    start = time.perf_counter()
    window = images[0].window
    scheme = build_quadrature(pattern, window, dummy_grid_for(config.dummies))
    table = covariates_at_nodes(images, scheme, names)
    basis = config.basis()
    design = build_design(table, basis, scheme)
    mu_hat = effective_mu(config.mu_convention, scheme)

    if scheme.n_data == 0:
        refit = fit_unpenalized(scheme, design, ())
        return SelectionResult(config.method, np.nan, -1, np.empty(0), frozenset(), (), None, refit, basis,
                               table.names, mu_hat, time.perf_counter() - start, None, scheme, design,
                               config.criterion)

    path = fit_path(scheme, design, config.penalty, config.options)
    if config.criterion is Criterion.WQBIC:
        scores, i = wqbic(path, mu_hat)
    else:
        scores, i = bic(path, scheme.n_data)
    chosen = path[i]
    support = tuple(int(c) for c in chosen.support)
    refit = fit_unpenalized(scheme, design, support)
    runtime = time.perf_counter() - start
    return SelectionResult(
        method=config.method,
        lam=float(path.lambdas[i]),
        index=i,
        scores=scores,
        global_active=global_active_set(chosen, table.P, design.R),
        coef_active=support,
        path_fit=chosen,
        refit=refit,
        basis=basis,
        names=table.names,
        mu_hat=mu_hat,
        runtime=runtime,
        path=path,
        scheme=scheme,
        design=design,
        criterion=config.criterion,
    )


def unit_points(result: SelectionResult, points) -> np.ndarray:
    """Window coordinates to the unit square of the result's quadrature window."""
    return affine_to_unit(result.scheme.window, points)


def intensity_grid(result: SelectionResult, images: list[GridImage]) -> GridImage:
    """Predicted intensity at the cell centers of the covariate grid."""
    template = images[0]
    centers = template.center_points()
    X = np.column_stack([img.interpolate(centers) for img in images])
    pi = predict_intensity(result.refit, X, result.basis, unit_points(result, centers))
    return GridImage(np.asarray(pi).reshape(template.values.shape), template.window)
