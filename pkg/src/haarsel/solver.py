"""Penalized Poisson-GLM paths on a dummy-point quadrature.

All penalized fits work on the weighted-standardized design and minimize

    -(1/mu_hat) * loglik(b0, w) + penalty(w)

with ``mu_hat`` the observed point count. Each outer step is a
proximal-Newton (IRLS) step whose quadratic subproblem is solved by
coordinate descent, followed by backtracking so the objective never
increases. A fit is marked converged once its KKT residual is below
``kkt_tol``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize

from . import _kernels
from .design import LocalizedDesign
from .errors import DimensionError
from .quadrature import ETA_GUARD, QuadratureScheme

log = logging.getLogger(__name__)

STD_CAP = 30.0
SEPARATION_TOL = 1e-9


class PenaltyKind(str, enum.Enum):
    L1 = "L1"
    SCAD = "SCAD"
    ADAPTIVE_L1 = "ADAPTIVE_L1"
    RIDGE = "RIDGE"
    NONE = "NONE"


_KERNEL_CODE = {
    PenaltyKind.NONE: _kernels.PEN_NONE,
    PenaltyKind.L1: _kernels.PEN_L1,
    PenaltyKind.ADAPTIVE_L1: _kernels.PEN_L1,
    PenaltyKind.SCAD: _kernels.PEN_SCAD,
    PenaltyKind.RIDGE: _kernels.PEN_RIDGE,
}


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind = PenaltyKind.L1
    tau: float = 3.7
    weights: np.ndarray | None = None
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if self.kind is PenaltyKind.SCAD and not self.tau > 2:
            raise ValueError(f"SCAD needs tau > 2, got {self.tau}")
        if self.weights is not None:
            v = np.asarray(self.weights, dtype=float)
            if not (np.all(np.isfinite(v)) and np.all(v > 0)):
                raise ValueError("adaptive weights must be finite and positive")
            object.__setattr__(self, "weights", v)


@dataclass
class SolverOptions:
    n_lambda: int = 100
    ratio: float = 1e-4
    max_outer: int = 100
    inner_tol: float = 1e-7
    kkt_tol: float = 1e-7
    active_every: int = 10
    max_inner_cycles: int = 300
    # glmnet-style early exit once the log-likelihood stops moving
    min_rel_change: float = 1e-5
    min_path_fits: int = 5
    max_df: int | None = None
    ridge_pilot_lambdas: int = 20
    # CD / active-set Newton alternations per outer step
    max_polish: int = 20


@dataclass
class FitResult:
    """One solution; ``coefficients`` and ``intercept`` are on the original scale."""

    intercept: float
    coefficients: np.ndarray
    lam: float
    converged: bool
    iterations: int
    loglik: float
    df: int
    intercept_std: float = 0.0
    coef_std: np.ndarray | None = None
    kkt: float = np.nan
    objective_trace: list = field(default_factory=list)
    capped: tuple = ()
    dropped: tuple = ()

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)


@dataclass
class FitPath:
    lambdas: np.ndarray
    fits: list
    penalty: PenaltySpec
    n_lambda: int
    ratio: float
    mu_hat: float
    lambda_max: float
    errors: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.fits)

    def __getitem__(self, i) -> FitResult:
        return self.fits[i]


# --------------------------------------------------------------------------
# scalar penalty helpers


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("threshold must be non-negative")
    return float(_kernels.soft_threshold(float(z), float(gamma)))


def scad_penalty(theta: float, lam: float, tau: float = 3.7) -> float:
    return float(_kernels.scad_value(float(theta), float(lam), float(tau)))


def scad_derivative(theta: float, lam: float, tau: float = 3.7) -> float:
    """First derivative of the SCAD penalty; ``sgn(0)`` is taken as +1."""
    t = abs(theta)
    sgn = -1.0 if theta < 0 else 1.0
    if t <= lam:
        return lam * sgn
    if t <= tau * lam:
        return (tau * lam - t) * sgn / (tau - 1.0)
    return 0.0


def scad_update(u: float, a: float, lam: float, tau: float = 3.7) -> float:
    """Exact minimizer of ``a/2 (w - u)^2 + scad_penalty(w)``."""
    return float(_kernels.scad_update(float(u), float(a), float(lam), float(tau)))


# --------------------------------------------------------------------------
# problem setup


class _Problem:
    """Standardized design plus quadrature data shared by all fits on one path."""

    def __init__(self, scheme: QuadratureScheme, design: LocalizedDesign, columns=None):
        if design.Z.shape[0] != scheme.M:
            raise DimensionError(f"design has {design.Z.shape[0]} rows, scheme has {scheme.M} nodes")
        self.scheme = scheme
        self.design = design
        Xs = design.standardized()
        self.columns = np.arange(design.K) if columns is None else np.asarray(columns, dtype=np.int64)
        self.X = np.asfortranarray(Xs[:, self.columns])
        self.free = ~design.constant[self.columns]
        self.y = scheme.labels.astype(float)
        self.omega = np.asarray(scheme.weights, dtype=float)
        self.n = int(scheme.n_data)
        self.mu_hat = float(max(self.n, 1))

    @property
    def K(self) -> int:
        return self.X.shape[1]

    def eta(self, b0, w):
        return b0 + self.X @ w

    def loglik(self, b0, w) -> float:
        eta = self.eta(b0, w)
        if eta.max() > ETA_GUARD:
            return -np.inf
        return float(self.y @ eta - self.omega @ np.exp(eta))

    def gradient(self, b0, w):
        """Gradient of loglik / mu_hat: (intercept part, coefficient part)."""
        r = (self.y - self.omega * np.exp(np.minimum(self.eta(b0, w), ETA_GUARD))) / self.mu_hat
        return r.sum(), self.X.T @ r

    def null_intercept(self) -> float:
        return float(np.log(self.n / self.omega.sum()))


def _penalty_value(kind: PenaltyKind, lam, w, pen_w, tau) -> float:
    if kind in (PenaltyKind.L1, PenaltyKind.ADAPTIVE_L1):
        return float(lam * np.sum(pen_w * np.abs(w)))
    if kind is PenaltyKind.SCAD:
        a = np.abs(w)
        mid = -(a ** 2 - 2 * tau * lam * a + lam ** 2) / (2 * (tau - 1))
        return float(np.sum(np.where(a <= lam, lam * a, np.where(a <= tau * lam, mid, (tau + 1) * lam ** 2 / 2))))
    if kind is PenaltyKind.RIDGE:
        return float(0.5 * lam * np.sum(pen_w * w ** 2))
    return 0.0


def _kkt(prob: _Problem, kind, lam, b0, w, pen_w, tau) -> float:
    g0, g = prob.gradient(b0, w)
    g, w, pw = g[prob.free], w[prob.free], pen_w[prob.free]
    active = w != 0
    sgn = np.sign(w)
    if kind in (PenaltyKind.L1, PenaltyKind.ADAPTIVE_L1):
        target = lam * pw * sgn
        slack = np.where(active, np.abs(g - target), np.maximum(np.abs(g) - lam * pw, 0.0))
    elif kind is PenaltyKind.SCAD:
        a = np.abs(w)
        deriv = np.where(a <= lam, lam, np.where(a <= tau * lam, (tau * lam - a) / (tau - 1), 0.0)) * sgn
        slack = np.where(active, np.abs(g - deriv), np.maximum(np.abs(g) - lam, 0.0))
    elif kind is PenaltyKind.RIDGE:
        slack = np.abs(g - lam * pw * w)
    else:
        slack = np.abs(g)
    return float(max(abs(g0), slack.max() if slack.size else 0.0))


def kkt_violation(scheme: QuadratureScheme, design: LocalizedDesign, fit: FitResult, penalty: PenaltySpec) -> float:
    """Largest KKT residual of ``fit`` on the standardized scale."""
    prob = _Problem(scheme, design)
    pen_w = _pen_weights(penalty, prob.K)
    return _kkt(prob, penalty.kind, fit.lam, fit.intercept_std, np.asarray(fit.coef_std, dtype=float), pen_w, penalty.tau)


def _pen_weights(penalty: PenaltySpec, K: int) -> np.ndarray:
    if penalty.kind is PenaltyKind.ADAPTIVE_L1:
        if penalty.weights is None:
            raise ValueError("adaptive penalty has no weights; use fit_path to build them")
        if penalty.weights.shape != (K,):
            raise DimensionError(f"adaptive weights have length {penalty.weights.shape[0]}, expected {K}")
        return penalty.weights
    return np.ones(K)


def _pen_local(kind, lam, w, pen_w, tau):
    """Gradient and curvature of the penalty at nonzero ``w`` plus a region label.

    Within a region (sign and SCAD branch fixed) the penalty is at most
    quadratic, so a Newton step on the active set is exact there.
    """
    a, sgn = np.abs(w), np.sign(w)
    if kind in (PenaltyKind.L1, PenaltyKind.ADAPTIVE_L1):
        return lam * pen_w * sgn, np.zeros_like(w), sgn
    if kind is PenaltyKind.SCAD:
        region = np.where(a <= lam, 1, np.where(a <= tau * lam, 2, 3))
        grad = np.where(region == 1, lam, np.where(region == 2, (tau * lam - a) / (tau - 1), 0.0)) * sgn
        curv = np.where(region == 2, -1.0 / (tau - 1), 0.0)
        return grad, curv, sgn * region
    if kind is PenaltyKind.RIDGE:
        return lam * pen_w * w, lam * pen_w, sgn
    return np.zeros_like(w), np.zeros_like(w), sgn


def _polish(prob, kind, lam, pen_w, tau, W, s, b0, w):
    """Exact minimizer of the IRLS quadratic restricted to the current active set.

    For L1 penalties a step that flips a sign is cut at the first zero
    crossing, that coordinate is dropped and the solve repeats, so the
    quadratic decreases monotonically. Other penalties return None when
    the step would leave the current branch region. None is also
    returned when the restricted system is singular.
    """
    l1 = kind in (PenaltyKind.L1, PenaltyKind.ADAPTIVE_L1)
    w = w.copy()
    for _ in range(w.size + 1):
        act = np.flatnonzero(w != 0)
        XA = prob.X[:, act]
        A = np.column_stack([np.ones(XA.shape[0]), XA])
        grad_pen, curv, region = _pen_local(kind, lam, w[act], pen_w[act], tau)
        rhs = A.T @ s
        rhs[1:] -= grad_pen
        H = (A.T * W) @ A
        H[np.diag_indices(act.size + 1)] += np.concatenate([[0.0], curv])
        try:
            delta = linalg.solve(H, rhs, assume_a="sym", check_finite=False)
        except (linalg.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(delta)):
            return None
        trial = w[act] + delta[1:]
        _, _, region_new = _pen_local(kind, lam, trial, pen_w[act], tau)
        flipped = np.flatnonzero(region_new != region)
        if flipped.size == 0 or kind in (PenaltyKind.RIDGE, PenaltyKind.NONE):
            w[act] = trial
            return b0 + delta[0], w, s - W * (A @ delta)
        if not l1:
            return None
        ratios = -w[act[flipped]] / delta[1:][flipped]
        hit = flipped[int(np.argmin(ratios))]
        t = float(np.clip(ratios.min(), 0.0, 1.0))
        w[act] += t * delta[1:]
        w[act[hit]] = 0.0
        b0 += t * delta[0]
        s = s - t * W * (A @ delta)
    return None


def _zero_coords_ok(prob, kind, lam, pen_w, s, w, tol) -> bool:
    zero = (w == 0) & prob.free
    if not zero.any() or kind in (PenaltyKind.RIDGE, PenaltyKind.NONE):
        return True
    g = prob.X[:, zero].T @ s
    return bool(np.all(np.abs(g) <= lam * pen_w[zero] + tol))


def _solve(prob: _Problem, penalty: PenaltySpec, lam: float, b0: float, w: np.ndarray,
           pen_w: np.ndarray, opts: SolverOptions):
    kind, tau = penalty.kind, penalty.tau
    code = _KERNEL_CODE[kind]
    w = w.copy()

    def objective(b, v):
        ll = prob.loglik(b, v)
        return -ll / prob.mu_hat + _penalty_value(kind, lam, v, pen_w, tau)

    F = objective(b0, w)
    trace = [F]
    kkt = _kkt(prob, kind, lam, b0, w, pen_w, tau)
    converged = kkt <= opts.kkt_tol
    it = 0
    while not converged and it < opts.max_outer:
        it += 1
        eta = prob.eta(b0, w)
        mu = prob.omega * np.exp(np.minimum(eta, ETA_GUARD))
        W = mu / prob.mu_hat
        s = (prob.y - mu) / prob.mu_hat
        w_new = w.copy()
        b_new = b0
        for _ in range(opts.max_polish):
            b_new, _ = _kernels.cd_solve(prob.X, W, s, w_new, b_new, code, lam, pen_w, tau, prob.free,
                                         opts.inner_tol, opts.max_inner_cycles, opts.active_every)
            polished = _polish(prob, kind, lam, pen_w, tau, W, s, b_new, w_new)
            if polished is None:
                break
            b_new, w_new, s = polished
            if _zero_coords_ok(prob, kind, lam, pen_w, s, w_new, 0.1 * opts.kkt_tol):
                break
        step = 1.0
        while True:
            b_try = b0 + step * (b_new - b0)
            w_try = w + step * (w_new - w)
            F_try = objective(b_try, w_try)
            if F_try <= F + 1e-13 * abs(F):
                break
            step *= 0.5
            if step < 1e-10:
                b_try, w_try, F_try = b0, w, F
                break
        moved = np.max(np.abs(w_try - w), initial=abs(b_try - b0))
        b0, w, F = b_try, w_try, F_try
        trace.append(F)
        kkt = _kkt(prob, kind, lam, b0, w, pen_w, tau)
        converged = kkt <= opts.kkt_tol
        if moved == 0.0 and not converged:
            break
    return b0, w, converged, it, kkt, trace


def _result(prob: _Problem, lam, b0, w, converged, it, kkt, trace) -> FitResult:
    full = np.zeros(prob.design.K)
    full[prob.columns] = w
    intercept, coef = prob.design.to_original(b0, full)
    return FitResult(
        intercept=intercept,
        coefficients=coef,
        lam=float(lam),
        converged=bool(converged),
        iterations=int(it),
        loglik=prob.loglik(b0, w),
        df=int(np.count_nonzero(coef)),
        intercept_std=float(b0),
        coef_std=full,
        kkt=float(kkt),
        objective_trace=list(trace),
    )


def lambda_max(scheme: QuadratureScheme, design: LocalizedDesign, penalty: PenaltySpec | None = None) -> float:
    """Smallest penalty level at which every penalized coefficient is zero."""
    penalty = PenaltySpec() if penalty is None else penalty
    prob = _Problem(scheme, design)
    return _lambda_max(prob, _pen_weights(penalty, prob.K))


def _lambda_max(prob: _Problem, pen_w) -> float:
    _, g = prob.gradient(prob.null_intercept(), np.zeros(prob.K))
    ratio = np.abs(g[prob.free]) / pen_w[prob.free]
    return float(ratio.max()) if ratio.size else 0.0


def fit_lambda(scheme: QuadratureScheme, design: LocalizedDesign, penalty: PenaltySpec, lam: float,
               options: SolverOptions | None = None, start: FitResult | None = None) -> FitResult:
    """Single fit at ``lam``, from the null model unless ``start`` is given."""
    opts = options or SolverOptions()
    prob = _Problem(scheme, design)
    if prob.n == 0:
        raise ValueError("cannot fit a penalized path to an empty pattern")
    pen_w = _pen_weights(penalty, prob.K)
    if start is None:
        b0, w = prob.null_intercept(), np.zeros(prob.K)
    else:
        b0, w = start.intercept_std, np.asarray(start.coef_std, dtype=float)
    return _result(prob, lam, *_solve(prob, penalty, lam, b0, w, pen_w, opts))


def fit_path(scheme: QuadratureScheme, design: LocalizedDesign, penalty: PenaltySpec,
             options: SolverOptions | None = None, lambdas=None) -> FitPath:
    """Warm-started path from ``lambda_max`` down to ``ratio * lambda_max``.

    ``NONE`` gives a single unpenalized fit. ``ADAPTIVE_L1`` without
    weights builds them from a ridge pilot first.
    """
    opts = options or SolverOptions()
    prob = _Problem(scheme, design)
    if prob.n == 0:
        raise ValueError("cannot fit a penalized path to an empty pattern")
    if penalty.kind is PenaltyKind.ADAPTIVE_L1 and penalty.weights is None:
        penalty = replace(penalty, weights=adaptive_weights(scheme, design, penalty.gamma, opts))
    pen_w = _pen_weights(penalty, prob.K)
    lam_max = _lambda_max(prob, pen_w)

    if penalty.kind is PenaltyKind.NONE:
        lambdas = np.array([0.0])
    elif lambdas is None:
        top = lam_max if lam_max > 0 else 1.0
        lambdas = np.geomspace(top, top * opts.ratio, opts.n_lambda)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size > 1 and np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambda sequence must be strictly decreasing")

    path = FitPath(np.empty(0), [], penalty, int(lambdas.size), float(opts.ratio), prob.mu_hat, lam_max)
    b0, w = prob.null_intercept(), np.zeros(prob.K)
    max_df = opts.max_df if opts.max_df is not None else prob.K
    used = []
    for i, lam in enumerate(lambdas):
        try:
            b0, w, conv, it, kkt, trace = _solve(prob, penalty, lam, b0, w, pen_w, opts)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            path.errors.append(f"lambda[{i}]={lam:.6g}: {exc}")
            break
        fit = _result(prob, lam, b0, w, conv, it, kkt, trace)
        if not np.isfinite(fit.loglik):
            path.errors.append(f"lambda[{i}]={lam:.6g}: log-likelihood diverged")
            break
        if not conv:
            log.debug("lambda[%d]=%.4g not converged (kkt %.2e)", i, lam, kkt)
        path.fits.append(fit)
        used.append(lam)
        if fit.df > max_df:
            break
        if len(path.fits) >= opts.min_path_fits:
            prev = path.fits[-2].loglik
            if abs(fit.loglik - prev) <= opts.min_rel_change * abs(fit.loglik):
                break
    path.lambdas = np.array(used)
    return path


# --------------------------------------------------------------------------
# adaptive weights


def ridge_effective_df(scheme: QuadratureScheme, design: LocalizedDesign, fit: FitResult) -> float:
    """``trace(H (H + lam mu_hat I)^-1)`` with ``H`` the weighted Gram matrix at the fit."""
    prob = _Problem(scheme, design)
    X = prob.X[:, prob.free]
    mu = prob.omega * np.exp(np.minimum(prob.eta(fit.intercept_std, fit.coef_std), ETA_GUARD))
    Xc = X - (mu @ X) / mu.sum()
    H = (Xc.T * mu) @ Xc / prob.mu_hat
    ev = np.clip(linalg.eigvalsh(H), 0.0, None)
    return float(np.sum(ev / (ev + fit.lam)))


def adaptive_weights(scheme: QuadratureScheme, design: LocalizedDesign, gamma: float = 1.0,
                     options: SolverOptions | None = None) -> np.ndarray:
    """``1 / (|w_ridge|^gamma + 1e-8)`` from a ridge pilot chosen by WQBIC.

    The pilot's WQBIC uses the ridge effective degrees of freedom.
    """
    opts = options or SolverOptions()
    pilot_opts = replace(opts, n_lambda=opts.ridge_pilot_lambdas, ratio=1e-3, min_path_fits=opts.ridge_pilot_lambdas)
    path = fit_path(scheme, design, PenaltySpec(PenaltyKind.RIDGE), pilot_opts)
    mu = path.mu_hat
    scores = [-2.0 / mu * f.loglik + ridge_effective_df(scheme, design, f) * np.log(mu) for f in path.fits]
    best = path.fits[int(np.argmin(scores))]
    return 1.0 / (np.abs(best.coef_std) ** gamma + 1e-8)


# --------------------------------------------------------------------------
# unpenalized refit


def fit_unpenalized(scheme: QuadratureScheme, design: LocalizedDesign, support=(),
                    tol: float = 1e-8, max_iter: int = 200) -> FitResult:
    """Newton maximization of the BT log-likelihood on ``support`` columns.

    Linearly dependent columns are dropped by pivoted QR and reported in
    ``dropped``; coefficients that run past +-30 on the standardized scale
    are held at the cap and reported in ``capped``.
    """
    support = np.unique(np.asarray(support, dtype=np.int64))
    prob = _Problem(scheme, design, columns=support)
    dropped = list(support[~prob.free])
    keep = np.flatnonzero(prob.free)
    if keep.size:
        Xw = prob.X[:, keep] * np.sqrt(prob.omega)[:, None]
        _, Rq, piv = linalg.qr(Xw, mode="economic", pivoting=True)
        diag = np.abs(np.diag(Rq))
        rank = int(np.sum(diag > 1e-10 * max(diag[0], 1e-300))) if diag.size else 0
        dropped += list(support[keep[piv[rank:]]])
        keep = np.sort(keep[piv[:rank]])
    X = prob.X[:, keep]
    kcols = keep.size

    if prob.n == 0:
        b = np.zeros(kcols + 1)
        b[0] = -STD_CAP
        res = _assemble(prob, b, keep, False, 0, capped=("intercept",), dropped=dropped)
        return res

    A = np.column_stack([np.ones(prob.scheme.M), X])
    b = np.zeros(kcols + 1)
    b[0] = prob.null_intercept()
    fixed = np.zeros(kcols + 1, dtype=bool)
    capped = []

    def ll(beta):
        eta = A @ beta
        if eta.max() > ETA_GUARD:
            return -np.inf
        return prob.y @ eta - prob.omega @ np.exp(eta)

    # separation: pin each divergent coefficient at the cap until the MLE exists
    while True:
        free_idx = np.flatnonzero(~fixed)
        d = _separating_direction(A, prob.y, free_idx)
        if d is None:
            break
        mag = np.abs(d)
        mag[0] = 0.0
        col = int(np.argmax(mag))
        if mag[col] == 0.0:
            break
        b[col] = np.sign(d[col]) * STD_CAP
        fixed[col] = True
        capped.append(support[keep[col - 1]])
    cur = ll(b)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = prob.omega * np.exp(A @ b)
        score = A.T @ (prob.y - mu)
        free_idx = np.flatnonzero(~fixed)
        if np.max(np.abs(score[free_idx])) <= tol:
            converged = True
            break
        Af = A[:, free_idx]
        H = (Af.T * mu) @ Af
        try:
            step = linalg.solve(H, score[free_idx], assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            step = linalg.lstsq(H, score[free_idx])[0]
        t = 1.0
        while True:
            trial = b.copy()
            trial[free_idx] += t * step
            new = ll(trial)
            if new >= cur - 1e-12 * abs(cur):
                break
            t *= 0.5
            if t < 1e-12:
                trial, new = b, cur
                break
        over = (np.abs(trial) > STD_CAP) & ~fixed
        over[0] = False
        if over.any():
            trial[over] = np.sign(trial[over]) * STD_CAP
            fixed |= over
            capped += list(support[keep[np.flatnonzero(over[1:])]])
            new = ll(trial)
        if np.array_equal(trial, b):
            break
        b, cur = trial, new
    return _assemble(prob, b, keep, converged and not capped, it, capped=tuple(capped), dropped=dropped)


def _separating_direction(A: np.ndarray, y: np.ndarray, free: np.ndarray) -> np.ndarray | None:
    """Direction along which the BT likelihood rises without bound, or None.

    Such a ``d`` leaves the linear predictor unchanged at every data node
    and lowers it at dummy nodes only, so the MLE does not exist. Found as
    a linear program over ``|d| <= 1`` on the ``free`` positions.
    """
    data, dummy = A[y > 0][:, free], A[y == 0][:, free]
    if dummy.shape[0] == 0 or free.size == 0:
        return None
    res = optimize.linprog(dummy.sum(0), A_ub=dummy, b_ub=np.zeros(dummy.shape[0]),
                           A_eq=data if data.shape[0] else None, b_eq=np.zeros(data.shape[0]) if data.shape[0] else None,
                           bounds=[(-1.0, 1.0)] * free.size, method="highs")
    if res.status != 0 or res.fun > -SEPARATION_TOL:
        return None
    d = np.zeros(A.shape[1])
    d[free] = res.x
    return d


def _assemble(prob, b, keep, converged, it, capped, dropped) -> FitResult:
    coef_std = np.zeros(prob.design.K)
    coef_std[prob.columns[keep]] = b[1:]
    intercept, coef = prob.design.to_original(b[0], coef_std)
    Xall = np.column_stack([np.ones(prob.scheme.M), prob.X[:, keep]])
    eta = Xall @ b
    ll = float(prob.y @ eta - prob.omega @ np.exp(np.minimum(eta, ETA_GUARD)))
    return FitResult(
        intercept=intercept,
        coefficients=coef,
        lam=0.0,
        converged=bool(converged),
        iterations=int(it),
        loglik=ll,
        df=int(np.count_nonzero(coef)),
        intercept_std=float(b[0]),
        coef_std=coef_std,
        capped=tuple(int(c) for c in capped if c != "intercept") + (("intercept",) if "intercept" in capped else ()),
        dropped=tuple(int(d) for d in dropped),
    )
