"""Selection and estimation accuracy against simulation ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .select import SelectionResult, beta_hat_matrix, local_active_matrix, unit_points
from .wavelet import HaarBasis


def tpr_global(selected, truth) -> float:
    """Share of truly relevant predictors that were selected."""
    truth = set(truth)
    if not truth:
        raise ValueError("truth set is empty")
    return len(set(selected) & truth) / len(truth)


class LocalTpr(NamedTuple):
    value: float
    used: int
    skipped: int


def tpr_local_detail(fit, basis: HaarBasis | None, points, truth) -> LocalTpr:
    """Mean per-point recall of the true local predictor set.

    Parameters
    ----------
    fit
        FitResult or coefficient vector (original scale).
    points
        (n, 2) unit-square event locations.
    truth
        (n, P) true coefficient values at ``points``; nonzero entries
        define the true local sets. Points whose true set is empty are
        skipped and counted.
    """
    truth = np.asarray(truth, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("no points to evaluate")
    if truth.shape[0] != pts.shape[0]:
        raise ValueError("truth rows and points differ in count")
    true_sets = truth != 0
    size = true_sets.sum(1)
    keep = size > 0
    if not keep.any():
        raise ValueError("every point has an empty true set")
    est = local_active_matrix(fit, basis, truth.shape[1], pts)
    hits = (est & true_sets).sum(1)
    value = float(np.mean(hits[keep] / size[keep]))
    return LocalTpr(value, int(keep.sum()), int((~keep).sum()))


def tpr_local(fit, basis: HaarBasis | None, points, truth) -> float:
    return tpr_local_detail(fit, basis, points, truth).value


def rmspe_beta(fit, basis: HaarBasis | None, truth: Callable[[np.ndarray], np.ndarray], P: int,
               grid: int = 64) -> float:
    """Root mean squared surface error over a ``grid`` x ``grid`` cell-center mesh and all ``P`` predictors.

    ``truth`` maps (m, 2) unit points to an (m, P) array of true surfaces.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    pts = (np.stack(np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij"), -1).reshape(-1, 2) + 0.5) / grid
    err = beta_hat_matrix(fit, basis, P, pts) - np.asarray(truth(pts), dtype=float).reshape(pts.shape[0], P)
    return float(np.sqrt(np.mean(err ** 2)))


@dataclass(frozen=True)
class EvaluationReport:
    scenario: str
    mu: float
    method: str
    seed: int
    rmspe: float
    tpr_global: float
    tpr_local: float | None
    runtime_s: float
    n_events: int = 0
    df: int = 0
    false_positives: int = 0
    skipped_points: int = 0
    converged: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(result: SelectionResult, truth: Callable[[np.ndarray], np.ndarray], true_predictors,
             points, *, scenario: str = "", mu: float = float("nan"), seed: int = 0,
             grid: int = 64) -> EvaluationReport:
    """Metrics for one result.

    ``points`` are the event locations in window coordinates. Local TPR is
    reported only for localized methods; with no events it is 0.
    """
    true_predictors = set(true_predictors)
    chosen = result.path_fit if result.path_fit is not None else result.refit
    selected = result.global_active
    P = result.P
    tg = tpr_global(selected, true_predictors)
    tl = None
    skipped = 0
    if result.method.localized:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0:
            tl = 0.0
        else:
            unit = unit_points(result, pts)
            detail = tpr_local_detail(chosen, result.basis, unit, truth(unit))
            tl, skipped = detail.value, detail.skipped
    return EvaluationReport(
        scenario=scenario,
        mu=float(mu),
        method=result.method.value,
        seed=int(seed),
        rmspe=rmspe_beta(result.refit, result.basis, truth, P, grid),
        tpr_global=tg,
        tpr_local=tl,
        runtime_s=float(result.runtime),
        n_events=int(result.scheme.n_data) if result.scheme is not None else 0,
        df=int(chosen.df),
        false_positives=len(set(selected) - true_predictors),
        skipped_points=skipped,
        converged=result.converged,
    )

