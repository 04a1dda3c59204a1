"""Multi-resolution local variable selection for spatial point-process intensities."""

from .quadrature import QuadratureScheme, bt_hessian, bt_loglik, bt_score, build_quadrature
from .design import LocalizedDesign, build_design, covariates_at_nodes
from .select import Criterion, Method, MethodConfig, MuConvention, SelectionResult, run_method, wqbic
from .simulate import GridImage, PointPattern, Window
from .solver import FitPath, FitResult, PenaltyKind, PenaltySpec, SolverOptions, fit_path, fit_unpenalized
from .wavelet import HaarBasis, Orientation, WaveletIndex

__version__ = "0.1.0"

__all__ = [
    "Criterion", "FitPath", "FitResult", "GridImage", "HaarBasis", "LocalizedDesign", "Method", "MethodConfig",
    "MuConvention", "Orientation", "PenaltyKind", "PenaltySpec", "PointPattern", "QuadratureScheme",
    "SelectionResult", "SolverOptions", "Window", "WaveletIndex", "bt_hessian", "bt_loglik", "bt_score",
    "build_design", "build_quadrature", "covariates_at_nodes", "fit_path", "fit_unpenalized", "run_method", "wqbic",
]
