"""Multi-species spin glasses on the Nishimori line.

Variational solution of the replica-symmetric pressure, phase scans and
one-species critical exponents, plus exact enumeration and Metropolis
sampling of finite systems for checking the infinite-volume answers.
"""
__version__ = "0.1.0"

from .errors import DomainError, NMSKError, NonConvergence, NotPositiveSemidefinite, ValidationError
from .model import EffectiveInteraction, ModelParams, build_effective, spectral_radius
from .quadrature import PsiValue, QuadratureRule, gauss_hermite_rule, gaussian_moments, mean_tanh, psi
from .variational import (
    MaximizeConfig,
    SolveReport,
    consistency_map,
    gradient,
    hessian,
    kernel_stationarity_check,
    maximize,
    solve_fixed_point,
    variational_pressure,
    zero_pressure,
)
from .criticality import ExponentFit, PhasePoint, fit_beta, fit_delta, fit_lambda_line, phase_scan, stable_magnetization

__all__ = [
    "DomainError", "NMSKError", "NonConvergence", "NotPositiveSemidefinite", "ValidationError",
    "EffectiveInteraction", "ModelParams", "build_effective", "spectral_radius",
    "PsiValue", "QuadratureRule", "gauss_hermite_rule", "gaussian_moments", "mean_tanh", "psi",
    "MaximizeConfig", "SolveReport", "consistency_map", "gradient", "hessian", "kernel_stationarity_check",
    "maximize", "solve_fixed_point", "variational_pressure", "zero_pressure",
    "ExponentFit", "PhasePoint", "fit_beta", "fit_delta", "fit_lambda_line", "phase_scan", "stable_magnetization",
]
