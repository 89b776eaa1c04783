"""Phase scans and the one-species critical exponents.

For a single species the stable magnetization solves
``x = T(x; mu, h) = E_z tanh(z sqrt(mu x + h) + mu x + h)``. Near the
critical point (mu, h) = (1, 0) it vanishes as

    x ~ (mu - 1) / mu^2                    at h = 0            (beta = 1)
    x ~ sqrt(h)                            at mu = 1           (delta = 2)
    x ~ sqrt(lambda (mu - 1)) / mu         on h = lambda (mu - 1)

and these are recovered here by log-log least squares.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import quadrature
from .errors import NMSKError, NonConvergence, NotPositiveSemidefinite, ValidationError
from .model import ModelParams, build_effective, spectral_radius
from .variational import MaximizeConfig, maximize, zero_pressure

PHASE_TOL = 1e-8
PARAMAGNETIC = "paramagnetic"
ORDERED = "ordered"


@dataclass
class PhasePoint:
    params_ref: ModelParams
    rho: float
    x_star: np.ndarray | None
    pressure: float | None
    phase_label: str | None
    error: str | None = None
    zero_pressure: float | None = None

    def to_dict(self) -> dict:
        return {
            "params": self.params_ref.to_dict(),
            "rho": self.rho,
            "x_star": None if self.x_star is None else self.x_star.tolist(),
            "pressure": self.pressure,
            "phase": self.phase_label,
            "zero_pressure": self.zero_pressure,
            "error": self.error,
        }


@dataclass
class ExponentFit:
    exponent_name: str
    fitted_slope: float
    stderr: float
    window: tuple
    points: list = field(default_factory=list)
    intercept: float = 0.0
    prefactor_ratios: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"exponent": self.exponent_name, "slope": self.fitted_slope, "stderr": self.stderr,
                "window": list(self.window), "intercept": self.intercept,
                "points": [list(p) for p in self.points], "prefactor_ratios": self.prefactor_ratios}


def label_phase(x_star, tol: float = PHASE_TOL) -> str:
    return ORDERED if np.any(np.asarray(x_star) > tol) else PARAMAGNETIC


def phase_scan(grid, config: MaximizeConfig | None = None) -> list[PhasePoint]:
    """Maximize at every grid point and label the phase; errors are recorded per row."""
    out = []
    for params in grid:
        eff = build_effective(params)
        rho = spectral_radius(eff, params)
        try:
            rep = maximize(params, eff, config)
        except NotPositiveSemidefinite as exc:
            out.append(PhasePoint(params, rho, None, None, None, error=f"NotPositiveSemidefinite: {exc}"))
            continue
        except NonConvergence as exc:
            out.append(PhasePoint(params, rho, exc.report.x_star, exc.report.pressure, None,
                                  error=f"NonConvergence: {exc}"))
            continue
        out.append(PhasePoint(params, rho, rep.x_star, rep.pressure, label_phase(rep.x_star),
                              zero_pressure=zero_pressure(params, eff)))
    return out


# --- one species ---------------------------------------------------------------

def _residual(x: float, mu: float, h: float) -> float:
    return x - float(quadrature.mean_tanh(mu * x + h))


def _lower_bracket(mu: float, h: float) -> float:
    """Smallest probe point where x - T(x) < 0 on the nonzero branch (h = 0, mu > 1)."""
    guess = (mu - 1.0) / mu ** 2
    a = guess
    for _ in range(200):
        a *= 0.5
        if _residual(a, mu, h) < 0:
            return a
    raise NMSKError(f"no sign change below the nonzero branch at mu={mu}")


def stable_magnetization(mu: float, h: float = 0.0, xtol: float = 1e-300, rtol: float = 4 * np.finfo(float).eps) -> float:
    """Stable solution of x = T(x; mu, h) on [0, 1] by bracketed root finding.

    Returns 0 for h = 0 and mu <= 1. For h = 0 and mu > 1 the trivial
    root is excluded by bracketing from below the nonzero branch.
    """
    if mu < 0 or h < 0:
        raise ValidationError("mu", "mu and h must be nonnegative")
    if h == 0.0:
        if mu <= 1.0:
            return 0.0
        lo = _lower_bracket(mu, h)
    else:
        lo = 0.0
    # x - T(x) is positive at x = 1 because T < 1
    return float(optimize.brentq(_residual, lo, 1.0, args=(mu, h), xtol=xtol, rtol=rtol, maxiter=500))


def _loglog_fit(control, response) -> tuple[float, float, float]:
    lx = np.log(np.asarray(control, dtype=float))
    ly = np.log(np.asarray(response, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    n = lx.size
    resid = ly - A @ coef
    s2 = resid @ resid / max(n - 2, 1)
    cov = s2 * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(np.sqrt(cov[0, 0])), float(coef[1])


def log_window(lo: float, hi: float, per_decade: int = 8) -> np.ndarray:
    """Log-spaced points covering [lo, hi] with at least ``per_decade`` points per decade."""
    decades = np.log10(hi / lo)
    n = max(int(np.ceil(decades * per_decade)) + 1, 2)
    return np.logspace(np.log10(lo), np.log10(hi), n)


def fit_beta(mu_window=None) -> ExponentFit:
    """Slope of log x vs log(mu - 1) at h = 0 (expected 1)."""
    mus = 1.0 + log_window(1e-4, 1e-2) if mu_window is None else np.asarray(mu_window, dtype=float)
    if np.any(mus <= 1.0) or np.any(mus > 1.2):
        raise ValidationError("mu_window", "beta window must lie in (1, 1.2]")
    xs = np.array([stable_magnetization(m, 0.0) for m in mus])
    eps = mus - 1.0
    slope, err, icpt = _loglog_fit(eps, xs)
    ratios = (xs * mus ** 2 / eps).tolist()
    return ExponentFit("beta", slope, err, (float(mus.min()), float(mus.max())),
                       list(zip(mus.tolist(), xs.tolist())), icpt, ratios)


def fit_delta(h_window=None) -> ExponentFit:
    """Slope of log x vs log h at mu = 1 (expected 1/2, i.e. delta = 2)."""
    hs = log_window(1e-6, 1e-3) if h_window is None else np.asarray(h_window, dtype=float)
    if np.any(hs <= 0) or np.any(hs > 1e-2):
        raise ValidationError("h_window", "delta window must lie in (0, 1e-2]")
    xs = np.array([stable_magnetization(1.0, h) for h in hs])
    slope, err, icpt = _loglog_fit(hs, xs)
    ratios = (xs ** 2 / hs).tolist()
    return ExponentFit("delta", slope, err, (float(hs.min()), float(hs.max())),
                       list(zip(hs.tolist(), xs.tolist())), icpt, ratios)


def fit_lambda_line(lam: float, mu_window=None) -> ExponentFit:
    """Slope of log x vs log(mu - 1) along h = lam (mu - 1) (expected 1/2)."""
    if not lam > 0:
        raise ValidationError("lambda", "lambda must be positive")
    mus = 1.0 + log_window(1e-5, 1e-3) if mu_window is None else np.asarray(mu_window, dtype=float)
    if np.any(mus <= 1.0) or np.any(mus > 1.05):
        raise ValidationError("mu_window", "lambda-line window must lie in (1, 1.05]")
    eps = mus - 1.0
    xs = np.array([stable_magnetization(m, lam * e) for m, e in zip(mus, eps)])
    slope, err, icpt = _loglog_fit(eps, xs)
    ratios = (xs ** 2 * mus ** 2 / (lam * eps)).tolist()
    return ExponentFit("lambda_line", slope, err, (float(mus.min()), float(mus.max())),
                       list(zip(mus.tolist(), xs.tolist())), icpt, ratios)
