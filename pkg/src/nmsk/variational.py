"""Variational pressure over the nonnegative orthant and its maximization.

For an order parameter x >= 0 (one magnetization per species) the
variational pressure is

    p(x) = (1 - x, D (1 - x)) / 4 - (x, D x) / 2 + sum_r alpha_r psi(Q_r),
    Q    = alpha^-1 D x + h,

with D the effective interaction matrix. Its gradient factorizes as
``D (T(x) - x) / 2`` where ``T_r(x) = E_z tanh(z sqrt(Q_r) + Q_r)`` is the
consistency map, so interior maximizers are fixed points of T (modulo the
kernel of D) and boundary maximizers satisfy the same equation when D is
positive definite.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .errors import DomainError, NonConvergence, NotPositiveSemidefinite, ValidationError
from .model import EffectiveInteraction, ModelParams, build_effective, spectral_radius

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_KKT_TOL = 1e-10
DEFAULT_BOUNDARY_TOL = 1e-9
_OSCILLATION_LIMIT = 3
_ARMIJO = 1e-4
_EPS = np.finfo(float).eps


@dataclass
class SolveReport:
    x_star: np.ndarray
    pressure: float
    grad_norm: float
    hessian_eigs: np.ndarray
    kkt_ok: bool
    on_boundary: np.ndarray
    rho: float
    iterations: int
    converged: bool
    multistart_count: int = 1
    all_local_maxima: list = field(default_factory=list)
    damping: float = 1.0
    kernel_dim: int = 0

    def to_dict(self) -> dict:
        return {
            "x_star": self.x_star.tolist(),
            "pressure": self.pressure,
            "grad_norm": self.grad_norm,
            "hessian_eigs": self.hessian_eigs.tolist(),
            "kkt_ok": self.kkt_ok,
            "on_boundary": self.on_boundary.tolist(),
            "rho": self.rho,
            "iterations": self.iterations,
            "converged": self.converged,
            "multistart_count": self.multistart_count,
            "all_local_maxima": [{"x": x.tolist(), "pressure": p} for x, p in self.all_local_maxima],
            "damping": self.damping,
            "kernel_dim": self.kernel_dim,
        }


@dataclass(frozen=True)
class MaximizeConfig:
    n_random: int = 8
    seed: int = 0
    tol: float = DEFAULT_TOL
    kkt_tol: float = DEFAULT_KKT_TOL
    boundary_tol: float = DEFAULT_BOUNDARY_TOL
    damping: float = 1.0
    fp_max_iter: int = 100
    polish_max_iter: int = 200


def as_order_parameter(x, K: int) -> np.ndarray:
    """Validate and copy a candidate magnetization vector."""
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (K,):
        raise ValidationError("x", f"order parameter must have length {K}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("x", "order parameter must be finite")
    if np.any(arr < 0):
        raise ValidationError("x", "order parameter must be nonnegative")
    return arr


def _effective(params, eff):
    return build_effective(params) if eff is None else eff


def _fields(params: ModelParams, eff: EffectiveInteraction, x: np.ndarray) -> np.ndarray:
    q = eff.alpha_inv_delta @ x + params.h
    if np.any(q < -1e-15):
        raise DomainError(f"negative quadrature argument {q.min()!r}")
    return np.maximum(q, 0.0)


def variational_pressure(params: ModelParams, eff: EffectiveInteraction | None, x) -> float:
    eff = _effective(params, eff)
    x = as_order_parameter(x, params.K)
    d = eff.delta
    one_minus = 1.0 - x
    lc, _, _ = quadrature.gaussian_moments(_fields(params, eff, x))
    return float(one_minus @ d @ one_minus / 4.0 - x @ d @ x / 2.0 + params.alpha @ lc)


def consistency_map(params: ModelParams, eff: EffectiveInteraction | None, x) -> np.ndarray:
    """T(x; h), componentwise in [0, 1)."""
    eff = _effective(params, eff)
    x = as_order_parameter(x, params.K)
    return np.asarray(quadrature.mean_tanh(_fields(params, eff, x)), dtype=float)


def gradient(params: ModelParams, eff: EffectiveInteraction | None, x) -> np.ndarray:
    eff = _effective(params, eff)
    x = as_order_parameter(x, params.K)
    return 0.5 * eff.delta @ (consistency_map(params, eff, x) - x)


def hessian(params: ModelParams, eff: EffectiveInteraction | None, x) -> np.ndarray:
    """-D/2 + D diag(E(1 - tanh^2)^2) alpha^-1 D / 2, symmetrized."""
    eff = _effective(params, eff)
    x = as_order_parameter(x, params.K)
    _, _, s4 = quadrature.gaussian_moments(_fields(params, eff, x))
    d = eff.delta
    h = -0.5 * d + 0.5 * d @ ((s4 / params.alpha)[:, None] * d)
    return 0.5 * (h + h.T)


def map_jacobian(params: ModelParams, eff: EffectiveInteraction | None, x) -> np.ndarray:
    """Jacobian of the consistency map, diag(E(1 - tanh^2)^2) alpha^-1 D."""
    eff = _effective(params, eff)
    x = as_order_parameter(x, params.K)
    _, _, s4 = quadrature.gaussian_moments(_fields(params, eff, x))
    return s4[:, None] * eff.alpha_inv_delta


def kernel_stationarity_check(params: ModelParams, eff: EffectiveInteraction | None, x, tol: float = DEFAULT_KKT_TOL) -> bool:
    """True iff ||D (x - T(x))|| <= tol * ||D||, i.e. x - T(x) lies in Ker D to tolerance."""
    eff = _effective(params, eff)
    x = as_order_parameter(x, params.K)
    r = eff.delta @ (x - consistency_map(params, eff, x))
    return bool(np.linalg.norm(r) <= tol * eff.norm)


def kkt_status(grad: np.ndarray, x: np.ndarray, tol: float, boundary_tol: float) -> tuple[bool, np.ndarray]:
    on_boundary = x <= boundary_tol
    interior_ok = np.abs(grad[~on_boundary]) <= tol
    boundary_ok = grad[on_boundary] <= tol
    return bool(np.all(interior_ok) and np.all(boundary_ok)), on_boundary


def _report(params, eff, x, *, iterations, converged, tol, boundary_tol, damping, rho=None) -> SolveReport:
    g = gradient(params, eff, x)
    ok, on_boundary = kkt_status(g, x, tol, boundary_tol)
    return SolveReport(
        x_star=x,
        pressure=variational_pressure(params, eff, x),
        grad_norm=float(np.linalg.norm(g)),
        hessian_eigs=np.linalg.eigvalsh(hessian(params, eff, x)),
        kkt_ok=ok,
        on_boundary=on_boundary,
        rho=spectral_radius(eff, params) if rho is None else rho,
        iterations=iterations,
        converged=converged,
        damping=damping,
        kernel_dim=eff.kernel_dim,
    )


def _fixed_point_batch(params, eff, X, damping, tol, max_iter):
    """Damped iteration on a stack of starts (rows of X), each with its own damping."""
    X = np.array(X, dtype=float)
    S = X.shape[0]
    damp = np.full(S, float(damping))
    flips = np.zeros_like(X, dtype=int)
    last = np.zeros_like(X)
    active = np.ones(S, dtype=bool)
    iters = np.zeros(S, dtype=int)
    A = eff.alpha_inv_delta
    for _ in range(max_iter):
        if not active.any():
            break
        xa = X[active]
        q = xa @ A.T + params.h
        if np.any(q < -1e-15):
            raise DomainError(f"negative quadrature argument {q.min()!r}")
        t = quadrature.mean_tanh(np.maximum(q, 0.0))
        d = damp[active][:, None]
        new = np.maximum((1.0 - d) * xa + d * t, 0.0)
        step = new - xa
        X[active] = new
        iters[active] += 1
        done = np.max(np.abs(step), axis=1) <= tol
        changed = np.sign(step) * np.sign(last[active]) < 0
        fl = np.where(changed, flips[active] + 1, 0)
        osc = np.any(fl >= _OSCILLATION_LIMIT, axis=1)
        fl[osc] = 0
        idx = np.nonzero(active)[0]
        damp[idx[osc]] *= 0.5
        flips[active] = fl
        last[active] = step
        active[idx[done]] = False
    return X, iters, ~active, damp


def solve_fixed_point(
    params: ModelParams,
    eff: EffectiveInteraction | None,
    x0,
    damping: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = 10_000,
    *,
    kkt_tol: float = DEFAULT_KKT_TOL,
    boundary_tol: float = DEFAULT_BOUNDARY_TOL,
) -> SolveReport:
    """Damped iteration x <- (1 - d) x + d T(x), clamped to x >= 0.

    Stops when the sup-norm step is below ``tol``. The damping is halved
    whenever some coordinate's increment changes sign three iterations in a
    row. After ``max_iter`` iterations :class:`NonConvergence` is raised
    carrying the terminal report (``converged=False``); the caller may
    restart with a smaller damping.
    """
    if not 0.0 < damping <= 1.0:
        raise ValidationError("damping", "damping must lie in (0, 1]")
    if tol <= 0:
        raise ValidationError("tol", "tol must be positive")
    eff = _effective(params, eff)
    x = as_order_parameter(x0, params.K)
    X, iters, conv, damp = _fixed_point_batch(params, eff, x[None, :], damping, tol, max_iter)
    report = _report(params, eff, X[0], iterations=int(iters[0]), converged=bool(conv[0]),
                     tol=kkt_tol, boundary_tol=boundary_tol, damping=float(damp[0]))
    if not report.converged:
        raise NonConvergence(f"fixed-point iteration did not reach tol={tol} in {max_iter} steps", report)
    return report


def _evaluate(params, eff, x):
    """Pressure, gradient and Hessian from a single quadrature pass."""
    lc, th, s4 = quadrature.gaussian_moments(_fields(params, eff, x))
    d = eff.delta
    om = 1.0 - x
    p = float(om @ d @ om / 4.0 - x @ d @ x / 2.0 + params.alpha @ lc)
    g = 0.5 * d @ (th - x)
    H = -0.5 * d + 0.5 * d @ ((s4 / params.alpha)[:, None] * d)
    return p, g, 0.5 * (H + H.T)


def _polish(params, eff, x, cfg: MaximizeConfig) -> tuple[np.ndarray, int, bool]:
    """Projected Newton/gradient ascent with backtracking.

    Uses the Newton direction on the free coordinates when the Hessian is
    negative definite there, and the gradient otherwise. Returns the final
    point, the iteration count and whether KKT holds with a last step
    below ``tol``.
    """
    p, g, H = _evaluate(params, eff, x)
    scale = max(1.0, eff.norm)
    for it in range(1, cfg.polish_max_iter + 1):
        free = (x > cfg.boundary_tol) | (g > 0)
        d = np.zeros_like(x)
        if np.any(free):
            Hf = H[np.ix_(free, free)]
            if np.linalg.eigvalsh(Hf)[-1] < -1e-14 * scale:
                d[free] = -np.linalg.solve(Hf, g[free])
            else:
                d[free] = g[free]
        t = 1.0
        accepted = False
        gnorm = np.linalg.norm(g)
        for _ in range(60):
            cand = np.maximum(x + t * d, 0.0)
            pc, gc, Hc = _evaluate(params, eff, cand)
            if pc >= p + _ARMIJO * (g @ (cand - x)):
                accepted = True
                break
            # rounding floor: equal pressure but smaller gradient still counts as progress
            if pc >= p - 4 * _EPS * max(1.0, abs(p)) and np.linalg.norm(gc) < gnorm:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return x, it, kkt_status(g, x, cfg.kkt_tol, cfg.boundary_tol)[0]
        step = np.max(np.abs(cand - x))
        x, p, g, H = cand, pc, gc, Hc
        if step <= cfg.tol and kkt_status(g, x, cfg.kkt_tol, cfg.boundary_tol)[0]:
            return x, it, True
    return x, cfg.polish_max_iter, kkt_status(g, x, cfg.kkt_tol, cfg.boundary_tol)[0]


def _snap_to_boundary(params, eff, x, cfg: MaximizeConfig) -> np.ndarray:
    """Zero coordinates inside the boundary band whose gradient does not push outward."""
    g = gradient(params, eff, x)
    snap = (x <= cfg.boundary_tol) & (g <= cfg.kkt_tol)
    if np.any(snap & (x > 0)):
        x = np.where(snap, 0.0, x)
    return x


def _is_local_max(params, eff, x, cfg: MaximizeConfig) -> bool:
    """Second-order test on the critical cone, by probing ascent directions."""
    p0, g, H = _evaluate(params, eff, x)
    crit = (x > cfg.boundary_tol) | (np.abs(g) <= cfg.kkt_tol)
    if not np.any(crit):
        return True
    evals, evecs = np.linalg.eigh(H[np.ix_(crit, crit)])
    thresh = 1e-12 * max(1.0, eff.norm)
    for k in np.nonzero(evals > thresh)[0]:
        for sign in (1.0, -1.0):
            d = np.zeros_like(x)
            d[crit] = sign * evecs[:, k]
            for eps in (1e-4, 1e-3):
                cand = np.maximum(x + eps * d, 0.0)
                if variational_pressure(params, eff, cand) > p0 + 8 * _EPS * max(1.0, abs(p0)):
                    return False
    return True


def _starts(params, eff, cfg: MaximizeConfig) -> np.ndarray:
    K = params.K
    ones = np.ones(K)
    rng = np.random.default_rng(cfg.seed)
    return np.vstack([np.zeros(K), ones, consistency_map(params, eff, ones),
                      rng.uniform(0.0, 1.0, size=(cfg.n_random, K))])


def _group(points, radius):
    """Indices of representatives: first point of each cluster within ``radius`` (sup norm)."""
    reps = []
    for i, x in enumerate(points):
        if all(np.max(np.abs(x - points[j])) > radius for j in reps):
            reps.append(i)
    return reps


def maximize(params: ModelParams, eff: EffectiveInteraction | None = None, config: MaximizeConfig | None = None) -> SolveReport:
    """Global maximizer of the variational pressure over x >= 0 by multistart.

    Starts are 0, the all-ones vector, T(1) and ``n_random`` uniform points
    of the unit cube. All starts run the damped fixed-point iteration
    together; starts whose iterates have merged (sup distance below 1e-6)
    share one projected Newton/gradient polish. The best KKT point by
    pressure is returned, ties broken by the lexicographically smallest x;
    every distinct local maximum is listed in ``all_local_maxima``.
    """
    cfg = config or MaximizeConfig()
    eff = _effective(params, eff)
    if not eff.psd_flag:
        raise NotPositiveSemidefinite("effective interaction matrix is indefinite")
    rho = spectral_radius(eff, params)

    starts = _starts(params, eff, cfg)
    X, iters, _, _ = _fixed_point_batch(params, eff, starts, cfg.damping, cfg.tol, cfg.fp_max_iter)
    total_iter = int(iters.sum())
    finals = []
    for i in _group(X, 1e-6):
        x, it, ok = _polish(params, eff, X[i], cfg)
        x = _snap_to_boundary(params, eff, x, cfg)
        total_iter += it
        finals.append((x, variational_pressure(params, eff, x), ok))

    good = [(x, p) for x, p, ok in finals if ok]
    if not good:
        x, p, _ = max(finals, key=lambda t: t[1])
        report = _report(params, eff, x, iterations=total_iter, converged=False, tol=cfg.kkt_tol,
                         boundary_tol=cfg.boundary_tol, damping=cfg.damping, rho=rho)
        report.multistart_count = len(starts)
        raise NonConvergence("no multistart run satisfied the KKT conditions", report)

    distinct: list[tuple[np.ndarray, float]] = []
    for x, p in good:
        for i, (y, q) in enumerate(distinct):
            if np.max(np.abs(x - y)) <= 10 * cfg.tol:
                if p > q:
                    distinct[i] = (x, p)
                break
        else:
            distinct.append((x, p))

    best_p = max(p for _, p in distinct)
    tie = 4 * _EPS * max(1.0, abs(best_p))
    contenders = sorted(tuple(x) for x, p in distinct if p >= best_p - tie)
    x_star = np.array(contenders[0])

    maxima = [(x, p) for x, p in distinct if _is_local_max(params, eff, x, cfg)]
    maxima.sort(key=lambda t: (-t[1], tuple(t[0])))

    report = _report(params, eff, x_star, iterations=total_iter, converged=True, tol=cfg.kkt_tol,
                     boundary_tol=cfg.boundary_tol, damping=cfg.damping, rho=rho)
    report.multistart_count = len(starts)
    report.all_local_maxima = maxima
    return report


def zero_pressure(params: ModelParams, eff: EffectiveInteraction | None = None) -> float:
    """Variational pressure at x = 0: (1, D1)/4 + sum_r alpha_r psi(h_r)."""
    return variational_pressure(params, eff, np.zeros(params.K))
