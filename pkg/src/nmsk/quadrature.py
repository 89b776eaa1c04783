"""Standard-normal expectations and the one-body pressure ``psi``.

Gauss-Hermite rules are produced in the physicists' convention

    int exp(-u^2) f(u) du  ~  sum_i w_i f(u_i),

so a standard-normal expectation is ``sum(w * f(sqrt(2) * u)) / sqrt(pi)``.

The one-body pressure of a single spin in a Gaussian field whose mean
equals its variance,

    psi(Q) = E_z log 2cosh(z sqrt(Q) + Q),      z ~ N(0, 1),

is evaluated together with

    psi'(Q)  = (1 + E_z tanh(y)) / 2,
    psi''(Q) = E_z (1 - tanh(y)^2)^2 / 2,        y = z sqrt(Q) + Q.

For small Q the integrands are smooth on the scale of the Gaussian and a
Hermite rule with order doubling is used. For larger Q the integrands
develop structure of width ~1/sqrt(Q) in z near z = -sqrt(Q) (the poles of
tanh at y = i pi/2 approach the real axis), where Hermite rules converge
too slowly. There the expectation is taken over y ~ N(Q, Q) directly:
the asymptotic parts ``|y|`` and ``sign(y)`` have closed-form Gaussian
expectations and the remainders, localized within a few units of y = 0,
are integrated with composite Gauss-Legendre panels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import erf

from .errors import DomainError

MAX_ORDER = 512
DEFAULT_ORDER = 61
AGREEMENT_TOL = 1e-11

# Above this Q the y-domain split is used instead of Hermite doubling.
_Y_DOMAIN_MIN_Q = 1.0
# Remainders decay like exp(-2|y|); beyond |y| = 40 they are below 1e-34.
_Y_HALF_WIDTH = 40
_LEGENDRE_NODES = 24

_SQRT_PI = math.sqrt(math.pi)
_NEG_ZERO_CLAMP = 1e-15


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for the weight function exp(-u^2)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def expect(self, f):
        """Standard-normal expectation E_z f(z) (f is applied to an array)."""
        z = math.sqrt(2.0) * self.nodes
        return np.sum(self.weights * f(z), axis=-1) / _SQRT_PI


@dataclass(frozen=True)
class PsiValue:
    value: float | np.ndarray
    first: float | np.ndarray
    second: float | np.ndarray


def _hermite_functions(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Hermite functions psi_n(x), psi_{n-1}(x) by stable recurrence."""
    prev = np.zeros_like(x)
    cur = np.exp(-0.5 * x * x) / _SQRT_PI ** 0.5
    for k in range(n):
        nxt = math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
    return cur, prev


@lru_cache(maxsize=32)
def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Return the ``order``-point Gauss-Hermite rule (exact up to degree 2*order - 1).

    Nodes come from the Golub-Welsch tridiagonal eigenproblem and are
    polished with two Newton steps; weights are computed in the log domain
    from the normalized Hermite functions so that no intermediate overflows
    up to ``order = 512``. Weights far in the tail may underflow to zero.
    """
    if not isinstance(order, (int, np.integer)) or isinstance(order, bool):
        raise TypeError("order must be an integer")
    if order < 2 or order > MAX_ORDER:
        raise ValueError(f"order must be in [2, {MAX_ORDER}], got {order}")
    n = int(order)
    off = np.sqrt(np.arange(1, n) / 2.0)
    x = eigh_tridiagonal(np.zeros(n), off, eigvals_only=True)
    for _ in range(2):
        pn, pn1 = _hermite_functions(x, n)
        x = x - pn / (math.sqrt(2.0 * n) * pn1 - x * pn)
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])

    _, pn1 = _hermite_functions(x, n)
    # w_i = exp(-x_i^2) / (n psi_{n-1}(x_i)^2) with psi the Hermite functions
    with np.errstate(divide="ignore"):
        logw = -x * x - math.log(n) - 2.0 * np.log(np.abs(pn1))
    w = np.exp(logw)
    w = np.where(np.isfinite(w), w, 0.0)
    w = 0.5 * (w + w[::-1])
    w *= _SQRT_PI / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(order=n, nodes=x, weights=w)


def _as_q(Q) -> np.ndarray:
    q = np.asarray(Q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise DomainError("Q must be finite")
    if np.any(q < -_NEG_ZERO_CLAMP):
        raise DomainError(f"Q must be nonnegative, got min {q.min()!r}")
    return np.maximum(q, 0.0)


def log2cosh(y):
    """log(2 cosh y) without overflow."""
    a = np.abs(y)
    return a + np.log1p(np.exp(-2.0 * a))


def _hermite_moments(q: np.ndarray, order: int) -> np.ndarray:
    rule = gauss_hermite_rule(order)
    z = math.sqrt(2.0) * rule.nodes
    y = np.sqrt(q)[:, None] * z[None, :] + q[:, None]
    t = np.tanh(y)
    s = 1.0 - t * t
    w = rule.weights / _SQRT_PI
    return np.stack([log2cosh(y) @ w, t @ w, (s * s) @ w])


def _hermite_doubling(q: np.ndarray) -> np.ndarray:
    """Double the order from 61 until two successive orders agree, per element.

    Each Q keeps the first order at which it converged, so a value does
    not depend on which other arguments share the call.
    """
    order = DEFAULT_ORDER
    out = _hermite_moments(q, order)
    todo = np.arange(q.size)
    while todo.size and 2 * order <= MAX_ORDER:
        order *= 2
        cur = _hermite_moments(q[todo], order)
        done = np.max(np.abs(cur - out[:, todo]), axis=0) <= AGREEMENT_TOL
        out[:, todo] = cur
        todo = todo[~done]
    return out


@lru_cache(maxsize=1)
def _legendre_panels() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit-width panels on [-40, 40] (one edge at 0, where |y| and sign(y) kink)."""
    xl, wl = np.polynomial.legendre.leggauss(_LEGENDRE_NODES)
    edges = np.arange(-_Y_HALF_WIDTH, _Y_HALF_WIDTH + 1, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    y = (0.5 * (b - a) * xl + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * wl).ravel()
    e = np.exp(-2.0 * np.abs(y))
    sech2 = 4.0 * e / (1.0 + e) ** 2
    # log2cosh - |y|, tanh - sign(y), sech^4
    rem = np.stack([np.log1p(e), -np.sign(y) * 2.0 * e / (1.0 + e), sech2 * sech2])
    return y, w, rem


def _y_domain_moments(q: np.ndarray) -> np.ndarray:
    y, w, rem = _legendre_panels()

    qq = q[:, None]
    dens = np.exp(-((y[None, :] - qq) ** 2) / (2.0 * qq)) / np.sqrt(2.0 * math.pi * qq)
    local = (dens * w[None, :]) @ rem.T  # (nq, 3)

    sign_mean = erf(np.sqrt(q / 2.0))
    abs_mean = np.sqrt(2.0 * q / math.pi) * np.exp(-q / 2.0) + q * sign_mean
    return np.stack([abs_mean + local[:, 0], sign_mean + local[:, 1], local[:, 2]])


def gaussian_moments(Q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """E log2cosh(y), E tanh(y), E (1 - tanh(y)^2)^2 for y = z sqrt(Q) + Q.

    Accepts a scalar or an array of nonnegative Q and returns arrays of the
    same shape.
    """
    q = _as_q(Q)
    shape = q.shape
    flat = q.ravel()
    out = np.empty((3, flat.size))
    small = flat < _Y_DOMAIN_MIN_Q
    if np.any(small):
        out[:, small] = _hermite_doubling(flat[small])
    if np.any(~small):
        out[:, ~small] = _y_domain_moments(flat[~small])
    return tuple(m.reshape(shape) for m in out)


def psi(Q) -> PsiValue:
    """One-body pressure and its first two derivatives at ``Q >= 0``.

    Scalars in, floats out; arrays are handled elementwise.
    """
    scalar = np.ndim(Q) == 0
    lc, th, s4 = gaussian_moments(Q)
    first = 0.5 * (1.0 + th)
    second = 0.5 * s4
    if scalar:
        return PsiValue(float(lc), float(first), float(second))
    return PsiValue(lc, first, second)


def mean_tanh(Q):
    """E_z tanh(z sqrt(Q) + Q), the consistency-map kernel."""
    return gaussian_moments(Q)[1]
