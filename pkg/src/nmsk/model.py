"""Model parameters, the effective interaction matrix and the spectral criterion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

SUM_TOL = 1e-12
SYM_TOL = 1e-12
# Relative eigenvalue band for the PSD test and for kernel detection.
EIG_REL_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Species form factors ``alpha``, coupling means ``mu`` and field means ``h``.

    ``mu`` is symmetrized when its asymmetry is below 1e-12; larger
    asymmetry, negative entries, or form factors that do not sum to one
    raise :class:`ValidationError`.
    """

    alpha: np.ndarray
    mu: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        K = alpha.size
        if alpha.ndim != 1 or K < 1:
            raise ValidationError("alpha", "alpha must be a nonempty vector")
        if mu.shape != (K, K):
            raise ValidationError("mu", f"mu must be {K}x{K}, got shape {mu.shape}")
        if h.shape != (K,):
            raise ValidationError("h", f"h must have length {K}, got shape {h.shape}")
        for name, arr in (("alpha", alpha), ("mu", mu), ("h", h)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(name, f"{name} must be finite")
        if np.any(alpha <= 0) or np.any(alpha > 1):
            raise ValidationError("alpha", "form factors must lie in (0, 1]")
        if abs(alpha.sum() - 1.0) > SUM_TOL:
            raise ValidationError("alpha", f"alpha must sum to 1 (got {alpha.sum():.15g})")
        if np.max(np.abs(mu - mu.T)) > SYM_TOL:
            raise ValidationError("mu", "mu must be symmetric (asymmetry above 1e-12)")
        mu = 0.5 * (mu + mu.T)
        if np.any(mu < 0):
            raise ValidationError("mu", "mu entries must be nonnegative")
        if np.any(h < 0):
            raise ValidationError("h", "h entries must be nonnegative")
        for arr in (alpha, mu, h):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "h", h)

    @property
    def K(self) -> int:
        return self.alpha.size

    @classmethod
    def single(cls, mu: float, h: float = 0.0) -> "ModelParams":
        """One-species (SK) parameters."""
        return cls(alpha=[1.0], mu=[[mu]], h=[h])

    def with_(self, **changes) -> "ModelParams":
        kw = {"alpha": self.alpha, "mu": self.mu, "h": self.h}
        kw.update(changes)
        return ModelParams(**kw)

    def to_dict(self) -> dict:
        return {"K": self.K, "alpha": self.alpha.tolist(), "mu": self.mu.tolist(), "h": self.h.tolist()}


@dataclass(frozen=True)
class EffectiveInteraction:
    delta: np.ndarray
    alpha_inv_delta: np.ndarray
    psd_flag: bool
    pd_flag: bool
    kernel_basis: list
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def norm(self) -> float:
        """Spectral norm of delta (0 for the zero matrix)."""
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel_basis)


def build_effective(params: ModelParams) -> EffectiveInteraction:
    """Form delta_rs = alpha_r mu_rs alpha_s and classify its definiteness.

    Indefinite delta is reported through ``psd_flag`` rather than raised;
    solvers that need delta >= 0 check the flag themselves.
    """
    a = params.alpha
    delta = a[:, None] * params.mu * a[None, :]
    delta = 0.5 * (delta + delta.T)
    evals, evecs = np.linalg.eigh(delta)
    scale = float(np.max(np.abs(evals)))
    band = EIG_REL_TOL * scale
    psd = bool(evals[0] >= -band)
    if scale == 0.0:
        kernel = [evecs[:, i].copy() for i in range(params.K)]
    else:
        kernel = [evecs[:, i].copy() for i in range(params.K) if abs(evals[i]) <= band]
    pd = psd and not kernel
    alpha_inv_delta = delta / a[:, None]
    for arr in (delta, alpha_inv_delta, evals, evecs):
        arr.setflags(write=False)
    return EffectiveInteraction(
        delta=delta,
        alpha_inv_delta=alpha_inv_delta,
        psd_flag=psd,
        pd_flag=pd,
        kernel_basis=kernel,
        eigenvalues=evals,
        eigenvectors=evecs,
    )


def spectral_radius(eff: EffectiveInteraction, params: ModelParams) -> float:
    """rho(alpha^-1 delta), via the similar symmetric matrix alpha^-1/2 delta alpha^-1/2."""
    s = 1.0 / np.sqrt(params.alpha)
    sym = s[:, None] * eff.delta * s[None, :]
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (sym + sym.T)))))
