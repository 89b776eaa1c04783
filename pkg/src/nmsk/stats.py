"""Error estimation for disorder averages and Monte Carlo time series."""
from __future__ import annotations

import numpy as np


def jackknife(samples, estimator=None):
    """Delete-one jackknife estimate and standard error.

    ``samples`` is an array whose first axis indexes independent units
    (disorder realizations). ``estimator`` maps such an array to a scalar
    or array; the default is the mean over the first axis, for which the
    jackknife error reduces to the usual standard error of the mean.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("jackknife needs at least two samples")
    if estimator is None:
        mean = x.mean(axis=0)
        return mean, x.std(axis=0, ddof=1) / np.sqrt(n)
    full = np.asarray(estimator(x))
    total = x.sum(axis=0)
    if _is_mean_of_moments(estimator):
        loo = (total[None] - x) / (n - 1)
        reps = np.array([estimator.from_means(m) for m in loo])
    else:
        mask = ~np.eye(n, dtype=bool)
        reps = np.array([estimator(x[mask[i]]) for i in range(n)])
    bar = reps.mean(axis=0)
    err = np.sqrt((n - 1) / n * np.sum((reps - bar) ** 2, axis=0))
    # bias-corrected estimate
    return n * full - (n - 1) * bar, err


class MomentEstimator:
    """Estimator that is a function of column means; allows O(n) jackknife."""

    def __init__(self, func):
        self.func = func

    def __call__(self, x):
        return self.func(np.asarray(x).mean(axis=0))

    def from_means(self, means):
        return self.func(means)


def _is_mean_of_moments(estimator) -> bool:
    return isinstance(estimator, MomentEstimator)


def blocking_stderr(series, n_blocks: int = 20) -> float:
    """Standard error of a time-series mean from ``n_blocks`` contiguous block means."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0] // n_blocks * n_blocks
    if n_blocks < 2 or n == 0:
        raise ValueError("series too short for blocking")
    blocks = x[:n].reshape(n_blocks, -1, *x.shape[1:]).mean(axis=1)
    return blocks.std(axis=0, ddof=1) / np.sqrt(n_blocks)


def integrated_autocorr(series, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = x.size
    var = x @ x / n
    if n < 4 or var == 0.0:
        return 0.5
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = 0.5
    for w in range(1, n):
        tau += acf[w]
        if w >= c * tau:
            break
    return max(float(tau), 0.5)
