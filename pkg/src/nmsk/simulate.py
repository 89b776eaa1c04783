"""Finite-N harness: disorder sampling, exact enumeration and Metropolis sampling.

The Hamiltonian is

    H(sigma) = - sum_{i,j} J_ij sigma_i sigma_j - sum_i hf_i sigma_i,

summed over all ordered pairs (i, j) including i = j, with independent
J_ij ~ N(mu_rs / 2N, mu_rs / 2N) for i in species r, j in species s, and
hf_i ~ N(h_r, h_r). Only the symmetric part of J couples spins; the
diagonal adds a spin-independent constant that is kept so that the finite-N
pressure is exact.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from scipy.special import logsumexp

from .errors import ValidationError
from .model import ModelParams, build_effective
from .stats import MomentEstimator, blocking_stderr, integrated_autocorr, jackknife

MAX_EXACT_N = 20
IDENTITY_NAMES = (
    "site",                # E<s_i>^2 = E<s_i>
    "pair",                # E<s_i s_j>^2 = E<s_i s_j>
    "mixed",               # E<s_i><s_i s_j> = E<s_i><s_j>
    "overlap_magnetization",  # E<q_s> = E<m_s>
    "quadratic_form",      # E<(q, D q)> = E<(m, D m)>
)


@dataclass(frozen=True)
class LatticeSpec:
    N: int
    sizes: tuple
    assignment: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return len(self.sizes)

    def indicator(self) -> np.ndarray:
        """N x K membership matrix."""
        B = np.zeros((self.N, self.K))
        B[np.arange(self.N), self.assignment] = 1.0
        return B


def make_lattice(params: ModelParams, N: int) -> LatticeSpec:
    """Contiguous species blocks with sizes from largest-remainder rounding of N * alpha."""
    if N < params.K:
        raise ValidationError("N", f"need at least one spin per species (N >= {params.K})")
    raw = N * params.alpha
    sizes = np.floor(raw).astype(int)
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[: N - sizes.sum()]] += 1
    if np.any(sizes == 0):
        # every species must be populated; borrow from the largest block
        for r in np.nonzero(sizes == 0)[0]:
            sizes[np.argmax(sizes)] -= 1
            sizes[r] = 1
    assignment = np.repeat(np.arange(params.K), sizes)
    assignment.setflags(write=False)
    return LatticeSpec(N=int(N), sizes=tuple(int(s) for s in sizes), assignment=assignment)


@dataclass(frozen=True)
class DisorderRealization:
    couplings: np.ndarray = field(repr=False)
    fields: np.ndarray = field(repr=False)
    seed: int
    lattice: LatticeSpec = field(repr=False)
    field_variance_scale: float = 1.0

    @property
    def N(self) -> int:
        return self.lattice.N

    def symmetric_couplings(self) -> np.ndarray:
        """Off-diagonal symmetric part (J + J^T)/2 with zero diagonal."""
        J = 0.5 * (self.couplings + self.couplings.T)
        np.fill_diagonal(J, 0.0)
        return J

    def constant(self) -> float:
        """Energy offset from the diagonal couplings (sigma_i^2 = 1)."""
        return -float(np.trace(self.couplings))

    def energy(self, sigma) -> np.ndarray:
        s = np.asarray(sigma, dtype=float)
        return -np.einsum("...i,ij,...j->...", s, self.couplings, s) - s @ self.fields


def realization_seed(master_seed: int, index: int) -> int:
    """64-bit seed for realization ``index``, a pure function of the master seed."""
    words = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def draw_fields(h, lattice: LatticeSpec, rng: np.random.Generator, variance_scale: float = 1.0) -> np.ndarray:
    """hf_i = h_r + sqrt(scale * h_r) g_i; scale = 1 is the Nishimori line."""
    means = np.asarray(h, dtype=float)[lattice.assignment]
    g = rng.standard_normal(lattice.N)
    return means + np.sqrt(variance_scale * means) * g


def draw_couplings(mu, lattice: LatticeSpec, rng: np.random.Generator) -> np.ndarray:
    """Independent J_ij for every ordered pair with mean = variance = mu_rs / 2N."""
    a = lattice.assignment
    m = np.asarray(mu, dtype=float)[np.ix_(a, a)] / (2.0 * lattice.N)
    g = rng.standard_normal((lattice.N, lattice.N))
    return m + np.sqrt(m) * g


def sample_disorder(params: ModelParams, lattice: LatticeSpec, seed: int, *, field_variance_scale: float = 1.0) -> DisorderRealization:
    """One coupling/field realization, reproducible from ``seed``.

    ``field_variance_scale != 1`` moves the fields off the Nishimori line
    (used only as a negative control).
    """
    if lattice.N < 1:
        raise ValidationError("N", "N must be positive")
    rng = np.random.default_rng(seed)
    fields = draw_fields(params.h, lattice, rng, field_variance_scale)
    couplings = draw_couplings(params.mu, lattice, rng)
    return DisorderRealization(couplings=couplings, fields=fields, seed=int(seed), lattice=lattice,
                               field_variance_scale=float(field_variance_scale))


# --- exact enumeration -------------------------------------------------------

@lru_cache(maxsize=8)
def configurations(N: int) -> np.ndarray:
    """All 2^N spin configurations; row k has sigma_i = +1 iff bit i of k is set."""
    k = np.arange(2 ** N, dtype=np.int64)[:, None]
    bits = (k >> np.arange(N, dtype=np.int64)[None, :]) & 1
    S = (2 * bits - 1).astype(float)
    S.setflags(write=False)
    return S


def state_index(sigma) -> np.ndarray:
    """Inverse of :func:`configurations` row order."""
    s = np.asarray(sigma)
    bits = (s > 0).astype(np.int64)
    return bits @ (1 << np.arange(s.shape[-1], dtype=np.int64))


@dataclass
class ExactResult:
    pressure_N: float
    log_partition: float
    site_means: np.ndarray
    pair_means: np.ndarray
    magnetizations: np.ndarray
    mag_products: np.ndarray


def log_weights(realization: DisorderRealization) -> np.ndarray:
    """-H(sigma) for every configuration in :func:`configurations` order."""
    N = realization.N
    if N > MAX_EXACT_N:
        raise ValidationError("N", f"exact enumeration supports N <= {MAX_EXACT_N}")
    S = configurations(N)
    J = realization.symmetric_couplings()
    return np.einsum("ki,ki->k", S @ J, S) + S @ realization.fields - realization.constant()


def gibbs_probabilities(realization: DisorderRealization) -> np.ndarray:
    lw = log_weights(realization)
    return np.exp(lw - logsumexp(lw))


def exact_enumerate(realization: DisorderRealization, params: ModelParams | None = None) -> ExactResult:
    """Exact pressure and Gibbs moments by summing over all 2^N configurations."""
    lat = realization.lattice
    N = lat.N
    lw = log_weights(realization)
    logz = float(logsumexp(lw))
    w = np.exp(lw - logz)
    S = configurations(N)
    site = w @ S
    pair = S.T @ (w[:, None] * S)
    B = lat.indicator()
    sizes = np.asarray(lat.sizes, dtype=float)
    mags = site @ B / sizes
    prods = B.T @ pair @ B / np.outer(sizes, sizes)
    return ExactResult(pressure_N=logz / N, log_partition=logz, site_means=site,
                       pair_means=pair, magnetizations=mags, mag_products=prods)


# --- Metropolis ----------------------------------------------------------------

@numba.njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _metropolis_chain(J, hf, spins, n_sweeps, n_therm, assignment, K, sizes, keep, configs, mags, site_sum):
    """Sequential-sweep single-spin-flip Metropolis; J symmetric with zero diagonal.

    Local fields loc_i = 2 sum_j J_ij s_j + hf_i are updated incrementally;
    flipping s_i costs dE = 2 s_i loc_i.
    """
    N = spins.size
    loc = np.empty(N)
    for i in range(N):
        acc = 0.0
        for j in range(N):
            acc += J[i, j] * spins[j]
        loc[i] = 2.0 * acc + hf[i]
    accepted = 0
    for sweep in range(n_sweeps):
        for i in range(N):
            dE = 2.0 * spins[i] * loc[i]
            if dE <= 0.0 or np.random.random() < math.exp(-dE):
                spins[i] = -spins[i]
                d = 4.0 * spins[i]
                for j in range(N):
                    loc[j] += d * J[j, i]
                accepted += 1
        if sweep >= n_therm:
            t = sweep - n_therm
            for r in range(K):
                mags[t, r] = 0.0
            for i in range(N):
                mags[t, assignment[i]] += spins[i]
                site_sum[i] += spins[i]
            for r in range(K):
                mags[t, r] /= sizes[r]
            if keep:
                for i in range(N):
                    configs[t, i] = spins[i]
    return accepted


@dataclass
class MCRun:
    magnetizations: np.ndarray   # (n_replicas, n_samples, K)
    overlaps: np.ndarray         # (n_samples, K), replicas 0 and 1
    site_means: np.ndarray       # (n_replicas, N) time averages of sigma_i
    configs: np.ndarray | None   # (n_replicas, n_samples, N) int8 when kept
    n_sweeps: int
    n_therm: int
    acceptance: float
    tau_int: float
    estimates: dict = field(default_factory=dict)

    def estimate(self, name: str) -> tuple[float, float]:
        return self.estimates[name]


def _auto_therm(J, hf, lattice, chain_seed, start) -> int:
    pilot = 400
    spins = _initial_spins(lattice.N, chain_seed, start)
    mags = np.empty((pilot, lattice.K))
    _seed_numba(chain_seed % (2 ** 32))
    _metropolis_chain(J, hf, spins, pilot, 0, lattice.assignment.astype(np.int64), lattice.K,
                      np.asarray(lattice.sizes, dtype=float), False, np.empty((0, 0), np.int8),
                      mags, np.zeros(lattice.N))
    tau = integrated_autocorr(mags[pilot // 2:].mean(axis=1))
    return int(max(100, math.ceil(10 * tau)))


def _initial_spins(N, seed, start: str = "planted") -> np.ndarray:
    """All +1 ("planted") or uniformly random ("random") starting spins.

    On the Nishimori line the all +1 configuration is itself distributed as
    an equilibrium sample of the disorder-averaged Gibbs measure, so it is
    a thermalized start; random starts can fall into the metastable
    negative-magnetization state at moderate N.
    """
    if start == "planted":
        return np.ones(N)
    if start == "random":
        rng = np.random.default_rng(seed)
        return rng.choice(np.array([-1.0, 1.0]), size=N)
    raise ValidationError("start", "start must be 'planted' or 'random'")


def mc_run(realization: DisorderRealization, params: ModelParams | None, sweeps: int, therm: int | None,
           seed: int, n_replicas: int = 2, keep_configs: bool = False, n_blocks: int = 20,
           start: str = "planted") -> MCRun:
    """Independent Metropolis chains on one realization.

    Measurements are taken once per sweep after ``therm`` thermalization
    sweeps (``therm=None`` picks 10x a pilot integrated autocorrelation
    time, at least 100). Replicas 0 and 1 share the realization, so their
    site-wise product estimates the overlap.
    """
    if therm is not None and not sweeps > therm >= 0:
        raise ValidationError("sweeps", "need sweeps > therm >= 0")
    if n_replicas < 1:
        raise ValidationError("n_replicas", "need at least one replica")
    lat = realization.lattice
    J = realization.symmetric_couplings()
    hf = realization.fields.astype(float)
    seeds = np.random.SeedSequence([int(seed), 0x6D63]).generate_state(n_replicas, dtype=np.uint32)
    if therm is None:
        therm = min(_auto_therm(J, hf, lat, int(seeds[0]) ^ 0x5A5A, start), sweeps - 1)
    n_samples = sweeps - therm
    assignment = lat.assignment.astype(np.int64)
    sizes = np.asarray(lat.sizes, dtype=float)
    mags = np.empty((n_replicas, n_samples, lat.K))
    site = np.zeros((n_replicas, lat.N))
    configs = np.empty((n_replicas, n_samples, lat.N), dtype=np.int8) if keep_configs else None
    accepted = 0
    for rep in range(n_replicas):
        spins = _initial_spins(lat.N, int(seeds[rep]) + 1, start)
        _seed_numba(int(seeds[rep]))
        cfg = configs[rep] if keep_configs else np.empty((0, 0), np.int8)
        accepted += _metropolis_chain(J, hf, spins, sweeps, therm, assignment, lat.K, sizes,
                                      keep_configs, cfg, mags[rep], site[rep])
    site /= n_samples
    if n_replicas >= 2 and keep_configs:
        overlaps = (configs[0].astype(float) * configs[1]) @ lat.indicator() / sizes
    else:
        overlaps = np.empty((0, lat.K))
    run = MCRun(magnetizations=mags, overlaps=overlaps, site_means=site, configs=configs,
                n_sweeps=sweeps, n_therm=therm, acceptance=accepted / (n_replicas * sweeps * lat.N),
                tau_int=integrated_autocorr(mags[0].mean(axis=1)))
    run.estimates = _chain_estimates(run, n_blocks)
    return run


def _chain_estimates(run: MCRun, n_blocks: int) -> dict:
    """Means and blocking errors of m_r, m_r m_s (and q_r, q_r q_s when available)."""
    out = {}
    m = run.magnetizations
    n_rep, n, K = m.shape
    blocks = min(n_blocks, n)
    # one series per replica; combine replicas as independent estimates
    for r in range(K):
        vals = m[:, :, r].mean(axis=1)
        errs = np.array([blocking_stderr(m[k, :, r], blocks) for k in range(n_rep)])
        out[f"m_{r}"] = (float(vals.mean()), float(np.sqrt(np.sum(errs ** 2)) / n_rep))
        for s in range(r, K):
            prod = m[:, :, r] * m[:, :, s]
            errs = np.array([blocking_stderr(prod[k], blocks) for k in range(n_rep)])
            out[f"mm_{r}{s}"] = (float(prod.mean()), float(np.sqrt(np.sum(errs ** 2)) / n_rep))
    if run.overlaps.size:
        q = run.overlaps
        for r in range(K):
            out[f"q_{r}"] = (float(q[:, r].mean()), float(blocking_stderr(q[:, r], blocks)))
            for s in range(r, K):
                prod = q[:, r] * q[:, s]
                out[f"qq_{r}{s}"] = (float(prod.mean()), float(blocking_stderr(prod, blocks)))
    return out


# --- disorder-averaged checks --------------------------------------------------

@dataclass
class MCEstimate:
    observable_name: str
    mean: float
    stderr: float
    n_disorder: int
    n_sweeps: int = 0
    n_therm: int = 0

    @property
    def z_score(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == 0.0 else math.copysign(math.inf, self.mean)
        return self.mean / self.stderr

    def to_dict(self) -> dict:
        return {"observable": self.observable_name, "mean": self.mean, "stderr": self.stderr,
                "z_score": self.z_score, "n_disorder": self.n_disorder,
                "n_sweeps": self.n_sweeps, "n_therm": self.n_therm}


def parallel_map(func, items, workers: int = 1):
    """Ordered map, in a process pool when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


def _identity_residuals_exact(site, pair, lat: LatticeSpec, delta) -> np.ndarray:
    N = lat.N
    off = ~np.eye(N, dtype=bool)
    B = lat.indicator()
    sizes = np.asarray(lat.sizes, dtype=float)
    r_site = np.mean(site ** 2 - site)
    r_pair = np.mean((pair ** 2 - pair)[off])
    r_mixed = np.mean((site[:, None] * pair - np.outer(site, site))[off])
    # <q_s> over two replicas is (1/N_s) sum <s_i>^2
    q = (site ** 2) @ B / sizes
    m = site @ B / sizes
    r_qm = np.mean(q - m)
    qq = B.T @ (pair ** 2) @ B / np.outer(sizes, sizes)
    mm = B.T @ pair @ B / np.outer(sizes, sizes)
    r_quad = np.sum(delta * (qq - mm))
    return np.array([r_site, r_pair, r_mixed, r_qm, r_quad])


def _identity_residuals_mc(run: MCRun, lat: LatticeSpec, delta) -> np.ndarray:
    s = run.configs[0].astype(float)
    t = run.configs[1].astype(float)
    n = s.shape[0]
    N = lat.N
    off = ~np.eye(N, dtype=bool)
    B = lat.indicator()
    sizes = np.asarray(lat.sizes, dtype=float)
    site = 0.5 * (s.mean(axis=0) + t.mean(axis=0))
    site_sq = (s * t).mean(axis=0)                      # <s_i>^2
    pair = 0.5 * (s.T @ s + t.T @ t) / n                # <s_i s_j>
    pair_sq = ((s * t).T @ (s * t)) / n                 # <s_i s_j>^2
    # <s_i><s_i s_j>: one replica supplies s_i, the other s_i s_j
    mixed = 0.5 * ((s * t).T @ (s + t)) / n
    cross = 0.5 * (s.T @ t + t.T @ s) / n               # <s_i><s_j>
    r_site = np.mean(site_sq - site)
    r_pair = np.mean((pair_sq - pair)[off])
    r_mixed = np.mean((mixed - cross)[off])
    q = site_sq @ B / sizes
    m = site @ B / sizes
    r_qm = np.mean(q - m)
    qq = B.T @ pair_sq @ B / np.outer(sizes, sizes)
    mm = B.T @ pair @ B / np.outer(sizes, sizes)
    r_quad = np.sum(delta * (qq - mm))
    return np.array([r_site, r_pair, r_mixed, r_qm, r_quad])


@dataclass(frozen=True)
class _NishimoriTask:
    params: ModelParams
    lattice: LatticeSpec
    seed: int
    mode: str
    field_variance_scale: float
    sweeps: int
    therm: int | None


def _nishimori_one(task: _NishimoriTask) -> np.ndarray:
    real = sample_disorder(task.params, task.lattice, task.seed, field_variance_scale=task.field_variance_scale)
    delta = build_effective(task.params).delta
    if task.mode == "exact":
        res = exact_enumerate(real, task.params)
        return _identity_residuals_exact(res.site_means, res.pair_means, task.lattice, delta)
    run = mc_run(real, task.params, task.sweeps, task.therm, task.seed, n_replicas=2, keep_configs=True)
    return _identity_residuals_mc(run, task.lattice, delta)


def nishimori_checks(params: ModelParams, lattice: LatticeSpec, n_disorder: int, mode: str = "exact", *,
                     master_seed: int = 0, field_variance_scale: float = 1.0, sweeps: int = 2000,
                     therm: int | None = 200, workers: int = 1) -> list[MCEstimate]:
    """Disorder-averaged residuals (lhs - rhs) of the five Nishimori identities.

    Site and pair identities are averaged over all sites and all ordered
    pairs i != j before the disorder average. In exact mode the Gibbs
    averages are exact, so the error bars are purely from disorder.
    """
    if mode not in ("exact", "mc"):
        raise ValidationError("mode", "mode must be 'exact' or 'mc'")
    if mode == "exact" and lattice.N > MAX_EXACT_N:
        raise ValidationError("N", f"exact mode requires N <= {MAX_EXACT_N}")
    tasks = [_NishimoriTask(params, lattice, realization_seed(master_seed, k), mode,
                            field_variance_scale, sweeps, therm) for k in range(n_disorder)]
    res = np.array(parallel_map(_nishimori_one, tasks, workers))
    mean, err = jackknife(res)
    n_sw, n_th = (sweeps, therm or 0) if mode == "mc" else (0, 0)
    return [MCEstimate(name, float(mean[k]), float(err[k]), n_disorder, n_sw, n_th)
            for k, name in enumerate(IDENTITY_NAMES)]


def pressure_constant(params: ModelParams) -> float:
    """C = (1, D1)/2 + (alpha h, 1), the Lipschitz constant in the concentration bound."""
    delta = build_effective(params).delta
    return float(delta.sum() / 2.0 + params.alpha @ params.h)


@dataclass(frozen=True)
class _ExactTask:
    params: ModelParams
    lattice: LatticeSpec
    seed: int


def _exact_one(task: _ExactTask) -> np.ndarray:
    res = exact_enumerate(sample_disorder(task.params, task.lattice, task.seed), task.params)
    mm = np.diag(res.mag_products)
    return np.concatenate([[res.pressure_N, res.pressure_N ** 2], res.magnetizations, mm])


def concentration_checks(params: ModelParams, N_list, n_disorder: int, *, master_seed: int = 0,
                         workers: int = 1) -> list[dict]:
    """Variance of p_N across realizations and magnetization fluctuations, per N.

    Each row holds ``var_pN`` (unbiased, with jackknife error), the bound
    ``8C/N`` and, per species, ``E<(m_r - E<m_r>)^2>`` with its error.
    """
    C = pressure_constant(params)
    K = params.K
    rows = []
    for N in N_list:
        lat = make_lattice(params, N)
        tasks = [_ExactTask(params, lat, realization_seed(master_seed, k)) for k in range(n_disorder)]
        data = np.array(parallel_map(_exact_one, tasks, workers))
        var, var_err = jackknife(data[:, :2], MomentEstimator(lambda m: m[1] - m[0] ** 2))
        mean_p, mean_p_err = jackknife(data[:, 0])
        row = {"N": int(N), "mean_pN": float(mean_p), "mean_pN_err": float(mean_p_err),
               "var_pN": float(var), "var_pN_err": float(var_err), "bound": 8.0 * C / N}
        for r in range(K):
            cols = data[:, [2 + r, 2 + K + r]]
            fl, fl_err = jackknife(cols, MomentEstimator(lambda m: m[1] - m[0] ** 2))
            row[f"mag_fluct_{r}"] = float(fl)
            row[f"mag_fluct_{r}_err"] = float(fl_err)
        rows.append(row)
    return rows


@dataclass(frozen=True)
class _MCTask:
    params: ModelParams
    lattice: LatticeSpec
    seed: int
    sweeps: int
    therm: int | None


def _mc_one(task: _MCTask) -> np.ndarray:
    real = sample_disorder(task.params, task.lattice, task.seed)
    run = mc_run(real, task.params, task.sweeps, task.therm, task.seed, n_replicas=2)
    return run.magnetizations.mean(axis=(0, 1))


def realization_magnetizations(params: ModelParams, N: int, n_disorder: int, *, sweeps: int = 1000,
                               therm: int | None = 200, master_seed: int = 0,
                               workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-realization seeds and Gibbs magnetizations <m_r>, shape (n_disorder, K)."""
    lat = make_lattice(params, N)
    seeds = np.array([realization_seed(master_seed, k) for k in range(n_disorder)], dtype=np.uint64)
    tasks = [_MCTask(params, lat, int(s), sweeps, therm) for s in seeds]
    return seeds, np.array(parallel_map(_mc_one, tasks, workers)).reshape(n_disorder, params.K)


def quenched_magnetization(params: ModelParams, N: int, n_disorder: int, *, sweeps: int = 1000,
                           therm: int | None = 200, master_seed: int = 0, workers: int = 1) -> list[MCEstimate]:
    """E<m_r> by Metropolis, one estimate per species with jackknife errors over disorder."""
    _, data = realization_magnetizations(params, N, n_disorder, sweeps=sweeps, therm=therm,
                                         master_seed=master_seed, workers=workers)
    mean, err = jackknife(data)
    return [MCEstimate(f"m_{r}", float(mean[r]), float(err[r]), n_disorder, sweeps, therm or 0)
            for r in range(params.K)]


def thermodynamic_convergence(params: ModelParams, N_list, n_disorder: int, *, sweeps: int = 1000,
                              therm: int | None = 200, master_seed: int = 0, exact_N_list=(),
                              exact_n_disorder: int = 200, workers: int = 1, solution=None) -> list[dict]:
    """Finite-N quenched magnetizations against the variational maximizer.

    One row per (N, species) from Monte Carlo, plus one row per N in
    ``exact_N_list`` comparing the exact mean pressure with the
    variational pressure.
    """
    from .variational import maximize

    sol = solution if solution is not None else maximize(params)
    rows = []
    for N in N_list:
        for est in quenched_magnetization(params, N, n_disorder, sweeps=sweeps, therm=therm,
                                          master_seed=master_seed, workers=workers):
            r = int(est.observable_name.split("_")[1])
            rows.append({"kind": "magnetization", "N": int(N), "species": r, "value": est.mean,
                         "stderr": est.stderr, "limit": float(sol.x_star[r]),
                         "abs_diff": abs(est.mean - float(sol.x_star[r]))})
    for N in exact_N_list:
        lat = make_lattice(params, N)
        tasks = [_ExactTask(params, lat, realization_seed(master_seed, k)) for k in range(exact_n_disorder)]
        data = np.array(parallel_map(_exact_one, tasks, workers))
        mean, err = jackknife(data[:, 0])
        rows.append({"kind": "pressure", "N": int(N), "species": -1, "value": float(mean), "stderr": float(err),
                     "limit": sol.pressure, "abs_diff": abs(float(mean) - sol.pressure)})
    return rows


def field_response(params: ModelParams, N: int, species: int, h_grid, n_disorder: int, *, sweeps: int = 1000,
                   therm: int | None = 200, master_seed: int = 0, workers: int = 1) -> list[dict]:
    """E<m_r> for every species as the field mean of ``species`` is scanned.

    Realizations use the same seeds at every grid point, so the field
    noise enters as h + sqrt(h) g with a common g (common random numbers).
    """
    rows = []
    for hv in h_grid:
        h = params.h.copy()
        h[species] = hv
        p = params.with_(h=h)
        for est in quenched_magnetization(p, N, n_disorder, sweeps=sweeps, therm=therm,
                                          master_seed=master_seed, workers=workers):
            rows.append({"h": float(hv), "observable": est.observable_name, "mean": est.mean, "stderr": est.stderr})
    return rows
