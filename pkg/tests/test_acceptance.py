"""End-to-end acceptance criteria, each at its stated tolerance and time budget.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""
import math
import textwrap
import time

import numpy as np
import pytest

from nmsk.cli import main
from nmsk.criticality import ORDERED, PARAMAGNETIC, fit_beta, fit_delta, fit_lambda_line, phase_scan
from nmsk.model import ModelParams, build_effective, spectral_radius
from nmsk.simulate import (
    concentration_checks,
    exact_enumerate,
    gibbs_probabilities,
    make_lattice,
    mc_run,
    nishimori_checks,
    realization_seed,
    sample_disorder,
    state_index,
    thermodynamic_convergence,
)
from nmsk.variational import gradient, hessian, maximize, variational_pressure

from oracles import grid_search_maximizer, pressure_oracle

TWO = ModelParams(alpha=[0.5, 0.5], mu=[[1.0, 0.5], [0.5, 1.0]], h=[0.3, 0.3])


def random_pd_params(rng, K, rho=None):
    a = rng.dirichlet(np.ones(K)) * 0.9 + 0.1 / K
    L = rng.random((K, K))
    mu = L @ L.T + 0.1 * np.eye(K)
    h = rng.random(K) * 0.5
    if rho is not None:
        p = ModelParams(alpha=a, mu=mu, h=h)
        mu = mu * rho / spectral_radius(build_effective(p), p)
    return ModelParams(alpha=a, mu=mu, h=h)


@pytest.mark.acceptance(1, "subcritical baseline x=0, pressure mu/4 + log 2")
def test_acceptance_1_baseline(report):
    t = time.perf_counter()
    worst = 0.0
    for mu in (0.1, 0.5, 0.9, 0.99):
        rep = maximize(ModelParams.single(mu))
        assert np.all(rep.x_star == 0.0)
        worst = max(worst, abs(rep.pressure - (mu / 4 + math.log(2))))
    dt = time.perf_counter() - t
    report(f"max |p - mu/4 - log2| = {worst:.1e}, {dt:.2f} s")
    assert worst <= 1e-10 and dt < 1.0


@pytest.mark.acceptance(2, "phase flip at mu=1.001 and beta prefactor on [0.9, 1.1]")
def test_acceptance_2_transition(report):
    t = time.perf_counter()
    mus = [round(0.9 + k * 1e-3, 12) for k in range(201)]
    pts = phase_scan([ModelParams.single(m) for m in mus])
    dt = time.perf_counter() - t
    first_ordered = next(p.params_ref.mu[0, 0] for p in pts if p.phase_label == ORDERED)
    first_super = next(p.params_ref.mu[0, 0] for p in pts if p.rho > 1)
    labels_ok = all(p.phase_label == (ORDERED if p.rho > 1 else PARAMAGNETIC) for p in pts)
    ratios = [p.x_star[0] * m * m / (m - 1) for p, m in zip(pts, mus) if m > 1 and m - 1 <= 1e-2 + 1e-12]
    report(f"flip at {first_ordered}, ratio in [{min(ratios):.4f}, {max(ratios):.4f}], {dt:.1f} s")
    assert first_ordered == first_super == 1.001 and labels_ok
    assert all(0.95 <= r <= 1.05 for r in ratios) and len(ratios) == 10
    assert dt < 10.0


@pytest.mark.acceptance(3, "critical exponents beta=1, delta slope 1/2, lambda-line 1/2")
def test_acceptance_3_exponents(report):
    t = time.perf_counter()
    fits = [fit_beta(), fit_delta(), fit_lambda_line(1.0)]
    dt = time.perf_counter() - t
    slopes = [f.fitted_slope for f in fits]
    report("slopes " + ", ".join(f"{s:.4f}" for s in slopes) + f", {dt:.1f} s")
    for s, want in zip(slopes, (1.0, 0.5, 0.5)):
        assert abs(s - want) <= 0.02
    assert dt < 30.0


@pytest.mark.acceptance(4, "strict concavity below rho = 1")
def test_acceptance_4_concavity(report):
    rng = np.random.default_rng(404)
    t = time.perf_counter()
    top = -np.inf
    for _ in range(50):
        K = int(rng.integers(2, 5))
        p = random_pd_params(rng, K, rho=rng.uniform(0.1, 0.95))
        eff = build_effective(p)
        assert spectral_radius(eff, p) < 1
        for _ in range(10):
            x = rng.random(K)
            top = max(top, np.linalg.eigvalsh(hessian(p, eff, x)).max())
    dt = time.perf_counter() - t
    report(f"largest Hessian eigenvalue {top:.2e}, {dt:.2f} s")
    assert top < -1e-12 and dt < 30.0


@pytest.mark.acceptance(5, "gradient and Hessian against centered differences")
def test_acceptance_5_derivatives(report):
    rng = np.random.default_rng(505)
    t = time.perf_counter()
    gerr = herr = 0.0
    for _ in range(100):
        K = int(rng.integers(1, 5))
        p = random_pd_params(rng, K)
        eff = build_effective(p)
        x = rng.random(K)
        I = np.eye(K)
        e1, e2 = 1e-6, 1e-5
        fd_g = np.array([(variational_pressure(p, eff, x + e1 * v) - variational_pressure(p, eff, x - e1 * v)) / (2 * e1)
                         for v in I])
        fd_h = np.array([(gradient(p, eff, x + e2 * v) - gradient(p, eff, x - e2 * v)) / (2 * e2) for v in I]).T
        gerr = max(gerr, np.max(np.abs(gradient(p, eff, x) - fd_g)))
        herr = max(herr, np.max(np.abs(hessian(p, eff, x) - fd_h)))
    dt = time.perf_counter() - t
    report(f"max gradient error {gerr:.1e}, max Hessian error {herr:.1e}, {dt:.2f} s")
    assert gerr <= 1e-6 and herr <= 1e-5 and dt < 30.0


@pytest.mark.acceptance(6, "maximizer agrees with brute-force grid search")
def test_acceptance_6_grid_oracle(report):
    alpha, mu, h = [0.5, 0.5], [[2.0, 0.5], [0.5, 2.0]], [0.05, 0.05]
    rep = maximize(ModelParams(alpha=alpha, mu=mu, h=h))
    x, pres, _ = grid_search_maximizer(alpha, mu, h, step=1e-3)
    dx = np.max(np.abs(rep.x_star - x))
    dp = abs(rep.pressure - pres)
    # the solver's own pressure agrees with the independent transcription
    dself = abs(rep.pressure - pressure_oracle(alpha, mu, h, rep.x_star))
    report(f"|dx| = {dx:.1e}, |dp| = {dp:.1e}")
    assert dx <= 1e-3 and dp <= 1e-6 and dself <= 1e-10


@pytest.mark.acceptance(7, "five Nishimori identities at N=10, exact, with off-line control")
def test_acceptance_7_nishimori(report):
    t = time.perf_counter()
    lat = make_lattice(TWO, 10)
    on = nishimori_checks(TWO, lat, 2000, "exact", master_seed=7)
    off = nishimori_checks(TWO, lat, 2000, "exact", master_seed=7, field_variance_scale=2.0)
    dt = time.perf_counter() - t
    z_on = [e.z_score for e in on]
    z_off = max(abs(e.z_score) for e in off)
    report("on-line z " + ", ".join(f"{z:+.2f}" for z in z_on) + f"; off-line max |z| {z_off:.1f}; {dt:.1f} s")
    assert all(abs(z) <= 3 for z in z_on)
    assert z_off > 5 and dt < 300


@pytest.mark.acceptance(8, "Var(p_N) below 8C/N and decreasing over N = 8, 12, 16")
def test_acceptance_8_concentration(report):
    t = time.perf_counter()
    rows = concentration_checks(TWO, [8, 12, 16], 5000, master_seed=8)
    dt = time.perf_counter() - t
    v = [r["var_pN"] for r in rows]
    report("var " + ", ".join(f"{r['var_pN']:.2e}+-{r['var_pN_err']:.1e} (bound {r['bound']:.2e})" for r in rows)
           + f", {dt:.0f} s")
    for r in rows:
        assert r["var_pN"] <= r["bound"] + 2 * r["var_pN_err"]
    assert v[0] > v[1] > v[2] and dt < 300


@pytest.mark.acceptance(9, "Metropolis against exact enumeration")
def test_acceptance_9_sampler(report):
    t = time.perf_counter()
    lat = make_lattice(TWO, 10)
    worst = 0.0
    for k in range(20):
        seed = realization_seed(909, k)
        r = sample_disorder(TWO, lat, seed)
        ex = exact_enumerate(r, TWO)
        run = mc_run(r, TWO, sweeps=20_000, therm=1000, seed=seed)
        for s in range(TWO.K):
            mean, err = run.estimate(f"m_{s}")
            worst = max(worst, abs(mean - ex.magnetizations[s]) / err)
    lat8 = make_lattice(TWO, 8)
    r = sample_disorder(TWO, lat8, 99)
    run = mc_run(r, TWO, sweeps=400_000, therm=1000, seed=99, keep_configs=True)
    emp = np.bincount(state_index(run.configs.reshape(-1, 8)), minlength=256) / (run.configs.size // 8)
    tv = 0.5 * np.abs(emp - gibbs_probabilities(r)).sum()
    dt = time.perf_counter() - t
    report(f"max |MC - exact|/stderr {worst:.2f}, TV {tv:.4f}, {dt:.0f} s")
    assert worst <= 3 and tv < 0.02 and dt < 300


@pytest.mark.acceptance(10, "finite-N magnetization approaches the variational value")
def test_acceptance_10_convergence(report):
    p = ModelParams.single(2.0, 0.2)
    t = time.perf_counter()
    rows = thermodynamic_convergence(p, [64, 128, 256, 512], 2000, sweeps=400, therm=100, master_seed=10)
    dt = time.perf_counter() - t
    gaps = [r["abs_diff"] for r in rows]
    report(f"x = {rows[0]['limit']:.6f}; gaps " + ", ".join(f"{r['abs_diff']:.4f}+-{r['stderr']:.4f}" for r in rows)
           + f"; {dt:.0f} s")
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.02 and dt < 900


@pytest.mark.acceptance(11, "identical config and seed give byte-identical summary.csv")
def test_acceptance_11_determinism(tmp_path, report):
    cfg = tmp_path / "run.toml"
    cfg.write_text(textwrap.dedent(
        """
        command = "mc"
        [model]
        alpha = [0.5, 0.5]
        mu = [[1.0, 0.5], [0.5, 1.0]]
        h = [0.3, 0.3]
        [mc]
        N = 24
        sweeps = 400
        therm = 50
        n_disorder = 8
        """
    ))
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [main([str(cfg), "--output-dir", str(d), "--seed", "11", "--quiet"]) for d in outs]
    a, b = ((d / "summary.csv").read_bytes() for d in outs)
    report(f"exit codes {codes}, {len(a)} bytes")
    assert codes == [0, 0] and a == b
