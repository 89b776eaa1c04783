import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmsk import quadrature
from nmsk.errors import DomainError, NonConvergence, NotPositiveSemidefinite, ValidationError
from nmsk.model import ModelParams, build_effective, spectral_radius
from nmsk.variational import (
    MaximizeConfig,
    consistency_map,
    gradient,
    hessian,
    kernel_stationarity_check,
    kkt_status,
    map_jacobian,
    maximize,
    solve_fixed_point,
    variational_pressure,
    zero_pressure,
)

from oracles import bisect, mean_tanh_oracle, pressure_oracle, sk_magnetization_oracle

LOG2 = math.log(2.0)


def random_psd_params(rng, K, rho_max=None, h_max=0.5):
    """Nonnegative PSD mu (mu = L L^T with L >= 0), optionally rescaled so rho < rho_max."""
    a = rng.dirichlet(np.ones(K) * 2)
    L = rng.random((K, K))
    mu = L @ L.T
    p = ModelParams(alpha=a, mu=mu, h=rng.random(K) * h_max)
    if rho_max is not None:
        rho = spectral_radius(build_effective(p), p)
        p = p.with_(mu=mu * rho_max * rng.uniform(0.2, 0.99) / rho)
    return p


# --- pressure ---------------------------------------------------------------------

def test_pressure_at_zero_no_field():
    rng = np.random.default_rng(0)
    for K in (1, 2, 4):
        p = random_psd_params(rng, K).with_(h=np.zeros(K))
        eff = build_effective(p)
        assert variational_pressure(p, eff, np.zeros(K)) == pytest.approx(eff.delta.sum() / 4 + LOG2, abs=1e-14)


def test_pressure_without_interaction_is_psi():
    p = ModelParams.single(0.0, 0.37)
    for x in (0.0, 0.4, 3.0):
        assert variational_pressure(p, None, [x]) == pytest.approx(quadrature.psi(0.37).value, abs=1e-15)


def test_pressure_against_direct_transcription():
    alpha, mu, h, x = [0.3, 0.7], [[2, 1], [1, 2]], [0.1, 0.2], [0.5, 0.5]
    p = ModelParams(alpha=alpha, mu=mu, h=h)
    assert abs(variational_pressure(p, None, x) - pressure_oracle(alpha, mu, h, x)) <= 1e-10


def test_pressure_rejects_negative_x():
    with pytest.raises(ValidationError):
        variational_pressure(ModelParams.single(1.0), None, [-0.1])


def test_domain_error_on_negative_argument():
    # effective fields can only go negative through a corrupted interaction matrix
    p = ModelParams.single(1.0)
    eff = build_effective(p)
    bad = type(eff)(delta=-eff.delta, alpha_inv_delta=-eff.alpha_inv_delta, psd_flag=True, pd_flag=True,
                    kernel_basis=[], eigenvalues=eff.eigenvalues, eigenvectors=eff.eigenvectors)
    with pytest.raises(DomainError):
        variational_pressure(p, bad, [0.5])


def test_coercivity_along_diagonal():
    p = random_psd_params(np.random.default_rng(3), 3)
    assert build_effective(p).pd_flag
    vals = [variational_pressure(p, None, t * np.ones(3)) for t in (1, 10, 100, 1000)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < -1e3


# --- map and gradient --------------------------------------------------------------

def test_map_at_zero():
    p = ModelParams(alpha=[0.5, 0.5], mu=[[1, 0.2], [0.2, 1]], h=[0, 0])
    np.testing.assert_array_equal(consistency_map(p, None, [0, 0]), [0, 0])
    np.testing.assert_array_equal(gradient(p, None, [0, 0]), [0, 0])


def test_map_saturates():
    # Q = 50 through the field alone
    p = ModelParams.single(0.0, 50.0)
    assert consistency_map(p, None, [0.3])[0] >= 1 - 1e-9


def test_map_against_adaptive():
    p = ModelParams.single(2.0)
    assert abs(consistency_map(p, None, [0.5])[0] - mean_tanh_oracle(1.0)) <= 1e-10


def test_gradient_vanishes_at_fixed_point():
    p = ModelParams.single(1.5)
    xbar = sk_magnetization_oracle(1.5, 0.0)
    assert abs(gradient(p, None, [xbar])[0]) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_gradient_against_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p = random_psd_params(rng, 3)
    x = rng.random(3) + 0.05
    eps = 1e-6
    fd = np.array([(variational_pressure(p, None, x + eps * e) - variational_pressure(p, None, x - eps * e)) / (2 * eps)
                   for e in np.eye(3)])
    np.testing.assert_allclose(gradient(p, None, x), fd, rtol=0, atol=1e-6)


def test_gradient_factorization_100_instances():
    rng = np.random.default_rng(17)
    for _ in range(100):
        K = int(rng.integers(1, 5))
        p = random_psd_params(rng, K)
        eff = build_effective(p)
        x = rng.random(K) * 1.5
        want = 0.5 * eff.delta @ (consistency_map(p, eff, x) - x)
        np.testing.assert_allclose(gradient(p, eff, x), want, rtol=0, atol=1e-12)


# --- hessian -----------------------------------------------------------------------

@pytest.mark.parametrize("mu", [0.3, 0.99, 1.0, 1.7])
def test_hessian_scalar_at_origin(mu):
    H = hessian(ModelParams.single(mu), None, [0.0])
    assert H[0, 0] == pytest.approx((mu * mu - mu) / 2, abs=1e-15)
    assert (H[0, 0] < 0) == (mu < 1)


@pytest.mark.parametrize("seed", range(5))
def test_hessian_against_finite_differences(seed):
    rng = np.random.default_rng(50 + seed)
    p = random_psd_params(rng, 2)
    x = rng.random(2) + 0.05
    eps = 1e-6
    cols = [(gradient(p, None, x + eps * e) - gradient(p, None, x - eps * e)) / (2 * eps) for e in np.eye(2)]
    H = hessian(p, None, x)
    np.testing.assert_allclose(H, np.array(cols).T, rtol=0, atol=1e-5)
    np.testing.assert_array_equal(H, H.T)


def test_concavity_below_threshold():
    rng = np.random.default_rng(23)
    for _ in range(50):
        K = int(rng.integers(1, 5))
        p = random_psd_params(rng, K, rho_max=1.0)
        eff = build_effective(p)
        assert spectral_radius(eff, p) < 1
        for _ in range(10):
            x = rng.random(K) * 2
            assert np.linalg.eigvalsh(hessian(p, eff, x)).max() < 0


def test_map_spectral_bound():
    rng = np.random.default_rng(29)
    for _ in range(100):
        K = int(rng.integers(1, 5))
        p = random_psd_params(rng, K)
        eff = build_effective(p)
        x = rng.random(K)
        J = map_jacobian(p, eff, x)
        assert np.max(np.abs(np.linalg.eigvals(J))) <= spectral_radius(eff, p) + 1e-9


# --- fixed point -------------------------------------------------------------------

def test_fixed_point_contracts_to_zero():
    rep = solve_fixed_point(ModelParams.single(0.7), None, [0.9], tol=1e-12)
    assert rep.converged and abs(rep.x_star[0]) <= 1e-11


def test_fixed_point_zero_for_random_subcritical():
    rng = np.random.default_rng(31)
    for _ in range(10):
        K = int(rng.integers(1, 4))
        p = random_psd_params(rng, K, rho_max=1.0).with_(h=np.zeros(K))
        if not build_effective(p).pd_flag:
            continue
        rep = solve_fixed_point(p, None, rng.random(K), tol=1e-12)
        assert rep.converged and np.max(rep.x_star) <= 1e-10


def test_fixed_point_nonzero_branch_against_bisection():
    rep = solve_fixed_point(ModelParams.single(1.5), None, [0.5], tol=1e-12)
    assert rep.converged
    xbar = sk_magnetization_oracle(1.5, 0.0)
    assert abs(rep.x_star[0] - xbar) <= 1e-10
    assert abs(rep.x_star[0] - consistency_map(ModelParams.single(1.5), None, rep.x_star)[0]) <= 1e-10


def test_fixed_point_nonconvergence_raises_with_report():
    with pytest.raises(NonConvergence) as exc:
        solve_fixed_point(ModelParams.single(1.0), None, [0.5], tol=1e-14, max_iter=20)
    assert exc.value.report is not None and not exc.value.report.converged
    assert exc.value.report.iterations == 20


@pytest.mark.parametrize("damping", [0.0, -0.5, 1.5])
def test_fixed_point_rejects_damping(damping):
    with pytest.raises(ValidationError):
        solve_fixed_point(ModelParams.single(1.0), None, [0.5], damping=damping)


def test_damped_iteration_reaches_same_point():
    p = ModelParams(alpha=[0.4, 0.6], mu=[[3, 1], [1, 2]], h=[0.1, 0.0])
    a = solve_fixed_point(p, None, [0.5, 0.5], damping=1.0).x_star
    b = solve_fixed_point(p, None, [0.5, 0.5], damping=0.3).x_star
    np.testing.assert_allclose(a, b, atol=1e-10)


# --- maximize ----------------------------------------------------------------------

@pytest.mark.parametrize("mu", [0.1, 0.5, 0.9, 0.999])
def test_paramagnetic_maximizer(mu):
    p = ModelParams.single(mu)
    rep = maximize(p)
    assert rep.x_star[0] == 0.0
    assert abs(rep.pressure - (mu / 4 + LOG2)) <= 1e-10
    assert rep.kkt_ok and rep.converged and rep.on_boundary[0]


def test_paramagnetic_multispecies():
    rng = np.random.default_rng(37)
    for _ in range(5):
        p = random_psd_params(rng, 3, rho_max=1.0).with_(h=np.zeros(3))
        eff = build_effective(p)
        rep = maximize(p, eff)
        assert np.all(rep.x_star == 0.0)
        assert abs(rep.pressure - (eff.delta.sum() / 4 + LOG2)) <= 1e-10


@pytest.mark.parametrize("mu", [1.01, 1.5, 2.0, 4.0])
def test_ordered_maximizer_matches_bisection(mu):
    rep = maximize(ModelParams.single(mu))
    assert rep.x_star[0] > 0
    assert abs(rep.x_star[0] - sk_magnetization_oracle(mu, 0.0)) <= 1e-9
    # x = 0 is a saddle, not the maximizer
    assert rep.pressure > zero_pressure(ModelParams.single(mu))


def test_grid_oracle_two_species():
    from oracles import grid_search_maximizer

    alpha, mu, h = [0.5, 0.5], [[2, 0.5], [0.5, 2]], [0.05, 0.05]
    rep = maximize(ModelParams(alpha=alpha, mu=mu, h=h))
    x, pres, _ = grid_search_maximizer(alpha, mu, h)
    assert np.max(np.abs(rep.x_star - x)) <= 1e-3
    assert abs(rep.pressure - pres) <= 1e-6


def test_report_invariants():
    p = ModelParams(alpha=[0.3, 0.7], mu=[[3, 0.2], [0.2, 1.5]], h=[0.0, 0.02])
    eff = build_effective(p)
    rep = maximize(p, eff)
    assert rep.pressure == variational_pressure(p, eff, rep.x_star)
    assert np.all(np.diff(rep.hessian_eigs) >= 0)
    assert rep.multistart_count == 3 + MaximizeConfig().n_random
    assert rep.all_local_maxima and rep.all_local_maxima[0][1] == pytest.approx(rep.pressure, abs=1e-14)
    assert np.max(np.abs(rep.x_star - consistency_map(p, eff, rep.x_star))) <= 10 * MaximizeConfig().tol


def test_boundary_maximizer_satisfies_consistency():
    # species 1 decoupled and subcritical with no field: its optimum sits on x_1 = 0
    p = ModelParams(alpha=[0.5, 0.5], mu=[[4.0, 0.0], [0.0, 1.0]], h=[0.0, 0.0])
    eff = build_effective(p)
    rep = maximize(p, eff)
    assert rep.x_star[1] == 0.0 and rep.x_star[0] > 0
    assert rep.on_boundary.tolist() == [False, True]
    assert np.max(np.abs(rep.x_star - consistency_map(p, eff, rep.x_star))) <= 10 * MaximizeConfig().tol


def test_maximizer_consistency_random():
    rng = np.random.default_rng(41)
    for _ in range(10):
        K = int(rng.integers(1, 4))
        p = random_psd_params(rng, K)
        eff = build_effective(p)
        if not eff.pd_flag:
            continue
        rep = maximize(p, eff)
        assert rep.converged and rep.kkt_ok
        assert np.max(np.abs(rep.x_star - consistency_map(p, eff, rep.x_star))) <= 10 * MaximizeConfig().tol


def test_maximize_refuses_indefinite():
    p = ModelParams(alpha=[0.5, 0.5], mu=[[0.0, 1.0], [1.0, 0.0]], h=[0, 0])
    with pytest.raises(NotPositiveSemidefinite):
        maximize(p)


def test_maximize_deterministic():
    p = ModelParams(alpha=[0.2, 0.3, 0.5], mu=[[2, 1, 0.5], [1, 3, 0.2], [0.5, 0.2, 1]], h=[0.1, 0, 0.05])
    a, b = maximize(p), maximize(p)
    np.testing.assert_array_equal(a.x_star, b.x_star)
    assert a.pressure == b.pressure


# --- KKT and kernel ----------------------------------------------------------------

def test_kkt_status_rules():
    x = np.array([0.0, 0.5, 1e-10])
    ok, bd = kkt_status(np.array([-1.0, 1e-12, -1e-3]), x, 1e-10, 1e-9)
    assert ok and bd.tolist() == [True, False, True]
    ok, _ = kkt_status(np.array([1e-6, 0.0, 0.0]), x, 1e-10, 1e-9)
    assert not ok
    ok, _ = kkt_status(np.array([0.0, -1e-6, 0.0]), x, 1e-10, 1e-9)
    assert not ok


def test_kernel_check_positive_definite():
    p = ModelParams.single(1.5)
    assert kernel_stationarity_check(p, None, [sk_magnetization_oracle(1.5, 0.0)])
    assert not kernel_stationarity_check(p, None, [0.3])


def test_kernel_check_zero_interaction():
    p = ModelParams(alpha=[0.5, 0.5], mu=np.zeros((2, 2)), h=[0.2, 0.0])
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert kernel_stationarity_check(p, None, rng.random(2) * 3)


def test_kernel_check_rank_one():
    # mu = [[1, 1], [1, 1]] with equal weights: Ker = span(1, -1), both fields equal s = (x1 + x2)/2 + h
    h = 0.1
    p = ModelParams(alpha=[0.5, 0.5], mu=[[1, 1], [1, 1]], h=[h, h])
    eff = build_effective(p)
    assert eff.kernel_dim == 1
    s = bisect(lambda s: s - mean_tanh_oracle(s + h), 0.0, 1.0)
    for d in (0.0, 0.1, 0.25):
        assert kernel_stationarity_check(p, eff, [s + d, s - d])
    assert not kernel_stationarity_check(p, eff, [s + 0.1 + 1e-3, s - 0.1])


# --- properties --------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_map_range_and_gradient_property(K, seed):
    rng = np.random.default_rng(seed)
    p = random_psd_params(rng, K)
    x = rng.random(K) * 2
    T = consistency_map(p, None, x)
    assert np.all(T >= 0) and np.all(T < 1)
    eff = build_effective(p)
    np.testing.assert_allclose(gradient(p, eff, x), 0.5 * eff.delta @ (T - x), atol=1e-12)
