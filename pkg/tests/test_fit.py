import numpy as np
import pytest
from scipy import optimize

from hqer.dist import ErrorDistribution
from hqer.errors import DomainError, ModelError
from hqer.fit import (
    Dataset,
    SolverOptions,
    fit,
    fit_expectile,
    fit_hqer,
    fit_kth_power,
    fit_quantile,
    gradient,
    hessian,
    objective,
)
from hqer.loss import LossParams, hqer_loss, pinball_loss, score_kernel
from hqer.rng import make_rng

from conftest import synthetic


def lbfgs_oracle(data, p):
    f = lambda b: np.mean(hqer_loss(p, data.y - data.X @ b))
    g = lambda b: -data.X.T @ score_kernel(p, data.y - data.X @ b) / data.n
    b0 = np.linalg.lstsq(data.X, data.y, rcond=None)[0]
    return optimize.minimize(f, b0, jac=g, method="L-BFGS-B",
                             options=dict(gtol=1e-12, ftol=1e-15, maxiter=5000)).x


def lp_quantile(data, tau):
    # min tau 1'u + (1 - tau) 1'v  s.t.  X b + u - v = y
    n, p = data.X.shape
    c = np.concatenate([np.zeros(p), tau * np.ones(n), (1 - tau) * np.ones(n)])
    A = np.hstack([data.X, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * p + [(0, None)] * (2 * n)
    return optimize.linprog(c, A_eq=A, b_eq=data.y, bounds=bounds, method="highs").x[:p]


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("tau,gamma", [(0.2, 0.1), (0.5, 0.5), (0.8, 0.9), (0.6, 0.3)])
def test_hqer_matches_generic_optimizer(seed, tau, gamma):
    data, _ = synthetic(seed, n=300, law=ErrorDistribution.student_t(3))
    p = LossParams(tau, gamma)
    res = fit_hqer(data, p)
    assert res.converged
    assert res.grad_norm <= 1e-8
    ref = lbfgs_oracle(data, p)
    # optimum is at least as good as the generic one
    assert np.mean(hqer_loss(p, data.y - data.X @ res.beta)) <= np.mean(hqer_loss(p, data.y - data.X @ ref)) + 1e-12
    # L-BFGS stalls near kinks, so only a loose coefficient bound is meaningful
    assert np.allclose(res.beta, ref, atol=5e-3)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("tau", [0.1, 0.5, 0.75])
def test_quantile_matches_lp(seed, tau):
    data, _ = synthetic(seed, n=150)
    res = fit_quantile(data, tau)
    ref = lp_quantile(data, tau)
    obj = lambda b: np.mean(pinball_loss(LossParams(tau, 0.0), data.y - data.X @ b))
    assert obj(res.beta) <= obj(ref) + 1e-10
    assert res.converged


def test_gamma_zero_delegates_to_quantile():
    data, _ = synthetic(1, n=200)
    a = fit_hqer(data, LossParams(0.3, 0.0))
    b = fit_quantile(data, 0.3)
    assert np.allclose(a.beta, b.beta)


def test_expectile_half_is_ols():
    data, _ = synthetic(2, n=500)
    ols = np.linalg.lstsq(data.X, data.y, rcond=None)[0]
    assert np.allclose(fit_expectile(data, 0.5).beta, ols, atol=1e-10)
    assert np.allclose(fit_hqer(data, LossParams(0.5, 1.0)).beta, ols, atol=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_kth_matches_generic(seed):
    data, _ = synthetic(seed, n=300)
    from hqer.loss import kth_loss
    p = LossParams(0.7, 1.0, 1.5)
    res = fit_kth_power(data, 0.7, 1.5)
    f = lambda b: np.mean(kth_loss(p, data.y - data.X @ b))
    ref = optimize.minimize(f, res.beta + 0.1, method="Nelder-Mead",
                            options=dict(xatol=1e-10, fatol=1e-14, maxiter=20000)).x
    assert f(res.beta) <= f(ref) + 1e-12
    assert res.converged


def test_line_search_variants_agree():
    data, _ = synthetic(5, n=2000)
    p = LossParams(0.3, 0.4)
    a = fit_hqer(data, p, SolverOptions(line_search="exact"))
    b = fit_hqer(data, p, SolverOptions(line_search="armijo"))
    assert np.allclose(a.beta, b.beta, atol=1e-7)


def test_fd_gradient_and_hessian():
    rng = make_rng(17)
    data, _ = synthetic(17, n=100)
    p = LossParams(0.35, 0.6)
    for _ in range(10):
        b = rng.standard_normal(data.p)
        h = 1e-6
        g = gradient(data, p, b)
        fd = np.array([(objective(data, p, b + h * e) - objective(data, p, b - h * e)) / (2 * h)
                       for e in np.eye(data.p)])
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-8)
        H = hessian(data, p, b)
        fdH = np.array([(gradient(data, p, b + h * e) - gradient(data, p, b - h * e)) / (2 * h)
                        for e in np.eye(data.p)])
        assert np.allclose(H, fdH.T, rtol=1e-5, atol=1e-7)


def test_constant_response():
    X = np.column_stack([np.ones(20), np.arange(20.0)])
    data = Dataset(np.full(20, 4.0), X)
    for g in (0.0, 0.3, 1.0):
        res = fit_hqer(data, LossParams(0.7, g))
        assert res.beta == pytest.approx([4.0, 0.0], abs=1e-10)


def test_p_alpha_near_tau_for_quantile():
    data, _ = synthetic(3, n=2000)
    res = fit_quantile(data, 0.8)
    assert abs(res.p_alpha - 0.8) <= (data.p + 1) / data.n


def test_warm_start_vector():
    data, beta = synthetic(4, n=300)
    res = fit_hqer(data, LossParams(0.5, 0.5), SolverOptions(init=beta))
    assert res.converged


def test_dispatch_and_errors():
    data, _ = synthetic(6, n=100)
    assert fit(data, "hqer", 0.5, gamma=0.2).method == "HQER"
    assert fit(data, "quantile", 0.5).method == "Quantile"
    assert fit(data, "expectile", 0.5).method == "Expectile"
    assert fit(data, "kth", 0.5, k=1.5).method == "KthPower"
    with pytest.raises(DomainError):
        fit(data, "kth", 0.5)
    with pytest.raises(DomainError):
        fit(data, "lasso", 0.5)
    with pytest.raises(DomainError):
        fit_hqer(data, LossParams(0.5), SolverOptions(init="bogus"))


def test_dataset_validation():
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    with pytest.raises(ModelError):
        Dataset(np.zeros(4), X)
    with pytest.raises(ModelError):
        Dataset(np.zeros(5), np.column_stack([X, 2 * X[:, 1]]))
    with pytest.raises(ModelError):
        Dataset(np.zeros(5), X[:, ::-1])
    with pytest.raises(ModelError):
        Dataset(np.array([0, 1, np.nan, 3, 4.0]), X)
    d = Dataset(np.zeros(5), X)
    assert d.feature_names == ("(Intercept)", "x1")
    assert not d.X.flags.writeable
