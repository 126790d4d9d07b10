import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from hqer.dist import ErrorDistribution
from hqer.errors import DomainError
from hqer.expectile import (
    empirical_expectile,
    fixed_point_map,
    inverse_expectile,
    kth_expectile,
    kth_level,
    match_quantile_level,
    population_expectile,
)
from hqer.loss import LossParams, hqer_loss, kth_loss
from hqer.rng import make_rng

from conftest import LAWS

N = ErrorDistribution.normal()


def expected_loss_min(params, law, lossf=hqer_loss):
    """Oracle: minimize E[C(Y - t)] numerically over t."""
    lo, hi = law.quantile(1e-9), law.quantile(1 - 1e-9)

    def risk(t):
        f = lambda y: lossf(params, y - t) * float(law.density(y))
        pts = sorted({lo, t, hi} if lo < t < hi else {lo, hi})
        return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
                   for a, b in zip(pts[:-1], pts[1:]))

    return optimize.minimize_scalar(risk, bracket=(law.quantile(0.2), law.quantile(0.8)),
                                     options={"xtol": 1e-12}).x


@pytest.mark.parametrize("name", ["normal", "t5", "exp1", "unif", "chisq6"])
@pytest.mark.parametrize("tau,gamma", [(0.2, 0.3), (0.7, 0.5), (0.9, 0.9)])
def test_population_expectile_minimizes_risk(name, tau, gamma):
    law = LAWS[name]
    p = LossParams(tau, gamma)
    assert population_expectile(p, law) == pytest.approx(expected_loss_min(p, law), abs=1e-5)


def test_classical_expectile_closed_form_uniform():
    # tau-expectile of U(0,1): solves tau (1-t)^2 = (1-tau) t^2
    for tau in (0.1, 0.5, 0.8):
        r = np.sqrt(tau / (1 - tau))
        assert population_expectile(LossParams(tau, 1.0), ErrorDistribution.uniform()) \
            == pytest.approx(r / (1 + r), abs=1e-12)


def test_gamma_zero_is_quantile():
    assert population_expectile(LossParams(0.3, 0.0), N) == pytest.approx(N.quantile(0.3))


def test_symmetric_median():
    for g in (0.1, 0.5, 0.9):
        assert population_expectile(LossParams(0.5, g), N) == pytest.approx(0.0, abs=1e-12)


def test_tau_0112_gives_correct_expectile_not_legacy_quantile():
    # the corrected tau-gamma expectile at tau = 0.112 is not the 0.25-quantile
    val = population_expectile(LossParams(0.112, 0.5), N)
    assert val == pytest.approx(expected_loss_min(LossParams(0.112, 0.5), N), abs=1e-6)
    assert abs(val - N.quantile(0.25)) > 0.2


@given(tau=st.floats(0.02, 0.98), gamma=st.floats(0.05, 1.0), name=st.sampled_from(["normal", "t5", "exp1"]))
@settings(max_examples=60, deadline=None)
def test_inverse_round_trip(tau, gamma, name):
    law = LAWS[name]
    p = LossParams(tau, gamma)
    assert inverse_expectile(p, law, population_expectile(p, law)) == pytest.approx(tau, abs=1e-9)


@given(t1=st.floats(0.02, 0.97), dt=st.floats(0.005, 0.02), gamma=st.floats(0.05, 1.0))
@settings(max_examples=60, deadline=None)
def test_expectile_monotone_in_tau(t1, dt, gamma):
    a = population_expectile(LossParams(t1, gamma), N)
    b = population_expectile(LossParams(t1 + dt, gamma), N)
    assert b > a


def test_literal_inverse_table_values():
    lit = [inverse_expectile(LossParams(0.5, 0.5), N, N.quantile(a), literal=True) for a in (0.03, 0.12, 0.25)]
    assert lit == pytest.approx([0.0062, 0.0386, 0.1121], abs=5e-5)


def test_kth_level_against_bisection():
    law = N
    for k in (1.3, 1.7):
        s = 0.4
        tau = kth_level(k, law, s)

        def g(t):
            return kth_expectile(LossParams(t, 1.0, k), law) - s

        ref = optimize.bisect(g, 0.3, 0.95, xtol=1e-11)
        assert tau == pytest.approx(ref, abs=1e-9)


def test_kth_expectile_minimizes_risk():
    p = LossParams(0.8, 1.0, 1.5)
    assert kth_expectile(p, N) == pytest.approx(expected_loss_min(p, N, kth_loss), abs=1e-5)


def test_kth_two_is_expectile():
    assert kth_expectile(LossParams(0.8, 1.0, 2.0), N) == pytest.approx(
        population_expectile(LossParams(0.8, 1.0), N), abs=1e-10)


def test_match_quantile_level():
    lvl = match_quantile_level(LossParams(0.5, 0.5), N, 0.7)
    assert population_expectile(LossParams(lvl.tau, 0.5), N) == pytest.approx(N.quantile(0.7), abs=1e-10)
    assert match_quantile_level(LossParams(0.5, 0.0), N, 0.7).tau == 0.7
    kl = match_quantile_level(LossParams(0.5, 1.0, 1.5), N, 0.7)
    assert kth_expectile(LossParams(kl.tau, 1.0, 1.5), N) == pytest.approx(N.quantile(0.7), abs=1e-9)
    with pytest.raises(DomainError):
        match_quantile_level(LossParams(0.5, 0.5), N, 1.0)


def _emp_oracle(p, y):
    return optimize.minimize_scalar(lambda t: np.mean(hqer_loss(p, y - t)),
                                    bounds=(y.min(), y.max()), method="bounded",
                                    options={"xatol": 1e-12}).x


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("tau,gamma", [(0.3, 0.2), (0.7, 0.5), (0.9, 1.0)])
def test_empirical_expectile_minimizes(seed, tau, gamma):
    y = make_rng(seed).standard_normal(200)
    p = LossParams(tau, gamma)
    t = empirical_expectile(p, y)
    ref = _emp_oracle(p, y)
    assert np.mean(hqer_loss(p, y - t)) <= np.mean(hqer_loss(p, y - ref)) + 1e-13
    assert t == pytest.approx(ref, abs=1e-6)


def test_empirical_expectile_large_sample_near_population():
    y = N.sample(200000, seed=3)
    p = LossParams(0.7, 0.5)
    assert empirical_expectile(p, y) == pytest.approx(population_expectile(p, N), abs=0.01)


def test_empirical_expectile_quantile_case():
    y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    assert empirical_expectile(LossParams(0.5, 0.0), y) == 3.0


def test_fixed_point_between_data():
    y = make_rng(9).standard_normal(301)
    p = LossParams(0.65, 0.6)
    t = empirical_expectile(p, y)
    if not np.any(np.abs(y - t) < 1e-12):
        assert fixed_point_map(p, y, t) == pytest.approx(t, abs=1e-10)


def test_empirical_rejects():
    with pytest.raises(DomainError):
        empirical_expectile(LossParams(0.5), [])
    with pytest.raises(DomainError):
        empirical_expectile(LossParams(0.5), [1.0, np.nan])
