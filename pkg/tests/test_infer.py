import numpy as np
import pytest

from hqer.errors import DomainError
from hqer.fit import Dataset, fit_hqer
from hqer.infer import bootstrap_cov, residual_proportion, score_vector, select_gamma
from hqer.loss import LossParams
from hqer.rng import make_rng

from conftest import synthetic


def shift_data(seed, n=2000):
    r = make_rng(seed)
    x = r.uniform(0, 1, n)
    e = r.standard_normal(n)
    return Dataset.from_features(15 + 90 * x + e, x)


def test_score_vector_vanishes_at_fit():
    data, _ = synthetic(0, n=500)
    p = LossParams(0.4, 0.3)
    res = fit_hqer(data, p)
    assert np.linalg.norm(score_vector(data, p, res.beta)) <= 1e-8


def test_select_gamma_deterministic_and_order_free():
    data = shift_data(1)
    grid = [0.2, 0.5, 0.8]
    a = select_gamma(data, 0.6, grid, seed=3)
    b = select_gamma(data, 0.6, grid, seed=3)
    assert a.as_dict() == b.as_dict()
    perm = make_rng(99).permutation(data.n)
    c = select_gamma(data.subset(perm), 0.6, grid, seed=3)
    assert c.chosen_gamma == a.chosen_gamma
    assert np.allclose(c.scores, a.scores, rtol=1e-8)
    assert a.split == (1600, 400)
    assert a.chosen_gamma == grid[int(np.nanargmin(a.scores))]


def test_select_gamma_repeats_and_workers():
    data = shift_data(2, n=800)
    a = select_gamma(data, 0.3, [0.3, 0.7], seed=5, repeats=3, workers=1)
    b = select_gamma(data, 0.3, [0.3, 0.7], seed=5, repeats=3, workers=2)
    assert a.scores == b.scores
    assert a.repeats == 3


def test_select_gamma_tie_goes_to_smaller(monkeypatch):
    import hqer.infer as inf
    data = shift_data(3, n=300)
    monkeypatch.setattr(inf, "score_vector", lambda d, p, b: np.ones(2))
    rep = select_gamma(data, 0.5, [0.7, 0.2, 0.4], seed=1)
    assert rep.chosen_gamma == 0.2


@pytest.mark.parametrize("kw", [dict(seed=None), dict(grid=[]), dict(grid=[0.0, 0.5]), dict(split_frac=1.0)])
def test_select_gamma_rejects(kw):
    data = shift_data(4, n=200)
    args = dict(grid=[0.5], seed=1)
    args.update(kw)
    with pytest.raises(DomainError):
        select_gamma(data, 0.5, **args)


def test_bootstrap_reproducible_and_sane():
    data = shift_data(5, n=1000)
    p = LossParams(0.7, 0.5)
    a = bootstrap_cov(data, p, 60, seed=8)
    b = bootstrap_cov(data, p, 60, seed=8, workers=3)
    assert np.array_equal(a.cov, b.cov)
    assert a.cov.shape == (2, 2)
    assert np.all(np.linalg.eigvalsh(a.cov) > 0)
    assert a.failures == 0 and not a.flagged
    assert np.allclose(a.se, np.sqrt(np.diag(a.cov)))


def test_bootstrap_rejects():
    data = shift_data(6, n=200)
    with pytest.raises(DomainError):
        bootstrap_cov(data, LossParams(0.5), 10, seed=1)
    with pytest.raises(DomainError):
        bootstrap_cov(data, LossParams(0.5), 100, seed=None)


def test_residual_proportion():
    data = shift_data(7, n=3000)
    res = fit_hqer(data, LossParams(0.8, 0.0))
    assert residual_proportion(res) == pytest.approx(0.8, abs=1e-3)
