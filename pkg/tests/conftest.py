import numpy as np
import pytest

from hqer.dist import ErrorDistribution
from hqer.fit import Dataset
from hqer.rng import make_rng

LAWS = {
    "normal": ErrorDistribution.normal(),
    "t5": ErrorDistribution.student_t(5),
    "t3": ErrorDistribution.student_t(3),
    "chisq6": ErrorDistribution.chisq(6),
    "chisq6std": ErrorDistribution.chisq(6, standardized=True),
    "exp1": ErrorDistribution.exponential(1.0),
    "unif": ErrorDistribution.uniform(0.0, 1.0),
}


@pytest.fixture(params=sorted(LAWS))
def law(request):
    return LAWS[request.param]


def synthetic(seed, n=400, p=3, law=None, heavy=False):
    """Random design with intercept and errors from ``law``."""
    rng = make_rng(seed)
    Z = rng.standard_normal((n, p - 1))
    beta = rng.uniform(-2, 2, p)
    law = law or ErrorDistribution.normal()
    e = law.sample(n, rng=rng)
    X = np.column_stack([np.ones(n), Z])
    return Dataset(X @ beta + e, X), beta
