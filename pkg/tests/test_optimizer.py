from __future__ import annotations

import math

import numpy as np
import pytest

from latentdx.likelihood import LikelihoodOptions, total_loglik
from latentdx.model import REFERENCE_VALUES, inverse_transform
from latentdx.optimizer import (
    OptimizerOptions,
    SingularMatrixError,
    _bounded_step,
    fit,
    lift_start,
    marquardt_maximize,
    maximize,
    rvs_maximize,
    standard_errors,
    with_fixed,
)

from .oracles import golden_section_max, surrogate_cohort, surrogate_loglik, surrogate_spec


class GaussianMean:
    """Log-likelihood of unit-variance normal data with unknown mean vector;
    ``combine`` maps parameters to the mean (identity by default)."""

    def __init__(self, x, combine=None):
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.combine = combine if combine is not None else np.eye(self.x.shape[1])
        self.names = tuple(f"m{j}" for j in range(self.combine.shape[1]))

    def _resid(self, u):
        return self.x - self.combine @ u

    def loglik(self, u):
        return -0.5 * float(np.sum(self._resid(u) ** 2))

    def scores(self, u):
        return self._resid(u) @ self.combine

    def hessian(self, u):
        return -self.x.shape[0] * self.combine.T @ self.combine

    def jacobian(self, u):
        return np.ones(self.combine.shape[1])


def standardized(rng, n, p):
    x = rng.normal(size=(n, p))
    x = (x - x.mean(axis=0)) / x.std(axis=0)
    return x + np.arange(p)


def test_rvs_gaussian_mean():
    x = standardized(np.random.default_rng(0), 200, 3)
    res = rvs_maximize(GaussianMean(x), np.zeros(3), OptimizerOptions(tol=1e-10))
    assert res.converged and res.iterations <= 15
    assert np.allclose(res.u, x.mean(axis=0), atol=1e-6)
    xc = x - x.mean(axis=0)
    assert np.allclose(res.std_errors, np.sqrt(np.diag(np.linalg.inv(xc.T @ xc))), rtol=1e-6)


def test_marquardt_gaussian_mean_is_one_newton_step():
    x = standardized(np.random.default_rng(1), 50, 2)
    res = marquardt_maximize(GaussianMean(x), np.array([3.0, -2.0]), OptimizerOptions(tol=1e-12))
    assert res.converged and res.iterations <= 3
    assert np.allclose(res.u, x.mean(axis=0), atol=1e-9)


def test_loglik_never_decreases_along_trace():
    x = standardized(np.random.default_rng(2), 80, 2)
    res = rvs_maximize(GaussianMean(x), np.array([10.0, -10.0]), OptimizerOptions(tol=1e-8))
    ll = [row["loglik"] for row in res.trace]
    assert all(b >= a for a, b in zip(ll, ll[1:]))


def test_non_identifiable_sum_reports_null_direction():
    rng = np.random.default_rng(3)
    x = rng.normal(1.0, 1.0, size=(100, 1))
    obj = GaussianMean(x, combine=np.array([[1.0, 1.0]]))
    res = rvs_maximize(obj, np.zeros(2), OptimizerOptions(tol=1e-8))
    assert np.all(np.isnan(res.std_errors))
    assert "singular" in res.message and "m0" in res.message and "m1" in res.message
    assert res.u.sum() == pytest.approx(x.mean(), abs=1e-4)


def test_standard_errors_identity():
    assert np.array_equal(standard_errors(np.eye(3), np.ones(3)), np.ones(3))
    assert np.allclose(standard_errors(4 * np.eye(2), np.array([2.0, 0.5])), [1.0, 0.25])


def test_standard_errors_singular_lists_directions():
    G = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    with pytest.raises(SingularMatrixError) as info:
        standard_errors(G, np.ones(3), ["a", "b", "c"])
    (direction,) = info.value.null_directions
    assert set(direction) == {"a", "b"}
    assert direction["a"] == pytest.approx(-direction["b"])


def test_bounded_step_limits_length_and_ascends():
    A = np.diag([100.0, 1e-6])
    g = np.array([1.0, 1.0])
    d = np.linalg.solve(A, g)
    step = _bounded_step(A, g, d, 5.0)
    assert np.max(np.abs(step)) <= 5.0
    assert step @ g > 0
    # the well-determined coordinate keeps nearly its Newton value
    assert step[0] == pytest.approx(d[0], rel=1e-2)
    assert _bounded_step(A, g, np.array([1.0, 2.0]), 5.0).tolist() == [1.0, 2.0]


def test_options_reject_unknown_algorithm():
    with pytest.raises(ValueError):
        OptimizerOptions(algorithm="bfgs")


def test_auto_keeps_converged_rvs():
    x = standardized(np.random.default_rng(4), 60, 1)
    res = maximize(GaussianMean(x), np.zeros(1), OptimizerOptions(algorithm="auto", tol=1e-8))
    assert res.algorithm == "rvs" and res.converged


def test_auto_falls_back_to_marquardt():
    x = standardized(np.random.default_rng(5), 60, 1)
    obj = GaussianMean(x)
    start = np.array([50.0])
    res = maximize(obj, start, OptimizerOptions(algorithm="auto", max_iter=1, tol=1e-8))
    assert res.algorithm == "rvs+marquardt"
    assert res.iterations == 2 and len(res.trace) == 2
    assert res.loglik > obj.loglik(start)


# ---------------------------------------------------------------------------
# surrogate model with a closed-form likelihood


@pytest.fixture(scope="module")
def surrogate():
    spec = surrogate_spec()
    cohort = surrogate_cohort(300, seed=5)
    best = golden_section_max(lambda b: surrogate_loglik(b, cohort), -5.0, 5.0, tol=1e-10)
    return spec, cohort, best


@pytest.mark.parametrize("algorithm", ["rvs", "marquardt"])
def test_surrogate_matches_golden_section(surrogate, algorithm):
    spec, cohort, best = surrogate
    res = fit(spec, cohort, spec.parameters({"beta1": -1.0}), LikelihoodOptions(),
              OptimizerOptions(algorithm=algorithm, tol=1e-9))
    assert res.converged
    assert res.estimate("beta1") == pytest.approx(best, abs=1e-4)
    assert res.loglik == pytest.approx(surrogate_loglik(best, cohort), abs=1e-7)


def test_surrogate_rvs_standard_error_matches_observed_information(surrogate):
    spec, cohort, best = surrogate
    res = fit(spec, cohort, spec.parameters({"beta1": best}), LikelihoodOptions(),
              OptimizerOptions(tol=1e-9))
    h = 1e-4
    info = -(surrogate_loglik(best + h, cohort) - 2 * surrogate_loglik(best, cohort)
             + surrogate_loglik(best - h, cohort)) / h**2
    # score variance and observed information agree to sampling accuracy
    assert res.std_error("beta1") == pytest.approx(1 / math.sqrt(info), rel=0.2)


# ---------------------------------------------------------------------------
# full model, reduced to a few free parameters


def test_reduced_fit_from_truth(spec, truth, small_cohort):
    free = {"beta1", "beta5", "sigma_eps2"}
    reduced = with_fixed(spec, **{n: REFERENCE_VALUES[n] for n in spec.free_names if n not in free})
    opts = LikelihoodOptions(target_error=1e-3)
    start = reduced.parameters({n: REFERENCE_VALUES[n] for n in free})
    res = fit(reduced, small_cohort, start, opts, OptimizerOptions(max_iter=40))
    assert res.converged
    assert res.loglik >= total_loglik(reduced, start, small_cohort, opts)
    assert np.all(np.isfinite(res.std_errors)) and np.all(res.std_errors > 0)


def test_lift_start_only_touches_small_positive_parameters(spec, truth):
    lifted = lift_start(spec, truth.replace(sigma_a1=1e-5), 1e-2)
    assert lifted["sigma_a1"] == 1e-2
    assert np.array_equal(np.delete(inverse_transform(spec, lifted), spec.free_names.index("sigma_a1")),
                          np.delete(inverse_transform(spec, truth), spec.free_names.index("sigma_a1")))
