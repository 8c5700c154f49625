"""Likelihood maximization: robust-variance scoring with a Marquardt fallback.

Both algorithms work on the unconstrained scale of the free parameters and
talk to the model through an objective exposing ``loglik(u)``,
``scores(u)`` (per-subject score rows) and ``hessian(u)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import likelihood as lk
from .model import (
    ModelSpec,
    Parameters,
    inverse_transform,
    transform_jacobian,
    transform_parameters,
)

log = logging.getLogger(__name__)


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, message, null_directions=None):
        super().__init__(message)
        self.null_directions = null_directions or []


@dataclass(frozen=True)
class OptimizerOptions:
    tol: float = 1e-4
    max_iter: int = 200
    max_halvings: int = 20
    max_step: float = 5.0
    algorithm: str = "rvs"  # "rvs", "marquardt" or "auto" (rvs, then marquardt)
    hessian_step: float = 1e-3
    # Positive parameters start no lower than this: on the log scale the score
    # of a standard deviation vanishes like its square near zero.
    start_floor: float = 1e-2

    def __post_init__(self):
        if self.algorithm not in ("rvs", "marquardt", "auto"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class FitResult:
    params: Parameters | None
    u: np.ndarray
    names: tuple[str, ...]
    loglik: float
    score: np.ndarray
    score_var: np.ndarray
    std_errors: np.ndarray
    iterations: int
    converged: bool
    criterion: float
    algorithm: str
    message: str = ""
    trace: list[dict] = field(default_factory=list)

    def std_error(self, name: str) -> float:
        return float(self.std_errors[self.names.index(name)])

    def estimate(self, name: str) -> float:
        if self.params is not None:
            return self.params[name]
        return float(self.u[self.names.index(name)])


# ---------------------------------------------------------------------------
# objectives


class LikelihoodObjective:
    """Total log-likelihood of a cohort as a function of unconstrained ``u``."""

    def __init__(self, spec: ModelSpec, cohort, opts: lk.LikelihoodOptions | None = None,
                 hessian_step: float = 1e-3):
        self.spec = spec
        self.cohort = lk.ordered(cohort)
        self.opts = opts or lk.LikelihoodOptions()
        self.hessian_step = hessian_step
        self.names = spec.free_names

    def params(self, u) -> Parameters:
        return transform_parameters(self.spec, u)

    def u_of(self, params: Parameters) -> np.ndarray:
        return inverse_transform(self.spec, params)

    def jacobian(self, u) -> np.ndarray:
        return transform_jacobian(self.spec, u)

    def loglik(self, u) -> float:
        return lk.total_loglik(self.spec, self.params(u), self.cohort, self.opts)

    def scores(self, u) -> np.ndarray:
        return lk.score_by_subject(self.spec, self.params(u), self.cohort, self.opts)

    def hessian(self, u) -> np.ndarray:
        return lk.loglik_hessian(self.spec, u, self.cohort, self.opts, self.hessian_step)


def _safe_loglik(objective, u) -> float:
    try:
        val = objective.loglik(u)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.debug("log-likelihood failed at trial point: %s", exc)
        return -math.inf
    return val if math.isfinite(val) else -math.inf


# ---------------------------------------------------------------------------
# linear algebra helpers


def _solve_regularized(G: np.ndarray, U: np.ndarray):
    """Solve ``G d = U``, adding ``lam * I`` with growing ``lam`` if needed."""
    p = G.shape[0]
    scale = max(float(np.trace(G)) / p, 1e-300)
    lam = 0.0
    for _ in range(30):
        A = G + lam * np.eye(p)
        try:
            c = np.linalg.cholesky(A)
            if np.min(np.diag(c)) ** 2 > 1e-13 * scale:
                d = np.linalg.solve(A, U)
                if np.all(np.isfinite(d)):
                    return d, lam
        except np.linalg.LinAlgError:
            pass
        lam = 1e-10 * scale if lam == 0.0 else lam * 10.0
    raise SingularMatrixError("score variance matrix could not be regularized")


def standard_errors(G, jacobian, names=None) -> np.ndarray:
    """Delta-method standard errors on the natural scale from the score
    variance ``G`` (unconstrained scale) and the transform's Jacobian
    diagonal."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    J = np.asarray(jacobian, dtype=float).reshape(-1)
    p = G.shape[0]
    names = list(names) if names is not None else [f"p{j}" for j in range(p)]
    w, v = np.linalg.eigh((G + G.T) / 2.0)
    top = max(float(np.max(np.abs(w))), 1e-300)
    null = np.flatnonzero(w <= 1e-12 * top)
    if null.size:
        dirs = []
        for i in null:
            vec = v[:, i]
            order = np.argsort(-np.abs(vec))[:3]
            dirs.append({names[j]: float(vec[j]) for j in order if abs(vec[j]) > 1e-3})
        raise SingularMatrixError(f"score variance matrix is singular; null directions {dirs}", dirs)
    cov = (v / w) @ v.T
    return np.abs(J) * np.sqrt(np.diag(cov))


def _finish(objective, u, ll, U, G, it, converged, crit, algorithm, message, trace):
    names = tuple(objective.names)
    try:
        se = standard_errors(G, objective.jacobian(u), names)
    except SingularMatrixError as exc:
        message = (message + "; " if message else "") + str(exc)
        se = np.full(len(names), np.nan)
    params = objective.params(u) if hasattr(objective, "params") else None
    return FitResult(params, u, names, ll, U, G, se, it, converged, crit, algorithm, message, trace)


def _bounded_step(A: np.ndarray, g: np.ndarray, d: np.ndarray, max_step: float) -> np.ndarray:
    """Shrink an over-long step by solving ``(A + mu I) d = g`` with the
    smallest ``mu`` (on a factor-two grid) giving ``max|d| <= max_step``.

    Coordinates the curvature pins down barely move while poorly determined
    ones are held back, and ``d`` stays an ascent direction.
    """
    if not d.size or float(np.max(np.abs(d))) <= max_step:
        return d
    p = A.shape[0]
    mu = max(float(np.trace(A)) / p, 1e-300) * 1e-8
    eye = np.eye(p)
    for _ in range(400):
        try:
            step = np.linalg.solve(A + mu * eye, g)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and np.all(np.isfinite(step)) and np.max(np.abs(step)) <= max_step:
            return step
        mu *= 2.0
    return d * (max_step / float(np.max(np.abs(d))))


# ---------------------------------------------------------------------------
# robust-variance scoring


def rvs_maximize(objective, u0, opts: OptimizerOptions | None = None) -> FitResult:
    """Newton-like ascent with the Hessian replaced by ``G = sum_i U_i U_i^T``.

    Stops when ``U^T G^{-1} U / p < tol``. Steps are halved until the
    log-likelihood does not decrease.
    """
    opts = opts or OptimizerOptions()
    u = np.asarray(u0, dtype=float).copy()
    p = u.size
    ll = _safe_loglik(objective, u)
    if not math.isfinite(ll):
        raise lk.LikelihoodError("log-likelihood is not finite at the starting point")
    trace: list[dict] = []
    crit = math.inf
    converged = False
    message = ""
    U = np.zeros(p)
    G = np.zeros((p, p))
    it = 0
    while True:
        S = objective.scores(u)
        U = S.sum(axis=0)
        G = S.T @ S
        d, lam = _solve_regularized(G, U)
        crit = float(U @ d) / p
        if crit < opts.tol:
            converged = True
            trace.append(dict(iteration=it, loglik=ll, step=0.0, criterion=crit, regularization=lam))
            break
        if it >= opts.max_iter:
            message = f"no convergence after {it} iterations"
            break
        it += 1
        d = _bounded_step(G + lam * np.eye(p), U, d, opts.max_step)
        rho = 1.0
        accepted = False
        for _ in range(opts.max_halvings + 1):
            cand = u + rho * d
            ll_c = _safe_loglik(objective, cand)
            if ll_c >= ll:
                accepted = True
                break
            rho /= 2.0
        trace.append(dict(iteration=it, loglik=ll_c if accepted else ll, step=rho if accepted else 0.0,
                          criterion=crit, regularization=lam))
        log.info("rvs iteration %d: loglik %.6f step %.4g criterion %.3g", it, ll_c if accepted else ll,
                 rho, crit)
        if not accepted:
            message = "line search exhausted its halvings"
            break
        u, ll = cand, ll_c
    return _finish(objective, u, ll, U, G, it, converged, crit, "rvs", message, trace)


# ---------------------------------------------------------------------------
# Marquardt


def marquardt_maximize(objective, u0, opts: OptimizerOptions | None = None) -> FitResult:
    """Levenberg-Marquardt damped Newton ascent on the finite-difference
    Hessian; same stopping quantity as RVS with ``-H`` in place of ``G``."""
    opts = opts or OptimizerOptions()
    u = np.asarray(u0, dtype=float).copy()
    p = u.size
    ll = _safe_loglik(objective, u)
    if not math.isfinite(ll):
        raise lk.LikelihoodError("log-likelihood is not finite at the starting point")
    trace: list[dict] = []
    lam = 1e-3
    crit = math.inf
    converged = False
    message = ""
    it = 0
    while True:
        S = objective.scores(u)
        g = S.sum(axis=0)
        A = -objective.hessian(u)
        A = (A + A.T) / 2.0
        try:
            crit = float(g @ np.linalg.solve(A, g)) / p
            definite = np.all(np.linalg.eigvalsh(A) > 0)
        except np.linalg.LinAlgError:
            crit, definite = math.inf, False
        if definite and 0 <= crit < opts.tol:
            converged = True
            trace.append(dict(iteration=it, loglik=ll, step=0.0, criterion=crit, damping=lam))
            break
        if it >= opts.max_iter:
            message = f"no convergence after {it} iterations"
            break
        it += 1
        diag = np.maximum(np.abs(np.diag(A)), 1e-12)
        accepted = False
        for _ in range(opts.max_halvings + 1):
            M = A + lam * np.diag(diag)
            try:
                d = np.linalg.solve(M, g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            d = _bounded_step(M, g, d, opts.max_step)
            cand = u + d
            ll_c = _safe_loglik(objective, cand)
            if ll_c >= ll and np.all(np.linalg.eigvalsh(M) > 0):
                accepted = True
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
        trace.append(dict(iteration=it, loglik=ll_c if accepted else ll, step=1.0 if accepted else 0.0,
                          criterion=crit, damping=lam))
        log.info("marquardt iteration %d: loglik %.6f criterion %.3g damping %.3g", it, ll, crit, lam)
        if not accepted:
            message = "damping search failed to find an ascent step"
            break
        u, ll = cand, ll_c
    S = objective.scores(u)
    U = S.sum(axis=0)
    G = S.T @ S
    return _finish(objective, u, ll, U, G, it, converged, crit, "marquardt", message, trace)


# ---------------------------------------------------------------------------
# model-level entry point


def maximize(objective, u0, opts: OptimizerOptions | None = None) -> FitResult:
    """Run the configured algorithm; with ``auto``, Marquardt resumes from the
    RVS result when RVS does not converge."""
    opts = opts or OptimizerOptions()
    if opts.algorithm == "rvs":
        return rvs_maximize(objective, u0, opts)
    if opts.algorithm == "marquardt":
        return marquardt_maximize(objective, u0, opts)
    first = rvs_maximize(objective, u0, opts)
    if first.converged:
        return first
    log.warning("RVS did not converge (%s); continuing with Marquardt", first.message)
    second = marquardt_maximize(objective, first.u, opts)
    second.iterations += first.iterations
    second.trace = first.trace + second.trace
    second.algorithm = "rvs+marquardt"
    return second


def fit(spec: ModelSpec, cohort, init: Parameters, lik_opts: lk.LikelihoodOptions | None = None,
        opts: OptimizerOptions | None = None) -> FitResult:
    opts = opts or OptimizerOptions()
    objective = LikelihoodObjective(spec, cohort, lik_opts, opts.hessian_step)
    return maximize(objective, objective.u_of(lift_start(spec, init, opts.start_floor)), opts)


def lift_start(spec: ModelSpec, init: Parameters, floor: float) -> Parameters:
    """Raise free positive parameters below ``floor`` up to it."""
    free = set(spec.free_names)
    lifted = {n: floor for n in spec.positive_names if n in free and init[n] < floor}
    return init.replace(**lifted) if lifted else init


def with_fixed(spec: ModelSpec, **values: float) -> ModelSpec:
    """Copy of ``spec`` with additional parameters held fixed."""
    fixed = dict(spec.fixed)
    fixed.update(values)
    return replace(spec, fixed=fixed)
