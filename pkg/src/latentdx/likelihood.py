"""Left-truncated log-likelihood of a cohort and its per-subject scores.

Each subject contributes ``log P(Theta_i in C_i) - log P(first diagnosis
negative)``. Orthant probabilities of dimension three and more come from the
lattice integrator; its random shifts are seeded per subject from
``(base_seed, subject id)`` only, so the likelihood surface is a fixed,
smooth function of the parameters.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import log_ndtr

from . import mvn
from .model import (
    ModelSpec,
    Parameters,
    SubjectRecord,
    covariance_matrix,
    inverse_transform,
    mean_vector,
    observation_box,
    transform_parameters,
    validate_subject,
)

log = logging.getLogger(__name__)

MIN_PROB = 1e-300


class LikelihoodError(RuntimeError):
    pass


@dataclass(frozen=True)
class LikelihoodOptions:
    """Integrator and differentiation settings.

    ``target_error`` bounds the standard error of each subject's
    log-likelihood, i.e. the relative error of its orthant probability.
    """

    target_error: float = 1e-4
    # tolerance that picks the lattice size for finite-difference scores;
    # common random numbers keep their noise well below this
    score_target_error: float = 1e-3
    max_samples: int = mvn.DEFAULT_MAX_SAMPLES
    base_seed: int = 0
    fd_step: float = 1e-4
    n_shifts: int = mvn.DEFAULT_SHIFTS
    first_level: int = 7
    workers: int = 1

    def __post_init__(self):
        if not (self.target_error > 0 and self.score_target_error > 0):
            raise ValueError("integration tolerances must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.n_shifts < 2:
            raise ValueError("need at least two random shifts")


def subject_seed(base_seed: int, subject_id: str) -> int:
    digest = hashlib.blake2b(f"{int(base_seed)}:{subject_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SubjectLoglik:
    id: str
    loglik: float
    log_prob: float
    log_truncation: float
    error: float
    dim: int
    level: int | None
    underflow: bool


# ---------------------------------------------------------------------------
# single subject


def truncation_prob(spec: ModelSpec, params: Parameters, subject: SubjectRecord) -> float:
    """Probability of a negative first-visit diagnosis (closed form)."""
    return math.exp(log_truncation_prob(spec, params, subject))


def log_truncation_prob(spec: ModelSpec, params: Parameters, subject: SubjectRecord) -> float:
    mu, var = _first_moments(spec, params, subject)
    eta = params[spec.test_param(0, "threshold")]
    return float(log_ndtr((mu - eta) / math.sqrt(var)))


def _first_moments(spec, params, subject):
    first = SubjectRecord(subject.id, subject.visit_times[:1],
                          subject.observations[:, :1], subject.covariates)
    mu = mean_vector(spec, params, first)[0]
    var = covariance_matrix(spec, params, first)[0, 0]
    return float(mu), float(var)


def _reduced_problem(spec, params, subject):
    """Mean, covariance and bounds restricted to the observed axes."""
    mu = mean_vector(spec, params, subject)
    cov = covariance_matrix(spec, params, subject)
    box = observation_box(spec, params, subject)
    keep = np.flatnonzero(np.isfinite(box.lower) | np.isfinite(box.upper))
    return mu[keep], cov[np.ix_(keep, keep)], box.lower[keep], box.upper[keep]


def _closed_form_logprob(mu, cov, lo, hi) -> float:
    d = mu.size
    if d == 0:
        return 0.0
    sd = np.sqrt(np.diag(cov))
    a = (lo - mu) / sd
    b = (hi - mu) / sd
    if d == 1:
        p = float(mvn.interval_prob(a[0], b[0]))
    else:
        p = mvn.bvn_rectangle(a, b, float(cov[0, 1] / (sd[0] * sd[1])))
    return math.log(p) if p > MIN_PROB else -math.inf


def _adaptive_logprob(mu, cov, lo, hi, seed, opts: LikelihoodOptions):
    """QMC estimate of log P with its standard error, lattice level and ordering."""
    a = lo - mu
    b = hi - mu
    perm, L = mvn.reorder_and_factor(cov, mvn.OrthantBox(a, b))
    ap, bp = a[perm][None], b[perm][None]
    level = opts.first_level
    while True:
        est, err = mvn.lattice_estimate(L[None], ap, bp, seed, level, opts.n_shifts)
        p, e = float(est[0]), float(err[0])
        # a vanishing estimate is an underflow that refinement cannot cure
        if not p > MIN_PROB or e <= opts.target_error * p:
            break
        if mvn.lattice_size(level + 1) > opts.max_samples:
            break
        level += 1
    if not p > MIN_PROB:
        return -math.inf, math.inf, level, perm
    return math.log(p), e / p, level, perm


def log_box_prob(mu, cov, lower, upper, seed: int, opts: LikelihoodOptions):
    """``log P(lower <= X <= upper)`` for ``X ~ N(mu, cov)`` and its relative
    standard error; axes unbounded on both sides are dropped first."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    keep = np.flatnonzero(np.isfinite(lower) | np.isfinite(upper))
    mu = np.asarray(mu, dtype=float)[keep]
    cov = np.asarray(cov, dtype=float)[np.ix_(keep, keep)]
    lower, upper = lower[keep], upper[keep]
    if keep.size >= 1:
        mvn.check_condition(cov)
    if keep.size <= 2:
        return _closed_form_logprob(mu, cov, lower, upper), 0.0
    log_p, err, _, _ = _adaptive_logprob(mu, cov, lower, upper, seed, opts)
    return log_p, err


def subject_details(
    spec: ModelSpec, params: Parameters, subject: SubjectRecord, opts: LikelihoodOptions
) -> SubjectLoglik:
    validate_subject(spec, subject)
    mu, cov, lo, hi = _reduced_problem(spec, params, subject)
    d = mu.size
    level = None
    err = 0.0
    if d >= 1:
        mvn.check_condition(cov)
    if d <= 2:
        log_p = _closed_form_logprob(mu, cov, lo, hi)
    else:
        seed = subject_seed(opts.base_seed, subject.id)
        log_p, err, level, _ = _adaptive_logprob(mu, cov, lo, hi, seed, opts)
    log_t = log_truncation_prob(spec, params, subject) if spec.entry_truncation else 0.0
    underflow = not math.isfinite(log_p) or not math.isfinite(log_t)
    if underflow:
        log.warning("subject %s: probability underflow (log P = %s)", subject.id, log_p)
        ll = -math.inf
    else:
        ll = log_p - log_t
    return SubjectLoglik(subject.id, ll, log_p, log_t, err, d, level, underflow)


def subject_loglik(spec, params, subject, opts: LikelihoodOptions | None = None) -> float:
    return subject_details(spec, params, subject, opts or LikelihoodOptions()).loglik


# ---------------------------------------------------------------------------
# cohort


@dataclass(frozen=True)
class CohortLoglik:
    total: float
    subjects: tuple[SubjectLoglik, ...]

    @property
    def underflow_ids(self) -> list[str]:
        return [s.id for s in self.subjects if s.underflow]

    @property
    def error(self) -> float:
        """Combined standard error of the total (independent subjects)."""
        return math.sqrt(sum(s.error**2 for s in self.subjects if math.isfinite(s.error)))


def ordered(cohort: Sequence[SubjectRecord]) -> list[SubjectRecord]:
    return sorted(cohort, key=lambda s: s.id)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


class _SubjectTask:
    def __init__(self, spec, params, opts):
        self.spec, self.params, self.opts = spec, params, opts

    def __call__(self, subject):
        return subject_details(self.spec, self.params, subject, self.opts)


def cohort_loglik(spec, params, cohort, opts: LikelihoodOptions | None = None) -> CohortLoglik:
    opts = opts or LikelihoodOptions()
    if not cohort:
        raise ValueError("cohort is empty")
    subjects = ordered(cohort)
    results = tuple(_map(_SubjectTask(spec, params, opts), subjects, opts.workers))
    total = 0.0
    for r in results:
        total += r.loglik
    bad = [r.id for r in results if r.underflow]
    if bad:
        log.warning("log-likelihood is -inf; underflow in subjects %s", bad)
        total = -math.inf
    return CohortLoglik(total, results)


def total_loglik(spec, params, cohort, opts: LikelihoodOptions | None = None) -> float:
    return cohort_loglik(spec, params, cohort, opts).total


# ---------------------------------------------------------------------------
# scores and curvature


def batch_logliks(spec: ModelSpec, u0, points, subject: SubjectRecord, opts: LikelihoodOptions):
    """One subject's log-likelihood at each row of ``points`` (unconstrained).

    Every point reuses the lattice level, the variable ordering and the random
    shifts selected at the anchor ``u0``, so differences between points carry
    almost no integration noise.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    validate_subject(spec, subject)
    mu0, cov0, lo0, hi0 = _reduced_problem(spec, transform_parameters(spec, u0), subject)
    d = mu0.size
    problems = []
    for u in points:
        try:
            problems.append(_reduced_problem(spec, transform_parameters(spec, u), subject))
        except ValueError as exc:
            raise LikelihoodError(f"subject {subject.id}: invalid parameters near anchor: {exc}") from exc
    if d <= 2:
        log_p = np.array([_closed_form_logprob(*prob) for prob in problems])
    else:
        seed = subject_seed(opts.base_seed, subject.id)
        anchor_opts = replace(opts, target_error=opts.score_target_error)
        _, _, level, perm = _adaptive_logprob(mu0, cov0, lo0, hi0, seed, anchor_opts)
        covs = np.stack([prob[1][np.ix_(perm, perm)] for prob in problems])
        try:
            Ls = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise LikelihoodError(f"subject {subject.id}: covariance not positive definite") from exc
        a = np.stack([(prob[2] - prob[0])[perm] for prob in problems])
        b = np.stack([(prob[3] - prob[0])[perm] for prob in problems])
        est, _ = mvn.lattice_estimate(Ls, a, b, seed, level, opts.n_shifts)
        with np.errstate(divide="ignore"):
            log_p = np.where(est > MIN_PROB, np.log(np.maximum(est, MIN_PROB)), -np.inf)
    if spec.entry_truncation:
        log_p = log_p - np.array(
            [log_truncation_prob(spec, transform_parameters(spec, u), subject) for u in points]
        )
    return log_p


def fd_steps(u0: np.ndarray, step: float) -> np.ndarray:
    return step * (1.0 + np.abs(u0))


def subject_score(spec: ModelSpec, u0, subject: SubjectRecord, opts: LikelihoodOptions):
    """Central-difference gradient of one subject's log-likelihood with respect
    to the unconstrained free parameters."""
    u0 = np.asarray(u0, dtype=float)
    p = u0.size
    h = fd_steps(u0, opts.fd_step)
    points = np.repeat(u0[None], 2 * p, axis=0)
    points[0::2][np.arange(p), np.arange(p)] += h
    points[1::2][np.arange(p), np.arange(p)] -= h
    vals = batch_logliks(spec, u0, points, subject, opts)
    if not np.all(np.isfinite(vals)):
        j = int(np.flatnonzero(~np.isfinite(vals))[0]) // 2
        raise LikelihoodError(
            f"subject {subject.id}: log-likelihood is -inf when perturbing {spec.free_names[j]}"
        )
    return (vals[0::2] - vals[1::2]) / (2.0 * h)


def subject_hessian(spec: ModelSpec, u0, subject: SubjectRecord, opts: LikelihoodOptions,
                    step: float = 1e-3) -> np.ndarray:
    """Second-difference Hessian of one subject's log-likelihood."""
    u0 = np.asarray(u0, dtype=float)
    p = u0.size
    h = fd_steps(u0, step)
    pts = [u0]
    for j in range(p):
        for s in (1.0, -1.0):
            v = u0.copy()
            v[j] += s * h[j]
            pts.append(v)
    pairs = [(j, k) for j in range(p) for k in range(j + 1, p)]
    for j, k in pairs:
        for sj, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            v = u0.copy()
            v[j] += sj * h[j]
            v[k] += sk * h[k]
            pts.append(v)
    f = batch_logliks(spec, u0, np.array(pts), subject, opts)
    if not np.all(np.isfinite(f)):
        raise LikelihoodError(f"subject {subject.id}: log-likelihood is -inf near {u0}")
    H = np.empty((p, p))
    f0 = f[0]
    for j in range(p):
        H[j, j] = (f[1 + 2 * j] - 2.0 * f0 + f[2 + 2 * j]) / h[j] ** 2
    base = 1 + 2 * p
    for i, (j, k) in enumerate(pairs):
        pp, pm, mp, mm = f[base + 4 * i : base + 4 * i + 4]
        H[j, k] = H[k, j] = (pp - pm - mp + mm) / (4.0 * h[j] * h[k])
    return H


class _ScoreTask:
    def __init__(self, spec, u0, opts):
        self.spec, self.u0, self.opts = spec, u0, opts

    def __call__(self, subject):
        return subject_score(self.spec, self.u0, subject, self.opts)


class _HessianTask:
    def __init__(self, spec, u0, opts, step):
        self.spec, self.u0, self.opts, self.step = spec, u0, opts, step

    def __call__(self, subject):
        return subject_hessian(self.spec, self.u0, subject, self.opts, self.step)


def score_by_subject(
    spec: ModelSpec, params: Parameters, cohort, opts: LikelihoodOptions | None = None
) -> np.ndarray:
    """``(n_subjects, n_free)`` per-subject scores in the unconstrained scale,
    rows in subject-id order."""
    opts = opts or LikelihoodOptions()
    u0 = inverse_transform(spec, params)
    subjects = ordered(cohort)
    rows = _map(_ScoreTask(spec, u0, opts), subjects, opts.workers)
    return np.vstack(rows)


def loglik_hessian(spec: ModelSpec, u0, cohort, opts: LikelihoodOptions | None = None,
                   step: float = 1e-3) -> np.ndarray:
    """Hessian of the total log-likelihood in the unconstrained scale."""
    opts = opts or LikelihoodOptions()
    u0 = np.asarray(u0, dtype=float)
    parts = _map(_HessianTask(spec, u0, opts, step), ordered(cohort), opts.workers)
    return np.sum(parts, axis=0)
