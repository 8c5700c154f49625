"""Individual predictions of a future diagnosis and their evaluation.

For a subject never diagnosed so far, the probability of a positive
diagnosis at a later time ``t_next`` is the ratio of two orthant
probabilities: the observed history together with a positive diagnosis at
``t_next``, over the observed history alone. The entry-truncation factor
appears in both and cancels, so it is not computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import likelihood as lk
from .model import (
    MISSING,
    ModelSpec,
    Parameters,
    SubjectRecord,
    covariance_matrix,
    cutoff_grid,
    mean_vector,
    observation_box,
    validate_subject,
)


class PredictionError(ValueError):
    pass


@dataclass(frozen=True)
class SubjectPrediction:
    id: str
    t_next: float
    p: float
    numerator: float
    denominator: float
    error: float


@dataclass(frozen=True)
class PredictionResult:
    subjects: tuple[SubjectPrediction, ...]
    expected_count: float
    interval: tuple[float, float]
    level: float

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.p for s in self.subjects])


def augmented_problem(spec: ModelSpec, params: Parameters, subject: SubjectRecord, t_next: float):
    """Mean, covariance and observed box of the history with one extra
    diagnosis axis at ``t_next`` appended last."""
    n = subject.n_visits
    K = spec.K
    ext = SubjectRecord(
        subject.id,
        np.append(subject.visit_times, t_next),
        np.hstack([subject.observations, np.full((K, 1), MISSING)]),
        subject.covariates,
    )
    # axes of the extended record are (test, visit) blocks of length n + 1
    keep = [k * (n + 1) + j for k in range(K) for j in range(n)] + [n]
    mu = mean_vector(spec, params, ext)[keep]
    cov = covariance_matrix(spec, params, ext)[np.ix_(keep, keep)]
    box = observation_box(spec, params, ext)
    return mu, cov, box.lower[keep], box.upper[keep]


def predict_prob(
    spec: ModelSpec,
    params: Parameters,
    subject: SubjectRecord,
    t_next: float,
    opts: lk.LikelihoodOptions | None = None,
) -> SubjectPrediction:
    """Probability of a positive diagnosis at ``t_next`` given the history."""
    opts = opts or lk.LikelihoodOptions()
    validate_subject(spec, subject)
    if spec.tests[0].kind != "binary":
        raise PredictionError("the first test must be the binary diagnosis")
    if np.any(subject.observations[0] == 1):
        raise PredictionError(f"subject {subject.id} was already diagnosed")
    if not t_next > subject.visit_times[-1]:
        raise PredictionError(
            f"subject {subject.id}: t_next={t_next} is not after the last visit "
            f"{subject.visit_times[-1]}"
        )
    mu, cov, lo, hi = augmented_problem(spec, params, subject, t_next)
    seed = lk.subject_seed(opts.base_seed, subject.id)
    log_den, err_den = lk.log_box_prob(mu[:-1], cov[:-1, :-1], lo[:-1], hi[:-1], seed, opts)
    if not math.isfinite(log_den) or log_den < math.log(lk.MIN_PROB):
        raise PredictionError(
            f"subject {subject.id}: history has probability below {lk.MIN_PROB:g} under the model"
        )
    hi = hi.copy()
    hi[-1] = cutoff_grid(spec, params, 0)[0]
    log_num, err_num = lk.log_box_prob(mu, cov, lo, hi, seed, opts)
    p = min(1.0, math.exp(log_num - log_den)) if math.isfinite(log_num) else 0.0
    return SubjectPrediction(
        subject.id, float(t_next), p, math.exp(log_num), math.exp(log_den),
        p * math.hypot(err_num, err_den),
    )


def predict_count(p, level: float = 0.95):
    """Expected number of diagnoses and its normal-approximation interval."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0:
        raise PredictionError("no probabilities given")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise PredictionError("probabilities must lie in [0, 1]")
    if not 0 < level < 1:
        raise PredictionError("level must lie in (0, 1)")
    expected = float(np.sum(p))
    half = float(ndtri(0.5 + level / 2.0)) * math.sqrt(float(np.sum(p * (1.0 - p))))
    n = float(p.size)
    return expected, (max(0.0, expected - half), min(n, expected + half))


def predict_cohort(
    spec: ModelSpec,
    params: Parameters,
    cohort,
    t_next: dict[str, float],
    opts: lk.LikelihoodOptions | None = None,
    level: float = 0.95,
) -> PredictionResult:
    """Predictions for every subject listed in ``t_next`` (in id order)."""
    by_id = {s.id: s for s in cohort}
    ids = sorted(i for i in t_next if i in by_id)
    if not ids:
        raise PredictionError("no eligible subjects")
    rows = tuple(predict_prob(spec, params, by_id[i], t_next[i], opts) for i in ids)
    expected, interval = predict_count([r.p for r in rows], level)
    return PredictionResult(rows, expected, interval, level)


# ---------------------------------------------------------------------------
# ROC


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # thresholds[i] produced vertex i + 1
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _check_binary(scores, outcomes):
    s = np.asarray(scores, dtype=float).reshape(-1)
    y = np.asarray(outcomes).reshape(-1)
    if s.size != y.size:
        raise PredictionError("scores and outcomes differ in length")
    if np.any(~np.isfinite(s)):
        raise PredictionError("scores must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise PredictionError("outcomes must be 0 or 1")
    y = y.astype(bool)
    if y.all() or not y.any():
        raise PredictionError("outcomes need at least one positive and one negative")
    return s, y


def roc(scores, outcomes) -> RocCurve:
    """ROC curve with one vertex per distinct score; a subject is called
    positive when its score is at least the threshold."""
    s, y = _check_binary(scores, outcomes)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.flatnonzero(np.append(np.diff(s) != 0, True))
    tp = np.concatenate([[0], np.cumsum(y)[last]]).astype(np.int64)
    fp = np.concatenate([[0], np.cumsum(~y)[last]]).astype(np.int64)
    n1, n0 = int(tp[-1]), int(fp[-1])
    # twice the trapezoid area in count units, kept as an exact integer
    twice_area = sum(int(a) * int(b) for a, b in zip(np.diff(fp), tp[1:] + tp[:-1]))
    return RocCurve(fp / n0, tp / n1, s[last], twice_area / (2 * n0 * n1))


def mann_whitney_auc(scores, outcomes) -> float:
    """Probability that a positive outscores a negative, ties counting half."""
    s, y = _check_binary(scores, outcomes)
    pos = np.sort(s[y])
    neg = s[~y]
    below = np.searchsorted(pos, neg, side="left")
    upto = np.searchsorted(pos, neg, side="right")
    greater = int(np.sum(pos.size - upto))
    ties = int(np.sum(upto - below))
    return (2 * greater + ties) / (2 * pos.size * neg.size)
