"""Expected versus observed score counts at the first visit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import mvn
from .model import (
    MISSING,
    ModelSpec,
    Parameters,
    SubjectRecord,
    category_bounds,
    covariance_matrix,
    cutoff_grid,
    mean_vector,
)


@dataclass(frozen=True)
class ScoreHistogram:
    test: str
    observed: np.ndarray  # counts per category
    expected: np.ndarray

    @property
    def n_subjects(self) -> int:
        return int(self.observed.sum())

    def chi_square(self, min_expected: float = 5.0) -> tuple[float, int]:
        """Pearson statistic after pooling adjacent categories until each
        pooled cell expects at least ``min_expected``; returns (stat, cells)."""
        cells_o, cells_e = [], []
        acc_o = acc_e = 0.0
        for o, e in zip(self.observed, self.expected):
            acc_o += o
            acc_e += e
            if acc_e >= min_expected:
                cells_o.append(acc_o)
                cells_e.append(acc_e)
                acc_o = acc_e = 0.0
        if acc_e > 0 or acc_o > 0:
            if cells_e:
                cells_o[-1] += acc_o
                cells_e[-1] += acc_e
            else:
                cells_o.append(acc_o)
                cells_e.append(acc_e)
        o = np.array(cells_o)
        e = np.array(cells_e)
        return float(np.sum((o - e) ** 2 / e)), int(o.size)


def first_visit_probabilities(spec: ModelSpec, params: Parameters, subject: SubjectRecord, k: int):
    """Category probabilities of test ``k`` at the subject's first visit.

    With entry truncation in the model the probabilities are conditional on
    a negative first diagnosis, matching how the cohort was recruited.
    """
    first = SubjectRecord(subject.id, subject.visit_times[:1],
                          np.full((spec.K, 1), MISSING), subject.covariates)
    mu = mean_vector(spec, params, first)
    cov = covariance_matrix(spec, params, first)
    lo, hi = category_bounds(spec, params, k)
    sd = np.sqrt(cov[k, k])
    a = (lo - mu[k]) / sd
    b = (hi - mu[k]) / sd
    if not spec.entry_truncation or k == 0:
        probs = ndtr(b) - ndtr(a)
        return probs / probs.sum()
    eta = cutoff_grid(spec, params, 0)[0]
    sd0 = np.sqrt(cov[0, 0])
    z0 = (eta - mu[0]) / sd0
    r = float(cov[0, k] / (sd0 * sd))
    joint = np.array(
        [mvn.bvn_rectangle(np.array([z0, ai]), np.array([np.inf, bi]), r) for ai, bi in zip(a, b)]
    )
    return joint / joint.sum()


def first_visit_histogram(spec: ModelSpec, params: Parameters, cohort, k: int) -> ScoreHistogram:
    """Counts over subjects whose first-visit value of test ``k`` is observed."""
    M = spec.tests[k].n_categories
    observed = np.zeros(M)
    expected = np.zeros(M)
    for s in cohort:
        y = int(s.observations[k, 0])
        if y == MISSING:
            continue
        observed[y] += 1
        expected += first_visit_probabilities(spec, params, s, k)
    return ScoreHistogram(spec.tests[k].name, observed, expected)
