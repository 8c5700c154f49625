from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from latentdx.model import MISSING, REFERENCE_VALUES, SubjectRecord
from latentdx.predict import (
    PredictionError,
    mann_whitney_auc,
    predict_cohort,
    predict_count,
    predict_prob,
    roc,
)

from .oracles import paquid_draw_frequency


def record(times, y, ed=0.0, sid="s"):
    return SubjectRecord(sid, np.asarray(times, dtype=float), np.asarray(y), {"ed": ed})


@pytest.mark.parametrize(
    "times,y,ed,t_next",
    [([10.0], [[0], [26]], 0.0, 13.0), ([15.0, 16.0], [[0, 0], [24, 23]], 1.0, 18.0)],
)
def test_against_conditional_frequency(spec, truth, times, y, ed, t_next):
    y = np.array(y)
    pred = predict_prob(spec, truth, record(times, y, ed), t_next)
    n = 4_000_000
    # same seed and visit grid: the numerator's draws are a subset of the denominator's
    num, _ = paquid_draw_frequency(
        REFERENCE_VALUES, times + [t_next], ed, np.hstack([y, [[1], [MISSING]]]), n, seed=21)
    den, _ = paquid_draw_frequency(
        REFERENCE_VALUES, times + [t_next], ed, np.hstack([y, [[MISSING], [MISSING]]]), n, seed=21)
    ratio = num / den
    se = math.sqrt(ratio * (1 - ratio) / (den * n))
    assert abs(pred.p - ratio) < 4 * se


def test_empty_history_gives_marginal(spec, truth):
    t, t_next = 4.0, 9.0
    s = record([t], [[MISSING], [MISSING]])
    v = REFERENCE_VALUES
    mean = v["beta1"] + v["beta3"] * t_next ** v["beta5"]
    sd = math.sqrt(v["sigma_a1"] ** 2 + t_next + v["sigma_d1"] ** 2)
    assert predict_prob(spec, truth, s, t_next).p == pytest.approx(
        stats.norm.cdf((v["eta0"] - mean) / sd), abs=1e-9)


def test_higher_score_lowers_risk(spec, truth):
    low = predict_prob(spec, truth, record([12.0], [[0], [20]]), 14.0).p
    high = predict_prob(spec, truth, record([12.0], [[0], [29]]), 14.0).p
    assert high < low


def test_risk_grows_with_horizon(spec, truth):
    s = record([12.0, 13.0], [[0, 0], [25, 25]])
    p = [predict_prob(spec, truth, s, t).p for t in (14.0, 16.0, 20.0)]
    assert p[0] < p[1] < p[2]


def test_blank_visit_changes_nothing(spec, truth):
    base = record([12.0, 13.0], [[0, 0], [25, 24]])
    padded = record([12.0, 13.0, 14.0], [[0, 0, MISSING], [25, 24, MISSING]])
    assert predict_prob(spec, truth, padded, 16.0).p == pytest.approx(
        predict_prob(spec, truth, base, 16.0).p, abs=1e-12)


def test_rejects_diagnosed_subject(spec, truth):
    with pytest.raises(PredictionError, match="already diagnosed"):
        predict_prob(spec, truth, record([1.0, 2.0], [[0, 1], [28, MISSING]]), 4.0)


@pytest.mark.parametrize("t_next", [3.0, 2.0])
def test_rejects_target_not_after_history(spec, truth, t_next):
    with pytest.raises(PredictionError, match="not after"):
        predict_prob(spec, truth, record([1.0, 3.0], [[0, 0], [28, 27]]), t_next)


def test_impossible_history_is_an_error(spec, truth):
    s = record([0.0, 1.0], [[0, 0], [0, 0]], ed=1.0)
    with pytest.raises(PredictionError, match="probability below"):
        predict_prob(spec, truth.replace(sigma_a1=0.1, sigma_eps2=0.1), s, 3.0)


def test_cohort_predictions_sorted_and_summed(spec, truth, small_cohort):
    undiagnosed = [s for s in small_cohort if not np.any(s.observations[0] == 1)][:6]
    targets = {s.id: float(s.visit_times[-1] + 2.0) for s in undiagnosed}
    res = predict_cohort(spec, truth, list(reversed(undiagnosed)), targets)
    assert [r.id for r in res.subjects] == sorted(targets)
    assert res.expected_count == pytest.approx(sum(r.p for r in res.subjects), abs=1e-15)
    with pytest.raises(PredictionError, match="no eligible"):
        predict_cohort(spec, truth, undiagnosed, {"nobody": 3.0})


# ---------------------------------------------------------------------------
# counts


def test_count_interval():
    p = np.array([0.1, 0.5, 0.9, 0.3])
    expected, (lo, hi) = predict_count(p, 0.95)
    half = stats.norm.ppf(0.975) * math.sqrt(np.sum(p * (1 - p)))
    assert expected == pytest.approx(1.8, abs=1e-15)
    assert (lo, hi) == pytest.approx((1.8 - half, 1.8 + half), abs=1e-12)


@pytest.mark.parametrize("value,count", [(0.0, 0.0), (1.0, 5.0)])
def test_count_degenerate(value, count):
    assert predict_count(np.full(5, value)) == (count, (count, count))


def test_count_interval_clipped():
    expected, (lo, hi) = predict_count([0.01, 0.02])
    assert lo == 0.0 and hi <= 2.0


@pytest.mark.parametrize("bad", [[], [1.2], [-0.1], [float("nan")]])
def test_count_rejects_bad_input(bad):
    with pytest.raises(PredictionError):
        predict_count(bad)


# ---------------------------------------------------------------------------
# ROC


def test_roc_separated():
    curve = roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert curve.auc == 1.0
    assert curve.points == [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]
    assert roc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]).auc == 0.0


def test_roc_all_tied():
    curve = roc([0.5] * 6, [1, 0, 1, 0, 0, 0])
    assert curve.auc == 0.5 and curve.points == [(0.0, 0.0), (1.0, 1.0)]


@pytest.mark.parametrize("scores,outcomes", [([0.1, 0.2], [1, 1]), ([0.1], [0, 1]), ([0.1, 0.2], [0, 2])])
def test_roc_rejects_bad_input(scores, outcomes):
    with pytest.raises(PredictionError):
        roc(scores, outcomes)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 500), st.integers(0, 2**32 - 1), st.sampled_from([3, 20, 1000]))
def test_auc_equals_mann_whitney(n, seed, levels):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    y[0], y[1] = 0, 1
    # coarse score grids force ties
    s = rng.integers(0, levels, n) / levels
    curve = roc(s, y)
    assert curve.auc == mann_whitney_auc(s, y)
    u = stats.mannwhitneyu(s[y == 1], s[y == 0]).statistic
    assert curve.auc == pytest.approx(u / (np.sum(y == 1) * np.sum(y == 0)), abs=1e-12)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert curve.points[0] == (0.0, 0.0) and curve.points[-1] == (1.0, 1.0)
