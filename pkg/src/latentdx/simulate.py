"""Synthetic cohorts drawn from the generative model.

Each subject gets its own random stream derived from ``(seed, index)`` so
subjects can be generated in any order, or in parallel, with the same result.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import (
    MISSING,
    ModelSpec,
    Parameters,
    SubjectRecord,
    categorize,
    check_parameters,
    equation_offsets,
    latent_mean,
)


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationDesign:
    n_subjects: int
    visit_offsets: tuple[float, ...] = (0.0, 1.0, 3.0, 5.0)
    entry_age_range: tuple[float, float] = (65.0, 90.0)
    entry_age_table: tuple[tuple[float, float], ...] | None = None
    education_prob: float = 0.6
    seed: int = 0
    apply_entry_truncation: bool = True
    censor_after_diagnosis: bool = True
    missing_visit_prob: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "visit_offsets", tuple(float(x) for x in self.visit_offsets))
        if self.entry_age_table is not None:
            object.__setattr__(
                self, "entry_age_table", tuple((float(a), float(w)) for a, w in self.entry_age_table)
            )
        if self.n_subjects < 1:
            raise ValueError("n_subjects must be positive")
        off = np.asarray(self.visit_offsets)
        if off.size < 1 or off[0] != 0.0 or np.any(np.diff(off) <= 0):
            raise ValueError("visit offsets must start at 0 and increase strictly")
        for name in ("education_prob", "missing_visit_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        lo, hi = self.entry_age_range
        if not lo <= hi:
            raise ValueError("entry_age_range must be (low, high) with low <= high")
        if self.entry_age_table is not None:
            w = np.array([w for _, w in self.entry_age_table])
            if w.size == 0 or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("entry_age_table weights must be nonnegative with positive sum")


@dataclass(frozen=True)
class TruthRow:
    subject_id: str
    visit: int
    time: float
    a1: float
    d: tuple[float, ...]
    w: float
    theta: tuple[float, ...]


@dataclass
class SimulationSummary:
    n_subjects: int = 0
    rejected: int = 0
    observations: dict[str, int] = field(default_factory=dict)


MAX_REJECTION_RATE = 0.99
_MIN_ATTEMPTS_FOR_ABORT = 200


def _entry_age(design: SimulationDesign, rng: np.random.Generator) -> float:
    if design.entry_age_table is not None:
        ages = np.array([a for a, _ in design.entry_age_table])
        w = np.array([w for _, w in design.entry_age_table])
        return float(ages[rng.choice(ages.size, p=w / w.sum())])
    lo, hi = design.entry_age_range
    return float(rng.uniform(lo, hi))


def draw_subject(spec: ModelSpec, params: Parameters, times, ed: float, rng):
    """One draw of the latent quantities and intermediate variables.

    Returns ``(a1, d, w, theta)`` with ``theta`` of shape ``(K, n)``.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    K = spec.K
    a1 = rng.normal(0.0, params["sigma_a1"]) if spec.latent_random_intercept else 0.0
    d = np.zeros(K)
    for k, test in enumerate(spec.tests):
        if test.has_random_effect:
            d[k] = rng.normal(0.0, params[spec.test_param(k, "sigma_d")])
    incr = np.diff(np.concatenate([[0.0], times]))
    w = np.cumsum(rng.normal(0.0, 1.0, n) * np.sqrt(incr))
    eps = np.zeros((K, n))
    for k, test in enumerate(spec.tests):
        if test.has_error_term:
            eps[k] = rng.normal(0.0, params[spec.test_param(k, "sigma_eps")], n)
    probe = SubjectRecord("_", times, np.full((K, n), MISSING), {"ed": ed})
    lam = latent_mean(spec, params, probe, times) + a1 + w
    theta = np.empty((K, n))
    for k in range(K):
        theta[k] = lam + equation_offsets(spec, params, probe, k) + d[k] + eps[k]
    return a1, d, w, theta


def simulate_subject(spec, params, design: SimulationDesign, index: int):
    """Generate subject ``index``; returns ``(record, truth_rows, rejections)``."""
    rng = np.random.default_rng([int(design.seed) & 0xFFFFFFFFFFFFFFFF, index])
    sid = f"S{index + 1:05d}"
    offsets = np.asarray(design.visit_offsets)
    rejections = 0
    max_attempts = int(_MIN_ATTEMPTS_FOR_ABORT / (1.0 - MAX_REJECTION_RATE))
    while True:
        age = _entry_age(design, rng)
        ed = float(rng.random() < design.education_prob)
        times = age - spec.time_origin + offsets
        if times[0] < 0:
            raise SimulationError(f"entry age {age} is before the time origin {spec.time_origin}")
        a1, d, w, theta = draw_subject(spec, params, times, ed, rng)
        y = np.vstack([categorize(spec, params, k, theta[k]) for k in range(spec.K)])
        if not design.apply_entry_truncation or y[0, 0] == 0:
            break
        rejections += 1
        if rejections >= max_attempts:
            raise SimulationError(
                f"subject {sid}: {rejections} rejected draws; entry condition is almost never met"
            )
    keep = np.ones(times.size, dtype=bool)
    if design.missing_visit_prob > 0 and times.size > 1:
        keep[1:] = rng.random(times.size - 1) >= design.missing_visit_prob
    if design.censor_after_diagnosis:
        diagnosed = np.flatnonzero(y[0] == 1)
        if diagnosed.size:
            y[1:, diagnosed[0] + 1 :] = MISSING
    truth = [
        TruthRow(sid, j, float(times[j]), float(a1), tuple(float(x) for x in d), float(w[j]),
                 tuple(float(x) for x in theta[:, j]))
        for j in np.flatnonzero(keep)
    ]
    record = SubjectRecord(sid, times[keep], y[:, keep], {"ed": ed})
    return record, truth, rejections


def simulate_cohort(spec: ModelSpec, params: Parameters, design: SimulationDesign):
    """Simulate ``design.n_subjects`` subjects.

    Returns ``(cohort, truth, summary)``; ``truth`` has one row per retained
    visit.
    """
    check_parameters(spec, params)
    cohort, truth = [], []
    summary = SimulationSummary()
    attempts = 0
    for i in range(design.n_subjects):
        record, rows, rejected = simulate_subject(spec, params, design, i)
        attempts += rejected + 1
        summary.rejected += rejected
        if attempts >= _MIN_ATTEMPTS_FOR_ABORT and summary.rejected > MAX_REJECTION_RATE * attempts:
            raise SimulationError(
                f"rejection rate {summary.rejected / attempts:.3f} exceeds {MAX_REJECTION_RATE}"
            )
        cohort.append(record)
        truth.extend(rows)
    summary.n_subjects = len(cohort)
    for k, test in enumerate(spec.tests):
        summary.observations[test.name] = int(
            sum(int(np.sum(s.observations[k] != MISSING)) for s in cohort)
        )
    return cohort, truth, summary


# ---------------------------------------------------------------------------
# truth table


def truth_header(spec: ModelSpec) -> list[str]:
    return (
        ["subject_id", "visit", "time", "a1"]
        + [f"d_{t.name}" for t in spec.tests]
        + ["w"]
        + [f"theta_{t.name}" for t in spec.tests]
    )


def export_truth(path, spec: ModelSpec, truth) -> None:
    """Write latent values as CSV (floats in round-trip ``repr`` form)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(truth_header(spec))
        for r in truth:
            writer.writerow(
                [r.subject_id, r.visit, repr(r.time), repr(r.a1)]
                + [repr(x) for x in r.d]
                + [repr(r.w)]
                + [repr(x) for x in r.theta]
            )


def read_truth(path, spec: ModelSpec) -> list[TruthRow]:
    K = spec.K
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != truth_header(spec):
            raise ValueError(f"unexpected truth header {header}")
        for rec in reader:
            rows.append(
                TruthRow(
                    rec[0],
                    int(rec[1]),
                    float(rec[2]),
                    float(rec[3]),
                    tuple(float(x) for x in rec[4 : 4 + K]),
                    float(rec[4 + K]),
                    tuple(float(x) for x in rec[5 + K : 5 + 2 * K]),
                )
            )
    return rows
