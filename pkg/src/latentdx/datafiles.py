"""Cohort CSV files in long format: one row per subject, visit and test."""

from __future__ import annotations

import csv
from collections import defaultdict

import numpy as np

from .model import MISSING, DataError, ModelSpec, SubjectRecord

COHORT_HEADER = ["subject_id", "visit_time", "test", "value", "ed"]


class CohortFormatError(DataError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def read_cohort(path, spec: ModelSpec) -> list[SubjectRecord]:
    """Parse a cohort file; errors name the offending line."""
    test_index = {t.name: k for k, t in enumerate(spec.tests)}
    rows: dict[str, dict[tuple[float, int], int]] = defaultdict(dict)
    ed_of: dict[str, tuple[int, int]] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != COHORT_HEADER:
            raise CohortFormatError(path, 1, f"header must be {','.join(COHORT_HEADER)}")
        for rec in reader:
            line = reader.line_num
            if not rec:
                continue
            if len(rec) != len(COHORT_HEADER):
                raise CohortFormatError(path, line, f"expected 5 fields, got {len(rec)}")
            sid, time_s, test, value_s, ed_s = (x.strip() for x in rec)
            if not sid:
                raise CohortFormatError(path, line, "empty subject_id")
            try:
                time = float(time_s)
            except ValueError:
                raise CohortFormatError(path, line, f"visit_time {time_s!r} is not a number") from None
            if not np.isfinite(time) or time < 0:
                raise CohortFormatError(path, line, f"visit_time {time_s} must be finite and >= 0")
            if test not in test_index:
                raise CohortFormatError(path, line, f"unknown test {test!r}")
            k = test_index[test]
            if value_s == "":
                value = MISSING
            else:
                try:
                    value = int(value_s)
                except ValueError:
                    raise CohortFormatError(path, line, f"value {value_s!r} is not an integer") from None
                if not 0 <= value < spec.tests[k].n_categories:
                    raise CohortFormatError(
                        path, line,
                        f"{test} value {value} outside 0..{spec.tests[k].n_categories - 1}",
                    )
            if ed_s not in ("0", "1"):
                raise CohortFormatError(path, line, f"ed must be 0 or 1, got {ed_s!r}")
            ed = int(ed_s)
            if sid not in ed_of:
                ed_of[sid] = (ed, line)
                order.append(sid)
            elif ed_of[sid][0] != ed:
                raise CohortFormatError(
                    path, line, f"subject {sid}: ed differs from line {ed_of[sid][1]}"
                )
            key = (time, k)
            if key in rows[sid]:
                raise CohortFormatError(path, line, f"duplicate row for {sid}, {time_s}, {test}")
            rows[sid][key] = value
    if not order:
        raise CohortFormatError(path, 2, "no data rows")
    cohort = []
    for sid in order:
        times = sorted({t for t, _ in rows[sid]})
        y = np.full((spec.K, len(times)), MISSING, dtype=np.int64)
        col = {t: j for j, t in enumerate(times)}
        for (t, k), v in rows[sid].items():
            y[k, col[t]] = v
        cohort.append(SubjectRecord(sid, np.array(times), y, {"ed": float(ed_of[sid][0])}))
    return cohort


def write_cohort(path, spec: ModelSpec, cohort) -> int:
    """Write every (visit, test) cell, leaving missing values empty; returns
    the number of data rows."""
    n = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COHORT_HEADER)
        for s in cohort:
            ed = int(s.ed)
            for j, t in enumerate(s.visit_times):
                for k, test in enumerate(spec.tests):
                    v = int(s.observations[k, j])
                    writer.writerow([s.id, repr(float(t)), test.name, "" if v == MISSING else v, ed])
                    n += 1
    return n
