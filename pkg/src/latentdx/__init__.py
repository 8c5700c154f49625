"""Joint latent-process model for a binary diagnosis and an ordinal cognitive
score observed at irregular visits, with left truncation at entry."""

from __future__ import annotations

from .likelihood import LikelihoodOptions, cohort_loglik, score_by_subject, subject_loglik
from .model import (
    MISSING,
    ModelSpec,
    Parameters,
    SubjectRecord,
    TestSpec,
    paquid_spec,
    validate_identifiability,
)
from .mvn import OrthantBox, orthant_prob
from .optimizer import FitResult, OptimizerOptions, fit
from .predict import predict_count, predict_prob, roc
from .simulate import SimulationDesign, simulate_cohort

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "FitResult",
    "LikelihoodOptions",
    "ModelSpec",
    "OptimizerOptions",
    "OrthantBox",
    "Parameters",
    "SimulationDesign",
    "SubjectRecord",
    "TestSpec",
    "cohort_loglik",
    "fit",
    "orthant_prob",
    "paquid_spec",
    "predict_count",
    "predict_prob",
    "roc",
    "score_by_subject",
    "simulate_cohort",
    "subject_loglik",
    "validate_identifiability",
]
