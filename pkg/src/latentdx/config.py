"""Run configuration: a JSON document validated against a fixed schema."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import jsonschema

from .likelihood import LikelihoodOptions
from .model import (
    ConfigurationError,
    ModelSpec,
    Parameters,
    PowerGrid,
    SingleThreshold,
    TestSpec,
    paquid_spec,
)
from .optimizer import OptimizerOptions
from .simulate import SimulationDesign

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer"}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


_TEST = _obj(
    {
        "name": {"type": "string", "minLength": 1},
        "kind": {"enum": ["binary", "ordinal"]},
        "n_categories": {"type": "integer", "minimum": 2},
        "cutoff": _obj({"type": {"enum": ["threshold", "power_grid"]},
                        "fixed_top": {"type": ["number", "null"]}}, ["type"]),
        "random_effect": {"type": "boolean"},
        "error_term": {"type": "boolean"},
        "terms": {"type": "array", "items": {"enum": ["ed", "pra", "ed:pra"]}},
    },
    ["name", "kind", "n_categories", "cutoff"],
)

SCHEMA = _obj(
    {
        "seed": {"type": "integer", "minimum": 0},
        "model": _obj(
            {
                "tests": {"type": "array", "items": _TEST, "minItems": 1},
                "latent_mean": {"enum": ["paquid_power", "linear"]},
                "latent_terms": {"type": "array", "items": {"enum": ["1", "ed", "t", "ed:t"]}},
                "latent_random_intercept": {"type": "boolean"},
                "time_origin": _NUM,
                "entry_truncation": {"type": "boolean"},
                "fixed": {"type": "object", "additionalProperties": _NUM},
            }
        ),
        "parameters": {"type": "object", "additionalProperties": _NUM},
        "integrator": _obj(
            {
                "target_error": _POS,
                "score_target_error": _POS,
                "max_samples": {"type": "integer", "minimum": 1},
                "fd_step": _POS,
                "n_shifts": {"type": "integer", "minimum": 2},
            }
        ),
        "optimizer": _obj(
            {
                "tol": _POS,
                "max_iter": {"type": "integer", "minimum": 0},
                "algorithm": {"enum": ["rvs", "marquardt", "auto"]},
                "max_step": _POS,
                "max_halvings": {"type": "integer", "minimum": 0},
                "start_floor": _POS,
            }
        ),
        "simulation": _obj(
            {
                "n_subjects": {"type": "integer", "minimum": 1},
                "visit_offsets": {"type": "array", "items": _NUM, "minItems": 1},
                "entry_age_range": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "entry_age_table": {
                    "type": "array",
                    "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                },
                "education_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "apply_entry_truncation": {"type": "boolean"},
                "censor_after_diagnosis": {"type": "boolean"},
                "missing_visit_prob": {"type": "number", "minimum": 0, "maximum": 1},
            }
        ),
        "prediction": _obj(
            {
                "history_years": {"type": "number", "minimum": 0},
                "horizon_years": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            }
        ),
    }
)


@dataclass(frozen=True)
class PredictionRule:
    """History is every visit within ``history_years`` of the first one; the
    target is the first later visit, or ``first + horizon_years`` when set."""

    history_years: float = 5.0
    horizon_years: float | None = None
    level: float = 0.95


@dataclass
class RunConfig:
    raw: dict
    spec: ModelSpec
    parameters: dict[str, float]
    seed: int
    integrator: dict = field(default_factory=dict)
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    simulation: dict = field(default_factory=dict)
    prediction: PredictionRule = field(default_factory=PredictionRule)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def likelihood_options(self, workers: int = 1) -> LikelihoodOptions:
        return LikelihoodOptions(base_seed=self.seed, workers=workers, **self.integrator)

    def design(self) -> SimulationDesign:
        if "n_subjects" not in self.simulation:
            raise ConfigurationError("simulation.n_subjects is required")
        return SimulationDesign(seed=self.seed, **self.simulation)

    def params(self, values: dict[str, float] | None = None) -> Parameters:
        merged = dict(self.parameters if values is None else values)
        return self.spec.parameters(merged)


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _test_spec(d: dict) -> TestSpec:
    cut = d["cutoff"]
    if cut["type"] == "threshold":
        if "fixed_top" in cut:
            raise ConfigurationError(f"test {d['name']}: fixed_top applies to power grids only")
        cutoff = SingleThreshold()
    else:
        cutoff = PowerGrid(cut.get("fixed_top", 40.0))
    return TestSpec(
        d["name"], d["kind"], d["n_categories"], cutoff,
        has_random_effect=d.get("random_effect", False),
        has_error_term=d.get("error_term", False),
        terms=tuple(d.get("terms", ())),
    )


def model_from_dict(d: dict) -> ModelSpec:
    kwargs = {k: v for k, v in d.items() if k != "tests"}
    if "latent_terms" in kwargs:
        kwargs["latent_terms"] = tuple(kwargs["latent_terms"])
    if "tests" in d:
        return ModelSpec(tests=tuple(_test_spec(t) for t in d["tests"]), **kwargs)
    return paquid_spec(**kwargs)


def parse_config(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config {where}: {exc.message}") from None
    spec = model_from_dict(raw.get("model", {}))
    params = dict(raw.get("parameters", {}))
    unknown = sorted(set(params) - set(spec.parameter_names))
    if unknown:
        raise ConfigurationError(f"unknown parameters {unknown}")
    sim = dict(raw.get("simulation", {}))
    for key in ("visit_offsets", "entry_age_range"):
        if key in sim:
            sim[key] = tuple(sim[key])
    if "entry_age_table" in sim:
        sim["entry_age_table"] = tuple(tuple(x) for x in sim["entry_age_table"])
    return RunConfig(
        raw=raw,
        spec=spec,
        parameters=params,
        seed=int(raw.get("seed", 0)),
        integrator=dict(raw.get("integrator", {})),
        optimizer=OptimizerOptions(**raw.get("optimizer", {})),
        simulation=sim,
        prediction=PredictionRule(**raw.get("prediction", {})),
    )


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    return parse_config(raw)
