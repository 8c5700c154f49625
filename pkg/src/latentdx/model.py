"""Subjects, model specification, parameters and the Gaussian moments of the
intermediate variables.

The intermediate vector of a subject is laid out test by test: all visits of
the first test in time order, then all visits of the second test, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .mvn import OrthantBox

MISSING = -1

LATENT_MEAN_FORMS = ("paquid_power", "linear")
LINEAR_LATENT_TERMS = ("1", "ed", "t", "ed:t")
TEST_TERMS = ("ed", "pra", "ed:pra")


class ConfigurationError(ValueError):
    pass


class DataError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True, eq=False)
class SubjectRecord:
    """One subject's visits.

    ``observations`` is an integer array of shape ``(K, n_visits)`` holding
    the observed category of each test at each visit, or ``MISSING``.
    ``visit_times`` are years since the time origin.
    """

    id: str
    visit_times: np.ndarray
    observations: np.ndarray
    covariates: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.visit_times, dtype=float).reshape(-1)
        y = np.asarray(self.observations, dtype=np.int64)
        if y.ndim == 1:
            y = y.reshape(1, -1)
        if t.size < 1:
            raise DataError(f"subject {self.id}: no visits")
        if y.shape[1] != t.size:
            raise DataError(
                f"subject {self.id}: {y.shape[1]} observation columns for {t.size} visits"
            )
        if not np.all(np.isfinite(t)) or t[0] < 0:
            raise DataError(f"subject {self.id}: visit times must be finite and nonnegative")
        if np.any(np.diff(t) <= 0):
            raise DataError(f"subject {self.id}: visit times must be strictly increasing")
        t.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "visit_times", t)
        object.__setattr__(self, "observations", y)
        object.__setattr__(self, "covariates", dict(self.covariates))

    @property
    def n_visits(self) -> int:
        return self.visit_times.size

    @property
    def ed(self) -> float:
        return float(self.covariates.get("ed", 0.0))

    def with_observations(self, observations) -> "SubjectRecord":
        return SubjectRecord(self.id, self.visit_times, observations, self.covariates)


# ---------------------------------------------------------------------------
# specification


@dataclass(frozen=True)
class SingleThreshold:
    """One free cut-off; a binary value of 1 means the intermediate variable
    lies at or below it."""


@dataclass(frozen=True)
class PowerGrid:
    """``c_m = top - scale * (M-1-m)**power`` for ``m`` in ``1..M-3``, a free
    ``c_{M-2}`` and ``c_{M-1} = top``. ``top`` is a parameter when
    ``fixed_top`` is None."""

    fixed_top: float | None = 40.0


@dataclass(frozen=True)
class TestSpec:
    __test__ = False  # not a pytest class

    name: str
    kind: str
    n_categories: int
    cutoff: SingleThreshold | PowerGrid
    has_random_effect: bool = False
    has_error_term: bool = False
    terms: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.kind not in ("binary", "ordinal"):
            raise ConfigurationError(f"test {self.name}: unknown kind {self.kind!r}")
        if self.kind == "binary" and (
            self.n_categories != 2 or not isinstance(self.cutoff, SingleThreshold)
        ):
            raise ConfigurationError(
                f"test {self.name}: binary tests need 2 categories and a single threshold"
            )
        if isinstance(self.cutoff, SingleThreshold) and self.n_categories != 2:
            raise ConfigurationError(f"test {self.name}: single threshold needs 2 categories")
        if isinstance(self.cutoff, PowerGrid) and self.n_categories < 3:
            raise ConfigurationError(f"test {self.name}: power grid needs at least 3 categories")
        if not (self.has_random_effect or self.has_error_term):
            raise ConfigurationError(
                f"test {self.name}: needs a random effect or an error term"
            )
        for term in self.terms:
            if term not in TEST_TERMS:
                raise ConfigurationError(f"test {self.name}: unknown term {term!r}")

    @property
    def n_cutoff_params(self) -> int:
        if isinstance(self.cutoff, SingleThreshold):
            return 1
        return 3 if self.cutoff.fixed_top is not None else 4


@dataclass(frozen=True)
class ModelSpec:
    tests: tuple[TestSpec, ...]
    latent_mean: str = "paquid_power"
    latent_terms: tuple[str, ...] = ()
    latent_random_intercept: bool = True
    time_origin: float = 65.0
    entry_truncation: bool = True
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tests", tuple(self.tests))
        object.__setattr__(self, "latent_terms", tuple(self.latent_terms))
        object.__setattr__(self, "fixed", dict(self.fixed))
        if not self.tests:
            raise ConfigurationError("model needs at least one test")
        if self.latent_mean not in LATENT_MEAN_FORMS:
            raise ConfigurationError(f"unknown latent mean form {self.latent_mean!r}")
        if self.latent_mean == "linear":
            if not self.latent_terms:
                raise ConfigurationError("linear latent mean needs terms")
            for term in self.latent_terms:
                if term not in LINEAR_LATENT_TERMS:
                    raise ConfigurationError(f"unknown latent term {term!r}")
        elif self.latent_terms:
            raise ConfigurationError("latent terms apply only to the linear mean form")
        if self.entry_truncation and self.tests[0].kind != "binary":
            raise ConfigurationError("entry truncation needs a binary first test")
        names = set(self.parameter_names)
        for name in self.fixed:
            if name not in names:
                raise ConfigurationError(f"fixed parameter {name!r} is not in the model")

    @property
    def K(self) -> int:
        return len(self.tests)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return _parameter_layout(self)[0]

    @property
    def positive_names(self) -> frozenset[str]:
        return _parameter_layout(self)[1]

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.parameter_names if n not in self.fixed)

    def test_param(self, k: int, role: str) -> str:
        """Name of a per-test parameter; role is 'scale', 'power', 'c_penult',
        'top', 'threshold', 'sigma_d' or 'sigma_eps'."""
        return _parameter_layout(self)[2][(k, role)]

    def test_effect_names(self, k: int) -> tuple[str, ...]:
        return tuple(f"beta{k + 1}_{i + 1}" for i in range(len(self.tests[k].terms)))

    def parameters(self, values: Mapping[str, float]) -> "Parameters":
        """Build a full parameter vector; fixed values fill the gaps."""
        merged = dict(self.fixed)
        for name, v in values.items():
            if name in self.fixed and float(v) != float(self.fixed[name]):
                raise ConfigurationError(f"parameter {name} is fixed at {self.fixed[name]}")
            merged[name] = v
        names = self.parameter_names
        unknown = set(merged) - set(names)
        if unknown:
            raise ConfigurationError(f"unknown parameters: {sorted(unknown)}")
        missing = [n for n in names if n not in merged]
        if missing:
            raise ConfigurationError(f"missing parameters: {missing}")
        params = Parameters(names, np.array([float(merged[n]) for n in names]))
        check_parameters(self, params)
        return params


def _parameter_layout(spec: ModelSpec):
    cached = spec.__dict__.get("_layout")
    if cached is not None:
        return cached
    names: list[str] = []
    positive: set[str] = set()
    roles: dict[tuple[int, str], str] = {}
    if spec.latent_mean == "paquid_power":
        names += [f"beta{i}" for i in range(1, 6)]
        positive.add("beta5")
    else:
        names += [f"beta{i + 1}" for i in range(len(spec.latent_terms))]
    for k in range(spec.K):
        names += spec.test_effect_names(k)
    c = 0
    for k, test in enumerate(spec.tests):
        if isinstance(test.cutoff, SingleThreshold):
            roles[(k, "threshold")] = f"eta{c}"
            names.append(f"eta{c}")
            c += 1
        else:
            keys = ["scale", "power", "c_penult"]
            if test.cutoff.fixed_top is None:
                keys.append("top")
            for key in keys:
                roles[(k, key)] = f"eta{c}"
                names.append(f"eta{c}")
                c += 1
            positive.update({roles[(k, "scale")], roles[(k, "power")]})
    if spec.latent_random_intercept:
        names.append("sigma_a1")
        positive.add("sigma_a1")
    for k, test in enumerate(spec.tests):
        if test.has_random_effect:
            roles[(k, "sigma_d")] = f"sigma_d{k + 1}"
            names.append(f"sigma_d{k + 1}")
            positive.add(f"sigma_d{k + 1}")
        if test.has_error_term:
            roles[(k, "sigma_eps")] = f"sigma_eps{k + 1}"
            names.append(f"sigma_eps{k + 1}")
            positive.add(f"sigma_eps{k + 1}")
    layout = (tuple(names), frozenset(positive), roles)
    object.__setattr__(spec, "_layout", layout)
    return layout


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True, eq=False)
class Parameters:
    """Named parameter values on the natural (constrained) scale."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != len(self.names):
            raise ValueError("names and values differ in length")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    def __getitem__(self, name: str) -> float:
        return float(self.values[self._index[name]])

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def get(self, name: str, default: float = 0.0) -> float:
        i = self._index.get(name)
        return default if i is None else float(self.values[i])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def replace(self, **updates: float) -> "Parameters":
        v = self.values.copy()
        for name, val in updates.items():
            v[self._index[name]] = val
        return Parameters(self.names, v)

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.names, self.values))
        return f"Parameters({inner})"


def check_parameters(spec: ModelSpec, params: Parameters) -> None:
    if params.names != spec.parameter_names:
        raise ConfigurationError("parameter names do not match the model")
    if not np.all(np.isfinite(params.values)):
        raise ConfigurationError("parameters must be finite")
    for name in spec.positive_names:
        if not params[name] > 0:
            raise ConfigurationError(f"parameter {name} must be positive, got {params[name]}")


def transform_parameters(spec: ModelSpec, u) -> Parameters:
    """Map an unconstrained vector over the free parameters to natural scale.

    Positive parameters go through ``exp``; the rest pass unchanged.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    free = spec.free_names
    if u.size != len(free):
        raise ValueError(f"expected {len(free)} unconstrained values, got {u.size}")
    values = dict(spec.fixed)
    pos = spec.positive_names
    for name, x in zip(free, u):
        values[name] = float(np.exp(x)) if name in pos else float(x)
    return Parameters(spec.parameter_names, [values[n] for n in spec.parameter_names])


def inverse_transform(spec: ModelSpec, params: Parameters) -> np.ndarray:
    pos = spec.positive_names
    return np.array(
        [np.log(params[n]) if n in pos else params[n] for n in spec.free_names]
    )


def transform_jacobian(spec: ModelSpec, u) -> np.ndarray:
    """Diagonal of d(natural)/d(unconstrained) at ``u``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    pos = spec.positive_names
    return np.array([np.exp(x) if n in pos else 1.0 for n, x in zip(spec.free_names, u)])


# ---------------------------------------------------------------------------
# means


def _time_power(t, power):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DataError("time must be nonnegative")
    with np.errstate(divide="ignore"):
        return np.where(t > 0, np.power(np.where(t > 0, t, 1.0), power), 0.0)


def latent_mean(spec: ModelSpec, params: Parameters, subject: SubjectRecord, t):
    """Deterministic part of the latent process at time(s) ``t``."""
    ed = subject.ed
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DataError(f"time must be nonnegative, got {t}")
    if spec.latent_mean == "paquid_power":
        p = params
        out = (p["beta1"] + p["beta2"] * ed) + (p["beta3"] + p["beta4"] * ed) * _time_power(
            t_arr, p["beta5"]
        )
    else:
        out = np.zeros_like(t_arr)
        for i, term in enumerate(spec.latent_terms):
            coef = params[f"beta{i + 1}"]
            if term == "1":
                out = out + coef
            elif term == "ed":
                out = out + coef * ed
            elif term == "t":
                out = out + coef * t_arr
            else:
                out = out + coef * ed * t_arr
    return float(out) if np.ndim(out) == 0 else out


def equation_offsets(spec: ModelSpec, params: Parameters, subject: SubjectRecord, k: int) -> np.ndarray:
    """Test-specific fixed effects at each visit of the subject."""
    test = spec.tests[k]
    n = subject.n_visits
    out = np.zeros(n)
    if not test.terms:
        return out
    ed = subject.ed
    pra = np.zeros(n)
    pra[0] = 1.0
    for name, term in zip(spec.test_effect_names(k), test.terms):
        if term == "ed":
            x = np.full(n, ed)
        elif term == "pra":
            x = pra
        else:
            x = ed * pra
        out += params[name] * x
    return out


def intermediate_mean(spec, params, subject, k: int, j: int) -> float:
    if not 0 <= k < spec.K or not 0 <= j < subject.n_visits:
        raise IndexError(f"no test {k} / visit {j}")
    return float(
        latent_mean(spec, params, subject, subject.visit_times[j])
        + equation_offsets(spec, params, subject, k)[j]
    )


def mean_vector(spec: ModelSpec, params: Parameters, subject: SubjectRecord) -> np.ndarray:
    base = latent_mean(spec, params, subject, subject.visit_times)
    return np.concatenate([base + equation_offsets(spec, params, subject, k) for k in range(spec.K)])


# ---------------------------------------------------------------------------
# covariance


def brownian_cov(visit_times) -> np.ndarray:
    t = np.asarray(visit_times, dtype=float).reshape(-1)
    if np.any(t < 0):
        raise DataError("visit times must be nonnegative")
    if np.any(np.diff(t) <= 0):
        raise DataError("visit times must be strictly increasing")
    return np.minimum.outer(t, t)


@dataclass(frozen=True, eq=False)
class CovarianceAssembly:
    gamma: np.ndarray
    sigma_lambda: np.ndarray
    sigma_d: np.ndarray
    sigma_eps: np.ndarray

    @property
    def sigma_total(self) -> np.ndarray:
        return self.sigma_lambda + self.sigma_d + self.sigma_eps


def assemble_cov(spec: ModelSpec, params: Parameters, subject: SubjectRecord) -> CovarianceAssembly:
    for name in spec.positive_names:
        if name.startswith("sigma") and not params[name] > 0:
            raise DataError(f"{name} must be positive")
    n = subject.n_visits
    K = spec.K
    gamma = brownian_cov(subject.visit_times)
    block = gamma.copy()
    if spec.latent_random_intercept:
        block += params["sigma_a1"] ** 2
    sigma_lambda = np.tile(block, (K, K))
    sigma_d = np.zeros((K * n, K * n))
    sigma_eps = np.zeros((K * n, K * n))
    for k, test in enumerate(spec.tests):
        sl = slice(k * n, (k + 1) * n)
        if test.has_random_effect:
            sigma_d[sl, sl] = params[spec.test_param(k, "sigma_d")] ** 2
        if test.has_error_term:
            sigma_eps[sl, sl] = np.eye(n) * params[spec.test_param(k, "sigma_eps")] ** 2
    return CovarianceAssembly(gamma, sigma_lambda, sigma_d, sigma_eps)


def covariance_matrix(spec: ModelSpec, params: Parameters, subject: SubjectRecord) -> np.ndarray:
    """Sigma_i computed directly (same result as ``assemble_cov(...).sigma_total``)."""
    t = subject.visit_times
    n = t.size
    block = np.minimum.outer(t, t)
    if spec.latent_random_intercept:
        block = block + params["sigma_a1"] ** 2
    cov = np.tile(block, (spec.K, spec.K))
    for k, test in enumerate(spec.tests):
        sl = slice(k * n, (k + 1) * n)
        if test.has_random_effect:
            cov[sl, sl] += params[spec.test_param(k, "sigma_d")] ** 2
        if test.has_error_term:
            idx = np.arange(k * n, (k + 1) * n)
            cov[idx, idx] += params[spec.test_param(k, "sigma_eps")] ** 2
    return cov


def moments(spec: ModelSpec, params: Parameters, subject: SubjectRecord):
    return mean_vector(spec, params, subject), covariance_matrix(spec, params, subject)


# ---------------------------------------------------------------------------
# cut-offs and boxes


class CutoffError(ValueError):
    pass


def cutoff_grid(spec: ModelSpec, params: Parameters, k: int) -> np.ndarray:
    """Finite cut-offs ``c_1 .. c_{M-1}`` of test ``k`` (strictly increasing)."""
    test = spec.tests[k]
    if isinstance(test.cutoff, SingleThreshold):
        return np.array([params[spec.test_param(k, "threshold")]])
    M = test.n_categories
    scale = params[spec.test_param(k, "scale")]
    power = params[spec.test_param(k, "power")]
    if not (scale > 0 and power > 0):
        raise CutoffError(f"test {test.name}: grid scale and power must be positive")
    top = (
        test.cutoff.fixed_top
        if test.cutoff.fixed_top is not None
        else params[spec.test_param(k, "top")]
    )
    m = np.arange(1, M - 2)
    cuts = np.empty(M - 1)
    cuts[: M - 3] = top - scale * np.power((M - 1 - m).astype(float), power)
    cuts[M - 3] = params[spec.test_param(k, "c_penult")]
    cuts[M - 2] = top
    bad = np.flatnonzero(np.diff(cuts) <= 0)
    if bad.size:
        i = int(bad[0])
        raise CutoffError(
            f"test {test.name}: cut-offs not increasing, c_{i + 1}={cuts[i]:.6g} "
            f">= c_{i + 2}={cuts[i + 1]:.6g}"
        )
    return cuts


def category_bounds(spec: ModelSpec, params: Parameters, k: int):
    """Lower/upper bound arrays indexed by observed category."""
    test = spec.tests[k]
    cuts = cutoff_grid(spec, params, k)
    if test.kind == "binary":
        eta = cuts[0]
        return np.array([eta, -np.inf]), np.array([np.inf, eta])
    ext = np.concatenate([[-np.inf], cuts, [np.inf]])
    return ext[:-1], ext[1:]


def categorize(spec: ModelSpec, params: Parameters, k: int, theta) -> np.ndarray:
    """Observed category of test ``k`` for intermediate values ``theta``."""
    test = spec.tests[k]
    cuts = cutoff_grid(spec, params, k)
    theta = np.asarray(theta, dtype=float)
    if test.kind == "binary":
        return (theta <= cuts[0]).astype(np.int64)
    return np.searchsorted(cuts, theta, side="right").astype(np.int64)


def observation_box(spec: ModelSpec, params: Parameters, subject: SubjectRecord) -> OrthantBox:
    n = subject.n_visits
    lower = np.full(spec.K * n, -np.inf)
    upper = np.full(spec.K * n, np.inf)
    for k, test in enumerate(spec.tests):
        y = subject.observations[k]
        observed = y != MISSING
        if np.any(y[observed] < 0) or np.any(y[observed] >= test.n_categories):
            raise DataError(
                f"subject {subject.id}: test {test.name} value outside 0..{test.n_categories - 1}"
            )
        lo_tab, hi_tab = category_bounds(spec, params, k)
        sl = slice(k * n, (k + 1) * n)
        lower[sl] = np.where(observed, lo_tab[np.where(observed, y, 0)], -np.inf)
        upper[sl] = np.where(observed, hi_tab[np.where(observed, y, 0)], np.inf)
    return OrthantBox(lower, upper)


def validate_subject(spec: ModelSpec, subject: SubjectRecord) -> None:
    if subject.observations.shape[0] != spec.K:
        raise DataError(
            f"subject {subject.id}: {subject.observations.shape[0]} tests, model has {spec.K}"
        )
    for k, test in enumerate(spec.tests):
        y = subject.observations[k]
        bad = (y != MISSING) & ((y < 0) | (y >= test.n_categories))
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"subject {subject.id}: test {test.name} visit {j} value {y[j]} "
                f"outside 0..{test.n_categories - 1}"
            )


# ---------------------------------------------------------------------------
# identifiability


def validate_identifiability(spec: ModelSpec) -> list[str]:
    """Violations of sufficient identifiability conditions."""
    out: list[str] = []
    if all(test.terms for test in spec.tests):
        out.append("covariates: every test equation has explanatory variables; one must have none")
    equations = [("latent process", spec.latent_terms)] + [
        (f"test {t.name}", t.terms) for t in spec.tests
    ]
    for label, terms in equations:
        dup = sorted({x for x in terms if terms.count(x) > 1})
        if dup:
            out.append(f"covariates: duplicated explanatory variables in {label}: {dup}")
    if all(test.has_random_effect for test in spec.tests):
        out.append("random effects: every test equation has a random effect; one must have none")
    has_intercept = spec.latent_mean == "paquid_power" or "1" in spec.latent_terms
    if has_intercept and "beta1" not in spec.fixed:
        pinned = False
        for k, test in enumerate(spec.tests):
            if isinstance(test.cutoff, PowerGrid) and test.cutoff.fixed_top is not None:
                pinned = True
            names = [v for (kk, _), v in _parameter_layout(spec)[2].items()
                     if kk == k and v.startswith("eta")]
            if any(n in spec.fixed for n in names):
                pinned = True
        if not pinned:
            out.append("cut-offs: no cut-off is fixed and the latent intercept is free")
    return out


# ---------------------------------------------------------------------------
# the dementia / MMSE model


def paquid_spec(**overrides) -> ModelSpec:
    """Dementia diagnosis (binary) and MMSE (0..30) sharing a power-of-time
    latent process with a random intercept."""
    tests = (
        TestSpec("dementia", "binary", 2, SingleThreshold(), has_random_effect=True),
        TestSpec(
            "mmse",
            "ordinal",
            31,
            PowerGrid(fixed_top=40.0),
            has_error_term=True,
            terms=("ed", "pra", "ed:pra"),
        ),
    )
    kwargs = dict(tests=tests, latent_mean="paquid_power", latent_random_intercept=True,
                  time_origin=65.0, entry_truncation=True)
    kwargs.update(overrides)
    return ModelSpec(**kwargs)


# published estimates for the dementia/MMSE model, used as simulation targets
REFERENCE_VALUES = {
    "beta1": 32.90,
    "beta2": 2.34,
    "beta3": -0.022,
    "beta4": 0.0013,
    "beta5": 1.84,
    "beta2_1": 1.69,
    "beta2_2": -1.65,
    "beta2_3": 0.29,
    "eta0": 24.41,
    "eta1": 3.93,
    "eta2": 0.58,
    "eta3": 36.64,
    "sigma_a1": 2.04,
    "sigma_d1": 2.68,
    "sigma_eps2": 2.55,
}

# and their standard errors
REFERENCE_SE = {
    "beta1": 0.41,
    "beta2": 0.55,
    "beta3": 0.008,
    "beta4": 0.0018,
    "beta5": 0.11,
    "beta2_1": 0.45,
    "beta2_2": 0.17,
    "beta2_3": 0.20,
    "eta0": 0.65,
    "eta1": 0.19,
    "eta2": 0.006,
    "eta3": 0.17,
    "sigma_a1": 0.21,
    "sigma_d1": 0.20,
    "sigma_eps2": 0.13,
}

# starting values of the simulation study
SIMULATION_START = {
    "beta1": 38.5,
    "beta2": 0.0,
    "beta3": 0.0,
    "beta4": 0.0,
    "beta5": 1.0,
    "beta2_1": 0.0,
    "beta2_2": 0.0,
    "beta2_3": 0.0,
    "eta0": 30.0,
    "eta1": 1.0,
    "eta2": 1.0,
    "eta3": 39.0,
    "sigma_a1": 1e-5,
    "sigma_d1": 10.0,
    "sigma_eps2": 10.0,
}

PARAMETER_LABELS = {
    "beta1": "intercept for Lambda",
    "beta2": "effect of education on intercept",
    "beta3": "slope of Lambda",
    "beta4": "effect of education on slope",
    "beta5": "power of t",
    "beta2_1": "effect of education on MMSE",
    "beta2_2": "practice effect for MMSE",
    "beta2_3": "interaction education x practice effect",
    "eta0": "threshold for dementia",
    "eta1": "multiplicative factor for the cut-off model of MMSE",
    "eta2": "power for the cut-off model of MMSE",
    "eta3": "value of c_29",
    "sigma_a1": "standard deviation of the random intercept",
    "sigma_d1": "standard deviation of the random effect for dementia",
    "sigma_eps2": "standard deviation of the MMSE error",
}
