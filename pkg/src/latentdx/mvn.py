"""Rectangle probabilities of multivariate normal distributions.

Dimensions one and two are computed in closed form (the bivariate case by
Gauss-Legendre quadrature of Plackett's identity). Higher dimensions use the
separation-of-variables transform with greedy variable reordering, integrated
by a randomly shifted rank-1 lattice rule; the spread across shifts gives the
error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr, ndtri

from .lattice import next_prime, shifted_tent_points

DEFAULT_TARGET_ABS_ERROR = 1e-4
DEFAULT_MAX_SAMPLES = 200_000
DEFAULT_SHIFTS = 12
MAX_CONDITION = 1e12
_FIRST_LEVEL = 7  # first lattice has next_prime(2**7) points


class FactorizationError(ValueError):
    """Covariance matrix is not (numerically) positive definite."""

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


@dataclass(frozen=True)
class OrthantBox:
    """Axis-aligned box ``lower < x <= upper`` with extended-real bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if lo.size < 1:
            raise ValueError("box dimension must be at least 1")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("box bounds must not be NaN")
        bad = np.flatnonzero(~(lo < hi))
        if bad.size:
            j = int(bad[0])
            raise ValueError(f"box axis {j}: lower {lo[j]} is not below upper {hi[j]}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def full(cls, dim: int) -> "OrthantBox":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    def permuted(self, perm) -> "OrthantBox":
        return OrthantBox(self.lower[perm], self.upper[perm])


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    error_estimate: float
    samples: int


def univariate_cdf(x):
    """Standard normal CDF on the extended reals."""
    return ndtr(x)


def interval_prob(lo, hi):
    """``Phi(hi) - Phi(lo)`` evaluated on the tail that avoids cancellation."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    flip = lo > -hi
    return np.where(flip, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


# ---------------------------------------------------------------------------
# bivariate normal


@lru_cache(maxsize=1)
def _half_rule():
    x, w = leggauss(20)
    pos = x > 0
    xh, wh = x[pos], w[pos]
    return np.concatenate([1.0 - xh, 1.0 + xh]), np.concatenate([wh, wh])


def bvn_upper(h: float, k: float, r: float) -> float:
    """``P(X > h, Y > k)`` for standard bivariate normal with correlation ``r``."""
    if h == np.inf or k == np.inf:
        return 0.0
    if h == -np.inf:
        return 1.0 if k == -np.inf else float(ndtr(-k))
    if k == -np.inf:
        return float(ndtr(-h))
    if r == 0.0:
        return float(ndtr(-h) * ndtr(-k))
    x, w = _half_rule()
    tp = 2.0 * math.pi
    hk = h * k
    if abs(r) < 0.925:
        hs = (h * h + k * k) / 2.0
        asr = math.asin(r) / 2.0
        sn = np.sin(asr * x)
        bvn = float(np.exp((sn * hk - hs) / (1.0 - sn * sn)) @ w)
        bvn = bvn * asr / tp + float(ndtr(-h) * ndtr(-k))
    else:
        if r < 0:
            k = -k
            hk = -hk
        bvn = 0.0
        if abs(r) < 1.0:
            a_s = 1.0 - r * r
            a = math.sqrt(a_s)
            bs = (h - k) ** 2
            asr = -(bs / a_s + hk) / 2.0
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 80.0
            if asr > -100.0:
                bvn = a * math.exp(asr) * (
                    1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s
                )
            if hk > -100.0:
                b = math.sqrt(bs)
                sp = math.sqrt(tp) * float(ndtr(-b / a))
                bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
            a /= 2.0
            xs = (a * x) ** 2
            asr_v = -(bs / xs + hk) / 2.0
            ok = asr_v > -100.0
            xs = xs[ok]
            sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs)
            rs = np.sqrt(1.0 - xs)
            ep = np.exp(-(hk / 2.0) * xs / (1.0 + rs) ** 2) / rs
            bvn = (a * float((np.exp(asr_v[ok]) * (sp - ep)) @ w[ok]) - bvn) / tp
        if r > 0:
            bvn += float(ndtr(-max(h, k)))
        elif h >= k:
            bvn = -bvn
        else:
            if h < 0:
                lo_mass = float(ndtr(k) - ndtr(h))
            else:
                lo_mass = float(ndtr(-h) - ndtr(-k))
            bvn = lo_mass - bvn
    return min(1.0, max(0.0, bvn))


def bvn_rectangle(lo, hi, r: float) -> float:
    """Standardized bivariate rectangle probability by inclusion-exclusion."""
    p = (
        bvn_upper(lo[0], lo[1], r)
        - bvn_upper(hi[0], lo[1], r)
        - bvn_upper(lo[0], hi[1], r)
        + bvn_upper(hi[0], hi[1], r)
    )
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# reordering and separation of variables


def _check_inputs(mean, cov, box: OrthantBox):
    mean = np.asarray(mean, dtype=float).reshape(-1)
    cov = np.asarray(cov, dtype=float)
    d = box.dim
    if mean.size != d or cov.shape != (d, d):
        raise ValueError(
            f"dimension mismatch: mean {mean.size}, cov {cov.shape}, box {d}"
        )
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
        raise ValueError("covariance matrix is not symmetric")
    return mean, cov


def check_condition(cov: np.ndarray) -> None:
    """Reject covariances whose correlation matrix is near singular."""
    sd = np.sqrt(np.diag(cov))
    if not np.all(sd > 0):
        j = int(np.flatnonzero(~(sd > 0))[0])
        raise FactorizationError(f"non-positive variance at index {j}", pivot=j)
    corr = cov / np.outer(sd, sd)
    ev = np.linalg.eigvalsh(corr)
    if ev[0] <= 0 or ev[-1] / ev[0] > MAX_CONDITION:
        raise FactorizationError(
            f"covariance is singular or ill-conditioned (eigenvalues {ev[0]:.3g}..{ev[-1]:.3g})"
        )


def reorder_and_factor(cov, box: OrthantBox, mean=None):
    """Greedy variable ordering with the matching Cholesky factor.

    At each step the remaining variable with the smallest conditional
    probability of falling in its interval is moved forward. Returns the
    permutation ``perm`` (new position -> original index) and the lower
    triangular ``L`` with ``L @ L.T == cov[perm][:, perm]``.
    """
    cov = np.array(cov, dtype=float)
    d = cov.shape[0]
    if cov.shape != (d, d) or box.dim != d:
        raise ValueError(f"dimension mismatch: cov {cov.shape}, box {box.dim}")
    mu = np.zeros(d) if mean is None else np.asarray(mean, dtype=float)
    a = box.lower - mu
    b = box.upper - mu
    perm = np.arange(d)
    L = np.zeros((d, d))
    y = np.zeros(d)
    scale = max(float(np.max(np.abs(np.diag(cov)))), 1e-300)
    for i in range(d):
        s = L[i:, :i] @ y[:i]
        var = np.diag(cov)[i:] - np.sum(L[i:, :i] ** 2, axis=1)
        bad = np.flatnonzero(var <= 1e-14 * scale)
        if bad.size:
            j = int(perm[i + bad[0]])
            raise FactorizationError(f"covariance not positive definite at pivot {j}", pivot=j)
        sd = np.sqrt(var)
        with np.errstate(invalid="ignore"):
            lo = (a[i:] - s) / sd
            hi = (b[i:] - s) / sd
        mass = interval_prob(lo, hi)
        j = i + int(np.argmin(mass))
        if j != i:
            perm[[i, j]] = perm[[j, i]]
            a[[i, j]] = a[[j, i]]
            b[[i, j]] = b[[j, i]]
            cov[[i, j], :] = cov[[j, i], :]
            cov[:, [i, j]] = cov[:, [j, i]]
            L[[i, j], :i] = L[[j, i], :i]
            lo[[0, j - i]] = lo[[j - i, 0]]
            hi[[0, j - i]] = hi[[j - i, 0]]
            mass[[0, j - i]] = mass[[j - i, 0]]
            sd[[0, j - i]] = sd[[j - i, 0]]
        L[i, i] = sd[0]
        if i + 1 < d:
            L[i + 1 :, i] = (cov[i + 1 :, i] - L[i + 1 :, :i] @ L[i, :i]) / L[i, i]
        y[i] = _truncated_mean(lo[0], hi[0], mass[0])
    return perm, L


def _truncated_mean(lo: float, hi: float, mass: float) -> float:
    if mass > 1e-100:
        phi_lo = 0.0 if np.isinf(lo) else math.exp(-0.5 * lo * lo)
        phi_hi = 0.0 if np.isinf(hi) else math.exp(-0.5 * hi * hi)
        return (phi_lo - phi_hi) / (math.sqrt(2.0 * math.pi) * mass)
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    return float(lo) if np.isfinite(lo) else float(hi)


def sov_integrand(L: np.ndarray, a: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Separation-of-variables integrand for a batch of problems.

    ``L`` is ``(P, d, d)`` lower triangular, ``a``/``b`` are ``(P, d)``
    centered bounds, and ``w`` is ``(N, d-1)`` points in the unit cube.
    Returns ``(P, N)`` integrand values whose mean is the probability.
    """
    P, d = a.shape
    N = w.shape[0]
    f = np.ones((P, N))
    y = np.empty((P, N, max(d - 1, 0)))
    diag = np.einsum("pii->pi", L)
    for i in range(d):
        if i == 0:
            s = np.zeros((P, 1))
        else:
            s = np.einsum("pnk,pk->pn", y[:, :, :i], L[:, i, :i])
        lo = (a[:, i, None] - s) / diag[:, i, None]
        hi = (b[:, i, None] - s) / diag[:, i, None]
        flip = lo > -hi
        pl = np.where(flip, ndtr(-hi), ndtr(lo))
        width = np.where(flip, ndtr(-lo), ndtr(hi)) - pl
        f *= width
        if i < d - 1:
            wi = w[None, :, i]
            q = pl + np.where(flip, 1.0 - wi, wi) * width
            np.clip(q, 1e-300, 1.0 - 1e-16, out=q)
            z = ndtri(q)
            y[:, :, i] = np.where(flip, -z, z)
    return f


def lattice_size(level: int) -> int:
    return next_prime(2**level)


def level_shifts(seed: int, level: int, n_shifts: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(level)])
    return rng.random((n_shifts, dim))


_CHUNK_ELEMENTS = 1 << 22


def lattice_estimate(L, a, b, seed: int, level: int, n_shifts: int = DEFAULT_SHIFTS):
    """Estimate a batch of standardized problems on one lattice level.

    Returns ``(values, errors)`` each of shape ``(P,)``. All problems share
    the same points (common random numbers).
    """
    P, d = a.shape
    n = lattice_size(level)
    shifts = level_shifts(seed, level, n_shifts, d - 1)
    pts = shifted_tent_points(n, shifts)
    # bound the working set to roughly _CHUNK_ELEMENTS floats
    chunk = max(1, _CHUNK_ELEMENTS // (P * d))
    vals = np.zeros((P, n_shifts))
    for s in range(n_shifts):
        for start in range(0, n, chunk):
            vals[:, s] += sov_integrand(L, a, b, pts[s, start:start + chunk]).sum(axis=1)
    vals /= n
    est = vals.mean(axis=1)
    err = vals.std(axis=1, ddof=1) / math.sqrt(n_shifts)
    return est, err


def orthant_prob(
    mean,
    cov,
    box: OrthantBox,
    target_abs_error: float = DEFAULT_TARGET_ABS_ERROR,
    max_samples: int = DEFAULT_MAX_SAMPLES,
    seed: int = 0,
    n_shifts: int = DEFAULT_SHIFTS,
) -> IntegrationResult:
    """``P(mean + Z in box)`` for ``Z ~ N(0, cov)``.

    Lattice sizes grow geometrically until the standard error across the
    random shifts falls below ``target_abs_error`` or the next lattice would
    exceed ``max_samples`` points per shift.
    """
    if not target_abs_error > 0:
        raise ValueError("target_abs_error must be positive")
    mean, cov = _check_inputs(mean, cov, box)
    d = box.dim
    check_condition(cov)
    a = box.lower - mean
    b = box.upper - mean
    if np.any(~(a < b)):
        # an interval thinner than the rounding of the mean
        return IntegrationResult(0.0, 0.0, 0)
    if d == 1:
        sd = math.sqrt(cov[0, 0])
        return IntegrationResult(float(interval_prob(a[0] / sd, b[0] / sd)), 0.0, 0)
    if d == 2:
        sd = np.sqrt(np.diag(cov))
        r = float(cov[0, 1] / (sd[0] * sd[1]))
        return IntegrationResult(bvn_rectangle(a / sd, b / sd, r), 0.0, 0)

    perm, L = reorder_and_factor(cov, OrthantBox(a, b))
    ap, bp = a[perm][None], b[perm][None]
    Lb = L[None]
    total = 0
    level = _FIRST_LEVEL
    while True:
        est, err = lattice_estimate(Lb, ap, bp, seed, level, n_shifts)
        total += n_shifts * lattice_size(level)
        if err[0] <= target_abs_error or lattice_size(level + 1) > max_samples:
            break
        level += 1
    value = min(1.0, max(0.0, float(est[0])))
    return IntegrationResult(value, float(err[0]), total)
