"""Rank-1 lattice rules built by fast component-by-component search.

Generating vectors are computed on demand for prime point counts using the
FFT formulation of the CBC construction with product weights and the
shift-invariant Bernoulli kernel, then cached.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n: int) -> int:
    while not is_prime(n):
        n += 1
    return n


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group modulo the prime ``p``."""
    if p == 2:
        return 1
    factors = _prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in factors):
            return g
    raise ValueError(f"no primitive root for {p}")


def _kernel(x: np.ndarray) -> np.ndarray:
    # 2*pi^2 * B2(x), B2 the second Bernoulli polynomial
    return 2.0 * np.pi**2 * (x * x - x + 1.0 / 6.0)


@lru_cache(maxsize=64)
def generating_vector(n: int, dim: int) -> tuple[int, ...]:
    """CBC generating vector for an ``n``-point lattice in ``dim`` dimensions.

    ``n`` must be prime. Weights are ``1/j`` for coordinate ``j`` (1-based),
    which suits integrands whose leading coordinates matter most, as in the
    reordered separation-of-variables transform.
    """
    if not is_prime(n):
        raise ValueError(f"lattice size must be prime, got {n}")
    if dim < 1:
        return ()
    if n < 5:
        return tuple([1] * dim)
    g = primitive_root(n)
    m = n - 1
    powers = np.empty(m, dtype=np.int64)
    powers[0] = 1
    for k in range(1, m):
        powers[k] = (powers[k - 1] * g) % n
    psi = _kernel(powers / n)
    psi_hat = np.fft.fft(psi)
    # product over chosen coordinates, indexed by k = 0..n-1
    prod = np.ones(n)
    z = []
    for j in range(1, dim + 1):
        gamma = 1.0 / j
        # corr[b] = sum_a prod[g^a] * psi[a + b]
        p_perm = prod[powers]
        corr = np.real(np.fft.ifft(np.conj(np.fft.fft(p_perm)) * psi_hat))
        b = int(np.argmin(corr))
        zj = int(powers[b])
        z.append(zj)
        k = np.arange(n, dtype=np.int64)
        prod = prod * (1.0 + gamma * _kernel(((k * zj) % n) / n))
    return tuple(z)


def lattice_points(n: int, dim: int) -> np.ndarray:
    """Unshifted ``(n, dim)`` lattice ``frac(k z / n)``."""
    z = np.asarray(generating_vector(n, dim), dtype=np.int64)
    k = np.arange(n, dtype=np.int64)[:, None]
    return ((k * z[None, :]) % n) / n


def shifted_tent_points(n: int, shifts: np.ndarray) -> np.ndarray:
    """Randomly shifted, tent-periodized copies of the lattice.

    ``shifts`` has shape ``(R, dim)``; the result has shape ``(R, n, dim)``.
    """
    R, dim = shifts.shape
    base = lattice_points(n, dim)
    x = base[None, :, :] + shifts[:, None, :]
    x -= np.floor(x)
    return 1.0 - np.abs(2.0 * x - 1.0)
