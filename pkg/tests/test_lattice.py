from __future__ import annotations

import numpy as np
import pytest

from latentdx.lattice import (
    _kernel,
    generating_vector,
    is_prime,
    lattice_points,
    next_prime,
    primitive_root,
    shifted_tent_points,
)


def test_primes():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert next_prime(128) == 131
    assert next_prime(131) == 131


@pytest.mark.parametrize("p", [5, 7, 31, 131, 257])
def test_primitive_root_generates_group(p):
    g = primitive_root(p)
    assert sorted(pow(g, k, p) for k in range(p - 1)) == list(range(1, p))


def _naive_cbc_errors(n, dim):
    """Worst-case error criterion of every candidate at each CBC step,
    evaluated by direct summation."""
    k = np.arange(n)
    prod = np.ones(n)
    best = []
    z = generating_vector(n, dim)
    for j in range(1, dim + 1):
        crit = [np.sum(prod * (1.0 + _kernel(((k * c) % n) / n) / j)) for c in range(1, n)]
        best.append((min(crit), crit[z[j - 1] - 1]))
        prod = prod * (1.0 + _kernel(((k * z[j - 1]) % n) / n) / j)
    return best


@pytest.mark.parametrize("n,dim", [(31, 4), (61, 5), (131, 3)])
def test_fast_cbc_matches_direct_search(n, dim):
    for lowest, chosen in _naive_cbc_errors(n, dim):
        assert chosen == pytest.approx(lowest, rel=1e-10, abs=1e-10)


def test_lattice_points_are_a_group():
    n, dim = 131, 4
    pts = lattice_points(n, dim)
    assert pts.shape == (n, dim)
    assert np.all((pts >= 0) & (pts < 1))
    # each coordinate of a prime lattice visits every multiple of 1/n once
    for j in range(dim):
        assert sorted(np.round(pts[:, j] * n).astype(int)) == list(range(n))


def test_tent_points_in_unit_cube():
    shifts = np.random.default_rng(0).random((3, 5))
    pts = shifted_tent_points(131, shifts)
    assert pts.shape == (3, 131, 5)
    assert np.all((pts >= 0) & (pts <= 1))


def test_lattice_rule_integrates_smooth_periodic_function():
    # integrand with mean exactly 1; a good lattice is far better than random
    n, dim = next_prime(4096), 4
    pts = lattice_points(n, dim)
    f = np.prod(1.0 + 0.5 * np.cos(2 * np.pi * pts) / np.arange(1, dim + 1), axis=1)
    assert abs(f.mean() - 1.0) < 1e-6


def test_generating_vector_requires_prime():
    with pytest.raises(ValueError):
        generating_vector(128, 3)
