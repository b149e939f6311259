"""Ground-truth tools checked against independent hand-rolled computations."""

import itertools

import numpy as np
import pytest

from hypzeta.cohomology import compute_basis, final_reduce
from hypzeta.homog import homog_dim
from hypzeta.oracle import (
    ExtField,
    count_points,
    counts_from_zeta,
    fedder_is_fsplit,
    find_irreducible,
    is_irreducible,
    naive_reduce,
    power_sums,
)

from conftest import fermat, random_smooth


def _naive_count_prime_field(X):
    p, n = X.p, X.n
    terms = X.f.terms()
    seen = 0
    for pt in itertools.product(range(p), repeat=n + 1):
        if not any(pt):
            continue
        lead = next(x for x in pt if x)
        if lead != 1:
            continue
        val = sum(c * np.prod([pow(x, e, p) for x, e in zip(pt, ex)]) for c, ex in terms) % p
        seen += val == 0
    return seen


def _naive_count_quadratic(X):
    """#X(F_{p^2}) with F_{p^2} = F_p[t]/(t^2 - g) for a non-square g."""
    p, n = X.p, X.n
    g = next(a for a in range(2, p) if pow(a, (p - 1) // 2, p) == p - 1)

    def mul(a, b):
        return ((a[0] * b[0] + g * a[1] * b[1]) % p, (a[0] * b[1] + a[1] * b[0]) % p)

    def power(a, e):
        out = (1, 0)
        for _ in range(e):
            out = mul(out, a)
        return out

    elems = [(a, b) for a in range(p) for b in range(p)]
    terms = X.f.terms()
    count = 0
    for lead in range(n + 1):
        for rest in itertools.product(elems, repeat=n - lead):
            pt = [(0, 0)] * lead + [(1, 0)] + list(rest)
            acc = [0, 0]
            for c, ex in terms:
                mono = (c % p, 0)
                for x, e in zip(pt, ex):
                    mono = mul(mono, power(x, e))
                acc[0] += mono[0]
                acc[1] += mono[1]
            count += acc[0] % p == 0 and acc[1] % p == 0
    return count


@pytest.mark.parametrize("p", [5, 7, 11])
def test_count_points_prime_field_matches_enumeration(p, rng):
    X = random_smooth(p, 2, 3, rng)
    assert count_points(X, 1) == _naive_count_prime_field(X)


@pytest.mark.parametrize("p", [5, 7])
def test_count_points_quadratic_extension(p, rng):
    X = random_smooth(p, 2, 3, rng)
    assert count_points(X, 2) == _naive_count_quadratic(X)


def test_fermat_cubic_known_counts():
    X = fermat(7, 2, 3)
    assert count_points(X, 1) == 9
    assert count_points(X, 2) == 63
    assert counts_from_zeta([1, 1, 7], 2, 7, 1) == 9
    assert counts_from_zeta([1, 1, 7], 2, 7, 2) == 63


def test_power_sums_newton_identities():
    # (1 - aT)(1 - bT) with a=2, b=3
    assert power_sums([1, -5, 6], 3) == [5, 13, 35]


def test_count_budget_guard():
    X = fermat(13, 3, 4)
    with pytest.raises(RuntimeError):
        count_points(X, 3, budget=10**5)


@pytest.mark.parametrize("p,r", [(3, 2), (5, 3), (7, 2), (11, 3)])
def test_extension_field_axioms(p, r):
    mod = find_irreducible(p, r)
    assert is_irreducible(mod, p)
    F = ExtField(p, r)
    rs = np.random.default_rng(p * r)
    for _ in range(50):
        a, b, c = (int(x) for x in rs.integers(0, F.q, 3))
        assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    # every nonzero element has order dividing q - 1
    x = int(rs.integers(1, F.q))
    y = 1
    for _ in range(F.q - 1):
        y = F.mul(y, x)
    assert y == 1


def test_reducible_polynomials_are_rejected():
    # (t - 1)(t - 2) over F_5
    assert not is_irreducible([2, 2, 1], 5)
    # t^2 + 1 is irreducible over F_7 but not over F_5
    assert is_irreducible([1, 0, 1], 7)
    assert not is_irreducible([1, 0, 1], 5)


def test_fedder_on_fermat():
    # the Fermat quartic surface is F-split exactly when p = 1 mod 4
    assert fedder_is_fsplit(fermat(5, 3, 4).f, 5)
    assert fedder_is_fsplit(fermat(13, 3, 4).f, 13)
    assert not fedder_is_fsplit(fermat(7, 3, 4).f, 7)
    assert not fedder_is_fsplit(fermat(11, 3, 4).f, 11)
    # the Fermat cubic is ordinary exactly when p = 1 mod 3
    assert fedder_is_fsplit(fermat(7, 2, 3).f, 7)
    assert not fedder_is_fsplit(fermat(5, 2, 3).f, 5)


@pytest.mark.parametrize("p,n,d", [(7, 2, 3), (7, 2, 4), (5, 3, 4)])
def test_naive_reduce_agrees_with_final_reduce(p, n, d, rng):
    X = random_smooth(p, n, d, rng)
    B = compute_basis(X)
    mod = p**3
    for m in range(1, n + 1):
        k = d * m - n - 1
        if k < 0:
            continue
        g = rng.integers(0, mod, homog_dim(n, k))
        fast = [int(x) for x in final_reduce(g, m, B, mod)]
        slow = naive_reduce(g, m, X, B, mod)
        assert fast == slow
