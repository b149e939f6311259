import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypzeta.homog import (
    HomogPoly,
    enumerate_monomials,
    format_poly,
    homog_dim,
    parse_poly,
    partial_derivative,
    poly_multiply,
    power_coefficients,
    power_table,
    sigma_f,
)


def test_grevlex_descending_order():
    idx = enumerate_monomials(1, 2)
    assert [tuple(e) for e in idx] == [(2, 0), (1, 1), (0, 2)]
    idx = enumerate_monomials(2, 2)
    assert [tuple(e) for e in idx] == [(2, 0, 0), (1, 1, 0), (0, 2, 0), (1, 0, 1), (0, 1, 1), (0, 0, 2)]


@given(st.integers(0, 4), st.integers(0, 7))
def test_rank_unrank_roundtrip(n, k):
    idx = enumerate_monomials(n, k)
    assert len(idx) == homog_dim(n, k)
    for i in range(len(idx)):
        assert idx.rank(idx.unrank(i)) == i
    assert np.array_equal(idx.ranks(np.asarray(idx.exps)), np.arange(len(idx)))


def _as_dict(f):
    return {e: c for c, e in f.terms()}


def _random_poly(rng, n, k, mod):
    return HomogPoly(n, k, rng.integers(0, mod, homog_dim(n, k)), mod)


@settings(max_examples=30)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 4), st.integers(0, 10**6))
def test_multiply_matches_dictionary_product(n, a, b, seed):
    rng = np.random.default_rng(seed)
    mod = 7**3
    f, g = _random_poly(rng, n, a, mod), _random_poly(rng, n, b, mod)
    want = {}
    for e1, c1 in _as_dict(f).items():
        for e2, c2 in _as_dict(g).items():
            e = tuple(x + y for x, y in zip(e1, e2))
            want[e] = (want.get(e, 0) + c1 * c2) % mod
    want = {e: c for e, c in want.items() if c}
    assert _as_dict(poly_multiply(f, g)) == want


def test_product_rule(rng):
    mod = 11**2
    f, g = _random_poly(rng, 2, 3, mod), _random_poly(rng, 2, 2, mod)
    for i in range(3):
        lhs = partial_derivative(poly_multiply(f, g), i)
        rhs = poly_multiply(partial_derivative(f, i), g) + poly_multiply(f, partial_derivative(g, i))
        assert lhs == rhs


def test_euler_identity(rng):
    # sum_i x_i d_i f = deg(f) f
    mod = 13
    f = _random_poly(rng, 3, 4, mod)
    acc = HomogPoly.zero(3, 4, mod)
    for i in range(4):
        xi = HomogPoly.from_terms(3, [(1, tuple(int(j == i) for j in range(4)))], mod)
        acc = acc + poly_multiply(xi, partial_derivative(f, i))
    assert acc == f.scale(4)


def test_power_routines_agree(rng):
    mod = 5**4
    f = _random_poly(rng, 2, 3, 5)
    table = power_table(f, 6, mod)
    for j, fj in enumerate(table):
        assert fj == power_coefficients(f, j, mod)


def test_sigma_scales_exponents():
    f = parse_poly("x0^2 + 3*x1*x2", 2, 7)
    s = sigma_f(f, 7)
    assert s.degree == 14
    assert _as_dict(s) == {(14, 0, 0): 1, (0, 7, 7): 3}


def test_parse_and_format_roundtrip():
    f = parse_poly("x0^4 - 2*x1^4 + x2^4 + 3*x0*x1*x2^2", 2, 11)
    assert _as_dict(f)[(0, 4, 0)] == 9
    assert parse_poly(format_poly(f), 2, 11) == f


@pytest.mark.parametrize("bad", ["", "x0^2+x3^2", "x0^2+y^2", "x0^2 + *x1^2"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_poly(bad, 2, 7)


def test_mixed_degree_rejected():
    with pytest.raises(ValueError):
        parse_poly("x0^2 + x1^3", 1, 7)


def test_big_modulus_uses_python_ints():
    mod = 7**30
    f = HomogPoly.from_terms(1, [(mod - 1, (1, 0)), (mod - 2, (0, 1))], mod)
    g = poly_multiply(f, f)
    assert _as_dict(g) == {(2, 0): 1, (1, 1): 4, (0, 2): 4}
