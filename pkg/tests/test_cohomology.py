import numpy as np
import pytest

from hypzeta.cohomology import (
    Hypersurface,
    SingularInput,
    check_smooth,
    compute_basis,
    final_reduce,
    griffiths_dwork_relation,
    hodge_polygon,
    jacobian_map_matrix,
)
from hypzeta.homog import HomogPoly, homog_dim, partial_derivative, poly_multiply

from conftest import fermat, random_smooth


@pytest.mark.parametrize(
    "p,n,d,hodge",
    [(7, 2, 3, [1, 1]), (7, 2, 4, [3, 3]), (13, 2, 5, [6, 6]), (7, 3, 4, [1, 19, 1]), (11, 4, 3, [0, 5, 5, 0])],
)
def test_hodge_numbers_of_fermat(p, n, d, hodge):
    X = fermat(p, n, d)
    B = compute_basis(X)
    assert B.hodge_numbers == hodge
    assert len(B) == X.middle_dimension


def test_singular_inputs():
    cone = Hypersurface.from_text(7, 2, "x0^3 + x1^3")
    assert not check_smooth(cone)
    with pytest.raises(SingularInput):
        compute_basis(cone)
    nodal = Hypersurface.from_text(7, 2, "x0^3 + x1^3 - x0*x1*x2")
    assert not check_smooth(nodal)


def test_constructor_validation():
    f = HomogPoly.from_terms(2, [(1, (3, 0, 0))], 7)
    with pytest.raises(ValueError):
        Hypersurface(p=9, n=2, d=3, f=f)
    with pytest.raises(ValueError):
        Hypersurface(p=2, n=2, d=3, f=f)
    with pytest.raises(ValueError):
        Hypersurface(p=3, n=3, d=3, f=HomogPoly.from_terms(3, [(1, (3, 0, 0, 0))], 3))
    with pytest.raises(ValueError):
        Hypersurface(p=7, n=2, d=3, f=HomogPoly.from_terms(2, [(7, (3, 0, 0))], 7**2))


def test_jacobian_map_columns_are_partials(rng):
    X = random_smooth(7, 2, 3, rng)
    k = 3
    J = jacobian_map_matrix(X, k, 7)
    # the first column is mu_0 = x0 (degree 1), giving x0 * df/dx0
    x0 = HomogPoly.from_terms(2, [(1, (1, 0, 0))], 7)
    want = poly_multiply(x0, partial_derivative(X.f, 0))
    assert [int(c) for c in J.data[:, 0]] == [int(c) for c in want.coeffs]


def test_basis_monomials_map_to_unit_vectors(rng):
    X = random_smooth(7, 3, 4, rng)
    B = compute_basis(X)
    mod = 7**2
    offs = B.offsets()
    for sl in B.slices:
        for j, r in enumerate(sl.basis_ranks):
            g = np.zeros(homog_dim(3, sl.k), dtype=np.int64)
            g[r] = 1
            vec = final_reduce(g, sl.m, B, mod)
            want = np.zeros(len(B), dtype=np.int64)
            want[offs[sl.m] + j] = 1
            assert np.array_equal(np.asarray(vec, dtype=np.int64), want)


@pytest.mark.parametrize("p,n,d", [(7, 2, 4), (11, 2, 5), (7, 3, 4)])
def test_griffiths_dwork_relations_vanish(p, n, d, rng):
    X = random_smooth(p, n, d, rng)
    B = compute_basis(X)
    mod = p**4
    for m in range(1, n):
        deg = d * m - n
        if deg < 0:
            continue
        for i in range(n + 1):
            gp = HomogPoly(n, deg, rng.integers(0, mod, homog_dim(n, deg)), mod)
            rel = griffiths_dwork_relation(X, gp, i, m, mod)
            assert not np.any(np.asarray(final_reduce(rel, m + 1, B, mod), dtype=np.int64) % mod)


def test_hodge_polygon_vertices():
    assert hodge_polygon([1, 19, 1]) == [(0, 0), (1, 0), (20, 19), (21, 21)]
    assert hodge_polygon([0, 5, 5, 0]) == [(0, 0), (5, 5), (10, 15)]


def test_reduction_maps_cached_per_modulus(rng):
    X = random_smooth(7, 2, 3, rng)
    B = compute_basis(X)
    assert B.reduction_maps(49) is B.reduction_maps(49)
    assert B.reduction_maps(343) is not B.reduction_maps(49)


def test_fermat_cubic_basis_elements():
    B = compute_basis(fermat(7, 2, 3))
    assert B.elements == [((0, 0, 0), 1), ((1, 1, 1), 2)]


def test_single_relation_step():
    # x0 * df/dx0 at pole 2 equals (d/dx0 x0) Omega / f = Omega / f
    X = fermat(7, 2, 3)
    B = compute_basis(X)
    x0 = HomogPoly.from_terms(2, [(1, (1, 0, 0))], 7**3)
    g = poly_multiply(x0, partial_derivative(X.f_mod(7**3), 0))
    assert [int(c) for c in final_reduce(g, 2, B, 7**3)] == [1, 0]
