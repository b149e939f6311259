"""Optional long run: a cubic threefold over F7 (pytest --run-longjob)."""

import pytest

from hypzeta.oracle import count_points
from hypzeta.zeta import compute_zeta

from conftest import fermat


@pytest.mark.longjob
def test_fermat_cubic_threefold_f7():
    X = fermat(7, 4, 3)
    res = compute_zeta(X, count_budget=10**6)
    assert len(res.zeta.Q) == 11
    assert res.zeta.count(1) == count_points(X, 1)
    # diagonal hypersurfaces are ordinary when p = 1 mod d
    assert [tuple(v) for v in res.newton.vertices] == [tuple(v) for v in res.invariants.hodge]
