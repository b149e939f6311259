import numpy as np
import pytest

from hypzeta.cohomology import Hypersurface, SingularInput, check_smooth, compute_basis
from hypzeta.homog import HomogPoly, enumerate_monomials


def random_poly(p, n, d, rng):
    idx = enumerate_monomials(n, d)
    return HomogPoly(n, d, rng.integers(0, p, len(idx)), p)


def random_smooth(p, n, d, rng, tries=200, also=()):
    """A smooth hypersurface with a valid monomial basis, drawn from rng.

    ``also`` lists extra subsets S for which S-smoothness is required.
    """
    for _ in range(tries):
        f = random_poly(p, n, d, rng)
        if f.is_zero():
            continue
        X = Hypersurface(p=p, n=n, d=d, f=f)
        if not check_smooth(X) or any(not check_smooth(X, S) for S in also):
            continue
        try:
            compute_basis(X)
        except SingularInput:
            continue
        return X
    raise RuntimeError("no smooth sample found")


def fermat(p, n, d):
    return Hypersurface.from_terms(p, n, [(1, tuple(d if j == i else 0 for j in range(n + 1))) for i in range(n + 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_addoption(parser):
    parser.addoption("--run-longjob", action="store_true", help="run the optional long jobs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-longjob"):
        return
    skip = pytest.mark.skip(reason="long job; pass --run-longjob")
    for item in items:
        if "longjob" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
