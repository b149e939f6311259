"""Monomials and dense homogeneous polynomials.

Exponent vectors are plain tuples of length n+1.  Inside a fixed degree the
monomials are ordered by descending graded reverse lexicographic order: x^a
comes before x^b when the last nonzero entry of a - b is negative.  For two
variables in degree 2 this gives x0^2, x0*x1, x1^2.
"""

from __future__ import annotations

import re
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

INT64_SAFE_PRODUCT = 2**31


def coeff_dtype(modulus: int):
    """int64 when products of residues cannot overflow, otherwise Python ints."""
    return np.int64 if modulus <= INT64_SAFE_PRODUCT else object


def _compositions(n_vars: int, k: int):
    # stars and bars
    for bars in combinations(range(k + n_vars - 1), n_vars - 1):
        prev = -1
        e = []
        for b in bars:
            e.append(b - prev - 1)
            prev = b
        e.append(k + n_vars - 1 - prev - 1)
        yield tuple(e)


class MonomialIndex:
    """Coordinate system of Homog_k in n+1 variables."""

    def __init__(self, n: int, k: int):
        self.n = n
        self.k = k
        if k < 0:
            self.exps = np.zeros((0, n + 1), dtype=np.int64)
        else:
            mons = sorted(_compositions(n + 1, k), key=lambda e: e[::-1])
            self.exps = np.array(mons, dtype=np.int64).reshape(-1, n + 1)
        self.exps.setflags(write=False)
        self._rank = {tuple(int(x) for x in e): i for i, e in enumerate(self.exps)}
        self._base = max(k, 0) + 1
        self._weights = self._base ** np.arange(n + 1, dtype=np.int64)
        keys = self.exps @ self._weights
        self._order = np.argsort(keys, kind="stable")
        self._sorted_keys = keys[self._order]

    def __len__(self):
        return self.exps.shape[0]

    def __iter__(self):
        return (tuple(int(x) for x in e) for e in self.exps)

    def rank(self, e) -> int:
        return self._rank[tuple(e)]

    def unrank(self, i: int) -> tuple:
        return tuple(int(x) for x in self.exps[i])

    def __contains__(self, e):
        return tuple(e) in self._rank

    def ranks(self, exps: np.ndarray) -> np.ndarray:
        """Vectorized rank lookup; every row must have norm k and be nonnegative."""
        exps = np.asarray(exps, dtype=np.int64)
        if exps.size == 0:
            return np.zeros(exps.shape[:-1], dtype=np.int64)
        keys = exps @ self._weights
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, len(self._sorted_keys) - 1)
        if not np.array_equal(self._sorted_keys[pos], keys) or (exps < 0).any():
            raise KeyError("exponent vector not in this index")
        return self._order[pos]


@lru_cache(maxsize=None)
def enumerate_monomials(n: int, k: int) -> MonomialIndex:
    return MonomialIndex(n, k)


def homog_dim(n: int, k: int) -> int:
    return comb(k + n, n) if k >= 0 else 0


class HomogPoly:
    """Homogeneous polynomial with a dense coefficient vector mod ``modulus``."""

    __slots__ = ("n", "degree", "modulus", "coeffs")

    def __init__(self, n: int, degree: int, coeffs, modulus: int):
        self.n = n
        self.degree = degree
        self.modulus = modulus
        dt = coeff_dtype(modulus)
        c = np.asarray(coeffs)
        if dt is object:
            c = np.array([int(x) % modulus for x in c.ravel()], dtype=object)
        else:
            c = np.asarray(c, dtype=np.int64) % modulus
        if c.shape != (homog_dim(n, degree),):
            raise ValueError("coefficient vector has the wrong length")
        self.coeffs = c

    @property
    def index(self) -> MonomialIndex:
        return enumerate_monomials(self.n, self.degree)

    @classmethod
    def zero(cls, n, degree, modulus):
        return cls(n, degree, np.zeros(homog_dim(n, degree), dtype=np.int64), modulus)

    @classmethod
    def from_terms(cls, n: int, terms, modulus: int, degree: int | None = None):
        """Build from an iterable of (coefficient, exponent) pairs."""
        terms = [(int(c), tuple(int(x) for x in e)) for c, e in terms]
        for _, e in terms:
            if len(e) != n + 1:
                raise ValueError(f"exponent {e} does not have {n + 1} entries")
        if degree is None:
            degs = {sum(e) for _, e in terms}
            if len(degs) != 1:
                raise ValueError("polynomial is not homogeneous")
            degree = degs.pop()
        idx = enumerate_monomials(n, degree)
        vals = [0] * len(idx)
        for c, e in terms:
            if sum(e) != degree:
                raise ValueError("polynomial is not homogeneous")
            vals[idx.rank(e)] += c
        return cls(n, degree, np.array(vals, dtype=object), modulus)

    def terms(self):
        """Nonzero (coefficient, exponent) pairs in index order."""
        idx = self.index
        return [(int(c), idx.unrank(i)) for i, c in enumerate(self.coeffs) if c != 0]

    def change_modulus(self, modulus: int) -> "HomogPoly":
        return HomogPoly(self.n, self.degree, self.coeffs, modulus)

    def __eq__(self, other):
        return (
            isinstance(other, HomogPoly)
            and (self.n, self.degree, self.modulus) == (other.n, other.degree, other.modulus)
            and all(int(a) == int(b) for a, b in zip(self.coeffs, other.coeffs))
        )

    def __add__(self, other):
        _check_compatible(self, other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return HomogPoly(self.n, self.degree, (self.coeffs + other.coeffs) % self.modulus, self.modulus)

    def __sub__(self, other):
        _check_compatible(self, other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return HomogPoly(self.n, self.degree, (self.coeffs - other.coeffs) % self.modulus, self.modulus)

    def scale(self, c: int) -> "HomogPoly":
        c %= self.modulus
        if self.coeffs.dtype == object:
            return HomogPoly(self.n, self.degree, self.coeffs * c, self.modulus)
        return HomogPoly(self.n, self.degree, np.array([int(x) * c for x in self.coeffs], dtype=object), self.modulus)

    def __mul__(self, other):
        return poly_multiply(self, other)

    def is_zero(self) -> bool:
        return not any(int(x) for x in self.coeffs)

    def __repr__(self):
        return f"HomogPoly({format_poly(self)!r}, mod={self.modulus})"


def _check_compatible(a: HomogPoly, b: HomogPoly):
    if a.n != b.n or a.modulus != b.modulus:
        raise ValueError("polynomials live in different rings")


def poly_multiply(a: HomogPoly, b: HomogPoly) -> HomogPoly:
    _check_compatible(a, b)
    n, mod = a.n, a.modulus
    deg = a.degree + b.degree
    out_idx = enumerate_monomials(n, deg)
    ia = np.nonzero(a.coeffs)[0]
    ib = np.nonzero(b.coeffs)[0]
    dt = coeff_dtype(mod)
    out = np.zeros(len(out_idx), dtype=dt)
    if len(ia) and len(ib):
        ea = a.index.exps[ia]
        eb = b.index.exps[ib]
        ranks = out_idx.ranks((ea[:, None, :] + eb[None, :, :]).reshape(-1, n + 1))
        ca = a.coeffs[ia].astype(dt)
        cb = b.coeffs[ib].astype(dt)
        prod = (ca[:, None] * cb[None, :]).ravel() % mod
        np.add.at(out, ranks, prod)
        out %= mod
    return HomogPoly(n, deg, out, mod)


def partial_derivative(f: HomogPoly, i: int) -> HomogPoly:
    if not 0 <= i <= f.n:
        raise ValueError("variable index out of range")
    if f.degree == 0:
        return HomogPoly.zero(f.n, -1, f.modulus)
    exps = f.index.exps
    keep = exps[:, i] > 0
    new_exps = exps[keep].copy()
    mult = new_exps[:, i].copy()
    new_exps[:, i] -= 1
    tgt = enumerate_monomials(f.n, f.degree - 1)
    out = np.zeros(len(tgt), dtype=coeff_dtype(f.modulus))
    vals = f.coeffs[keep] * mult.astype(out.dtype)
    out[tgt.ranks(new_exps)] = vals % f.modulus
    return HomogPoly(f.n, f.degree - 1, out, f.modulus)


def power_coefficients(f: HomogPoly, j: int, mod: int | None = None) -> HomogPoly:
    """f^j with coefficients reduced mod ``mod`` (defaults to f's modulus)."""
    if mod is None:
        mod = f.modulus
    g = f.change_modulus(mod)
    result = HomogPoly(f.n, 0, [1], mod)
    base = g
    # square-and-multiply keeps the number of large products logarithmic
    while j:
        if j & 1:
            result = poly_multiply(result, base)
        j >>= 1
        if j:
            base = poly_multiply(base, base)
    return result


def power_table(f: HomogPoly, N: int, mod: int) -> list:
    """[f^0, f^1, ..., f^(N-1)] mod ``mod`` by repeated multiplication."""
    g = f.change_modulus(mod)
    out = [HomogPoly(f.n, 0, [1], mod)]
    for _ in range(1, N):
        out.append(poly_multiply(out[-1], g))
    return out


def sigma_f(f: HomogPoly, p: int) -> HomogPoly:
    """Frobenius lift: every exponent multiplied by p, coefficients unchanged."""
    return HomogPoly.from_terms(
        f.n, [(c, tuple(p * x for x in e)) for c, e in f.terms()], f.modulus, degree=p * f.degree
    )


_TERM_RE = re.compile(r"([+-]?)\s*([^+-]+)")


def parse_poly(text: str, n: int, modulus: int) -> HomogPoly:
    """Parse ``c*x0^a0*x1^a1 + ...``; coefficients may be omitted or negative."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty polynomial")
    terms = []
    for sign, body in _TERM_RE.findall(s):
        c = -1 if sign == "-" else 1
        e = [0] * (n + 1)
        for factor in body.split("*"):
            if not factor:
                raise ValueError(f"bad term {body!r}")
            m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", factor)
            if m:
                i = int(m.group(1))
                if i > n:
                    raise ValueError(f"variable x{i} outside P^{n}")
                e[i] += int(m.group(2) or 1)
            elif re.fullmatch(r"\d+", factor):
                c *= int(factor)
            else:
                raise ValueError(f"cannot parse factor {factor!r}")
        terms.append((c, tuple(e)))
    return HomogPoly.from_terms(n, terms, modulus)


def format_poly(f: HomogPoly) -> str:
    parts = []
    for c, e in f.terms():
        factors = [str(c)] if c != 1 or not any(e) else []
        for i, a in enumerate(e):
            if a == 1:
                factors.append(f"x{i}")
            elif a > 1:
                factors.append(f"x{i}^{a}")
        parts.append("*".join(factors))
    return " + ".join(parts) if parts else "0"
