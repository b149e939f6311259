"""Exact arithmetic in Z/p^M and the coefficient tables used by the Frobenius expansion."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb


class ValuationAtLeast:
    """Marker for a residue that is zero mod p^M, i.e. of valuation >= M."""

    __slots__ = ("bound",)

    def __init__(self, bound: int):
        self.bound = bound

    def __repr__(self):
        return f"ValuationAtLeast({self.bound})"

    def __eq__(self, other):
        return isinstance(other, ValuationAtLeast) and other.bound == self.bound

    def __hash__(self):
        return hash(("ValuationAtLeast", self.bound))


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    i = 3
    while i * i <= p:
        if p % i == 0:
            return False
        i += 2
    return True


@dataclass(frozen=True)
class ModulusContext:
    p: int
    M: int
    modulus: int = field(init=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.M < 1:
            raise ValueError("precision exponent must be >= 1")
        object.__setattr__(self, "modulus", self.p ** self.M)

    def reduce(self, x: int) -> int:
        return x % self.modulus

    def inv(self, x: int) -> int:
        """Inverse of a unit mod p^M."""
        if x % self.p == 0:
            raise ZeroDivisionError(f"{x} is not a unit mod {self.p}")
        return pow(x, -1, self.modulus)

    def with_precision(self, M: int) -> "ModulusContext":
        return ModulusContext(self.p, M)


def vp(x: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if x == 0:
        raise ValueError("valuation of 0")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def valuation(x: int, ctx: ModulusContext):
    """Split a residue as p^v * u.

    Returns ``(v, u)`` with ``u`` a unit reduced mod p^(M-v), or a
    :class:`ValuationAtLeast` marker when ``x`` vanishes mod p^M.
    """
    x %= ctx.modulus
    if x == 0:
        return ValuationAtLeast(ctx.M)
    v = 0
    while x % ctx.p == 0:
        x //= ctx.p
        v += 1
    return v, x % ctx.p ** (ctx.M - v)


def factorial_valuation(k: int, p: int) -> int:
    """Legendre's formula for v_p(k!)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    total, q = 0, p
    while q <= k:
        total += k // q
        q *= p
    return total


def neg_binomial(m: int, i: int, mod: int) -> int:
    """C(-m, i) = (-1)^i C(m+i-1, i), reduced mod ``mod``."""
    if m < 1 or i < 0:
        raise ValueError("need m >= 1 and i >= 0")
    return (-1) ** i * comb(m + i - 1, i) % mod


@dataclass(frozen=True)
class DTable:
    m: int
    N: int
    s: int
    p: int
    entries: dict

    def __getitem__(self, j: int) -> int:
        return self.entries[j]


def build_dtable(m: int, N: int, p: int) -> DTable:
    """D_{j,m} = sum_{i=j}^{N-1} (-1)^{i+j} C(-m,i) C(i,j) mod p^s with s = N+m-1."""
    if m < 1 or N < 1:
        raise ValueError("need m >= 1 and N >= 1")
    s = N + m - 1
    mod = p ** s
    entries = {}
    for j in range(N):
        tot = 0
        for i in range(j, N):
            tot += (-1) ** (i + j) * (-1) ** i * comb(m + i - 1, i) * comb(i, j)
        entries[j] = tot % mod
    return DTable(m=m, N=N, s=s, p=p, entries=entries)
