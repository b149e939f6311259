"""Griffiths-Dwork machinery: Jacobian maps, the monomial cohomology basis, smoothness
checks and the dense reduction of pole orders <= n down to the basis.

A differential g*Omega/f^m is carried around as the pair (g, m).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from .homog import HomogPoly, enumerate_monomials, homog_dim, parse_poly
from .linalg import ModMatrix, inverse_mod, mod_p_pivots
from .modarith import is_prime


class SingularInput(ValueError):
    """The hypersurface is singular (or p is pathological for it)."""


@dataclass(eq=False)
class Hypersurface:
    p: int
    n: int
    d: int
    f: HomogPoly
    S: tuple = None

    def __post_init__(self):
        if not is_prime(self.p) or self.p == 2:
            raise ValueError("p must be an odd prime")
        if self.p <= self.n:
            raise ValueError("need p > n")
        if self.f.n != self.n or self.f.degree != self.d:
            raise ValueError("f does not match (n, d)")
        self.f = self.f.change_modulus(self.p)
        if self.f.is_zero():
            raise ValueError("f vanishes mod p")
        if self.S is None:
            self.S = tuple(range(self.n + 1))
        self.S = tuple(sorted(self.S))

    @classmethod
    def from_terms(cls, p, n, terms, S=None):
        f = HomogPoly.from_terms(n, terms, p)
        return cls(p=p, n=n, d=f.degree, f=f, S=S)

    @classmethod
    def from_text(cls, p, n, text, S=None):
        f = parse_poly(text, n, p)
        return cls(p=p, n=n, d=f.degree, f=f, S=S)

    def f_mod(self, modulus: int) -> HomogPoly:
        return self.f.change_modulus(modulus)

    @cached_property
    def middle_dimension(self) -> int:
        n, d = self.n, self.d
        return ((d - 1) ** (n + 1) + (-1) ** (n + 1) * (d - 1)) // d

    @cached_property
    def derivative_terms(self):
        """For each i, the terms of d f/d x_i as (int coefficient, exponent) pairs."""
        out = []
        for i in range(self.n + 1):
            ts = []
            for c, e in self.f.terms():
                if e[i]:
                    ee = list(e)
                    ee[i] -= 1
                    ts.append((c * e[i], tuple(ee)))
            out.append(ts)
        return out


def _domain_layout(X: Hypersurface, k: int, S):
    """Blocks of the (weighted) Jacobian map domain: (i, degree of mu_i, weighted?)."""
    S = set(range(X.n + 1)) if S is None else set(S)
    blocks = []
    for i in range(X.n + 1):
        if i in S:
            blocks.append((i, k - (X.d - 1), False))
        else:
            blocks.append((i, k - X.d, True))
    return blocks


def domain_offsets(X: Hypersurface, k: int, S=None):
    blocks = _domain_layout(X, k, S)
    offs, tot = [], 0
    for i, deg, w in blocks:
        offs.append(tot)
        tot += homog_dim(X.n, deg)
    return blocks, offs, tot


def jacobian_map_matrix(X: Hypersurface, k: int, modulus: int, S=None) -> ModMatrix:
    """Matrix of (mu_i) -> sum_{i in S} mu_i df/dx_i + sum_{i not in S} x_i mu_i df/dx_i into Homog_k.

    ``S=None`` means the unweighted map (S = all variables).  Rows are the
    monomials of degree k, columns run through the blocks mu_0, ..., mu_n.
    """
    n = X.n
    tgt = enumerate_monomials(n, k)
    blocks, offs, tot = domain_offsets(X, k, S)
    mat = np.zeros((len(tgt), tot), dtype=object if modulus >= 2**62 else np.int64)
    for (i, deg, weighted), off in zip(blocks, offs):
        if deg < 0:
            continue
        src = enumerate_monomials(n, deg)
        cols = np.arange(len(src)) + off
        for c, e in X.derivative_terms[i]:
            shift = np.array(e, dtype=np.int64)
            if weighted:
                shift = shift.copy()
                shift[i] += 1
            rows = tgt.ranks(src.exps + shift)
            mat[rows, cols] = (mat[rows, cols] + c) % modulus
    return ModMatrix(mat, modulus)


def smooth_check_degree(X: Hypersurface, S) -> int:
    return (X.n + 1) * (X.d - 1) + 1 - len(S)


def check_smooth(X: Hypersurface, S=None) -> bool:
    """True iff the S-weighted Jacobian ideal contains every monomial of its regularity degree mod p.

    For generators of degrees d-1 (i in S) and d (i not in S) forming a
    regular sequence, the quotient vanishes from degree (n+1)(d-1)+1-|S| on;
    conversely a common projective zero leaves that degree uncovered.  So
    surjectivity in that single degree decides S-smoothness.
    """
    if S is None:
        S = range(X.n + 1)
    S = tuple(S)
    k = smooth_check_degree(X, S)
    J = jacobian_map_matrix(X, k, X.p, S)
    if J.cols < J.rows:
        return False
    return len(mod_p_pivots(J.data, X.p, by_rows=True)) == J.rows


@dataclass
class PoleSlice:
    m: int
    k: int
    basis_ranks: list
    pivot_ranks: list
    solve_cols: list


@dataclass(eq=False)
class CohomologyBasis:
    X: Hypersurface
    elements: list
    hodge_numbers: list
    slices: list
    _maps: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.elements)

    @property
    def dimension(self):
        return len(self.elements)

    def offsets(self):
        """Index of the first basis element of each pole order (1-based m -> offset)."""
        out, tot = {}, 0
        for m, h in enumerate(self.hodge_numbers, start=1):
            out[m] = tot
            tot += h
        return out

    def reduction_maps(self, modulus: int):
        """T_m: Homog_{dm-n-1} -> basis coordinates, for every m = 1..n, over Z/modulus."""
        if modulus in self._maps:
            return self._maps[modulus]
        X = self.X
        n, d = X.n, X.d
        b = len(self.elements)
        offs = self.offsets()
        maps = {}
        prev = None
        for sl in self.slices:
            m, k = sl.m, sl.k
            dim = homog_dim(n, k)
            T = np.zeros((b, dim), dtype=object)
            for j, r in enumerate(sl.basis_ranks):
                T[offs[m] + j, r] = 1
            if sl.pivot_ranks:
                J = jacobian_map_matrix(X, k, modulus)
                P, Q, B = sl.pivot_ranks, sl.solve_cols, sl.basis_ranks
                inv = inverse_mod(ModMatrix(J.data[np.ix_(P, Q)], modulus))
                # mu_Q = inv @ g_P ; basis coordinates pick up -J[B, Q] mu_Q
                JBQ = ModMatrix(J.data[np.ix_(B, Q)], modulus)
                corr = (JBQ @ inv).data
                for j in range(len(B)):
                    T[offs[m] + j, P] = (T[offs[m] + j, P] - corr[j].astype(object)) % modulus
                # g' = (1/(m-1)) sum_i d mu_i / dx_i
                D = divergence_matrix(X, k, modulus)
                Dq = ModMatrix(D[:, Q], modulus)
                down = (Dq @ inv).scale(pow(m - 1, -1, modulus))
                low = prev @ ModMatrix(_embed_cols(down.data, P, dim), modulus)
                T = (T + low.data.astype(object)) % modulus
            prev = ModMatrix(T, modulus)
            maps[m] = prev
        self._maps[modulus] = maps
        return maps


def _embed_cols(mat: np.ndarray, cols, width: int) -> np.ndarray:
    out = np.zeros((mat.shape[0], width), dtype=mat.dtype)
    out[:, cols] = mat
    return out


def divergence_matrix(X: Hypersurface, k: int, modulus: int) -> np.ndarray:
    """(mu_0..mu_n) with deg mu_i = k-d+1  ->  sum_i d mu_i/dx_i in Homog_{k-d}."""
    n = X.n
    blocks, offs, tot = domain_offsets(X, k)
    tgt = enumerate_monomials(n, k - X.d)
    D = np.zeros((len(tgt), tot), dtype=np.int64)
    for (i, deg, _), off in zip(blocks, offs):
        if deg < 0:
            continue
        src = enumerate_monomials(n, deg)
        mask = src.exps[:, i] > 0
        e = src.exps[mask].copy()
        mult = e[:, i].copy()
        e[:, i] -= 1
        D[tgt.ranks(e), np.nonzero(mask)[0] + off] = mult
    return D % modulus


def compute_basis(X: Hypersurface) -> CohomologyBasis:
    """Monomial basis: per pole order m, the degree dm-n-1 monomials outside the mod-p pivots of the Jacobian image."""
    n, d, p = X.n, X.d, X.p
    elements, hodge, slices = [], [], []
    for m in range(1, n + 1):
        k = d * m - n - 1
        idx = enumerate_monomials(n, k)
        if k < 0:
            hodge.append(0)
            slices.append(PoleSlice(m, k, [], [], []))
            continue
        if k - (d - 1) >= 0:
            J = jacobian_map_matrix(X, k, p)
            piv = mod_p_pivots(J.data, p, by_rows=True)
            pset = set(piv)
            basis = [r for r in range(len(idx)) if r not in pset]
            sub = J.data[piv]
            qcols = mod_p_pivots(sub, p)
            if len(qcols) != len(piv):
                raise SingularInput("inconsistent pivot structure")
        else:
            piv, qcols, basis = [], [], list(range(len(idx)))
        hodge.append(len(basis))
        slices.append(PoleSlice(m, k, basis, list(piv), list(qcols)))
        elements.extend((idx.unrank(r), m) for r in basis)
    if len(elements) != X.middle_dimension:
        raise SingularInput(
            f"basis has {len(elements)} elements, expected {X.middle_dimension}: "
            "hypersurface is singular or p pathological"
        )
    return CohomologyBasis(X=X, elements=elements, hodge_numbers=hodge, slices=slices)


def final_reduce(g, m: int, basis: CohomologyBasis, modulus: int) -> np.ndarray:
    """Coordinates of g*Omega/f^m (deg g = dm-n-1, m <= n) in the basis."""
    if isinstance(g, HomogPoly):
        g = g.coeffs
    return basis.reduction_maps(modulus)[m] @ np.asarray(g)


def hodge_polygon(basis_or_hodge) -> list:
    """Vertices of the Hodge polygon; slope m-1 has multiplicity h_m."""
    h = basis_or_hodge.hodge_numbers if isinstance(basis_or_hodge, CohomologyBasis) else list(basis_or_hodge)
    verts = [(0, 0)]
    x = y = 0
    for m, hm in enumerate(h, start=1):
        if hm:
            x += hm
            y += hm * (m - 1)
            verts.append((x, y))
    return verts


def hodge_slopes(hodge) -> list:
    out = []
    for m, hm in enumerate(hodge, start=1):
        out += [m - 1] * hm
    return out


def griffiths_dwork_relation(X: Hypersurface, gp: HomogPoly, i: int, m: int, modulus: int) -> HomogPoly:
    """Numerator of (f d_i g' - m g' d_i f) Omega / f^{m+1}, a relation that is zero in cohomology."""
    from .homog import partial_derivative, poly_multiply

    f = X.f_mod(modulus)
    gp = gp.change_modulus(modulus)
    a = poly_multiply(f, partial_derivative(gp, i))
    b = poly_multiply(gp, partial_derivative(f, i)).scale(m)
    return a - b
