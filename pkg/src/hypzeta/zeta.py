"""From a hypersurface to Q(T): Frobenius matrix, integer recovery, zeta
presentation, Newton polygon and the invariants read off it.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .cohomology import CohomologyBasis, Hypersurface, SingularInput, compute_basis, hodge_polygon
from .frobenius import PrecisionPlan, choose_precision, coefficient_precision, frobenius_terms
from .homog import enumerate_monomials, power_table
from .linalg import ModMatrix, charpoly_division_free, storage_dtype
from .modarith import factorial_valuation, vp
from .oracle import count_points, counts_from_zeta
from .pep import PepStore
from .reduction import Costs, WeightedSolver, build_ruv, run_policy, seed_game


class MazurViolation(ArithmeticError):
    """A reduced column was not divisible by the power of p Mazur's theorem predicts."""


class RecoveryFailed(ArithmeticError):
    """No integer Q(T) consistent with the computed residues; more precision is needed."""


class VerificationFailed(ArithmeticError):
    pass


# ------------------------------------------------------------ Frobenius matrix


@dataclass
class FrobMatrix:
    """p^{-1} sigma on the basis; column j is known modulo p^{col_prec[j]}."""

    data: np.ndarray
    p: int
    col_prec: list
    col_pole: list
    plan: PrecisionPlan
    costs: Costs = field(default_factory=Costs)
    pep_stats: dict = field(default_factory=dict)

    @property
    def b(self) -> int:
        return self.data.shape[0]

    @property
    def modulus(self) -> int:
        return self.p ** max(self.col_prec)

    def pole_precision(self) -> dict:
        out = {}
        for m, c in zip(self.col_pole, self.col_prec):
            out[m] = min(out.get(m, c), c)
        return out


def policy_subset(X: Hypersurface, policy: str):
    """The set S used by the reduction.

    Greedy directions put one unit on every nonzero coordinate in S, so
    |S| <= d is needed; when the full set is too big the first S-smooth
    subset of size d (largest indices first) is used.
    """
    if policy == "var-by-var":
        return (X.n,)
    if len(X.S) <= X.d:
        return X.S
    from .cohomology import check_smooth

    for S in itertools.combinations(range(X.n, -1, -1), X.d):
        S = tuple(sorted(S))
        if check_smooth(X, S):
            return S
    raise SingularInput(f"no S-smooth subset of size {X.d} for the reduction")


def all_directions(n: int, d: int):
    """Every v in N^{n+1} with |v| = d, in a fixed order."""
    out = []
    for c in itertools.combinations(range(d + n), n):
        prev, v = -1, []
        for x in c:
            v.append(x - prev - 1)
            prev = x
        v.append(d + n - prev - 1)
        out.append(tuple(v))
    return out


def make_pep(X: Hypersurface, S, modulus: int, backing: str = "lazy") -> PepStore:
    solver = WeightedSolver(X, S, modulus)
    keys = all_directions(X.n, X.d) if backing == "eager" else None
    return PepStore(lambda v: build_ruv(X, solver, v), backing, keys)


def _descending_products(lo: int, hi: int, mod: int) -> dict:
    """{L: prod_{i=L}^{hi-1} i mod `mod`} for lo <= L <= hi."""
    out = {hi: 1 % mod}
    acc = 1
    for L in range(hi - 1, lo - 1, -1):
        acc = acc * L % mod
        out[L] = acc
    return out


def frobenius_matrix(
    X: Hypersurface,
    basis: CohomologyBasis,
    plan: PrecisionPlan,
    policy: str = "p-chunk",
    pep: PepStore | None = None,
    backing: str = "lazy",
    poles=None,
) -> FrobMatrix:
    """Reduce the Frobenius expansion of every basis element and assemble the matrix.

    ``poles`` restricts the work to basis columns of the given pole orders;
    the remaining columns are left zero with precision 0.
    """
    p, n, d = X.p, X.n, X.d
    S = policy_subset(X, policy)
    mod = plan.modulus
    if pep is None:
        pep = make_pep(X, S, mod, backing)
    b = len(basis)
    offs = basis.offsets()
    T_n = basis.reduction_maps(mod)[n]
    cols_out = np.zeros((b, b), dtype=object)
    col_prec = [0] * b
    col_pole = [m for _, m in basis.elements]
    costs = Costs()
    oneS = np.array([1 if i in S else 0 for i in range(n + 1)], dtype=np.int64)
    low = enumerate_monomials(n, d * n - n - 1)
    src = enumerate_monomials(n, d * n - n)
    for m in range(1, n + 1):
        h = basis.hodge_numbers[m - 1]
        if not h or (poles is not None and m not in poles):
            continue
        N = plan.N[m]
        s = N + m - 1
        powers = power_table(X.f, N, p**s)
        Lmax = p * (m + N - 1)
        prods = _descending_products(n, Lmax, mod)
        seeds, scales = [], []
        for j in range(offs[m], offs[m] + h):
            beta = basis.elements[j][0]
            for t in frobenius_terms(beta, m, X, plan, basis_index=j, powers=powers):
                seeds.append((j, t.exponent, t.pole))
                scales.append(t.coeff * prods[t.pole] % mod)
        state = seed_game(X, seeds, S, mod, scales)
        state = run_policy(policy, state, pep, p)
        _add_costs(costs, state.costs)
        # x^U w / x^S at pole n, as polynomials of degree dn-n-1 per column
        G = np.zeros((len(low), b), dtype=object)
        for i in range(len(state)):
            shift = state.U[i] - oneS
            ex = src.exps + shift
            ok = (ex >= 0).all(axis=1)
            w = state.W[:, i]
            if np.any(np.asarray(w[~ok], dtype=object) % mod != 0):
                raise MazurViolation("non-polynomial remainder after reduction")
            rows = low.ranks(ex[ok])
            tag = int(state.tags[i])
            G[rows, tag] = (G[rows, tag] + np.asarray(w[ok], dtype=object)) % mod
        sel = list(range(offs[m], offs[m] + h))
        coords = (T_n @ ModMatrix(G[:, sel], mod)).data.astype(object)
        # undo the ladder normalization prod_{i=n}^{Lmax-1} i and restore p^{m-1}
        full = factorial(Lmax - 1) // factorial(n - 1)
        v = vp(full, p)
        unit = full // p**v
        e = v - (m - 1)
        if e > 0:
            if any(int(c) % p**e for c in coords.ravel()):
                raise MazurViolation(f"pole-order {m} column not divisible by p^{e} before scaling")
            prec = plan.M - e
            coords = coords // p**e
        else:
            prec = plan.M
            coords = coords * p ** (-e)
        pm = p**prec
        Y = coords * pow(unit, -1, pm) % pm
        scale = p ** (n - m)
        for jj, j in enumerate(sel):
            cols_out[:, j] = Y[:, jj] * scale
            col_prec[j] = prec + n - m
    for j in range(b):
        if col_prec[j] and any(int(x) % p ** (n - col_pole[j]) for x in cols_out[:, j]):
            raise MazurViolation(f"column {j} fails p^{n - col_pole[j]} divisibility")
    return FrobMatrix(
        data=cols_out, p=p, col_prec=col_prec, col_pole=col_pole, plan=plan,
        costs=costs, pep_stats=pep.stats.as_dict(),
    )


def _add_costs(acc: Costs, c: Costs):
    acc.matvecs += c.matvecs
    acc.startups += c.startups
    acc.combines += c.combines


# ------------------------------------------------------------ recovering Q


def rh_bound(b: int, i: int, p: int, weight: int) -> int:
    """floor(C(b,i) p^{i*weight/2})."""
    if (i * weight) % 2 == 0:
        return comb(b, i) * p ** (i * weight // 2)
    from math import isqrt

    return isqrt(comb(b, i) ** 2 * p ** (i * weight))


def _lift(residue: int, prec_mod: int) -> int:
    r = residue % prec_mod
    return r - prec_mod if r > prec_mod // 2 else r


@dataclass
class ZetaFunction:
    Q: list
    sign: int
    n: int
    d: int
    p: int
    ambiguous: bool = False
    alternatives: list = field(default_factory=list)

    @property
    def weight(self) -> int:
        return self.n - 1

    def presentation(self) -> dict:
        return zeta_assemble(self.Q, self.n, self.p)

    def count(self, r: int) -> int:
        return counts_from_zeta(self.Q, self.n, self.p, r)


def functional_equation_fill(low: list, b: int, p: int, weight: int, eps: int) -> list:
    """Complete a_0..a_{ceil(b/2)} to a_0..a_b with a_{b-i} = eps p^{w(b-2i)/2} a_i."""
    Q = list(low) + [None] * (b + 1 - len(low))
    for j in range(len(low)):
        if 2 * j > b:
            break
        val = eps * p ** (weight * (b - 2 * j) // 2) * low[j]
        if Q[b - j] is not None and Q[b - j] != val:
            return None
        Q[b - j] = val
    return Q


def charpoly_residues(F: FrobMatrix) -> tuple:
    """Q(T) = det(1 - T F) coefficients mod p^{prec}, with per-coefficient precision."""
    hodge = F.plan.hodge
    absp = F.pole_precision()
    precs = [None] + [coefficient_precision(i, hodge, absp) for i in range(1, F.b + 1)]
    # slope divisibility makes high coefficients more precise than any single column
    top = F.p ** max(precs[1:] + [1])
    coeffs = charpoly_division_free(ModMatrix(F.data % top, top))
    return coeffs, precs


def recover_Q(F: FrobMatrix, X: Hypersurface | None = None, count_budget: int = 10**7) -> ZetaFunction:
    p, n = F.p, F.plan.n
    b = F.b
    w = n - 1
    coeffs, precs = charpoly_residues(F)
    half = -(-b // 2)
    low = [1]
    for i in range(1, half + 1):
        bound = rh_bound(b, i, p, w)
        pm = p ** precs[i]
        if pm <= 2 * bound:
            raise RecoveryFailed(f"coefficient {i}: precision p^{precs[i]} cannot pin |a_{i}| <= {bound}")
        low.append(_lift(coeffs[i], pm))
    signs = (1,) if w % 2 else (1, -1)
    cands = []
    for eps in signs:
        Q = functional_equation_fill(low, b, p, w, eps)
        if Q is None:
            continue
        if any(abs(Q[i]) > rh_bound(b, i, p, w) for i in range(b + 1)):
            continue
        if any((Q[i] - coeffs[i]) % p ** precs[i] for i in range(1, b + 1)):
            continue
        cands.append((eps, Q))
    if not cands:
        raise RecoveryFailed("no sign of the functional equation is consistent")
    if len(cands) == 1:
        eps, Q = cands[0]
        return ZetaFunction(Q=Q, sign=eps, n=n, d=F.plan.d, p=p)
    if X is not None:
        try:
            actual = count_points(X, 1, budget=count_budget)
        except RuntimeError:
            actual = None
        if actual is not None:
            good = [c for c in cands if counts_from_zeta(c[1], n, p, 1) == actual]
            if len(good) == 1:
                eps, Q = good[0]
                return ZetaFunction(Q=Q, sign=eps, n=n, d=F.plan.d, p=p)
    eps, Q = cands[0]
    return ZetaFunction(Q=Q, sign=eps, n=n, d=F.plan.d, p=p, ambiguous=True, alternatives=[c[1] for c in cands[1:]])


def zeta_assemble(Q, n: int, p: int) -> dict:
    """Z = Q^{(-1)^n} / prod_{i<n} (1 - p^i T), as numerator and denominator factor lists."""
    lin = [[1, -(p**i)] for i in range(n)]
    if n % 2 == 0:
        return {"num": [list(Q)], "den": lin}
    return {"num": [], "den": lin + [list(Q)]}


# ------------------------------------------------------------ Newton polygon


@dataclass
class NewtonPolygon:
    vertices: list
    slopes: list

    def value_at(self, x) -> Fraction:
        for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:]):
            if x0 <= x <= x1:
                return Fraction(y0) + Fraction(y1 - y0, x1 - x0) * (x - x0)
        raise ValueError("outside the polygon")


def lower_hull(points) -> list:
    pts = sorted(points)
    hull = []
    for P in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (P[0] - x1) >= (P[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(P)
    return hull


def newton_polygon(Q, p: int) -> NewtonPolygon:
    pts = [(i, vp(a, p)) for i, a in enumerate(Q) if a]
    verts = lower_hull(pts)
    slopes = []
    for (x0, y0), (x1, y1) in zip(verts, verts[1:]):
        slopes += [Fraction(y1 - y0, x1 - x0)] * (x1 - x0)
    return NewtonPolygon(vertices=verts, slopes=slopes)


def _polyline_value(verts, x) -> Fraction:
    return NewtonPolygon(vertices=verts, slopes=[]).value_at(x)


@dataclass
class InvariantReport:
    p_rank: int
    am_height: object
    domino: object
    newton_height: object
    hodge: list
    newton_above_hodge: bool
    family: str

    def as_dict(self):
        def enc(x):
            return "inf" if x == float("inf") else x

        return {
            "family": self.family,
            "p_rank": self.p_rank,
            "am_height": enc(self.am_height),
            "domino": enc(self.domino),
            "newton_height": enc(self.newton_height),
            "hodge": [list(v) for v in self.hodge],
            "newton_above_hodge": self.newton_above_hodge,
        }


class NewtonBelowHodge(AssertionError):
    pass


def family_of(n: int, d: int) -> str:
    if n == 2:
        return "curve"
    if n == 3 and d == 4:
        return "K3-like surface"
    if n == 3:
        return "surface"
    if n == 4 and d == 3:
        return "cubic threefold"
    if n == 5 and d == 3:
        return "cubic fourfold"
    return "hypersurface"


def _height_from_slope(s1: Fraction, middle: int):
    gap = Fraction(middle) - s1
    if gap <= 0:
        return float("inf")
    h = 1 / gap
    return int(h) if h.denominator == 1 else h


def classify(poly: NewtonPolygon, hodge, n: int, d: int | None = None) -> InvariantReport:
    """Invariants of the polygon; ``hodge`` are the per-pole-order counts h_1..h_n."""
    hverts = hodge_polygon(hodge)
    b = hverts[-1][0]
    if poly.vertices[-1] != hverts[-1] or poly.vertices[0] != (0, 0):
        raise NewtonBelowHodge(f"endpoints differ: {poly.vertices[-1]} vs {hverts[-1]}")
    above = all(poly.value_at(x) >= _polyline_value(hverts, x) for x in range(b + 1))
    if not above:
        raise NewtonBelowHodge("Newton polygon dips below the Hodge polygon")
    hslopes = [m - 1 for m, h in enumerate(hodge, start=1) for _ in range(h)]
    smin = min(hslopes)
    p_rank = sum(1 for s in poly.slopes if s == smin)
    fam = family_of(n, d) if d else "hypersurface"
    w = n - 1
    am = newton_h = domino = None
    nonzero = [(m, h) for m, h in enumerate(hodge, start=1) if h]
    if n == 3:
        # slope-1 region of the Hodge polygon
        x0 = sum(h for m, h in enumerate(hodge, start=1) if m - 1 < 1)
        x1 = x0 + hodge[1]
        domino = min(poly.value_at(x) - _polyline_value(hverts, x) for x in range(x0, x1 + 1))
        domino = int(domino) if domino.denominator == 1 else domino
    if w % 2 == 0 and nonzero[0][1] == 1 and nonzero[-1][1] == 1 and len(nonzero) == 3:
        height = _height_from_slope(poly.slopes[0], w // 2)
        if n == 3:
            am = height
        elif n == 5:
            newton_h = height
    return InvariantReport(
        p_rank=p_rank, am_height=am, domino=domino, newton_height=newton_h,
        hodge=hverts, newton_above_hodge=above, family=fam,
    )


# ------------------------------------------------------------ orchestration


@dataclass
class ZetaResult:
    X: Hypersurface
    zeta: ZetaFunction
    newton: NewtonPolygon
    invariants: InvariantReport
    frob: FrobMatrix
    plan: PrecisionPlan
    counts_check: dict
    wall_time: float
    policy: str
    backing: str

    def as_dict(self) -> dict:
        from .homog import format_poly

        z = self.zeta
        return {
            "p": self.X.p,
            "n": self.X.n,
            "d": self.X.d,
            "f": format_poly(self.X.f),
            "Q": [int(a) for a in z.Q],
            "sign": z.sign,
            "ambiguous": z.ambiguous,
            "zeta": z.presentation(),
            "newton": [list(v) for v in self.newton.vertices],
            "hodge": [list(v) for v in self.invariants.hodge],
            "invariants": self.invariants.as_dict(),
            "counts_check": {str(r): v for r, v in self.counts_check.items()},
            "cost": self.frob.costs.as_dict(),
            "pep": self.frob.pep_stats,
            "precision": {
                "A": self.plan.A,
                "M": self.plan.M,
                "N_m": [self.plan.N[m] for m in sorted(self.plan.N)],
                "r_m": [self.plan.r[m] for m in sorted(self.plan.r)],
                "escalations": self.plan.escalations,
            },
            "policy": self.policy,
            "pep_backing": self.backing,
            "wall_time": round(self.wall_time, 4),
        }


class EscalationExhausted(RuntimeError):
    pass


def affordable_counts(X: Hypersurface, budget: int) -> list:
    out = []
    for r in range(1, 4):
        work = sum(X.p ** (r * k) for k in range(X.n + 1)) * max(1, len(X.f.terms()))
        if work > budget:
            break
        out.append(r)
    return out


def compute_zeta(
    X: Hypersurface,
    policy: str = "p-chunk",
    backing: str = "lazy",
    overrides: dict | None = None,
    max_escalations: int = 3,
    count_budget: int = 2 * 10**6,
    verify_counts: bool = True,
) -> ZetaResult:
    """Full pipeline with verification; escalates N_m by 2 when a check fails."""
    t0 = time.perf_counter()
    basis = compute_basis(X)
    plan = choose_precision(X.p, X.n, X.d, basis.hodge_numbers, overrides)
    rs = affordable_counts(X, count_budget) if verify_counts else []
    actual = {}
    last_err = None
    for _ in range(max_escalations + 1):
        try:
            F = frobenius_matrix(X, basis, plan, policy=policy, backing=backing)
            Z = recover_Q(F, X, count_budget)
            poly = newton_polygon(Z.Q, X.p)
            inv = classify(poly, basis.hodge_numbers, X.n, X.d)
            check = {}
            for r in rs:
                if r not in actual:
                    actual[r] = count_points(X, r, budget=count_budget)
                pred = Z.count(r)
                check[r] = {"predicted": pred, "actual": actual[r]}
                if pred != actual[r]:
                    raise VerificationFailed(f"count mismatch at r={r}: {pred} vs {actual[r]}")
            return ZetaResult(
                X=X, zeta=Z, newton=poly, invariants=inv, frob=F, plan=plan, counts_check=check,
                wall_time=time.perf_counter() - t0, policy=policy, backing=backing,
            )
        except (RecoveryFailed, VerificationFailed, NewtonBelowHodge) as err:
            last_err = err
            plan = plan.escalate()
    raise EscalationExhausted(f"precision escalation exhausted: {last_err}")


# ------------------------------------------------------------ p-rank mode


@dataclass
class PRankResult:
    """Unit-root data from F mod p on the lowest-slope columns only."""

    p_rank: int
    slope: int
    unit_poly: list
    am_height: object
    plan: PrecisionPlan
    costs: Costs
    wall_time: float

    def as_dict(self):
        return {
            "p_rank": self.p_rank,
            "slope": self.slope,
            "unit_poly_mod_p": self.unit_poly,
            "am_height": self.am_height,
            "cost": self.costs.as_dict(),
            "precision": self.plan.as_dict(),
            "wall_time": round(self.wall_time, 4),
        }


def compute_p_rank(X: Hypersurface, policy: str = "p-chunk", backing: str = "lazy", basis=None) -> PRankResult:
    """Length of the lowest-slope Newton segment, from one pole order at relative precision 1.

    Columns of pole order m are divisible by p^{n-m}, so modulo p^{s+1}
    (s the smallest slope n - m*) only the pole-m* block survives and
    det(1 - T F / p^s) mod p is the characteristic polynomial of that block.
    Its degree counts the Newton slopes equal to s.  For K3-type surfaces this
    decides height 1 against height >= 2 exactly.
    """
    t0 = time.perf_counter()
    p, n = X.p, X.n
    basis = basis or compute_basis(X)
    hodge = basis.hodge_numbers
    mstar = max(m for m, h in enumerate(hodge, start=1) if h)
    s = n - mstar
    r = {m: 1 for m in range(1, n + 1)}
    plan = choose_precision(p, n, X.d, hodge, {"r": r, "N": {m: n for m in range(1, n + 1)}})
    F = frobenius_matrix(X, basis, plan, policy=policy, backing=backing, poles=[mstar])
    idx = [j for j, (_, m) in enumerate(basis.elements) if m == mstar]
    block = np.array([[int(F.data[i, j]) // p**s % p for j in idx] for i in idx], dtype=np.int64)
    char = charpoly_division_free(ModMatrix(block, p))
    unit = [int(c) % p for c in char]  # det(1 - T B) coefficients, low degree first
    deg = max((i for i, c in enumerate(unit) if c), default=0)
    am = None
    if n == 3 and hodge[0] == 1 and hodge[-1] == 1:
        am = 1 if deg == 1 else ">=2"
    return PRankResult(
        p_rank=deg, slope=s, unit_poly=unit, am_height=am, plan=plan, costs=F.costs,
        wall_time=time.perf_counter() - t0,
    )
