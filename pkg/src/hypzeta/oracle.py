"""Ground truth: brute-force point counts over F_{p^r}, counts predicted by Q(T),
an exact rational pole-reduction oracle, and Fedder's F-splitting test.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .homog import HomogPoly, enumerate_monomials, homog_dim, power_coefficients

COUNT_BUDGET = 10**9


# ------------------------------------------------------------ F_p[x] helpers


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _polymod(a, m, p):
    a = _trim([x % p for x in a])
    inv = pow(m[-1], -1, p)
    while len(a) >= len(m):
        c = a[-1] * inv % p
        shift = len(a) - len(m)
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        a = _trim(a)
    return a


def _polymul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _polygcd(a, b, p):
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _polymod(a, b, p)
    return a


def _powmod(base, e, m, p):
    result = [1]
    base = _polymod(base, m, p)
    while e:
        if e & 1:
            result = _polymod(_polymul(result, base, p), m, p)
        base = _polymod(_polymul(base, base, p), m, p)
        e >>= 1
    return result


def is_irreducible(m, p) -> bool:
    """Irreducibility of a monic m over F_p: gcd(x^{p^i} - x, m) = 1 for i <= deg/2."""
    m = _trim([x % p for x in m])
    r = len(m) - 1
    if r < 1:
        return False
    if r == 1:
        return True
    xp = [0, 1]
    for _ in range(1, r // 2 + 1):
        xp = _powmod(xp, p, m, p)
        diff = list(xp) + [0] * max(0, 2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        if len(_polygcd(m, diff, p)) != 1:
            return False
    return True


def find_irreducible(p: int, r: int) -> list:
    """First monic irreducible of degree r in a fixed scan order (coefficients low to high)."""
    if r == 1:
        return [0, 1]
    for code in range(p**r):
        low = [(code // p**i) % p for i in range(r)]
        m = low + [1]
        if m[0] and is_irreducible(m, p):
            return m
    raise AssertionError("no irreducible polynomial found")


class ExtField:
    """F_{p^r}; elements are integers whose base-p digits are the coefficients mod ``modulus``."""

    def __init__(self, p: int, r: int):
        self.p, self.r = p, r
        self.q = p**r
        self.modulus = find_irreducible(p, r)
        q = self.q
        digits = np.array([[(c // p**i) % p for i in range(r)] for c in range(q)], dtype=np.int64)
        self.digits = digits
        self.weights = p ** np.arange(r, dtype=np.int64)
        self.exp, self.log = self._log_tables()

    def _mul_codes(self, a: int, b: int) -> int:
        p, r = self.p, self.r
        da = [(a // p**i) % p for i in range(r)]
        db = [(b // p**i) % p for i in range(r)]
        prod = _polymod(_polymul(_trim(da), _trim(db), p), self.modulus, p) if self.r > 1 else [da[0] * db[0] % p]
        return sum(c * p**i for i, c in enumerate(prod))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[(self.log[a] + self.log[b]) % (self.q - 1)])

    def add(self, a: int, b: int) -> int:
        return int(((self.digits[a] + self.digits[b]) % self.p) @ self.weights)

    def _log_tables(self):
        q = self.q
        for g in range(2, q) if q > 2 else [1]:
            exp = np.zeros(q - 1, dtype=np.int64)
            x = 1
            seen_one = False
            for i in range(q - 1):
                exp[i] = x
                x = self._mul_codes(x, g)
                if x == 1 and i < q - 2:
                    seen_one = True
                    break
            if not seen_one:
                log = np.zeros(q, dtype=np.int64)
                log[exp] = np.arange(q - 1)
                return exp, log
        raise AssertionError("no primitive element")


def count_points(X, r: int = 1, budget: int = COUNT_BUDGET) -> int:
    """#X(F_{p^r}) by enumerating points with first nonzero coordinate 1."""
    p, n = X.p, X.n
    q = p**r
    total_pts = sum(q**k for k in range(n + 1))
    work = total_pts * max(1, len(X.f.terms()))
    if work > budget:
        raise RuntimeError(f"point count needs about {work} evaluations, budget is {budget}")
    F = ExtField(p, r)
    terms = X.f.terms()
    coeffs = np.array([c for c, _ in terms], dtype=np.int64)
    exps = np.array([e for _, e in terms], dtype=np.int64)
    count = 0
    chunk = 1 << 18
    for lead in range(n + 1):
        free = n - lead
        size = q**free
        for start in range(0, size, chunk):
            idx = np.arange(start, min(size, start + chunk), dtype=np.int64)
            pts = np.zeros((len(idx), n + 1), dtype=np.int64)
            pts[:, lead] = 1
            rem = idx.copy()
            for j in range(lead + 1, n + 1):
                pts[:, j] = rem % q
                rem //= q
            count += int(np.count_nonzero(_eval_vanishes(F, pts, coeffs, exps)))
    return count


def _eval_vanishes(F: ExtField, pts, coeffs, exps):
    p, q = F.p, F.q
    logs = F.log[pts]
    zero = pts == 0
    acc = np.zeros((pts.shape[0], F.r), dtype=np.int64)
    for c, e in zip(coeffs, exps):
        lg = (logs * e[None, :]).sum(axis=1) % (q - 1)
        vanish = (zero & (e[None, :] > 0)).any(axis=1)
        val = F.digits[F.exp[lg]] * c
        val[vanish] = 0
        acc = (acc + val) % p
    return ~acc.any(axis=1)


def power_sums(Q, rmax: int) -> list:
    """s_1..s_rmax of the reciprocal roots of Q = 1 + a_1 T + ... (Newton's identities)."""
    a = list(Q) + [0] * (rmax + 1)
    s = [0]
    for r in range(1, rmax + 1):
        val = -r * a[r] - sum(a[i] * s[r - i] for i in range(1, r))
        s.append(val)
    return s[1:]


def counts_from_zeta(Q, n: int, p: int, r: int) -> int:
    """#X(F_{p^r}) = sum_{i<n} p^{ir} + (-1)^{n+1} s_r."""
    s = power_sums(Q, r)[r - 1]
    return sum(p ** (i * r) for i in range(n)) + (-1) ** (n + 1) * s


def fedder_is_fsplit(f: HomogPoly, p: int) -> bool:
    """Fedder: f^{p-1} has a monomial with every exponent <= p-1."""
    g = power_coefficients(f.change_modulus(p), p - 1, p)
    exps = g.index.exps
    nz = np.asarray(g.coeffs, dtype=np.int64) != 0
    return bool(np.any(nz & (exps.max(axis=1) <= p - 1)))


# ------------------------------------------------- rational reduction oracle


def _rational_solve(A, b):
    """Some solution x of A x = b over Q (A a list of lists of ints/Fractions)."""
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    rows = len(A)
    cols = len(A[0]) if rows else 0
    aug = DomainMatrix([[QQ(int(x)) if not isinstance(x, Fraction) else QQ(x.numerator, x.denominator) for x in row] + [QQ(b[i].numerator, b[i].denominator)] for i, row in enumerate(A)], (rows, cols + 1), QQ)
    R, piv = aug.rref()
    if cols in piv:
        raise ValueError("inconsistent system")
    R = R.to_Matrix()
    x = [Fraction(0)] * cols
    for i, c in enumerate(piv):
        v = R[i, cols]
        x[c] = Fraction(int(v.p), int(v.q))
    return x


def _jacobian_int(X, k):
    """Integer matrix of (mu_i) -> sum mu_i d_i f into Homog_k, with the integer lift of f."""
    from .cohomology import jacobian_map_matrix

    big = 2**61 - 1
    J = jacobian_map_matrix(X, k, big).data
    return [[int(x) for x in row] for row in J]


def _divergence_rational(X, k, mu):
    n, d = X.n, X.d
    tgt = enumerate_monomials(n, k - d)
    out = [Fraction(0)] * len(tgt)
    off = 0
    src = enumerate_monomials(n, k - d + 1)
    for i in range(n + 1):
        for j, e in enumerate(src):
            if e[i] and mu[off + j]:
                ee = list(e)
                ee[i] -= 1
                out[tgt.rank(ee)] += e[i] * mu[off + j]
        off += len(src)
    return out


def naive_reduce(g, m: int, X, basis, modulus: int | None = None):
    """Coordinates of g*Omega/f^m in the basis, by exact rational Griffiths-Dwork reduction.

    ``g`` is a coefficient list in Homog_{dm-n-1}.  Returns Fractions, or
    residues mod ``modulus`` when it is given.
    """
    n, d = X.n, X.d
    g = [Fraction(int(x)) if not isinstance(x, Fraction) else x for x in np.asarray(g).tolist()]
    b = len(basis.elements)
    offs = basis.offsets()
    coords = [Fraction(0)] * b
    while m >= 1:
        k = d * m - n - 1
        if m > n:
            sl_basis = []
        else:
            sl_basis = basis.slices[m - 1].basis_ranks
        if k - (d - 1) < 0:
            for j, r in enumerate(sl_basis):
                coords[offs[m] + j] += g[r]
            break
        J = _jacobian_int(X, k)
        A = [[1 if r == br else 0 for br in sl_basis] + row for r, row in enumerate(J)]
        x = _rational_solve(A, g)
        for j in range(len(sl_basis)):
            coords[offs[m] + j] += x[j]
        mu = x[len(sl_basis):]
        if m == 1:
            if any(mu):
                raise ArithmeticError("residual image component at pole order 1")
            break
        g = [c / (m - 1) for c in _divergence_rational(X, k, mu)]
        m -= 1
    if modulus is None:
        return coords
    out = []
    for c in coords:
        if c.denominator % X.p == 0:
            raise ArithmeticError("denominator divisible by p")
        out.append(c.numerator * pow(c.denominator, -1, modulus) % modulus)
    return out
