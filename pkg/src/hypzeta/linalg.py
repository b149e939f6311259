"""Dense linear algebra over Z/N, N = p^M.

Entries are stored as int64 residues when N < 2^62 and as Python ints
otherwise.  Multiplication goes through float64 GEMMs whenever that is
exact: a float64 accumulator represents every integer up to 2^53, so a
product of two matrices with entries below ``bound`` is exact as long as the
inner dimension times (bound-1)^2 stays under that capacity.  Larger moduli
are handled by splitting entries into p-power limbs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FLOAT64_CAPACITY = 2**53
INT64_CAPACITY = 2**63 - 1
INT64_STORAGE_LIMIT = 2**62


@lru_cache(maxsize=None)
def prime_power(N: int):
    """(p, M) with N = p^M, or None when N is not a prime power."""
    if N < 2:
        return None
    p = 2
    while p * p <= N:
        if N % p == 0:
            break
        p += 1
    else:
        return (N, 1)
    M = 0
    while N % p == 0:
        N //= p
        M += 1
    return (p, M) if N == 1 else None


def storage_dtype(modulus: int):
    return np.int64 if modulus < INT64_STORAGE_LIMIT else object


def as_residues(data, modulus: int) -> np.ndarray:
    dt = storage_dtype(modulus)
    arr = np.asarray(data)
    if dt is object or arr.dtype == object:
        out = np.empty(arr.shape, dtype=object)
        flat = out.reshape(-1)
        for i, x in enumerate(arr.reshape(-1)):
            flat[i] = int(x) % modulus
        return out if dt is object else out.astype(np.int64)
    return np.asarray(arr, dtype=np.int64) % modulus


class ModMatrix:
    """Dense matrix over Z/modulus."""

    __slots__ = ("data", "modulus")

    def __init__(self, data, modulus: int, *, reduced: bool = False):
        self.modulus = modulus
        if reduced:
            self.data = data
        else:
            arr = as_residues(data, modulus)
            if arr.ndim != 2:
                arr = arr.reshape(arr.shape[0] if arr.ndim else 1, -1)
            self.data = arr
        if self.data.ndim != 2:
            raise ValueError("ModMatrix needs 2-d data")

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @classmethod
    def identity(cls, k: int, modulus: int):
        return cls(np.eye(k, dtype=np.int64), modulus)

    @classmethod
    def zeros(cls, rows: int, cols: int, modulus: int):
        return cls(np.zeros((rows, cols), dtype=np.int64), modulus)

    @classmethod
    def random(cls, rows: int, cols: int, modulus: int, rng: np.random.Generator):
        if modulus < 2**62:
            return cls(rng.integers(0, modulus, size=(rows, cols), dtype=np.int64), modulus, reduced=True)
        vals = [[int(rng.integers(0, 2**62)) * 2**62 + int(rng.integers(0, 2**62)) for _ in range(cols)] for _ in range(rows)]
        return cls(np.array(vals, dtype=object), modulus)

    def tolist(self):
        return [[int(x) for x in row] for row in self.data]

    def copy(self):
        return ModMatrix(self.data.copy(), self.modulus, reduced=True)

    def __eq__(self, other):
        return (
            isinstance(other, ModMatrix)
            and self.modulus == other.modulus
            and self.shape == other.shape
            and bool(np.all(self.data == other.data))
        )

    def __repr__(self):
        return f"ModMatrix({self.tolist()}, mod={self.modulus})"

    def _check(self, other):
        if not isinstance(other, ModMatrix) or other.modulus != self.modulus:
            raise ValueError("operands live over different rings")

    def __add__(self, other):
        self._check(other)
        return ModMatrix((self.data + other.data) % self.modulus, self.modulus, reduced=True)

    def __sub__(self, other):
        self._check(other)
        return ModMatrix((self.data - other.data) % self.modulus, self.modulus, reduced=True)

    def __neg__(self):
        return ModMatrix((-self.data) % self.modulus, self.modulus, reduced=True)

    def scale(self, c: int):
        return ModMatrix(scale_residues(self.data, c, self.modulus), self.modulus, reduced=True)

    def __matmul__(self, other):
        if isinstance(other, ModMatrix):
            return mat_mul(self, other)
        return mat_vec(self, other)

    def transpose(self):
        return ModMatrix(self.data.T.copy(), self.modulus, reduced=True)

    def reduce_to(self, modulus: int):
        return ModMatrix(self.data, modulus)


def scale_residues(x: np.ndarray, c: int, modulus: int) -> np.ndarray:
    """c * x mod modulus without int64 overflow."""
    c %= modulus
    if x.dtype == object:
        return (x * c) % modulus
    if c == 0:
        return np.zeros_like(x)
    if modulus < 2**31 or c < INT64_CAPACITY // max(modulus, 1):
        return (x * c) % modulus
    # binary chunks small enough that (modulus-1) * 2^t never overflows
    t = max(1, 62 - modulus.bit_length())
    acc = np.zeros_like(x)
    digits = []
    while c:
        digits.append(c & ((1 << t) - 1))
        c >>= t
    for dgt in reversed(digits):
        acc = (acc * (1 << t)) % modulus
        acc = (acc + (x * dgt) % modulus) % modulus
    return acc


def scale_columns(x: np.ndarray, c: np.ndarray, modulus: int) -> np.ndarray:
    """x * c[None, :] mod modulus, with c a vector of small nonnegative ints."""
    if x.dtype == object:
        return (x * c.astype(object)[None, :]) % modulus
    cmax = int(c.max()) if c.size else 0
    if cmax == 0 or cmax <= INT64_CAPACITY // max(modulus, 1):
        return (x * c[None, :]) % modulus
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[:, j] = scale_residues(x[:, j], int(c[j]), modulus)
    return out


# ---------------------------------------------------------------- kernels


@dataclass(frozen=True)
class StripePlan:
    capacity: int
    bound: int
    width: int


def stripe_plan(modulus: int, capacity: int = FLOAT64_CAPACITY, bound: int | None = None) -> StripePlan:
    """Stripe width for products of entries in [0, bound) (bound defaults to the modulus)."""
    if bound is None:
        bound = modulus
    w = capacity // max((bound - 1) ** 2, 1)
    return StripePlan(capacity=capacity, bound=bound, width=w)


def mat_mul_schoolbook(A: ModMatrix, B: ModMatrix) -> ModMatrix:
    if A.cols != B.rows:
        raise ValueError("shape mismatch")
    N = A.modulus
    a = A.data.astype(object)
    b = B.data.astype(object)
    prod = a.dot(b) if A.cols else np.zeros((A.rows, B.cols), dtype=object)
    return ModMatrix(np.asarray(prod, dtype=object) % N, N)


def _stripe_product(a: np.ndarray, b: np.ndarray, plan: StripePlan, modulus: int) -> np.ndarray:
    """Exact a @ b mod modulus for int64 inputs with entries in [0, plan.bound)."""
    inner = a.shape[1]
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if inner == 0:
        return out
    w = plan.width
    if w < 1:
        raise OverflowError("modulus too large for striped kernel")
    use_float = plan.capacity <= FLOAT64_CAPACITY
    for s in range(0, inner, w):
        e = min(inner, s + w)
        if use_float:
            part = (a[:, s:e].astype(np.float64) @ b[s:e].astype(np.float64)).astype(np.int64)
        else:
            part = a[:, s:e] @ b[s:e]
        out = (out + part % modulus) % modulus
    return out


def mat_mul_striped(A: ModMatrix, B: ModMatrix, plan: StripePlan | None = None) -> ModMatrix:
    if A.cols != B.rows:
        raise ValueError("shape mismatch")
    N = A.modulus
    if plan is None:
        plan = stripe_plan(N)
        if plan.width < 1:
            # too wide for float64 stripes; exact int64 accumulation still fits
            plan = stripe_plan(N, capacity=INT64_CAPACITY)
    if plan.width < 1 or N >= INT64_STORAGE_LIMIT:
        raise OverflowError("modulus too large for striped kernel")
    return ModMatrix(_stripe_product(A.data, B.data, plan, N), N, reduced=True)


def mat_mul_karatsuba(A: ModMatrix, B: ModMatrix, split: int) -> ModMatrix:
    """One Karatsuba split A = A1 + M0*A2; the M0^2 term vanishes since N | M0^2."""
    if A.cols != B.rows:
        raise ValueError("shape mismatch")
    N, M0 = A.modulus, split
    if (M0 * M0) % N:
        raise ValueError("invalid split: modulus does not divide split^2")
    if N >= INT64_STORAGE_LIMIT:
        raise OverflowError("unsupported modulus")
    plan = stripe_plan(N, bound=2 * M0 - 1)
    if plan.width < 1:
        raise OverflowError("unsupported modulus")
    a1, a2 = A.data % M0, A.data // M0
    b1, b2 = B.data % M0, B.data // M0
    p11 = _stripe_product(a1, b1, plan, N)
    p22 = _stripe_product(a2, b2, plan, N)
    p33 = _stripe_product(a1 + a2, b1 + b2, plan, N)
    mid = (p33 - p11 - p22) % N
    if N % M0 == 0:
        cross = (mid % (N // M0)) * M0
    else:
        cross = (mid.astype(object) * M0) % N
    out = (p11 + cross) % N
    return ModMatrix(np.asarray(out, dtype=np.int64), N, reduced=True)


class LimbOperand:
    """A residue matrix split into p-power limbs stored as float64."""

    __slots__ = ("limbs", "P", "shape", "_cat")

    def __init__(self, data: np.ndarray, P: int, L: int):
        self.P = P
        self.shape = data.shape
        limbs = []
        x = np.asarray(data, dtype=np.int64)
        for _ in range(L):
            limbs.append((x % P).astype(np.float64))
            x = x // P
        self.limbs = limbs
        self._cat = {}

    def sparsify(self):
        self.limbs = [_csr(x) for x in self.limbs]
        self._cat = {}

    def left_group(self, lo: int, hi: int):
        """[a_lo | ... | a_hi] (cached: the left operand is reused across calls)."""
        key = (lo, hi)
        if key not in self._cat:
            parts = self.limbs[lo : hi + 1]
            if isinstance(parts[0], np.ndarray):
                self._cat[key] = np.ascontiguousarray(np.hstack(parts))
            else:
                from scipy import sparse

                self._cat[key] = sparse.hstack(parts, format="csr")
        return self._cat[key]

    def right_group(self, k: int, lo: int, hi: int) -> np.ndarray:
        """[b_{k-lo}; ...; b_{k-hi}], matching left_group(lo, hi)."""
        return np.vstack([self.limbs[k - i] for i in range(lo, hi + 1)])


def limb_layout(N: int, inner: int):
    """(P, L) for the limb kernel, or None when N is not a usable prime power."""
    pm = prime_power(N)
    if pm is None or N >= INT64_STORAGE_LIMIT:
        return None
    p, M = pm
    inner = max(inner, 1)
    if inner * (p - 1) ** 2 > FLOAT64_CAPACITY:
        return None
    e = 1
    while e < M and inner * (p ** (e + 1) - 1) ** 2 <= FLOAT64_CAPACITY:
        e += 1
    return p**e, -(-M // e)


def limb_product(a: LimbOperand, b: LimbOperand, N: int) -> np.ndarray:
    """Exact product of two limb-split operands mod N, a power of the limb prime.

    Output limb k is sum_{i+j=k} a_i b_j.  As many terms as fit below 2^53
    share one BLAS call; limbs with P^k >= N vanish and are skipped.
    """
    P = a.P
    L = len(a.limbs)
    inner = a.shape[1]
    group = max(1, FLOAT64_CAPACITY // (max(inner, 1) * (P - 1) ** 2))
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    Pk = 1
    for k in range(L):
        Nk = N // Pk
        if Nk <= 1:
            break
        acc = None
        for lo in range(0, k + 1, group):
            hi = min(k, lo + group - 1)
            D = np.asarray(a.left_group(lo, hi) @ b.right_group(k, lo, hi)).astype(np.int64)
            D %= Nk
            acc = D if acc is None else (acc + D) % Nk
        out += acc * Pk
        Pk *= P
    return out % N


def mat_mul_limbs(A: ModMatrix, B: ModMatrix) -> ModMatrix:
    N = A.modulus
    layout = limb_layout(N, A.cols)
    if layout is None:
        raise OverflowError("unsupported modulus")
    P, L = layout
    return ModMatrix(limb_product(LimbOperand(A.data, P, L), LimbOperand(B.data, P, L), N), N, reduced=True)


def choose_kernel(N: int, inner: int) -> str:
    plan = stripe_plan(N)
    if N < INT64_STORAGE_LIMIT and plan.width >= 8:
        return "striped"
    pm = prime_power(N)
    if pm is not None and N < INT64_STORAGE_LIMIT:
        p, M = pm
        M0 = p ** (-(-M // 2))
        if stripe_plan(N, bound=2 * M0 - 1).width >= 8:
            return "karatsuba"
        if limb_layout(N, inner) is not None:
            return "limbs"
    return "schoolbook"


def mat_mul(A: ModMatrix, B: ModMatrix) -> ModMatrix:
    if A.modulus != B.modulus:
        raise ValueError("operands live over different rings")
    if A.cols != B.rows:
        raise ValueError("shape mismatch")
    N = A.modulus
    kind = choose_kernel(N, A.cols)
    if kind == "striped":
        return mat_mul_striped(A, B)
    if kind == "karatsuba":
        p, M = prime_power(N)
        return mat_mul_karatsuba(A, B, p ** (-(-M // 2)))
    if kind == "limbs":
        return mat_mul_limbs(A, B)
    return mat_mul_schoolbook(A, B)


def mat_vec(A: ModMatrix, w) -> np.ndarray:
    """A @ w mod N for a vector w; one float64 gemv per limb pair."""
    N = A.modulus
    w = as_residues(w, N)
    if A.data.dtype == object:
        return np.asarray(A.data.dot(w.astype(object)), dtype=object) % N
    plan = stripe_plan(N)
    if plan.width >= A.cols:
        return (A.data.astype(np.float64) @ w.astype(np.float64)).astype(np.int64) % N
    out = mat_mul(A, ModMatrix(w.reshape(-1, 1), N, reduced=True))
    return out.data[:, 0]


# ------------------------------------------------------------ elimination


def _inv_mod(x: int, N: int) -> int:
    return pow(int(x), -1, N)


def row_reduce_unit_pivots(A: ModMatrix, p: int | None = None):
    """Reduced echelon form using unit pivots only.

    Columns are scanned left to right; the pivot of a column is the first
    remaining row whose entry is a unit mod p.  Returns
    ``(echelon, transform, pivots)`` with transform @ A = echelon, and
    ``pivots`` the list of pivot columns (row i of the echelon holds the
    pivot pivots[i]).
    """
    N = A.modulus
    if p is None:
        p = prime_power(N)[0]
    rows, cols = A.shape
    use_int = N < 2**31
    dt = np.int64 if use_int else object
    aug = np.concatenate([A.data.astype(dt), np.eye(rows, dtype=np.int64).astype(dt)], axis=1)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        col = aug[r:, c]
        cand = np.nonzero(np.asarray(col % p, dtype=np.int64))[0]
        if len(cand) == 0:
            continue
        i = r + int(cand[0])
        if i != r:
            aug[[r, i]] = aug[[i, r]]
        inv = _inv_mod(aug[r, c], N)
        aug[r] = (aug[r] * inv) % N
        factors = aug[:, c].copy()
        factors[r] = 0
        nz = np.nonzero(np.asarray(factors % N != 0))[0]
        if len(nz):
            aug[nz] = (aug[nz] - np.outer(factors[nz], aug[r]) % N) % N
        pivots.append(c)
        r += 1
    echelon = ModMatrix(aug[:, :cols], N)
    transform = ModMatrix(aug[:, cols:], N)
    return echelon, transform, pivots


def solve_particular(A: ModMatrix, b) -> np.ndarray:
    """Deterministic x with A x = b: pivot columns get the reduced right-hand side, the rest 0."""
    N = A.modulus
    echelon, transform, pivots = row_reduce_unit_pivots(A)
    tb = mat_vec(transform, b)
    x = np.zeros(A.cols, dtype=storage_dtype(N))
    for i, c in enumerate(pivots):
        x[c] = tb[i]
    check = mat_vec(A, x)
    if not np.array_equal(np.asarray(check, dtype=object) % N, np.asarray(as_residues(b, N), dtype=object)):
        raise ValueError("not S-smooth / solve failed: right-hand side outside the image")
    return x


def mod_p_pivots(A: np.ndarray, p: int, by_rows: bool = False):
    """Pivot columns of the mod-p echelon of A (int64 arithmetic)."""
    a = np.asarray(A, dtype=np.int64) % p
    if by_rows:
        a = a.T.copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        cand = np.nonzero(a[r:, c])[0]
        if len(cand) == 0:
            continue
        i = r + int(cand[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r] = (a[r] * pow(int(a[r, c]), -1, p)) % p
        below = a[r + 1 :, c]
        nz = np.nonzero(below)[0]
        if len(nz):
            a[r + 1 + nz] = (a[r + 1 + nz] - np.outer(below[nz], a[r])) % p
        pivots.append(c)
        r += 1
    return pivots


def inverse_mod_p(A: np.ndarray, p: int) -> np.ndarray:
    n = A.shape[0]
    aug = np.concatenate([np.asarray(A, dtype=np.int64) % p, np.eye(n, dtype=np.int64)], axis=1)
    for c in range(n):
        cand = np.nonzero(aug[c:, c])[0]
        if len(cand) == 0:
            raise ZeroDivisionError("matrix is singular mod p")
        i = c + int(cand[0])
        if i != c:
            aug[[c, i]] = aug[[i, c]]
        aug[c] = (aug[c] * pow(int(aug[c, c]), -1, p)) % p
        f = aug[:, c].copy()
        f[c] = 0
        nz = np.nonzero(f)[0]
        if len(nz):
            aug[nz] = (aug[nz] - np.outer(f[nz], aug[c])) % p
    return aug[:, n:]


def inverse_mod(A: ModMatrix) -> ModMatrix:
    """Inverse over Z/p^M: invert mod p, then Newton-lift X <- X(2I - AX)."""
    N = A.modulus
    p, M = prime_power(N)
    n = A.rows
    X = ModMatrix(inverse_mod_p(np.asarray(A.data % p, dtype=np.int64), p), N)
    prec = 1
    two = ModMatrix.identity(n, N).scale(2)
    while prec < M:
        prec = min(2 * prec, M)
        X = X @ (two - A @ X)
    check = A @ X
    if not check == ModMatrix.identity(n, N):
        raise ArithmeticError("Hensel lifting failed")
    return X


# ------------------------------------------------------------ charpoly


def charpoly_division_free(A: ModMatrix) -> list:
    """Coefficients (leading first) of det(T I - A) by Berkowitz's algorithm."""
    N = A.modulus
    n = A.rows
    if A.cols != n:
        raise ValueError("matrix must be square")
    a = [[int(x) for x in row] for row in A.data]
    if n == 0:
        return [1]
    C = [1, (-a[0][0]) % N]
    for r in range(1, n):
        R = a[r][:r]
        col = [a[i][r] for i in range(r)]
        t = [1, (-a[r][r]) % N]
        vec = col
        for _ in range(r):
            t.append((-sum(x * y for x, y in zip(R, vec))) % N)
            vec = [sum(a[i][j] * vec[j] for j in range(r)) % N for i in range(r)]
        newC = []
        for i in range(r + 2):
            s = 0
            for j in range(max(0, i - len(t) + 1), min(i, r) + 1):
                s += t[i - j] * C[j]
            newC.append(s % N)
        C = newC
    return C


# ------------------------------------------------------- linear recurrence


def linrec_eval(A: ModMatrix, B: ModMatrix, k: int, w) -> np.ndarray:
    """M(0) M(1) ... M(k) w for M(y) = A y + B (k+1 matvecs, k+1 subtractions)."""
    N = A.modulus
    Mm = A.scale(k) + B
    w = as_residues(w, N)
    for _ in range(k, -1, -1):
        w = mat_vec(Mm, w)
        Mm = Mm - A
    return w


SPARSE_DENSITY = 0.04


class PreparedMatrix:
    """Left operand split once for repeated exact products A @ B mod N.

    Operators that are mostly zero (typical for sparse f) are stored as CSR;
    the limb bounds are the same, since a sparse row has at most as many
    terms as a dense one.
    """

    def __init__(self, data: np.ndarray, N: int, sparse: bool | None = None):
        self.N = N
        self.shape = data.shape
        inner = data.shape[1]
        if sparse is None:
            sparse = data.size > 0 and np.count_nonzero(data) <= SPARSE_DENSITY * data.size
        self.sparse = bool(sparse) and data.dtype != object
        if data.dtype != object and stripe_plan(N).width >= max(inner, 1):
            self.kind = "direct"
            self.op = data.astype(np.float64)
            if self.sparse:
                self.op = _csr(self.op)
        elif data.dtype != object and limb_layout(N, inner) is not None:
            self.kind = "limbs"
            self.P, self.L = limb_layout(N, inner)
            self.op = LimbOperand(data, self.P, self.L)
            if self.sparse:
                self.op.sparsify()
        else:
            self.kind = "object"
            self.sparse = False
            self.op = data.astype(object)

    def matmul(self, B: np.ndarray) -> np.ndarray:
        N = self.N
        if self.kind == "direct":
            return np.asarray(self.op @ B.astype(np.float64)).astype(np.int64) % N
        if self.kind == "limbs":
            return limb_product(self.op, LimbOperand(B, self.P, self.L), N)
        return np.asarray(self.op.dot(B.astype(object)), dtype=object) % N


def _csr(x: np.ndarray):
    from scipy import sparse

    return sparse.csr_matrix(x)
