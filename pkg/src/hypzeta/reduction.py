"""Controlled reduction: the R_{u,v} operators, the reduction game and its policies.

A game term (U, w) stands for x^U w Omega / (x^S f^L) with w in Homog_{dn-n};
the pole order L is implied by |U| = d(L - n) + |S| - 1.  One step along a
direction v uses

    L x^{u+v} g / (x^S f^{L+1})  ==  x^u R_{u,v}(g) / (x^S f^L),

so vectors are stored scaled by the running product of pole orders and each
step is a pure matrix-vector product.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .cohomology import domain_offsets, jacobian_map_matrix, smooth_check_degree
from .homog import enumerate_monomials
from .linalg import ModMatrix, PreparedMatrix, inverse_mod, linrec_eval, mod_p_pivots, scale_columns, storage_dtype
from .pep import RuvOperator, eval_to_linear


class IllegalMove(ValueError):
    pass


class NotSSmooth(ValueError):
    pass


def tweak(I, m: int) -> tuple:
    """Remove m units from the front of I (first positive entry first), with the safety counter exit."""
    out = list(I)
    count, o = 0, m
    while m > 0:
        for i in range(len(out)):
            if out[i] > 0:
                out[i] -= 1
                m -= 1
                break
        if count > len(out) * o:
            return tuple(out)
        count += 1
    return tuple(out)


def choose_v_greedy(d: int, u, S) -> tuple:
    """One unit on each s in S with u_s != 0, then round robin over indices with v_m < u_m."""
    v = [0] * len(u)
    i = d
    for s in S:
        if i == 0:
            break
        if u[s] != 0:
            v[s] = 1
            i -= 1
    while i > 0:
        progressed = False
        for m in range(len(u)):
            if v[m] < u[m]:
                v[m] += 1
                i -= 1
                progressed = True
                if i == 0:
                    break
        if not progressed:
            raise IllegalMove(f"cannot place {d} units below u={tuple(u)}")
    return tuple(v)


def v_allowed(U, v, S, k: int = 1) -> bool:
    """v in V_S(U, k): U - k v >= 0 and v_i = 0 forces U_i = 0 for i in S."""
    if any(U[i] - k * v[i] < 0 for i in range(len(U))):
        return False
    return all(v[i] != 0 or U[i] == 0 for i in S)


def max_chunk(U, v, floor: int, d: int) -> int:
    k = (sum(U) - floor) // d
    for ui, vi in zip(U, v):
        if vi:
            k = min(k, ui // vi)
    return k


# ------------------------------------------------------------ operators


class WeightedSolver:
    """Deterministic right inverse of the S-weighted Jacobian map in degree (n+1)(d-1)+1-|S|."""

    def __init__(self, X, S, modulus: int):
        self.X = X
        self.S = tuple(sorted(S))
        self.modulus = modulus
        self.k = smooth_check_degree(X, self.S)
        J = jacobian_map_matrix(X, self.k, modulus, self.S)
        self.blocks, self.offsets, self.dim = domain_offsets(X, self.k, self.S)
        cols = mod_p_pivots(J.data % X.p, X.p)
        if len(cols) != J.rows:
            raise NotSSmooth(f"hypersurface is not S-smooth for S={self.S}")
        self.cols = np.array(cols, dtype=np.int64)
        self.inv = inverse_mod(ModMatrix(J.data[:, cols], modulus)).data
        self.target = enumerate_monomials(X.n, self.k)

    def solve_columns(self, targets: np.ndarray) -> np.ndarray:
        """Solutions (domain coordinates) for the monomials with the given ranks."""
        out = np.zeros((self.dim, len(targets)), dtype=self.inv.dtype)
        out[self.cols] = self.inv[:, targets]
        return out


def build_ruv(X, solver: WeightedSolver, v) -> RuvOperator:
    """Matrices A_0..A_{n+1} with R_{u,v} = sum A_i u_i + A_{n+1} on Homog_{dn-n}."""
    n, d = X.n, X.d
    N = solver.modulus
    S = set(solver.S)
    v = tuple(int(x) for x in v)
    if sum(v) != d:
        raise ValueError("direction must have norm d")
    src = enumerate_monomials(n, d * n - n)
    s = len(src)
    oneS = np.array([1 if i in S else 0 for i in range(n + 1)], dtype=np.int64)
    shifted = src.exps + np.array(v) - oneS
    valid = (shifted >= 0).all(axis=1)
    tcols = np.nonzero(valid)[0]
    G = np.zeros((solver.dim, s), dtype=solver.inv.dtype)
    if len(tcols):
        G[:, tcols] = solver.solve_columns(solver.target.ranks(shifted[valid]))
    dt = storage_dtype(N)
    mats = [np.zeros((s, s), dtype=dt) for _ in range(n + 2)]
    const = mats[n + 1]
    for (i, deg, weighted), off in zip(solver.blocks, solver.offsets):
        if deg < 0:
            continue
        blk = enumerate_monomials(n, deg)
        Gi = G[off : off + len(blk)]
        if i in S:
            # (x^S/x_i) u_i g_i  and  x^S d_i g_i
            mono = oneS.copy()
            mono[i] -= 1
            rows = src.ranks(blk.exps + mono)
            mats[i][rows] = (mats[i][rows] + Gi) % N
            has = blk.exps[:, i] > 0
            e = blk.exps[has].copy()
            mult = e[:, i].copy()
            e[:, i] -= 1
            rows = src.ranks(e + oneS)
            contrib = scale_columns(Gi[has].T, mult, N).T
            const[rows] = (const[rows] + contrib) % N
        else:
            # x^S (u_i + 1) g_i  and  x^S x_i d_i g_i
            rows = src.ranks(blk.exps + oneS)
            mats[i][rows] = (mats[i][rows] + Gi) % N
            mult = blk.exps[:, i] + 1
            contrib = scale_columns(Gi.T, mult, N).T
            const[rows] = (const[rows] + contrib) % N
    return RuvOperator(v=v, mats=[ModMatrix(m, N, reduced=True) for m in mats], modulus=N)


class PackedOperator:
    """The stacked A_0..A_{n+1} with all-zero rows and columns removed.

    ``apply(W, u)`` returns R_u W column by column, where u has one row per
    column of W.
    """

    def __init__(self, entry: RuvOperator, N: int):
        self.N = N
        mats = [A.data for A in entry.mats]
        s = entry.side
        used_cols = np.zeros(s, dtype=bool)
        self.parts = []
        blocks = []
        for i, A in enumerate(mats):
            nz = A.any(axis=1) if A.dtype != object else np.array([any(r) for r in A])
            rows = np.nonzero(nz)[0]
            if len(rows) == 0:
                continue
            self.parts.append((i, rows))
            blocks.append(A[rows])
            used_cols |= A[rows].any(axis=0) if A.dtype != object else np.array([any(c) for c in A[rows].T])
        self.cols = np.nonzero(used_cols)[0]
        self.side = s
        self.const = len(mats) - 1
        self.offsets = np.cumsum([0] + [len(r) for _, r in self.parts])
        if blocks:
            stack = np.concatenate(blocks, axis=0)[:, self.cols]
            self.prep = PreparedMatrix(np.ascontiguousarray(stack), N)
        else:
            self.prep = None

    def apply(self, W: np.ndarray, u: np.ndarray) -> np.ndarray:
        N = self.N
        out = np.zeros_like(W)
        if self.prep is None or len(self.cols) == 0:
            return out
        G = self.prep.matmul(W[self.cols])
        for (i, rows), lo, hi in zip(self.parts, self.offsets, self.offsets[1:]):
            part = G[lo:hi]
            if i != self.const:
                part = scale_columns(part, u[:, i], N)
            out[rows] = (out[rows] + part) % N
        return out


def _packed_operator(entry: RuvOperator, N: int) -> PackedOperator:
    op = entry._prepared.get("packed")
    if op is None:
        op = PackedOperator(entry, N)
        entry._prepared["packed"] = op
    return op


# ------------------------------------------------------------ game state


@dataclass
class Costs:
    matvecs: int = 0
    startups: int = 0
    combines: int = 0

    def as_dict(self):
        return {"matvecs": self.matvecs, "startups": self.startups, "combines": self.combines}


@dataclass(eq=False)
class GameState:
    """Terms (tag, U, w).  Terms with different tags never combine."""

    n: int
    d: int
    S: tuple
    modulus: int
    U: np.ndarray
    W: np.ndarray
    tags: np.ndarray
    costs: Costs = field(default_factory=Costs)
    last_move_was_combine: bool = False

    @property
    def floor(self) -> int:
        return len(self.S) - 1

    def __len__(self):
        return self.U.shape[0]

    def norms(self) -> np.ndarray:
        return self.U.sum(axis=1)

    def poles(self) -> np.ndarray:
        return self.n + (self.norms() - self.floor) // self.d

    def done(self) -> bool:
        return bool(np.all(self.norms() == self.floor))

    def terms(self):
        """{(tag, u): vector} view (sums duplicates)."""
        out = {}
        for i in range(len(self)):
            key = (int(self.tags[i]), tuple(int(x) for x in self.U[i]))
            w = self.W[:, i]
            out[key] = (out[key] + w) % self.modulus if key in out else w.copy()
        return out

    def check_move(self, i: int, v, k: int, S=None):
        S = self.S if S is None else S
        U = self.U[i]
        if sum(v) != self.d or k < 1:
            raise IllegalMove("direction must have norm d and k >= 1")
        if not v_allowed(U, v, S, k):
            raise IllegalMove(f"v={v} not allowed at u={tuple(U)} for k={k}")
        if U.sum() - k * self.d < self.floor:
            raise IllegalMove("move goes below the target norm")

    def reduce_chunk(self, i: int, v, k: int, pep):
        """Move one term by k steps along v with the linear-recurrence evaluator."""
        self.check_move(i, v, k)
        v_arr = np.array(v, dtype=np.int64)
        x = self.U[i] - k * v_arr
        A, B = eval_to_linear(pep.get(tuple(v)), x, v_arr)
        self.W[:, i] = linrec_eval(A, B, k - 1, self.W[:, i])
        self.U[i] = x
        self.costs.matvecs += k
        self.costs.startups += 1
        self.last_move_was_combine = False

    def apply_moves(self, moves, pep):
        """Execute at most one move per term, batching terms that share a direction.

        ``moves`` is a list of (term index, v, k).  Results equal running
        reduce_chunk on each move.
        """
        seen = set()
        groups = defaultdict(list)
        for i, v, k in moves:
            if i in seen:
                raise IllegalMove("one move per term per batch")
            seen.add(i)
            self.check_move(i, v, k)
            groups[tuple(int(x) for x in v)].append((i, k))
        N = self.modulus
        n2 = self.n + 2
        s = self.W.shape[0]
        for v, items in groups.items():
            packed = _packed_operator(pep.get(v), N)
            idx = np.array([i for i, _ in items], dtype=np.int64)
            ks = np.array([k for _, k in items], dtype=np.int64)
            v_arr = np.array(v, dtype=np.int64)
            for step in range(int(ks.max())):
                act = idx[ks > step]
                u = self.U[act] - v_arr
                self.W[:, act] = packed.apply(self.W[:, act], u)
                self.U[act] = u
            self.costs.matvecs += int(ks.sum())
            self.costs.startups += len(items)
        if moves:
            self.last_move_was_combine = False

    def combine_like_terms(self):
        if self.last_move_was_combine:
            raise IllegalMove("combine may not follow combine")
        key = np.concatenate([self.tags[:, None], self.U], axis=1)
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        dups = len(self) - len(uniq)
        if dups:
            # keep first-occurrence order
            first = np.full(len(uniq), len(self), dtype=np.int64)
            np.minimum.at(first, inverse, np.arange(len(self)))
            order = np.argsort(first, kind="stable")
            rank = np.empty_like(order)
            rank[order] = np.arange(len(order))
            newpos = rank[inverse]
            W = np.zeros((self.W.shape[0], len(uniq)), dtype=self.W.dtype)
            for j in range(len(self)):
                W[:, newpos[j]] += self.W[:, j]
                W[:, newpos[j]] %= self.modulus
            self.W = W
            self.U = self.U[first[order]].copy()
            self.tags = self.tags[first[order]].copy()
        self.costs.combines += dups
        self.last_move_was_combine = True
        return dups


def seed_game(X, terms, S, modulus: int, scales) -> GameState:
    """Tweak every Frobenius term into game format.

    ``terms`` are (tag, exponent, pole) triples and ``scales`` the matching
    residues placed on the single monomial x^{E-U}.  Terms with the same
    (tag, U) are accumulated (a free initial combine).
    """
    n, d = X.n, X.d
    Sset = set(S)
    src = enumerate_monomials(n, d * n - n)
    acc = {}
    order = []
    for (tag, exponent, pole), c in zip(terms, scales):
        E = tuple(e + (1 if i in Sset else 0) for i, e in enumerate(exponent))
        if sum(E) < d * n - n:
            raise ValueError("malformed term: norm below dn-n")
        U = tweak(E, d * n - n)
        g = tuple(a - b for a, b in zip(E, U))
        key = (tag, U)
        if key not in acc:
            acc[key] = np.zeros(len(src), dtype=object)
            order.append(key)
        r = src.rank(g)
        acc[key][r] = (acc[key][r] + c) % modulus
    T = len(order)
    dt = storage_dtype(modulus)
    W = np.zeros((len(src), T), dtype=dt)
    for j, key in enumerate(order):
        W[:, j] = acc[key].astype(dt) if dt is not object else acc[key]
    U = np.array([key[1] for key in order], dtype=np.int64).reshape(T, n + 1)
    tags = np.array([key[0] for key in order], dtype=np.int64)
    return GameState(n=n, d=d, S=tuple(sorted(S)), modulus=modulus, U=U, W=W, tags=tags)


# ------------------------------------------------------------ policies


def _chunk_plan(U, d, S, floor, stop=None):
    """Greedy-v maximal chunks from U until the floor (or until ``stop(U)`` holds)."""
    U = list(int(x) for x in U)
    plan = []
    while sum(U) > floor and not (stop and stop(U)):
        v = choose_v_greedy(d, U, S)
        k = max_chunk(U, v, floor, d)
        if k < 1:
            raise IllegalMove(f"no progress possible from u={tuple(U)}")
        plan.append((v, k))
        U = [a - k * b for a, b in zip(U, v)]
    return plan


def _run_plans(state: GameState, plans, pep):
    """Advance every term through its list of chunks, one chunk per term per batch."""
    pos = [0] * len(plans)
    while True:
        moves = [(i, *plans[i][pos[i]]) for i in range(len(plans)) if pos[i] < len(plans[i])]
        if not moves:
            break
        state.apply_moves(moves, pep)
        for i, _, _ in moves:
            pos[i] += 1


def policy_depth_first(state: GameState, pep) -> GameState:
    """Every term independently along greedy directions with maximal chunks; never combines."""
    plans = [_chunk_plan(state.U[i], state.d, state.S, state.floor) for i in range(len(state))]
    _run_plans(state, plans, pep)
    return state


def policy_p_chunk(state: GameState, pep, p: int) -> GameState:
    """Reduce the top pole stratum by p pole orders (p - n at the bottom), combine, repeat."""
    d, S, floor = state.d, state.S, state.floor
    while not state.done():
        norms = state.norms()
        top = norms.max()
        members = np.nonzero(norms == top)[0]
        pole = state.n + (int(top) - floor) // d
        drop = min(p, pole - state.n)
        target = int(top) - drop * d
        plans = [_chunk_plan(state.U[i], d, S, floor, stop=lambda U, t=target: sum(U) <= t) for i in members]
        # the greedy chunks are capped so that the stratum lands exactly drop poles lower
        capped = []
        for i, plan in zip(members, plans):
            U = [int(x) for x in state.U[i]]
            out = []
            for v, k in plan:
                k = min(k, (sum(U) - target) // d)
                if k < 1:
                    break
                out.append((v, k))
                U = [a - k * b for a, b in zip(U, v)]
            # recompute after capping so every term reaches the target
            while sum(U) > target:
                v = choose_v_greedy(d, U, S)
                k = min(max_chunk(U, v, floor, d), (sum(U) - target) // d)
                out.append((v, k))
                U = [a - k * b for a, b in zip(U, v)]
            capped.append(out)
        sub = np.array(members)
        pos = [0] * len(sub)
        while True:
            moves = [(int(sub[j]), *capped[j][pos[j]]) for j in range(len(sub)) if pos[j] < len(capped[j])]
            if not moves:
                break
            state.apply_moves(moves, pep)
            for j in range(len(sub)):
                if pos[j] < len(capped[j]):
                    pos[j] += 1
        state.combine_like_terms()
    return state


def policy_var_by_var(state: GameState, pep) -> GameState:
    """Drive coordinate n to zero for all terms, combine, then coordinate n-1, and so on."""
    if tuple(state.S) != (state.n,):
        raise IllegalMove("variable-by-variable reduction runs with S = {n}")
    d, S, floor = state.d, state.S, state.floor
    for t in range(state.n, -1, -1):
        plans = [
            _chunk_plan(state.U[i], d, S, floor, stop=lambda U, t=t: U[t] == 0) for i in range(len(state))
        ]
        _run_plans(state, plans, pep)
        if not state.last_move_was_combine:
            state.combine_like_terms()
        if state.done():
            break
    if not state.done():
        raise IllegalMove("variable-by-variable reduction did not finish")
    return state


POLICIES = ("p-chunk", "depth-first", "var-by-var")


def run_policy(name: str, state: GameState, pep, p: int) -> GameState:
    if name == "p-chunk":
        return policy_p_chunk(state, pep, p)
    if name == "depth-first":
        return policy_depth_first(state, pep)
    if name == "var-by-var":
        return policy_var_by_var(state, pep)
    raise ValueError(f"unknown policy {name!r}")
