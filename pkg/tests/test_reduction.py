import numpy as np
import pytest

from hypzeta.cohomology import compute_basis, final_reduce
from hypzeta.homog import enumerate_monomials, homog_dim
from hypzeta.oracle import naive_reduce
from hypzeta.reduction import (
    GameState,
    IllegalMove,
    NotSSmooth,
    WeightedSolver,
    build_ruv,
    choose_v_greedy,
    max_chunk,
    run_policy,
    seed_game,
    tweak,
    v_allowed,
)
from hypzeta.zeta import make_pep, policy_subset

from conftest import fermat, random_smooth


def test_tweak_front_first():
    assert tweak((3, 0, 2), 2) == (1, 0, 2)
    assert tweak((3, 1, 2), 4) == (0, 0, 2)
    assert tweak((0, 2, 5), 3) == (0, 0, 4)
    assert tweak((1, 1), 0) == (1, 1)


def test_tweak_counter_exit():
    # more units requested than available: the guard ends the loop
    assert tweak((1, 0), 3) == (0, 0)
    assert tweak((0, 0), 5) == (0, 0)


def test_greedy_direction():
    assert choose_v_greedy(3, (5, 0, 2, 1), ()) == (1, 0, 1, 1)
    assert choose_v_greedy(3, (5, 0, 0, 0), ()) == (3, 0, 0, 0)
    assert choose_v_greedy(3, (2, 1, 1, 4), (0, 3)) == (2, 0, 0, 1)
    assert choose_v_greedy(4, (2, 0, 3, 1), (2, 3)) == (1, 0, 2, 1)
    assert choose_v_greedy(3, (5, 0, 0), (0, 1, 2)) == (3, 0, 0)
    with pytest.raises(IllegalMove):
        choose_v_greedy(4, (1, 1, 0), (0, 1, 2))


def test_v_allowed_and_max_chunk():
    S = (0, 1, 2)
    assert v_allowed((2, 2, 1), (1, 1, 1), S)
    assert not v_allowed((2, 2, 1), (1, 1, 1), S, k=2)
    # coordinate 2 of U is nonzero but v skips it
    assert not v_allowed((2, 2, 1), (2, 1, 0), S)
    assert v_allowed((2, 2, 0), (2, 1, 0), S)
    assert max_chunk((6, 4, 2), (1, 1, 1), floor=2, d=3) == 2
    assert max_chunk((9, 0, 0), (3, 0, 0), floor=2, d=3) == 2


def test_not_s_smooth_detected():
    from hypzeta.cohomology import Hypersurface

    # smooth, yet the (3,)-weighted Jacobian ideal misses the point (1:0:0:0)
    X = Hypersurface.from_text(7, 3, "x0^3*x1 + x1^4 + x2^4 + x3^4")
    WeightedSolver(X, (0, 1, 2, 3), 7**2)
    with pytest.raises(NotSSmooth):
        WeightedSolver(X, (3,), 7**2)
    # the diagonal curve is smooth even for the empty set
    WeightedSolver(fermat(7, 2, 3), (), 7**2)


@pytest.mark.parametrize("p,d", [(7, 3), (7, 4), (11, 4)])
def test_one_step_identity_in_cohomology(p, d, rng):
    """L x^{u+v} g / (x^S f^{L+1}) and x^u R_{u,v}(g) / (x^S f^L) have equal coordinates."""
    X = random_smooth(p, 2, d, rng)
    B = compute_basis(X)
    S = (0, 1, 2)
    mod = p**3
    solver = WeightedSolver(X, S, mod)
    src = enumerate_monomials(2, 2 * d - 2)
    oneS = np.ones(3, dtype=np.int64)
    for L in (3, 4):
        norm = d * (L - 2) + 2
        u = np.array([1, 1, norm - 2])
        v = tuple(int(x) for x in choose_v_greedy(d, u + np.array(choose_v_greedy(d, u, S)), S))
        R = build_ruv(X, solver, v)
        g = rng.integers(0, mod, len(src))
        Rg = (R.at(u) @ g) % mod
        lhs = _embed(src, g, u + np.array(v) - oneS, d * (L + 1) - 3)
        rhs = _embed(src, Rg, u - oneS, d * L - 3)
        a = naive_reduce([L * c % mod for c in lhs], L + 1, X, B, mod)
        b = naive_reduce(rhs, L, X, B, mod)
        assert a == b


def _embed(src, w, shift, degree):
    tgt = enumerate_monomials(src.n, degree)
    out = [0] * len(tgt)
    for e, c in zip(src.exps, w):
        if c:
            out[tgt.rank(tuple(int(x) for x in e + shift))] += int(c)
    return out


def _final_coords(state, X, B, mod):
    """Coordinates of every tag's remainder at pole n."""
    n, d = X.n, X.d
    oneS = np.array([1 if i in state.S else 0 for i in range(n + 1)])
    src = enumerate_monomials(n, d * n - n)
    low = enumerate_monomials(n, d * n - n - 1)
    out = {}
    for i in range(len(state)):
        g = np.zeros(len(low), dtype=object)
        ex = src.exps + state.U[i] - oneS
        for e, c in zip(ex, state.W[:, i]):
            if int(c) % mod:
                assert (e >= 0).all()
                g[low.rank(tuple(int(x) for x in e))] += int(c)
        tag = int(state.tags[i])
        vec = np.asarray(final_reduce(g % mod, n, B, mod), dtype=object)
        out[tag] = (out.get(tag, 0) + vec) % mod
    return out


@pytest.mark.parametrize("policy", ["p-chunk", "depth-first", "var-by-var"])
def test_policies_agree_with_rational_reduction(policy, rng):
    p = 7
    X = random_smooth(p, 2, 4, rng, also=[(2,)])
    B = compute_basis(X)
    mod = p**4
    S = policy_subset(X, policy)
    idx = {L: enumerate_monomials(2, 4 * L - 3) for L in (3, 4, 5)}
    terms, scales, raw = [], [], []
    for tag, L in enumerate([3, 4, 5, 5]):
        e = idx[L].unrank(int(rng.integers(len(idx[L]))))
        c = int(rng.integers(1, mod))
        terms.append((tag, e, L))
        # the game result carries the pole-order ladder prod_{j=n}^{L-1} j
        ladder = 1
        for j in range(2, L):
            ladder *= j
        scales.append(c)
        raw.append((tag, e, L, c, ladder))
    state = seed_game(X, terms, S, mod, scales)
    pep = make_pep(X, S, mod)
    state = run_policy(policy, state, pep, p)
    assert state.done()
    got = _final_coords(state, X, B, mod)
    for tag, e, L, c, ladder in raw:
        g = [0] * len(idx[L])
        g[idx[L].rank(e)] = c * ladder
        want = naive_reduce(g, L, X, B, mod)
        assert [int(x) for x in got[tag]] == want
    if policy == "depth-first":
        assert state.costs.combines == 0


def _toy_state(mod=7**3):
    U = np.array([[3, 2, 2], [3, 2, 2], [4, 2, 1], [3, 2, 2]], dtype=np.int64)
    W = np.arange(15 * 4, dtype=np.int64).reshape(15, 4) % mod
    tags = np.array([0, 0, 0, 1])
    return GameState(n=2, d=3, S=(0, 1, 2), modulus=mod, U=U, W=W, tags=tags)


def test_combine_sums_like_terms_in_first_occurrence_order():
    st = _toy_state()
    W0 = st.W.copy()
    dups = st.combine_like_terms()
    assert dups == 1
    assert [tuple(u) for u in st.U] == [(3, 2, 2), (4, 2, 1), (3, 2, 2)]
    assert list(st.tags) == [0, 0, 1]
    assert np.array_equal(st.W[:, 0], (W0[:, 0] + W0[:, 1]) % st.modulus)
    assert st.costs.combines == 1


def test_combine_twice_is_illegal():
    st = _toy_state()
    st.combine_like_terms()
    with pytest.raises(IllegalMove):
        st.combine_like_terms()


def test_reduce_chunk_matches_batched_moves_and_counts_costs(rng):
    X = random_smooth(7, 2, 3, rng)
    mod = 7**3
    S = (0, 1, 2)
    pep = make_pep(X, S, mod)
    a, b = _toy_state(mod), _toy_state(mod)
    a.W = rng.integers(0, mod, a.W.shape)
    b.W = a.W.copy()
    v = (1, 1, 1)
    a.reduce_chunk(0, v, 1, pep)
    a.reduce_chunk(2, v, 1, pep)
    b.apply_moves([(0, v, 1), (2, v, 1)], pep)
    assert np.array_equal(a.U, b.U)
    assert np.array_equal(a.W % mod, b.W % mod)
    assert a.costs.matvecs == 2 and a.costs.startups == 2


def test_linrec_chunk_equals_single_steps(rng):
    X = random_smooth(7, 2, 3, rng)
    mod = 7**3
    pep = make_pep(X, (0, 1, 2), mod)
    U = np.array([[6, 6, 5]], dtype=np.int64)
    W = rng.integers(0, mod, (15, 1))
    a = GameState(2, 3, (0, 1, 2), mod, U.copy(), W.copy(), np.array([0]))
    b = GameState(2, 3, (0, 1, 2), mod, U.copy(), W.copy(), np.array([0]))
    a.reduce_chunk(0, (1, 1, 1), 4, pep)
    for _ in range(4):
        b.apply_moves([(0, (1, 1, 1), 1)], pep)
    assert np.array_equal(a.U, b.U)
    assert np.array_equal(a.W % mod, b.W % mod)
    assert a.costs.matvecs == 4 and a.costs.startups == 1
    assert b.costs.startups == 4


def test_illegal_moves_rejected(rng):
    X = random_smooth(7, 2, 3, rng)
    pep = make_pep(X, (0, 1, 2), 7**2)
    st = _toy_state(7**2)
    with pytest.raises(IllegalMove):
        st.apply_moves([(0, (3, 0, 0), 1)], pep)  # skips nonzero coordinates in S
    with pytest.raises(IllegalMove):
        st.apply_moves([(0, (1, 1, 1), 3)], pep)  # below the floor
    with pytest.raises(IllegalMove):
        st.apply_moves([(0, (1, 1, 1), 1), (0, (1, 1, 1), 1)], pep)


def test_var_by_var_requires_last_variable():
    st = _toy_state()
    with pytest.raises(IllegalMove):
        run_policy("var-by-var", st, None, 7)
    with pytest.raises(ValueError):
        run_policy("breadth-first", st, None, 7)


def test_seed_game_tweaks_into_target_degree():
    X = fermat(7, 2, 3)
    mod = 7**2
    # x^(6,5,4) Omega / f^6: degree 15 = 3*6 - 3
    st = seed_game(X, [(0, (6, 5, 4), 6), (0, (6, 5, 4), 6)], (0, 1, 2), mod, [1, 2])
    assert len(st) == 1
    assert st.U[0].sum() == 3 * (6 - 2) + 2
    assert int(st.W[:, 0].sum()) == 3
