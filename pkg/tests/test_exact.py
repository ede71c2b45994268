import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nashkit.errors import BudgetZero, PivotCapExceeded
from nashkit.exact import (
    TableauState,
    complementary_solution,
    k_uniform_search,
    kappa,
    ks_k,
    lemke_howson,
    lmm_k,
    multiset_counts,
    positivity_shift,
    support_enumeration,
    to_lcp,
)
from nashkit.game import BimatrixGame, MixedProfile, best_pure_profile, epsilon, pure_ws_matrix, ws_epsilon_of
from nashkit.generate import fixture, random_general, random_zero_sum


def closed_form_2x2(g):
    """Fully mixed equilibrium of a 2x2 game from the indifference equations, if any."""
    R, C = g.R, g.C
    dy = R[0, 0] - R[0, 1] - R[1, 0] + R[1, 1]
    dx = C[0, 0] - C[0, 1] - C[1, 0] + C[1, 1]
    if dx == 0 or dy == 0:
        return None
    q = (R[1, 1] - R[0, 1]) / dy
    p = (C[1, 1] - C[1, 0]) / dx
    if 0 < p < 1 and 0 < q < 1:
        return MixedProfile([p, 1 - p], [q, 1 - q])
    return None


def pure_equilibria(g):
    W = pure_ws_matrix(g)
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(W <= 0))}


def test_matching_pennies_single_mixed_equilibrium():
    eqs = support_enumeration(fixture("matching-pennies"))
    assert len(eqs) == 1
    np.testing.assert_allclose(eqs[0].x, [0.5, 0.5])


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=100, deadline=None)
def test_support_enumeration_matches_2x2_closed_form(seed):
    g = random_general(2, seed)
    eqs = support_enumeration(g)
    pure = {(int(np.argmax(p.x)), int(np.argmax(p.y))) for p in eqs if p.x.max() == 1 and p.y.max() == 1}
    assert pure == pure_equilibria(g)
    mixed = [p for p in eqs if p.x.max() < 1]
    cf = closed_form_2x2(g)
    if cf is None:
        assert not mixed
    else:
        assert len(mixed) == 1 and mixed[0].distance(cf) < 1e-12


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_enumerated_equilibria_are_exact_and_odd(seed):
    g = random_general(4, seed, m=3)
    diag = {}
    eqs = support_enumeration(g, diagnostics=diag)
    assert all(epsilon(g, p) <= 1e-8 for p in eqs)
    if diag["singular"] == 0:
        assert len(eqs) % 2 == 1


def test_support_enumeration_deadline():
    diag = {}
    support_enumeration(random_general(10, 0), diagnostics=diag, deadline=0.0)
    assert diag["timed_out"]


def test_zero_sum_equilibrium_value():
    g = random_zero_sum(4, 3)
    for p in support_enumeration(g):
        assert epsilon(g, p) <= 1e-9


@pytest.mark.parametrize("label", range(1, 9))
def test_lemke_howson_every_label_finds_an_equilibrium(label):
    g = random_general(4, 11)
    eqs = support_enumeration(g)
    p = lemke_howson(g, label)
    assert min(p.distance(q) for q in eqs) < 1e-9


@pytest.mark.parametrize("exact_mode", [False, True])
def test_lemke_howson_degenerate_game(exact_mode):
    g = fixture("degenerate-2x2")
    for label in range(1, 5):
        p = lemke_howson(g, label, exact=exact_mode)
        assert epsilon(g, p) == 0.0


def test_lemke_howson_exact_mode_agrees_with_float():
    g = random_general(5, 7)
    a = lemke_howson(g, 3)
    b = lemke_howson(g, 3, exact=True)
    assert a.distance(b) < 1e-12


def test_lemke_howson_trace_and_pivot_cap():
    g = random_general(6, 2)
    trace = []
    lemke_howson(g, 1, trace=trace)
    assert trace and all(isinstance(s, TableauState) for s in trace)
    assert [s.pivots for s in trace] == list(range(1, len(trace) + 1))
    m, n = g.shape
    held = trace[-1].held_labels(m, n)
    assert held == list(range(1, m + n + 1))  # every label exactly once
    if len(trace) > 1:
        with pytest.raises(PivotCapExceeded):
            lemke_howson(g, 1, pivot_cap=1)
    with pytest.raises(ValueError):
        lemke_howson(g, 0)


def test_lcp_reduction_complementarity():
    g = random_general(4, 5, m=3)
    lcp = to_lcp(g)
    assert lcp.M.shape == (7, 7) and np.all(lcp.q == -1.0)
    assert lcp.M[:3, 3:].min() == pytest.approx(1.0) and lcp.M[3:, :3].min() == pytest.approx(1.0)
    assert positivity_shift(g.R) == 1.0 - g.R.min()
    p = lemke_howson(g)
    z = complementary_solution(lcp, p)
    assert lcp.residual(z) < 1e-9
    assert lcp.to_profile(z).distance(p) < 1e-9


def test_lcp_one_by_one():
    lcp = to_lcp(BimatrixGame([[0.0]], [[1.0]]))
    np.testing.assert_allclose(lcp.M, [[0, 1], [1, 0]])
    z = complementary_solution(lcp, MixedProfile([1.0], [1.0]))
    np.testing.assert_allclose(z, [1.0, 1.0])
    assert lcp.residual(z) == 0.0


def brute_force_lcp(lcp):
    """All solutions of a small LCP, one per complementary basis."""
    k = lcp.q.size
    out = []
    for size in range(1, k + 1):
        for S in itertools.combinations(range(k), size):
            S = list(S)
            try:
                zS = np.linalg.solve(lcp.M[np.ix_(S, S)], -lcp.q[S])
            except np.linalg.LinAlgError:
                continue
            z = np.zeros(k)
            z[S] = zS
            if lcp.residual(z) < 1e-9:
                out.append(z)
    return out


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_lcp_solutions_are_the_equilibria(seed, m, n):
    g = random_general(n, seed, m=m)
    lcp = to_lcp(g)
    sols = [lcp.to_profile(z) for z in brute_force_lcp(lcp)]
    assert sols and all(epsilon(g, p) <= 1e-9 for p in sols)
    ne = support_enumeration(g)
    # random games are non-degenerate, so both lists are the same finite set
    assert len(sols) == len(ne)
    for p in ne:
        assert min(p.distance(q) for q in sols) < 1e-9


def test_kappa_and_k_formulas():
    assert kappa(0.1) == 461
    assert lmm_k(0.5, 10) == math.ceil(12 * math.log(10) / 0.25)
    assert ks_k(0.5, 10) == math.ceil(2 * math.log(20) / 0.25)
    with pytest.raises(ValueError):
        kappa(1.5)


@pytest.mark.parametrize("n,k", [(1, 3), (2, 5), (3, 4), (4, 3), (6, 2)])
def test_multiset_counts_follow_combinations_order(n, k):
    expected = [list(np.bincount(t, minlength=n)) for t in itertools.combinations_with_replacement(range(n), k)]
    assert list(multiset_counts(n, k)) == expected


def test_k_uniform_matching_pennies():
    r = k_uniform_search(fixture("matching-pennies"), 2, "epsilon")
    np.testing.assert_allclose(r.profile.x, [0.5, 0.5])
    assert r.metric == 0.0 and r.exhausted and not r.budget_hit


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_k_uniform_with_k1_is_pure_enumeration(seed):
    g = random_general(4, seed, m=3)
    r = k_uniform_search(g, 1, "ws_epsilon")
    assert r.metric == pytest.approx(best_pure_profile(g)[1], abs=1e-15)
    assert r.evaluated == 12


def brute_k_uniform(g, k, target):
    best = np.inf
    for S in itertools.combinations_with_replacement(range(g.m), k):
        for T in itertools.combinations_with_replacement(range(g.n), k):
            p = MixedProfile(np.bincount(S, minlength=g.m) / k, np.bincount(T, minlength=g.n) / k)
            v = epsilon(g, p) if target == "epsilon" else ws_epsilon_of(g, p, 0.0)
            best = min(best, v)
    return best


@pytest.mark.parametrize("target", ["epsilon", "ws_epsilon"])
def test_k_uniform_matches_brute_force(target):
    g = random_general(3, 9)
    r = k_uniform_search(g, 3, target)
    assert r.metric == pytest.approx(brute_k_uniform(g, 3, target), abs=1e-12)


def test_k_uniform_budget_and_stop():
    g = random_general(5, 1)
    r = k_uniform_search(g, 4, "epsilon", budget=1000)
    assert r.evaluated == 1000 and r.budget_hit
    r = k_uniform_search(g, 4, "epsilon", stop_at=1.0)
    assert r.evaluated == 1
    with pytest.raises(BudgetZero):
        k_uniform_search(g, 2, budget=0)
