import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nashkit import approx_wsne
from nashkit.approx_wsne import GUARANTEES, TACTICS, cdffjs15_06528, dfm22_12, fgss12, ks07
from nashkit.game import BimatrixGame, MixedProfile, best_pure_profile, epsilon, ws_epsilon_of
from nashkit.generate import fixture, random_general, random_zero_sum

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(1, 5)


def check(res, game):
    assert res.ws_epsilon == ws_epsilon_of(game, res.profile, approx_wsne.SUPPORT_THRESHOLD)
    assert res.epsilon == pytest.approx(epsilon(game, res.profile), abs=1e-15)
    assert res.tactic_used in TACTICS
    if res.algorithm in ("ks07", "fgss12"):
        # both evaluate every candidate, the best pure profile first
        assert res.ws_epsilon == min(w for _, w, _ in res.candidates)
        assert res.ws_epsilon <= best_pure_profile(game)[1]


@given(seeds, dims, dims)
@settings(max_examples=40, deadline=None)
def test_guarantees_on_random_games(seed, m, n):
    for g in (random_general(n, seed, m=m), random_zero_sum(n, seed, m=m)):
        for fn in (ks07, fgss12, cdffjs15_06528):
            res = fn(g)
            check(res, g)
            assert res.ws_epsilon <= GUARANTEES[fn.__name__] + 1e-9
        res = dfm22_12(g, delta=0.1, search_budget=20_000)
        if res.status == "ok":
            assert res.ws_epsilon <= 0.6 + 1e-9


@given(seeds, st.integers(1, 8), st.integers(1, 8))
@settings(max_examples=30, deadline=None)
def test_zero_sum_games_give_exact_wsne(seed, m, n):
    g = random_zero_sum(n, seed, m=m)
    for fn in (ks07, fgss12, cdffjs15_06528, dfm22_12):
        assert fn(g).ws_epsilon <= 1e-9


def grid_2x2(g, ts=np.linspace(0, 1, 2001)):
    """Best 2x2-supported ws value by splitting into the two players' grid problems."""
    def side(A):
        k, l = A.shape
        out = {}
        for a, b in itertools.combinations(range(l), 2):
            V = A[:, [a]] * (1 - ts) + A[:, [b]] * ts  # own payoffs along the segment
            for i1, i2 in itertools.combinations(range(k), 2):
                out[(i1, i2), (a, b)] = (V.max(axis=0) - np.minimum(V[i1], V[i2])).min()
        return out

    r, c = side(g.R), side(g.C.T)
    return min(max(r[rows, cols], c[cols, rows]) for rows, cols in r)


@given(seeds, st.integers(2, 4), st.integers(2, 4))
@settings(max_examples=30, deadline=None)
def test_best_2x2_matches_grid_search(seed, m, n):
    g = random_general(n, seed, m=m)
    prof, val, timed_out = approx_wsne._best_2x2(g)
    ref = grid_2x2(g)
    assert not timed_out
    # exact minimum is below every grid point and within the grid's resolution
    assert val <= ref + 1e-12
    assert val >= ref - 2e-3
    # a support that collapses at t in {0, 1} can only help
    assert ws_epsilon_of(g, prof, approx_wsne.SUPPORT_THRESHOLD) <= val + 1e-12


def test_best_2x2_finds_the_matching_pennies_equilibrium():
    prof, val, _ = approx_wsne._best_2x2(fixture("matching-pennies"))
    assert val == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(prof.x, [0.5, 0.5])


def test_fgss_size_cap_reports_timeout():
    g = next(g for g in map(lambda s: random_general(12, s), range(100)) if best_pure_profile(g)[1] > 0)
    capped = fgss12(g, size_cap_2x2=5)
    assert capped.status == "timeout"
    assert all(t != "subgame_2x2" for _, _, t in capped.candidates)
    full = fgss12(g)
    assert full.status == "ok" and full.ws_epsilon <= capped.ws_epsilon
    assert fgss12(g, deadline=0.0).status == "timeout"


def test_ks07_early_stop_keeps_pure_profile():
    g = random_general(6, 1)
    res = ks07(g, early_stop=True)
    pure, ws = best_pure_profile(g)
    if ws <= GUARANTEES["ks07"]:
        assert res.tactic_used == "pure" and len(res.candidates) == 1
    assert ks07(g).ws_epsilon <= res.ws_epsilon


def test_dfm_low_payoff_branch():
    g = BimatrixGame([[0.2, 0.4], [0.4, 0.1]], [[1.0, 0.0], [0.0, 1.0]])
    res = dfm22_12(g)
    assert res.tactic_used == "low_payoff" and res.extras["row_value"] <= 0.5
    assert res.ws_epsilon <= 0.5


def test_dfm_low_high_branch():
    # row player secures more than 1/2 and the column player can be held below 1/2
    g = BimatrixGame([[0.9, 0.6], [0.6, 0.9]], [[0.3, 0.2], [0.2, 0.3]])
    res = dfm22_12(g)
    assert res.tactic_used == "low_high"
    assert res.extras["low_high_value"] <= 0.5 and res.ws_epsilon <= 0.5


def test_dfm_high_payoff_branch_uses_k_uniform_search():
    g = BimatrixGame([[1.0, 0.9], [0.9, 1.0]], [[1.0, 0.9], [0.9, 1.0]])
    res = dfm22_12(g, delta=0.1)
    assert res.tactic_used == "high_payoff" and res.status == "ok"
    assert res.extras["k"] == 461
    assert res.ws_epsilon <= 0.6


def test_dfm_budget_exhaustion_is_a_timeout():
    # both values are 0.65; the first k-uniform pair is the pure (0, 0) with ws 0.7
    g = BimatrixGame([[0.3, 1.0], [1.0, 0.3]], [[0.3, 1.0], [1.0, 0.3]])
    res = dfm22_12(g, delta=0.01, search_budget=1)
    assert res.tactic_used == "high_payoff"
    assert res.extras["evaluated"] == 1
    assert res.ws_epsilon == pytest.approx(0.7) and res.status == "timeout"
    assert dfm22_12(g, delta=0.1).status == "ok"
    with pytest.raises(ValueError):
        dfm22_12(g, delta=0.0)


def test_results_transpose_consistently():
    g = random_general(5, 8, m=4)
    for fn in (ks07, fgss12, cdffjs15_06528, dfm22_12):
        res = fn(g)
        t = res.transpose()
        assert ws_epsilon_of(g.transpose(), t.profile) == pytest.approx(res.ws_epsilon, abs=1e-12)


def test_wsne_fixture():
    g = fixture("wsne-diff")
    for fn in (ks07, fgss12, cdffjs15_06528, dfm22_12):
        res = fn(g)
        assert res.ws_epsilon <= GUARANTEES[fn.__name__] + 1e-9
    assert ws_epsilon_of(g, MixedProfile([0.0, 1.0], [0.1, 0.9])) == 1.0
