import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from nashkit import approx_ne
from nashkit.approx_ne import (
    GUARANTEES,
    bbm07,
    best_col_mix,
    best_row_mix,
    cdffjs15_038,
    dfm22_13,
    dmp06,
    kps06,
    random_init,
    ts07,
    ts_descent,
)
from nashkit.game import BimatrixGame, MixedProfile, epsilon
from nashkit.generate import fixture, random_general, random_zero_sum
from nashkit.piecewise import minimize_max_affine, upper_envelope

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(1, 6)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=12))
def test_minimize_max_affine_beats_dense_grid(lines):
    a = np.array([p[0] for p in lines])
    b = np.array([p[1] for p in lines])
    t, v = minimize_max_affine(a, b)
    assert 0 <= t <= 1
    assert v == pytest.approx((a + b * t).max(), abs=1e-12)
    grid = np.linspace(0, 1, 2001)
    assert v <= (a[None, :] + grid[:, None] * b[None, :]).max(axis=1).min() + 1e-12


@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=12))
def test_upper_envelope_lines_are_exactly_the_maximizers(lines):
    a = np.array([p[0] for p in lines], dtype=float)
    b = np.array([p[1] for p in lines], dtype=float)
    hull = upper_envelope(a, b)
    assert list(b[hull]) == sorted(b[hull])
    ts = np.linspace(-100, 100, 4001)
    vals = a[None, :] + ts[:, None] * b[None, :]
    top = vals.max(axis=1)
    # every point's maximum is attained by some hull line
    assert np.allclose(vals[:, hull].max(axis=1), top)


def test_kps_mixes_the_two_maximal_cells():
    g = BimatrixGame([[0, 1], [0.2, 0]], [[0, 0], [1, 0.3]])
    res = kps06(g)
    np.testing.assert_allclose(res.final.x, [0.5, 0.5])
    np.testing.assert_allclose(res.final.y, [0.5, 0.5])


def test_dmp_construction():
    g = random_general(6, 4)
    res = dmp06(g, start_row=2)
    j = int(np.argmax(g.C[1]))
    i2 = int(np.argmax(g.R[:, j]))
    x = np.zeros(6)
    x[1] += 0.5
    x[i2] += 0.5
    np.testing.assert_allclose(res.final.x, x)
    assert res.final.y[j] == 1.0
    with pytest.raises(ValueError):
        dmp06(g, start_row=0)


@given(seeds, dims, dims)
@settings(max_examples=40, deadline=None)
def test_guarantees_on_random_games(seed, m, n):
    for g in (random_general(n, seed, m=m), random_zero_sum(n, seed, m=m)):
        assert kps06(g).epsilon <= GUARANTEES["kps06"] + 1e-9
        assert dmp06(g).epsilon <= GUARANTEES["dmp06"] + 1e-9
        assert cdffjs15_038(g).epsilon <= GUARANTEES["cdffjs15_038"] + 1e-9
        assert bbm07(g).epsilon <= GUARANTEES["bbm07"] + 1e-9
        st_ = ts_descent(g, 1e-3, random_init(g, np.random.default_rng(seed)), round_cap=200)
        assert ts07(g, state=st_)[0].epsilon <= GUARANTEES["ts07"] + 1e-3 + 1e-9
        assert dfm22_13(g, state=st_)[0].epsilon <= GUARANTEES["dfm22_13"] + 1e-3 + 1e-9


@given(seeds, st.integers(2, 8))
@settings(max_examples=30, deadline=None)
def test_zero_sum_games_are_solved_exactly(seed, n):
    g = random_zero_sum(n, seed)
    assert epsilon(g, bbm07(g).final) <= 1e-9
    assert epsilon(g, cdffjs15_038(g).pre_mix) <= 1e-9


@given(seeds, dims, dims)
@settings(max_examples=30, deadline=None)
def test_final_is_best_candidate_and_transpose_consistent(seed, m, n):
    g = random_general(n, seed, m=m)
    for fn in (kps06, dmp06, cdffjs15_038, bbm07):
        res = fn(g)
        assert res.epsilon == pytest.approx(epsilon(g, res.final), abs=1e-15)
        assert res.epsilon == min(e for _, e in res.candidates)
        t = res.transpose()
        assert epsilon(g.transpose(), t.final) == pytest.approx(res.epsilon, abs=1e-12)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_mix_helpers_beat_grid(seed):
    rng = np.random.default_rng(seed)
    g = random_general(5, seed)
    xa, xb = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
    y = rng.dirichlet(np.ones(5))
    grid = np.linspace(0, 1, 1001)
    _, p = best_row_mix(g, xa, xb, y)
    assert epsilon(g, p) <= min(epsilon(g, MixedProfile.from_weights((1 - t) * xa + t * xb, y)) for t in grid) + 1e-12
    _, p = best_col_mix(g, y, xa, xb)
    assert epsilon(g, p) <= min(epsilon(g, MixedProfile.from_weights(y, (1 - t) * xa + t * xb)) for t in grid) + 1e-12


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_ts_history_is_non_increasing(seed):
    g = random_general(12, seed)
    st_ = ts_descent(g, 1e-3, random_init(g, np.random.default_rng(seed)), round_cap=60)
    h = np.array(st_.history)
    assert np.all(np.diff(h) <= 1e-12)
    assert st_.f == pytest.approx(max(st_.f_R, st_.f_C, 0.0))
    assert st_.status in ("ok", "round_cap", "stalled")
    assert 0 <= st_.rho <= 1
    assert st_.w.sum() == pytest.approx(1) and st_.z.sum() == pytest.approx(1)


def test_dini_value_matches_finite_difference():
    g = random_general(8, 3)
    x, y = random_init(g, np.random.default_rng(0)).x, random_init(g, np.random.default_rng(1)).y
    x, y, _ = approx_ne._equalize(g, x, y)
    fR, fC = approx_ne._f_parts(g, x, y)
    Df, xp, yp, *_ = approx_ne._dini(g, x, y, fR, fC)
    f0 = max(fR, fC)
    for t in (1e-6, 1e-7):
        f1 = max(approx_ne._f_parts(g, x + t * (xp - x), y + t * (yp - y)))
        assert (f1 - f0) / t == pytest.approx(Df, abs=1e-4)


def equalize_oracle(g, x, y):
    """min over the larger-regret player's strategy of max(f_R, f_C), by HiGHS."""
    fR, fC = approx_ne._f_parts(g, x, y)
    if fR > fC:
        P, own, other = g.R @ y, g.C, y  # row moves: f_R = max(Ry) - x.Ry, f_C = max_j x.(C_j - Cy)
        k = g.m
        rows = np.c_[(own - (own @ other)[:, None]).T, -np.ones(g.n)]
    else:
        P, own, other = x @ g.C, g.R, x
        k = g.n
        rows = np.c_[own - (other @ own)[None, :], -np.ones(g.m)]
    A = np.vstack([np.r_[-P, -1.0], rows])
    b = np.r_[-P.max(), np.zeros(rows.shape[0])]
    res = linprog(np.r_[np.zeros(k), 1.0], A_ub=A, b_ub=b, A_eq=[np.r_[np.ones(k), 0.0]], b_eq=[1.0],
                  bounds=[(0, None)] * k + [(None, None)], method="highs")
    return res.fun


@given(seeds, dims, dims)
@settings(max_examples=40, deadline=None)
def test_equalization_reaches_the_lp_optimum(seed, m, n):
    g = random_general(n, seed, m=m)
    rng = np.random.default_rng(seed)
    x, y = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
    before = max(approx_ne._f_parts(g, x, y))
    nx, ny, _ = approx_ne._equalize(g, x, y)
    after = max(approx_ne._f_parts(g, nx, ny))
    assert after <= before + 1e-12
    assert after == pytest.approx(min(before, equalize_oracle(g, x, y)), abs=1e-9)


def test_dfm_never_worse_than_ts_on_the_same_descent():
    for s in range(5):
        g = random_general(15, s)
        res_ts, st_ = ts07(g, init=random_init(g, np.random.default_rng(s)), round_cap=100)
        assert dfm22_13(g, state=st_)[0].epsilon <= res_ts.epsilon + 1e-15


def test_ts_on_fixtures():
    for name in ("matching-pennies", "wsne-diff", "prisoners-dilemma"):
        g = fixture(name)
        res, st_ = ts07(g)
        assert res.epsilon <= 1e-6


def test_ts_deadline_and_delta_validation():
    g = random_general(30, 1)
    st_ = ts_descent(g, 1e-3, deadline=0.0)
    assert st_.status in ("timeout", "ok")
    with pytest.raises(ValueError):
        ts_descent(g, 0.0)
