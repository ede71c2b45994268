import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nashkit.dynamics import (
    DYNAMICS,
    RegretLedger,
    fictitious_play,
    hedge,
    hedge_temperature,
    mwu,
    mwu_update,
    regret_matching,
    regret_matching_strategy,
    softmax,
)
from nashkit.game import BimatrixGame, epsilon
from nashkit.generate import fixture, random_general, random_zero_sum

seeds = st.integers(0, 2 ** 32 - 1)


def test_softmax_example():
    np.testing.assert_allclose(softmax([1.0, 0.0]), [math.e / (1 + math.e), 1 / (1 + math.e)])
    assert softmax([1.0, 0.0])[0] == pytest.approx(0.7311, abs=1e-4)
    # a huge temperature flattens the strategy
    np.testing.assert_allclose(softmax(np.array([1.0, 0.0, 0.3]) / 1e12), [1 / 3] * 3)
    # large logits do not overflow
    np.testing.assert_allclose(softmax([1000.0, 0.0]), [1.0, 0.0])


def test_mwu_update_examples():
    assert mwu_update([1.0], [1.0], 0.5)[0] == 0.5
    w = mwu_update([1.0, 1.0], [1.0, 0.0], 0.5)
    np.testing.assert_allclose(w / w.sum(), [1 / 3, 2 / 3])
    np.testing.assert_allclose(mwu_update([2.0], [0.5], 0.5, "linear"), [1.5])
    with pytest.raises(ValueError):
        mwu_update([1.0], [1.0], 0.5, "quadratic")


def test_regret_matching_strategy_examples():
    np.testing.assert_array_equal(regret_matching_strategy([2, -1, 0]), [1, 0, 0])
    np.testing.assert_allclose(regret_matching_strategy([-1, -2, -0.5]), [1 / 3] * 3)
    np.testing.assert_allclose(regret_matching_strategy([1, 3]), [0.25, 0.75])


def test_regret_ledger():
    led = RegretLedger.zeros(2)
    led.update([1.0, 0.0], np.array([0.5, 0.5]))
    np.testing.assert_allclose(led.regrets, [0.5, -0.5])
    np.testing.assert_allclose(led.payoffs, [1.0, 0.0])


def test_fp_empirical_distribution():
    # row 0 dominates for the row player, column 1 is a best reply to it only after round 0
    g = BimatrixGame([[1.0, 1.0], [0.0, 0.0]], [[0.0, 1.0], [0.0, 1.0]])
    tr = fictitious_play(g, T=3)
    # column history (1, 2, 2) in one-based labels
    np.testing.assert_allclose(tr.average_profile.y, [1 / 3, 2 / 3])
    np.testing.assert_allclose(tr.average_profile.x, [1.0, 0.0])
    assert tr.counts[1].tolist() == [1, 2]


def fp_oracle(g, T):
    """Naive fictitious play from full empirical distributions."""
    m, n = g.shape
    hx, hy = [0], [0]
    for t in range(1, T):
        # raw counts: dividing by t would round and could move ties
        px = np.bincount(hx, minlength=m)
        py = np.bincount(hy, minlength=n)
        hx.append(int(np.argmax(g.R @ py)))
        hy.append(int(np.argmax(px @ g.C)))
    return np.bincount(hx, minlength=m) / T, np.bincount(hy, minlength=n) / T


@given(seeds, st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_fp_matches_naive_oracle(seed, m, n):
    # quarter-integer payoffs with 0 and 1 present are left unscaled, so every sum is exact
    rng = np.random.default_rng(seed)
    R, C = rng.integers(0, 5, (m, n)) / 4, rng.integers(0, 5, (m, n)) / 4
    R.flat[:2] = C.flat[:2] = [0.0, 1.0][: m * n]
    g = BimatrixGame(R, C)
    assert np.array_equal(g.R, R) and np.array_equal(g.C, C)
    tr = fictitious_play(g, T=60)
    x, y = fp_oracle(g, 60)
    assert np.abs(tr.average_profile.x - x).max() <= 1e-12
    assert np.abs(tr.average_profile.y - y).max() <= 1e-12


def mixed_oracle(g, T, rule):
    """Store every strategy; ``rule(state, u, p)`` returns the next strategy."""
    m, n = g.shape
    x, y = np.full(m, 1 / m), np.full(n, 1 / n)
    sx, sy = np.zeros(m), np.zeros(n)
    xs, ys = [x], [y]
    for _ in range(T - 1):
        ur, uc = g.R @ y, x @ g.C
        x, y = rule(sx, ur, x), rule(sy, uc, y)
        xs.append(x)
        ys.append(y)
    return np.mean(xs, axis=0), np.mean(ys, axis=0), xs, ys


def hedge_rule(tau):
    def rule(cum, u, p):
        cum += u
        return np.exp(cum / tau - (cum / tau).max()) / np.exp(cum / tau - (cum / tau).max()).sum()
    return rule


def mwu_rule(rate, variant):
    def rule(w, u, p):
        loss = 1 - u
        w += loss * math.log(1 - rate) if variant == "exp" else np.log(1 - rate * loss)
        return np.exp(w - w.max()) / np.exp(w - w.max()).sum()
    return rule


def rm_rule(reg, u, p):
    reg += u - p @ u
    r = np.maximum(reg, 0)
    return r / r.sum() if r.sum() > 0 else np.full(r.size, 1 / r.size)


@pytest.mark.parametrize("name,run,rule", [
    ("hedge", lambda g, T: hedge(g, T, temperature=0.05), hedge_rule(0.05)),
    ("mwu_exp", lambda g, T: mwu(g, T, 0.5, "exp"), mwu_rule(0.5, "exp")),
    ("mwu_linear", lambda g, T: mwu(g, T, 0.3, "linear"), mwu_rule(0.3, "linear")),
    ("regret_matching", lambda g, T: regret_matching(g, T), rm_rule),
])
def test_average_equals_mean_of_iterates(name, run, rule):
    g = random_general(7, 2, m=5)
    tr = run(g, 400)
    x, y, xs, ys = mixed_oracle(g, 400, rule)
    assert np.abs(tr.average_profile.x - x).max() <= 1e-10
    assert np.abs(tr.average_profile.y - y).max() <= 1e-10
    np.testing.assert_allclose(tr.last_profile.x, xs[-1], atol=1e-10)
    for s in xs + ys:
        assert s.min() >= 0 and abs(s.sum() - 1) <= 1e-12


@pytest.mark.parametrize("name", sorted(DYNAMICS))
def test_determinism_and_checkpoints(name):
    g = random_general(6, 4)
    a = DYNAMICS[name](g, T=500, seed=3)
    b = DYNAMICS[name](g, T=500, seed=3)
    np.testing.assert_array_equal(a.average_profile.x, b.average_profile.x)
    np.testing.assert_array_equal(a.average_profile.y, b.average_profile.y)
    assert a.epsilon_series == b.epsilon_series
    assert a.checkpoints == list(range(5, 501, 5))
    assert a.epsilon_series[-1] == epsilon(g, a.average_profile)
    assert a.T == 500


def test_fp_bound_after_r_rounds():
    for s in range(5):
        g = random_general(10, s)
        tr = fictitious_play(g, T=100, checkpoint_every=1)
        for r, e in zip(tr.checkpoints, tr.epsilon_series):
            assert e <= (r + 1) / (2 * r) + 1e-12


def test_hedge_temperature_and_validation():
    assert hedge_temperature(100_000) == math.log(2) / 100_000
    g = fixture("matching-pennies")
    with pytest.raises(ValueError):
        hedge(g, 10, temperature=0.0)
    with pytest.raises(ValueError):
        mwu(g, 10, rate=1.0)
    with pytest.raises(ValueError):
        regret_matching(g, 0)
    with pytest.raises(ValueError):
        fictitious_play(g, 0)


def test_zero_sum_convergence():
    for s in range(3):
        g = random_zero_sum(10, s)
        assert epsilon(g, regret_matching(g, 5000, checkpoints=False).average_profile) < 0.05
        assert epsilon(g, fictitious_play(g, 5000, checkpoints=False).average_profile) < 0.05
