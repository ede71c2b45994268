"""Constant-guarantee well-supported approximate equilibrium algorithms.

All four start from zero-sum solves and then try pure profiles, shift
probability inside a support, or look for a small sub-game. Guarantees
(ws_epsilon upper bounds): ks07 2/3, fgss12 0.6607, cdffjs15_06528 0.6528,
dfm22_12 1/2 + delta.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import NumericalFailure
from .exact import k_uniform_search, kappa
from .game import (
    COL,
    ROW,
    SUPPORT_THRESHOLD,
    BimatrixGame,
    MixedProfile,
    best_pure_profile,
    best_response,
    epsilon,
    unit,
    ws_epsilon_of,
)
from .lp import EQ, LE, LpProblem, solve_lp, solve_zero_sum
from .piecewise import minimize_max_affine, upper_envelope

GUARANTEES = {
    "ks07": 2.0 / 3.0,
    "fgss12": 0.6607,
    "cdffjs15_06528": 0.6528,
    "dfm22_12": 0.5,
}

CDFFJS_Z = 0.013906376
TACTICS = ("pure", "zero_sum", "shifted", "subgame_2x2", "k_uniform", "low_payoff", "low_high", "high_payoff")


@dataclass
class WsneResult:
    profile: MixedProfile
    ws_epsilon: float
    epsilon: float
    tactic_used: str
    status: str = "ok"
    algorithm: str = ""
    candidates: List[Tuple[MixedProfile, float, str]] = field(default_factory=list)
    lp_calls: int = 0
    extras: dict = field(default_factory=dict)

    def transpose(self) -> "WsneResult":
        return WsneResult(
            self.profile.transpose(),
            self.ws_epsilon,
            self.epsilon,
            self.tactic_used,
            self.status,
            self.algorithm,
            [(p.transpose(), w, t) for p, w, t in self.candidates],
            self.lp_calls,
            self.extras,
        )


class _Pool:
    """Candidates evaluated so far; the first one with the smallest ws wins."""

    def __init__(self, game, algorithm):
        self.game = game
        self.algorithm = algorithm
        self.items: List[Tuple[MixedProfile, float, str]] = []
        self.lp_calls = 0

    def add(self, profile: MixedProfile, tactic: str) -> float:
        ws = ws_epsilon_of(self.game, profile, SUPPORT_THRESHOLD)
        self.items.append((profile, ws, tactic))
        return ws

    def result(self, status="ok", pick=None, **extras) -> WsneResult:
        if pick is None:
            pick = int(np.argmin([w for _, w, _ in self.items]))
        p, ws, tactic = self.items[pick]
        return WsneResult(
            p, ws, epsilon(self.game, p), tactic, status, self.algorithm, self.items, self.lp_calls, extras
        )


def _positive_support(v, tol=SUPPORT_THRESHOLD):
    return np.flatnonzero(v > tol)


# KS07 ---------------------------------------------------------------------


def ks07(game: BimatrixGame, early_stop: bool = False) -> WsneResult:
    """Best pure profile against the equilibrium of the zero-sum game ``(D, -D)``, ``D = (R - C) / 2``.

    With ``early_stop`` the pure profile is returned without solving the
    zero-sum game whenever it is already a 2/3-WSNE.
    """
    pool = _Pool(game, "ks07")
    pure, ws = best_pure_profile(game)
    pool.add(pure, "pure")
    if ws == 0.0 or (early_stop and ws <= GUARANTEES["ks07"]):
        return pool.result()
    try:
        zs = solve_zero_sum((game.R - game.C) / 2)
    except NumericalFailure:
        return pool.result("precision_error")
    pool.lp_calls += 1
    pool.add(MixedProfile.from_weights(zs.x_star, zs.y_star), "zero_sum")
    return pool.result()


# FGSS12 -------------------------------------------------------------------


def _pair_table(A, deadline=None):
    """Exact 2x2 well-support gaps for one player.

    ``A`` holds the player's payoffs with own strategies as rows. For every
    own pair ``(i1, i2)`` and opponent pair ``(a, b)``, with the opponent
    playing ``(1 - t) e_a + t e_b``, minimizes over t

        max_k (A y)_k - min((A y)_i1, (A y)_i2).

    The first term is the upper envelope U shared by all own pairs, so the
    minimum sits at 0, 1, a breakpoint of U, or the point where the two own
    rows cross. Returns (values, ts, own_pairs, other_pairs), or None when
    ``deadline`` passes first.
    """
    k, l = A.shape
    own = np.array(list(itertools.combinations(range(k), 2)))
    other = list(itertools.combinations(range(l), 2))
    I1, I2 = own[:, 0], own[:, 1]
    vals = np.empty((len(own), len(other)))
    ts = np.empty_like(vals)
    for c, (a, b) in enumerate(other):
        if deadline is not None and time.perf_counter() > deadline:
            return None
        base = A[:, a]
        slope = A[:, b] - A[:, a]
        hull = upper_envelope(base, slope)
        pts = [0.0, 1.0]
        for h1, h2 in zip(hull[:-1], hull[1:]):
            t = (base[h1] - base[h2]) / (slope[h2] - slope[h1])
            if 0.0 < t < 1.0:
                pts.append(t)
        pts = np.array(pts)
        U = (base[None, :] + pts[:, None] * slope[None, :]).max(axis=1)
        low = np.minimum(base[I1][:, None] + pts[None, :] * slope[I1][:, None],
                         base[I2][:, None] + pts[None, :] * slope[I2][:, None])
        g = U[None, :] - low
        ds = slope[I2] - slope[I1]
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = np.where(ds != 0, (base[I1] - base[I2]) / ds, -1.0)
        tc = np.where((tc > 0.0) & (tc < 1.0), tc, 0.0)
        Uc = (base[None, :] + tc[:, None] * slope[None, :]).max(axis=1)
        gc = Uc - np.minimum(base[I1] + tc * slope[I1], base[I2] + tc * slope[I2])
        best = g.argmin(axis=1)
        v = g[np.arange(len(own)), best]
        t = pts[best]
        use_c = gc < v
        vals[:, c] = np.where(use_c, gc, v)
        ts[:, c] = np.where(use_c, tc, t)
    return vals, ts, own, np.array(other)


def _best_2x2(game: BimatrixGame, deadline=None):
    """Best well-supported profile whose supports sit inside a 2x2 block.

    With both supports fixed, the row player's condition only involves y and
    the column player's only x, so each block splits into two exact
    one-dimensional problems. Returns (profile, value, timed_out).
    """
    m, n = game.shape
    if m < 2 or n < 2:
        return None, np.inf, False
    row_side = _pair_table(game.R, deadline)  # [row pair, col pair]
    col_side = _pair_table(game.C.T, deadline) if row_side is not None else None  # [col pair, row pair]
    if col_side is None:
        return None, np.inf, True
    vr, ty, rows, cols = row_side
    vc, tx, _, _ = col_side
    v = np.maximum(vr, vc.T)
    r, c = np.unravel_index(int(np.argmin(v)), v.shape)
    t_x, t_y = tx[c, r], ty[r, c]
    x = (1 - t_x) * unit(m, rows[r, 0]) + t_x * unit(m, rows[r, 1])
    y = (1 - t_y) * unit(n, cols[c, 0]) + t_y * unit(n, cols[c, 1])
    return MixedProfile.from_weights(x, y), float(v[r, c]), False


def _min_spread(A, own_support, other_support):
    """Strategy on ``other_support`` minimizing max_k (A v)_k - min_{i in own_support} (A v)_i.

    ``A`` has the responding player's strategies as rows and the opponent's
    strategies as columns. One LP with variables (v, u, l).
    """
    k, s = A.shape[0], len(other_support)
    As = A[:, other_support]
    # u >= A_k v ; l <= A_i v ; sum v = 1 ; minimize u - l
    top = np.hstack([As, -np.ones((k, 1)), np.zeros((k, 1))])
    bot = np.hstack([-As[own_support], np.zeros((len(own_support), 1)), np.ones((len(own_support), 1))])
    eq = np.concatenate([np.ones(s), [0.0, 0.0]])[None, :]
    A_ub = np.vstack([top, bot, eq])
    b = np.concatenate([np.zeros(k + len(own_support)), [1.0]])
    rel = [LE] * (k + len(own_support)) + [EQ]
    c = np.concatenate([np.zeros(s), [1.0, -1.0]])
    lo = np.concatenate([np.zeros(s), [-np.inf, -np.inf]])
    sol = solve_lp(LpProblem(c, A_ub, rel, b, lo=lo))
    if not sol.optimal:
        raise NumericalFailure(f"support LP reported {sol.status.value}")
    v = np.zeros(A.shape[1])
    v[other_support] = np.clip(sol.x[:s], 0.0, None)
    return v / v.sum()


def fgss12(game: BimatrixGame, size_cap_2x2: int = 30, deadline: Optional[float] = None) -> WsneResult:
    """Best pure profile, best 2x2-supported profile, and a redistributed zero-sum equilibrium.

    The 2x2 search is skipped (status ``timeout``) when ``max(m, n)``
    exceeds ``size_cap_2x2`` or when ``deadline`` passes during it.
    """
    m, n = game.shape
    pool = _Pool(game, "fgss12")
    pure, ws = best_pure_profile(game)
    pool.add(pure, "pure")
    if ws == 0.0:
        return pool.result()
    status = "ok"
    try:
        zs = solve_zero_sum((game.R - game.C) / 2)
        pool.lp_calls += 1
        pool.add(MixedProfile.from_weights(zs.x_star, zs.y_star), "zero_sum")
        Sx, Sy = _positive_support(zs.x_star), _positive_support(zs.y_star)
        y = _min_spread(game.R, Sx, Sy)
        x = _min_spread(game.C.T, Sy, Sx)
        pool.lp_calls += 2
        pool.add(MixedProfile(x, y), "shifted")
    except NumericalFailure:
        status = "precision_error"
    if max(m, n) > size_cap_2x2:
        status = "timeout" if status == "ok" else status
    else:
        prof, val, timed_out = _best_2x2(game, deadline)
        if prof is not None:
            pool.add(prof, "subgame_2x2")
        if timed_out and status == "ok":
            status = "timeout"
    return pool.result(status)


# CDFFJS15-0.6528 ----------------------------------------------------------


def _min_max_payoff(C, support):
    """Strategy on ``support`` minimizing the opponent's best payoff ``max_j (x C)_j``."""
    s = len(support)
    n = C.shape[1]
    A = np.hstack([C[support].T, -np.ones((n, 1))])
    A = np.vstack([A, np.concatenate([np.ones(s), [0.0]])])
    b = np.concatenate([np.zeros(n), [1.0]])
    c = np.concatenate([np.zeros(s), [1.0]])
    sol = solve_lp(LpProblem(c, A, [LE] * n + [EQ], b))
    if not sol.optimal:
        raise NumericalFailure(f"support LP reported {sol.status.value}")
    x = np.zeros(C.shape[0])
    x[support] = np.clip(sol.x[:s], 0.0, None)
    return x / x.sum(), float(sol.objective)


def _maximin_2x2(A):
    """Maximin weights ``(1 - t, t)`` over the two rows of a 2x2 payoff block and the secured value."""
    # maximize min_j ((1 - t) A_0j + t A_1j) == minimize max_j -(...)
    t, v = minimize_max_affine(-A[0], -(A[1] - A[0]))
    return np.array([1 - t, t]), -v


def cdffjs15_06528(game: BimatrixGame) -> WsneResult:
    """Zero-sum profiles first, then a probability shift, pure profiles and a matching-pennies block."""
    try:
        zr = solve_zero_sum(game.R)
        zc = solve_zero_sum(-game.C)
    except NumericalFailure:
        pure, _ = best_pure_profile(game)
        pool = _Pool(game, "cdffjs15_06528")
        pool.add(pure, "pure")
        return pool.result("precision_error")
    if -zc.value > zr.value:
        t = game.transpose()
        try:
            return _cdffjs_wsne(t, solve_zero_sum(t.R), solve_zero_sum(-t.C), 4).transpose()
        except NumericalFailure:
            pass
    return _cdffjs_wsne(game, zr, zc, 2)


def _cdffjs_wsne(game, zr, zc, lp_calls) -> WsneResult:
    m, n = game.shape
    thr = 2.0 / 3.0 - CDFFJS_Z
    pool = _Pool(game, "cdffjs15_06528")
    pool.lp_calls = lp_calls
    x_star, y_star, x_hat = zr.x_star, zr.y_star, zc.x_star
    extras = {"v_r": zr.value, "v_c": -zc.value}
    for prof in (MixedProfile.from_weights(x_hat, y_star), MixedProfile.from_weights(x_star, y_star)):
        if pool.add(prof, "zero_sum") <= thr:
            return pool.result(pick=len(pool.items) - 1, **extras)
    supp = _positive_support(x_star)
    j_star = best_response(game, x_star, COL)
    try:
        x_B, _ = _min_max_payoff(game.C, supp)
        pool.lp_calls += 1
    except NumericalFailure:
        return pool.result("precision_error", **extras)
    if pool.add(MixedProfile(x_B, unit(n, j_star)), "shifted") <= thr:
        return pool.result(pick=len(pool.items) - 1, **extras)
    j_prime = best_response(game, x_B, COL)
    extras.update(j_star=j_star, j_prime=j_prime)
    for i in supp:
        for j in (j_star, j_prime):
            if pool.add(MixedProfile.pure(int(i), j, m, n), "pure") <= thr:
                return pool.result(pick=len(pool.items) - 1, **extras)
    if j_prime != j_star and len(supp) >= 2:
        cols = [j_star, j_prime]
        best = None
        for b, s in itertools.combinations(supp, 2):
            rows = [b, s]
            xw, vr = _maximin_2x2(game.R[np.ix_(rows, cols)])
            yw, vc = _maximin_2x2(game.C[np.ix_(rows, cols)].T)
            if best is None or min(vr, vc) > best[0]:
                best = (min(vr, vc), rows, xw, yw)
        _, rows, xw, yw = best
        x = np.zeros(m)
        y = np.zeros(n)
        x[rows] = xw
        y[cols] = yw
        mp = MixedProfile.from_weights(x, y)
        if pool.add(mp, "subgame_2x2") <= thr:
            return pool.result(pick=len(pool.items) - 1, **extras)
    pure, _ = best_pure_profile(game)
    pool.add(pure, "pure")
    return pool.result(**extras)


# DFM22-1/2 ----------------------------------------------------------------


def dfm22_12(
    game: BimatrixGame,
    delta: float = 0.1,
    search_budget: int = 10 ** 6,
    deadline: Optional[float] = None,
) -> WsneResult:
    """Low payoffs, low-high payoffs, or a k-uniform search for high payoffs."""
    if not 0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    try:
        zr = solve_zero_sum(game.R)
        zc = solve_zero_sum(-game.C)
    except NumericalFailure:
        pool = _Pool(game, "dfm22_12")
        pool.add(best_pure_profile(game)[0], "pure")
        return pool.result("precision_error")
    vr = float(zr.x_star @ game.R @ zr.y_star)
    vc = float(zc.x_star @ game.C @ zc.y_star)
    if vr < vc:
        t = game.transpose()
        return _dfm_core(t, solve_zero_sum(t.R), solve_zero_sum(-t.C), delta, search_budget, deadline, 4).transpose()
    return _dfm_core(game, zr, zc, delta, search_budget, deadline, 2)


def _dfm_core(game, zr, zc, delta, budget, deadline, lp_calls) -> WsneResult:
    pool = _Pool(game, "dfm22_12")
    pool.lp_calls = lp_calls
    x_star, y_star, x_hat = zr.x_star, zr.y_star, zc.x_star
    vr = float(x_star @ game.R @ y_star)
    extras = {"row_value": vr, "k": kappa(delta)}
    if vr <= 0.5:
        pool.add(MixedProfile.from_weights(x_hat, y_star), "low_payoff")
        return pool.result(**extras)
    supp = _positive_support(x_star)
    x_p, top = _min_max_payoff(game.C, supp)
    pool.lp_calls += 1
    extras["low_high_value"] = top
    if top <= 0.5 + 1e-12:
        pool.add(MixedProfile(x_p, y_star), "low_high")
        return pool.result(**extras)
    k = kappa(delta)
    res = k_uniform_search(game, k, "ws_epsilon", budget, stop_at=0.5 + delta, deadline=deadline)
    pool.add(res.profile, "high_payoff")
    extras["evaluated"] = res.evaluated
    status = "ok" if res.metric <= 0.5 + delta else "timeout"
    return pool.result(status, **extras)
