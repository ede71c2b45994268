"""Constant-guarantee approximate Nash equilibrium algorithms.

Each algorithm has a search phase that produces candidate profiles and a
mixing phase that combines them; the result records both the pre-mix
profile and the final one. Guarantees (epsilon upper bounds):

    kps06 0.75, dmp06 0.5, cdffjs15_038 (3 - sqrt 5)/2, bbm07 0.3664,
    ts07 0.3393 + delta, dfm22_13 1/3 + delta.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .game import BimatrixGame, MixedProfile, epsilon, unit, COL, ROW, best_response
from .lp import EQ, LE, LpProblem, solve_lp, solve_zero_sum
from .piecewise import minimize_max_affine
from .errors import NumericalFailure

GUARANTEES = {
    "kps06": 0.75,
    "dmp06": 0.5,
    "cdffjs15_038": (3 - math.sqrt(5)) / 2,
    "bbm07": 0.3664,
    "ts07": 0.3393,
    "dfm22_13": 1.0 / 3.0,
}

ACTIVE_TOL = 1e-8
F_EXIT = 1e-9
DEFAULT_DELTA = 1e-3
DEFAULT_ROUND_CAP = 500
BBM_NO_MIX = 1.0 / 3.0


@dataclass
class SearchMixResult:
    final: MixedProfile
    pre_mix: MixedProfile
    candidates: List[Tuple[MixedProfile, float]]
    algorithm: str
    lp_calls: int = 0
    iterations: int = 0
    status: str = "ok"
    extras: dict = field(default_factory=dict)

    @property
    def epsilon(self) -> float:
        return min(e for _, e in self.candidates) if self.candidates else float("nan")

    def transpose(self) -> "SearchMixResult":
        """The same result with the players' roles swapped."""
        return SearchMixResult(
            self.final.transpose(),
            self.pre_mix.transpose(),
            [(p.transpose(), e) for p, e in self.candidates],
            self.algorithm,
            self.lp_calls,
            self.iterations,
            self.status,
            self.extras,
        )


def _select(game, algorithm, pre_mix, profiles, **kw) -> SearchMixResult:
    cands = [(p, epsilon(game, p)) for p in profiles]
    k = int(np.argmin([e for _, e in cands]))
    return SearchMixResult(cands[k][0], pre_mix, cands, algorithm, **kw)


# mixing helpers ------------------------------------------------------------


def row_mix_lines(game: BimatrixGame, xa, xb, y):
    """Affine pieces of epsilon(((1 - t) xa + t xb, y)) as functions of t."""
    R, C = game.R, game.C
    dx = xb - xa
    Ry = R @ y
    Cy = C @ y
    xaC = xa @ C
    dC = dx @ C
    a = np.concatenate([[Ry.max() - xa @ Ry], xaC - xa @ Cy])
    b = np.concatenate([[-(dx @ Ry)], dC - dx @ Cy])
    return a, b


def col_mix_lines(game: BimatrixGame, x, ya, yb):
    """Affine pieces of epsilon((x, (1 - t) ya + t yb)) as functions of t."""
    return row_mix_lines(game.transpose(), ya, yb, x)


def best_row_mix(game, xa, xb, y) -> Tuple[float, MixedProfile]:
    """Weight ``t`` minimizing epsilon(((1 - t) xa + t xb, y)) and the profile."""
    t, _ = minimize_max_affine(*row_mix_lines(game, xa, xb, y))
    return t, MixedProfile.from_weights((1 - t) * xa + t * xb, y)


def best_col_mix(game, x, ya, yb) -> Tuple[float, MixedProfile]:
    t, _ = minimize_max_affine(*col_mix_lines(game, x, ya, yb))
    return t, MixedProfile.from_weights(x, (1 - t) * ya + t * yb)


# simple algorithms ---------------------------------------------------------


def kps06(game: BimatrixGame) -> SearchMixResult:
    """Mix the cells holding each player's largest payoff equally."""
    m, n = game.shape
    i1, j1 = np.unravel_index(int(np.argmax(game.R)), game.shape)
    i2, j2 = np.unravel_index(int(np.argmax(game.C)), game.shape)
    x = (unit(m, i1) + unit(m, i2)) / 2
    y = (unit(n, j1) + unit(n, j2)) / 2
    p = MixedProfile(x, y)
    return _select(game, "kps06", p, [p])


def dmp06(game: BimatrixGame, start_row: int = 1) -> SearchMixResult:
    """Half on ``start_row`` (1-based), half on the best reply to its best reply."""
    m, n = game.shape
    if not 1 <= start_row <= m:
        raise ValueError(f"start_row must lie in [1, {m}]")
    i = start_row - 1
    j = best_response(game, unit(m, i), COL)
    i2 = best_response(game, unit(n, j), ROW)
    p = MixedProfile((unit(m, i) + unit(m, i2)) / 2, unit(n, j))
    return _select(game, "dmp06", p, [p], extras={"start_row": start_row, "j": j, "i2": i2})


# zero-sum based algorithms --------------------------------------------------

CDFFJS_THRESHOLD = (3 - math.sqrt(5)) / 2


def cdffjs15_038(game: BimatrixGame) -> SearchMixResult:
    """Play each player's zero-sum safe strategies, or mix once the secured value is high."""
    zr = solve_zero_sum(game.R)
    zc = solve_zero_sum(-game.C)
    v_r = zr.value
    v_c = -zc.value
    if v_r < v_c:
        t = game.transpose()
        return _cdffjs_core(t, solve_zero_sum(t.R), solve_zero_sum(-t.C), 4).transpose()
    return _cdffjs_core(game, zr, zc, 2)


def _cdffjs_core(game, zr, zc, lp_calls) -> SearchMixResult:
    m, n = game.shape
    v_r = zr.value
    pre = MixedProfile.from_weights(zc.x_star, zr.y_star)
    extras = {"v_r": v_r, "v_c": -zc.value}
    if v_r <= CDFFJS_THRESHOLD:
        return _select(game, "cdffjs15_038", pre, [pre], lp_calls=lp_calls, extras=extras)
    x_star = zr.x_star
    j = best_response(game, x_star, COL)
    r = best_response(game, unit(n, j), ROW)
    p = 1.0 / (2.0 - v_r)
    extras.update(p=p, j=j, r=r)
    mixed = MixedProfile.from_weights(p * x_star + (1 - p) * unit(m, r), unit(n, j))
    return _select(game, "cdffjs15_038", pre, [mixed], lp_calls=lp_calls, extras=extras)


def bbm07(game: BimatrixGame) -> SearchMixResult:
    """Equilibrium of the difference game, then mix in best responses when its regret is large."""
    zs = solve_zero_sum(game.R - game.C)
    pre = MixedProfile.from_weights(zs.x_star, zs.y_star)
    g1, g2 = _regrets(game, pre.x, pre.y)
    if g1 < g2:
        t = _bbm_core(game.transpose(), pre.transpose(), g2)
        return t.transpose()
    return _bbm_core(game, pre, g1)


def _regrets(game, x, y):
    Ry = game.R @ y
    xC = x @ game.C
    return float(Ry.max() - x @ Ry), float(xC.max() - xC @ y)


def _bbm_core(game, pre, g1) -> SearchMixResult:
    R, C = game.R, game.C
    m, n = game.shape
    x_s, y_s = pre.x, pre.y
    extras = {"g1": g1}
    if g1 <= BBM_NO_MIX:
        return _select(game, "bbm07", pre, [pre], lp_calls=1, extras=extras)
    r = best_response(game, y_s, ROW)
    er = unit(m, r)
    Ry = R @ y_s
    Cy = C @ y_s
    xC_s = x_s @ C
    rC = C[r]
    xRy_s, rRy = x_s @ Ry, Ry[r]
    xCy_s, rCy = x_s @ Cy, Cy[r]

    def inner(d1):
        # epsilon of (x(d1), (1 - d2) y* + d2 e_b) minimized over d2
        xC = (1 - d1) * xC_s + d1 * rC
        b = int(np.argmax(xC))
        Rb = R[:, b]
        xRy = (1 - d1) * xRy_s + d1 * rRy
        xRb = (1 - d1) * (x_s @ Rb) + d1 * Rb[r]
        xCy = (1 - d1) * xCy_s + d1 * rCy
        # row: max_i (Ry_i + d2 (Rb_i - Ry_i)) - (xRy + d2 (xRb - xRy))
        a = np.concatenate([Ry - xRy, [xC.max() - xCy]])
        s = np.concatenate([Rb - Ry - (xRb - xRy), [-(xC[b] - xCy)]])
        d2, val = minimize_max_affine(a, s)
        return val, d2, b

    # breakpoints where the column best response to x(d1) changes
    pts = set(np.linspace(0.0, 1.0, 101).tolist())
    for t in _envelope_breaks(xC_s, rC - xC_s):
        pts.update([t, max(t - 1e-9, 0.0), min(t + 1e-9, 1.0)])
    best = min((inner(d1) + (d1,) for d1 in sorted(pts)), key=lambda z: z[0])
    lo, hi = max(best[3] - 1e-2, 0.0), min(best[3] + 1e-2, 1.0)
    for d1 in np.arange(lo, hi + 1e-12, 1e-4):
        cand = inner(float(d1)) + (float(d1),)
        if cand[0] < best[0]:
            best = cand
    _, d2, b, d1 = best
    extras.update(delta1=d1, delta2=d2, r=r, b=b, h=float(x_s @ C[:, b] - xCy_s))
    mixed = MixedProfile.from_weights((1 - d1) * x_s + d1 * er, (1 - d2) * y_s + d2 * unit(n, b))
    return _select(game, "bbm07", pre, [pre, mixed], lp_calls=1, extras=extras)


def _envelope_breaks(intercepts, slopes):
    from .piecewise import upper_envelope

    hull = upper_envelope(intercepts, slopes)
    a, b = intercepts, slopes
    out = []
    for i, j in zip(hull[:-1], hull[1:]):
        t = (a[i] - a[j]) / (b[j] - b[i])
        if 0.0 < t < 1.0:
            out.append(float(t))
    return out


# TS descent ---------------------------------------------------------------


@dataclass
class TsState:
    profile: MixedProfile
    f_R: float
    f_C: float
    f: float
    dini_value: float
    rho: float
    w: np.ndarray
    z: np.ndarray
    rounds: int
    delta: float
    status: str = "ok"
    lp_calls: int = 0
    history: List[float] = field(default_factory=list)


def random_init(game: BimatrixGame, rng: np.random.Generator) -> MixedProfile:
    """Uniformly random point of the product of simplices."""
    return MixedProfile.from_weights(rng.dirichlet(np.ones(game.m)), rng.dirichlet(np.ones(game.n)))


def _f_parts(game, x, y):
    Ry = game.R @ y
    xC = x @ game.C
    return float(Ry.max() - x @ Ry), float(xC.max() - xC @ y)


def _equalize(game, x, y):
    """Move the player with the larger regret to minimize max(f_R, f_C) with the other fixed."""
    R, C = game.R, game.C
    m, n = game.shape
    fR, fC = _f_parts(game, x, y)
    if fR == fC:
        return x, y, False
    if fR > fC:
        Ry, Cy = R @ y, C @ y
        # variables (x, t): t >= max(Ry) - x Ry, t >= x C_j - x C y
        A = np.zeros((n + 2, m + 1))
        A[0, :m] = -Ry
        A[0, m] = -1.0
        A[1 : n + 1, :m] = (C - Cy[:, None]).T
        A[1 : n + 1, m] = -1.0
        A[n + 1, :m] = 1.0
        b = np.concatenate([[-Ry.max()], np.zeros(n), [1.0]])
        rel = [LE] * (n + 1) + [EQ]
    else:
        xR, xC = x @ R, x @ C
        A = np.zeros((m + 2, n + 1))
        A[0, :n] = -xC
        A[0, n] = -1.0
        A[1 : m + 1, :n] = (R - xR[None, :])
        A[1 : m + 1, n] = -1.0
        A[m + 1, :n] = 1.0
        b = np.concatenate([[-xC.max()], np.zeros(m), [1.0]])
        rel = [LE] * (m + 1) + [EQ]
    c = np.zeros(A.shape[1])
    c[-1] = 1.0
    sol = solve_lp(LpProblem(c, A, rel, b))
    if not sol.optimal:
        raise NumericalFailure(f"equalization LP reported {sol.status.value}")
    v = np.clip(sol.x[:-1], 0.0, None)
    v = v / v.sum()
    nx, ny = (v, y) if fR > fC else (x, v)
    if max(_f_parts(game, nx, ny)) < max(fR, fC):
        return nx, ny, True
    return x, y, True


def _dini(game, x, y, fR, fC):
    """Steepest feasible direction of f at (x, y) and the dual byproduct.

    Returns (Df, x', y', rho, w, z).
    """
    R, C = game.R, game.C
    m, n = game.shape
    f = max(fR, fC)
    Ry, xR = R @ y, x @ R
    Cy, xC = C @ y, x @ C
    xRy, xCy = float(x @ Ry), float(xC @ y)
    rows, rhs = [], []
    nr = 0
    if fR >= f - ACTIVE_TOL:
        S_R = np.flatnonzero(Ry >= Ry.max() - ACTIVE_TOL)
        for i in S_R:
            # R_i y' - x' Ry - x R y' + x R y - f_R <= g
            rows.append(np.concatenate([-Ry, R[i] - xR, [-1.0]]))
            rhs.append(-xRy + fR)
        nr = len(S_R)
    else:
        S_R = np.array([], dtype=int)
    if fC >= f - ACTIVE_TOL:
        S_C = np.flatnonzero(xC >= xC.max() - ACTIVE_TOL)
        for j in S_C:
            rows.append(np.concatenate([C[:, j] - Cy, -xC, [-1.0]]))
            rhs.append(-xCy + fC)
    else:
        S_C = np.array([], dtype=int)
    simplex = np.zeros((2, m + n + 1))
    simplex[0, :m] = 1.0
    simplex[1, m : m + n] = 1.0
    A = np.vstack(rows + [simplex[0], simplex[1]])
    b = np.array(rhs + [1.0, 1.0])
    rel = [LE] * len(rows) + [EQ, EQ]
    c = np.zeros(m + n + 1)
    c[-1] = 1.0
    lo = np.zeros(m + n + 1)
    lo[-1] = -np.inf
    sol = solve_lp(LpProblem(c, A, rel, b, lo=lo))
    if not sol.optimal:
        raise NumericalFailure(f"Dini LP reported {sol.status.value}")
    mult = np.clip(-sol.duals[: len(rows)], 0.0, None)
    mr, mc = mult[:nr], mult[nr:]
    total = mult.sum()
    rho = float(mr.sum() / total) if total > 0 else (1.0 if nr else 0.0)
    w = np.zeros(m)
    z = np.zeros(n)
    if mr.sum() > 0:
        w[S_R] = mr / mr.sum()
    else:
        w[best_response(game, y, ROW)] = 1.0
    if mc.sum() > 0:
        z[S_C] = mc / mc.sum()
    else:
        z[best_response(game, x, COL)] = 1.0
    xp = np.clip(sol.x[:m], 0.0, None)
    yp = np.clip(sol.x[m : m + n], 0.0, None)
    return float(sol.x[-1]), xp / xp.sum(), yp / yp.sum(), rho, w, z


_GRID = np.unique(np.concatenate([np.linspace(0.0, 1.0, 65), 2.0 ** -np.arange(1, 40)]))
_GOLDEN = (math.sqrt(5) - 1) / 2


def _line_search(game, x, y, xp, yp):
    """Step in [0, 1] minimizing f along the segment towards (xp, yp)."""
    R, C = game.R, game.C
    dx, dy = xp - x, yp - y
    Ry, Rdy = R @ y, R @ dy
    xC, dxC = x @ C, dx @ C
    xRy, xRdy, dxRy, dxRdy = x @ Ry, x @ Rdy, dx @ Ry, dx @ Rdy
    xCy, xCdy, dxCy, dxCdy = xC @ y, xC @ dy, dxC @ y, dxC @ dy

    def f(t):
        t = np.atleast_1d(t)[:, None]
        fr = (Ry + t * Rdy).max(axis=1) - (xRy + t[:, 0] * (xRdy + dxRy) + t[:, 0] ** 2 * dxRdy)
        fc = (xC + t * dxC).max(axis=1) - (xCy + t[:, 0] * (xCdy + dxCy) + t[:, 0] ** 2 * dxCdy)
        return np.maximum(fr, fc)

    vals = f(_GRID)
    k = int(np.argmin(vals))
    lo = _GRID[max(k - 1, 0)]
    hi = _GRID[min(k + 1, _GRID.size - 1)]
    best_t, best_v = float(_GRID[k]), float(vals[k])
    a, b = lo, hi
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc_, fd_ = f(c)[0], f(d)[0]
    for _ in range(64):
        if fc_ <= fd_:
            b, d, fd_ = d, c, fc_
            c = b - _GOLDEN * (b - a)
            fc_ = f(c)[0]
        else:
            a, c, fc_ = c, d, fd_
            d = a + _GOLDEN * (b - a)
            fd_ = f(d)[0]
    for t, v in ((c, fc_), (d, fd_)):
        if v < best_v:
            best_t, best_v = float(t), float(v)
    return best_t, best_v


def ts_descent(
    game: BimatrixGame,
    delta: float = DEFAULT_DELTA,
    init: Optional[MixedProfile] = None,
    round_cap: int = DEFAULT_ROUND_CAP,
    deadline: Optional[float] = None,
) -> TsState:
    """Descend on f = max(f_R, f_C) until a delta-stationary point.

    Each round equalizes the two regrets, solves the steepest-direction LP,
    and line-searches along that direction. ``history`` holds f after every
    equalization and every step, so it is non-increasing.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if init is None:
        init = MixedProfile.uniform(*game.shape)
    x, y = init.x.copy(), init.y.copy()
    history = [max(_f_parts(game, x, y))]
    lp_calls = 0
    status = "ok"
    r = 0
    while True:
        x, y, used = _equalize(game, x, y)
        lp_calls += int(used)
        fR, fC = _f_parts(game, x, y)
        f = max(fR, fC, 0.0)
        history.append(f)
        Df, xp, yp, rho, w, z = _dini(game, x, y, fR, fC)
        lp_calls += 1
        if Df >= -delta or f <= F_EXIT:
            break
        if r >= round_cap:
            status = "round_cap"
            break
        if deadline is not None and time.perf_counter() > deadline:
            status = "timeout"
            break
        t, fv = _line_search(game, x, y, xp, yp)
        if not fv < f:
            status = "stalled"
            break
        x = np.clip((1 - t) * x + t * xp, 0.0, None)
        y = np.clip((1 - t) * y + t * yp, 0.0, None)
        x, y = x / x.sum(), y / y.sum()
        history.append(min(max(_f_parts(game, x, y)), f))
        r += 1
    return TsState(
        MixedProfile.from_weights(x, y), fR, fC, f, Df, rho, w, z, r, delta, status, lp_calls, history
    )


def _ts_candidates(game, st):
    x, y, w, z = st.profile.x, st.profile.y, st.w, st.z
    _, pa = best_row_mix(game, w, x, z)  # alpha x* + (1 - alpha) w*
    _, pb = best_col_mix(game, w, z, y)  # beta y* + (1 - beta) z*
    return [st.profile, pa, pb]


def ts07(game, delta=DEFAULT_DELTA, init=None, round_cap=DEFAULT_ROUND_CAP, deadline=None, state=None):
    """Descent to a delta-stationary point followed by the two-family mix.

    Returns ``(SearchMixResult, TsState)``. Pass a ``state`` from an earlier
    descent to reuse its endpoint.
    """
    st = state if state is not None else ts_descent(game, delta, init, round_cap, deadline)
    res = _select(
        game, "ts07", st.profile, _ts_candidates(game, st),
        lp_calls=st.lp_calls, iterations=st.rounds, status=st.status,
    )
    return res, st


def dfm22_13(game, delta=DEFAULT_DELTA, init=None, round_cap=DEFAULT_ROUND_CAP, deadline=None, state=None):
    """Same descent as :func:`ts07` with a larger candidate set for the mix."""
    st = state if state is not None else ts_descent(game, delta, init, round_cap, deadline)
    m, n = game.shape
    x, y, w, z = st.profile.x, st.profile.y, st.w, st.z
    cands = _ts_candidates(game, st)
    cands.append(MixedProfile.from_weights(w, z))
    y_hat = (z + y) / 2
    w_hat = unit(m, best_response(game, y_hat, ROW))
    cands.append(best_row_mix(game, w_hat, w, z)[1])  # p w* + (1 - p) w_hat
    cands.append(best_col_mix(game, w, y_hat, z)[1])  # (1 - q) y_hat + q z*
    x_hat = (w + x) / 2
    z_hat = unit(n, best_response(game, x_hat, COL))
    cands.append(best_col_mix(game, w, z_hat, z)[1])
    cands.append(best_row_mix(game, x_hat, w, z)[1])
    res = _select(game, "dfm22_13", st.profile, cands, lp_calls=st.lp_calls, iterations=st.rounds, status=st.status)
    return res, st
