"""Exact equilibria: support enumeration, k-uniform search, the LCP and Lemke-Howson.

Lemke-Howson labels follow the usual convention: rows are labels ``1..m`` and
columns are labels ``m+1..m+n``.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .errors import BudgetZero, NumericalFailure, PivotCapExceeded
from .game import BimatrixGame, MixedProfile, epsilon, ws_epsilon_of

DEVIATION_TOL = 1e-9
MAGNITUDE_GUARD = 1e12


def _indifference_batch(blocks):
    """Solve ``A @ p = v * 1, sum(p) = 1`` for a stack of square blocks.

    Returns ``(p, v, ok)`` where ``ok`` marks the nonsingular systems.
    """
    b, k, _ = blocks.shape
    M = np.zeros((b, k + 1, k + 1))
    M[:, :k, :k] = blocks
    M[:, :k, k] = -1.0
    M[:, k, :k] = 1.0
    rhs = np.zeros((b, k + 1, 1))
    rhs[:, k] = 1.0
    sol = np.full((b, k + 1), np.nan)
    try:
        sol = np.linalg.solve(M, rhs)[..., 0]
    except np.linalg.LinAlgError:
        for t in range(b):
            try:
                sol[t] = np.linalg.solve(M[t], rhs[t])[:, 0]
            except np.linalg.LinAlgError:
                pass
    # a numerically singular system shows up as huge or non-finite entries
    ok = np.isfinite(sol).all(axis=1) & (np.abs(sol).max(axis=1) < 1e12)
    if k > 1:
        ok &= np.abs(np.linalg.cond(M)) < 1e12
    return sol[:, :k], sol[:, k], ok


def support_enumeration(
    game: BimatrixGame,
    max_support: Optional[int] = None,
    diagnostics: Optional[dict] = None,
    deadline: Optional[float] = None,
) -> List[MixedProfile]:
    """All equilibria with equal-size supports, by the indifference principle.

    Supports are visited by increasing size and then lexicographically. A
    support pair whose indifference system is singular is skipped and
    counted in ``diagnostics["singular"]``. ``deadline`` is an absolute
    ``time.perf_counter()`` value; when it passes, the search stops and
    ``diagnostics["timed_out"]`` is set.
    """
    R, C = game.R, game.C
    m, n = game.shape
    top = min(m, n) if max_support is None else max_support
    if top > min(m, n):
        raise ValueError("max_support cannot exceed min(m, n)")
    found: List[MixedProfile] = []
    singular = 0
    timed_out = False
    for k in range(1, top + 1):
        Ts = np.array(list(itertools.combinations(range(n), k)))
        for S in itertools.combinations(range(m), k):
            if deadline is not None and time.perf_counter() > deadline:
                timed_out = True
                break
            S = np.array(S)
            RS = R[S]
            CS = C[S]
            yT, v, oky = _indifference_batch(np.swapaxes(RS[:, Ts], 0, 1))
            xS, u, okx = _indifference_batch(np.transpose(CS[:, Ts], (1, 2, 0)))
            singular += int(np.count_nonzero(~(oky & okx)))
            keep = oky & okx
            keep[keep] &= (yT[keep].min(axis=1) > 1e-12) & (xS[keep].min(axis=1) > 1e-12)
            for t in np.flatnonzero(keep):
                T = Ts[t]
                x = np.zeros(m)
                y = np.zeros(n)
                x[S] = xS[t]
                y[T] = yT[t]
                if (R @ y).max() > v[t] + DEVIATION_TOL or (x @ C).max() > u[t] + DEVIATION_TOL:
                    continue
                found.append(MixedProfile.from_weights(x, y))
        if timed_out:
            break
    if diagnostics is not None:
        diagnostics["singular"] = singular
        diagnostics["timed_out"] = timed_out
    return found


def kappa(delta: float) -> int:
    """Uniform-profile size used by the high-payoff search: ceil(2 ln(1/delta) / delta^2)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return math.ceil(2.0 * delta ** -2 * math.log(1.0 / delta))


def lmm_k(eps: float, n: int) -> int:
    """k for which some k-uniform profile is an eps-NE: ceil(12 ln n / eps^2)."""
    return math.ceil(12.0 * math.log(n) / eps ** 2)


def ks_k(eps: float, n: int) -> int:
    """k for which some k-uniform profile is an eps-WSNE: ceil(2 ln(2n) / eps^2)."""
    return math.ceil(2.0 * math.log(2 * n) / eps ** 2)


_KU_BATCH = 2048


def multiset_counts(n: int, k: int):
    """Count vectors of the size-``k`` multisets of ``range(n)``.

    The order matches ``itertools.combinations_with_replacement``: sorted
    tuples in lexicographic order have count vectors in descending
    lexicographic order.
    """
    c = [0] * n
    c[0] = k
    while True:
        yield list(c)
        i = n - 2
        while i >= 0 and c[i] == 0:
            i -= 1
        if i < 0:
            return
        tail = c[n - 1]
        c[n - 1] = 0
        c[i] -= 1
        c[i + 1] = tail + 1


@dataclass
class KUniformResult:
    profile: MixedProfile
    metric: float
    exhausted: bool
    evaluated: int
    timed_out: bool = False

    @property
    def budget_hit(self) -> bool:
        return not self.exhausted


def k_uniform_search(
    game: BimatrixGame,
    k: int,
    target: str = "epsilon",
    budget: int = 10 ** 6,
    stop_at: Optional[float] = None,
    deadline: Optional[float] = None,
) -> KUniformResult:
    """Exhaustive search over pairs of k-uniform strategies.

    Multisets of size ``k`` are enumerated lexicographically, row strategy
    in the outer loop. The search ends when every pair has been evaluated,
    ``budget`` pairs have been evaluated, the metric drops to ``stop_at`` or
    below, or ``deadline`` (a ``time.perf_counter()`` value) passes.
    """
    if budget <= 0:
        raise BudgetZero("budget must be positive")
    if k < 1:
        raise ValueError("k must be at least 1")
    if target not in ("epsilon", "ws_epsilon"):
        raise ValueError("target must be 'epsilon' or 'ws_epsilon'")
    R, C = game.R, game.C
    m, n = game.shape
    best = None
    best_val = np.inf
    evaluated = 0
    timed_out = False
    done = False
    for S in multiset_counts(m, k):
        x = np.array(S) / k
        xC = x @ C
        xR = x @ R
        sx = x > 0
        cols = multiset_counts(n, k)
        while not done:
            chunk = list(itertools.islice(cols, min(_KU_BATCH, budget - evaluated)))
            if not chunk:
                break
            Y = np.array(chunk, dtype=float) / k
            RY = Y @ R.T  # row payoffs against each y
            cpay = Y @ xC
            if target == "epsilon":
                vals = np.maximum(RY.max(axis=1) - Y @ xR, xC.max() - cpay)
            else:
                worst_col = np.where(Y > 0, xC[None, :], np.inf).min(axis=1)
                vals = np.maximum(RY.max(axis=1) - RY[:, sx].min(axis=1), xC.max() - worst_col)
            if stop_at is not None:
                hit = np.flatnonzero(vals <= stop_at)
                if hit.size:
                    vals = vals[: hit[0] + 1]
                    done = True
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val, best = float(vals[i]), (x, Y[i].copy())
            evaluated += len(vals)
            if evaluated >= budget:
                done = True
            elif deadline is not None and time.perf_counter() > deadline:
                timed_out = done = True
        if done:
            break
    total = math.comb(m + k - 1, k) * math.comb(n + k - 1, k)
    profile = MixedProfile.from_weights(*best)
    return KUniformResult(profile, max(float(best_val), 0.0), evaluated >= total, evaluated, timed_out)


@dataclass
class LcpInstance:
    """``w = q + M z >= 0, z >= 0, z @ w = 0`` built from a bimatrix game.

    ``M = [[0, R+], [C+.T, 0]]`` and ``q = -1`` where ``R+ = shift_R - R`` and
    ``C+ = shift_C - C`` are payoffs turned into costs with every entry at
    least 1. With ``q = -1`` a solution makes the supported rows the minimizers
    of ``R+ @ y``, that is the maximizers of ``R @ y``, so every solution
    normalizes to an equilibrium and ``z = 0`` is excluded.
    """

    M: np.ndarray
    q: np.ndarray
    m: int
    n: int
    shift_R: float
    shift_C: float
    structure: str = "bimatrix"

    def residual(self, z) -> float:
        """Largest violation of nonnegativity or complementarity at ``z``."""
        z = np.asarray(z, dtype=float)
        w = self.q + self.M @ z
        return float(max(-z.min(), -w.min(), np.abs(z * w).max()))

    def to_profile(self, z) -> MixedProfile:
        z = np.asarray(z, dtype=float)
        return MixedProfile.from_weights(z[: self.m], z[self.m :])


def positivity_shift(A) -> float:
    """Amount added so the smallest entry becomes 1."""
    return 1.0 - float(np.min(A))


def to_lcp(game: BimatrixGame) -> LcpInstance:
    m, n = game.shape
    sR, sC = 1.0 + float(game.R.max()), 1.0 + float(game.C.max())
    M = np.zeros((m + n, m + n))
    M[:m, m:] = sR - game.R
    M[m:, :m] = (sC - game.C).T
    return LcpInstance(M, -np.ones(m + n), m, n, sR, sC)


@dataclass
class TableauState:
    """Snapshot of the two Lemke-Howson tableaux after a pivot."""

    basis_x: tuple
    basis_y: tuple
    pivots: int

    def held_labels(self, m: int, n: int) -> List[int]:
        """1-based labels of the current vertex pair; a duplicate appears twice."""
        held = [lab + 1 for lab in range(m + n) if lab not in self.basis_x]
        held += [lab + 1 for lab in range(m + n) if lab not in self.basis_y]
        return sorted(held)


class _LhTableau:
    """Tableau over variables indexed by label; the slack block is the basis inverse."""

    def __init__(self, body, basis, slack_cols, exact):
        rows = body.shape[0]
        if exact:
            T = np.empty((rows, body.shape[1] + 1), dtype=object)
            T[:, :-1] = [[Fraction(v) for v in row] for row in body]
            T[:, -1] = Fraction(1)
        else:
            T = np.empty((rows, body.shape[1] + 1))
            T[:, :-1] = body
            T[:, -1] = 1.0
        self.T = T
        self.basis = list(basis)
        self.slack_cols = list(slack_cols)
        self.exact = exact

    def ratio_row(self, e):
        T = self.T
        col = T[:, e]
        tol = 0 if self.exact else 1e-12
        cand = [i for i in range(T.shape[0]) if col[i] > tol]
        if not cand:
            raise NumericalFailure("unbounded ray in Lemke-Howson tableau")
        # lexicographic minimum ratio over (rhs, basis inverse columns)
        for c in [T.shape[1] - 1] + self.slack_cols:
            ratios = [T[i, c] / col[i] for i in cand]
            lo = min(ratios)
            if self.exact:
                cand = [i for i, r in zip(cand, ratios) if r == lo]
            else:
                slack = 1e-12 * max(1.0, abs(lo))
                cand = [i for i, r in zip(cand, ratios) if r <= lo + slack]
            if len(cand) == 1:
                break
        return cand[0]

    def pivot(self, e):
        r = self.ratio_row(e)
        T = self.T
        T[r] = T[r] / T[r, e]
        for i in range(T.shape[0]):
            if i != r and T[i, e] != 0:
                T[i] = T[i] - T[i, e] * T[r]
        if not self.exact and np.abs(T).max() > MAGNITUDE_GUARD:
            raise NumericalFailure("Lemke-Howson tableau entries overflowed the magnitude guard")
        leaving = self.basis[r]
        self.basis[r] = e
        return leaving

    def values(self, labels):
        out = np.zeros(len(labels))
        for r, lab in enumerate(self.basis):
            if lab in labels:
                out[labels.index(lab)] = float(self.T[r, -1])
        return out


def lemke_howson(
    game: BimatrixGame,
    initial_label: int = 1,
    pivot_cap: Optional[int] = None,
    exact: bool = False,
    trace: Optional[list] = None,
) -> MixedProfile:
    """Follow the Lemke-Howson path that drops ``initial_label``.

    Ties in the ratio test are broken lexicographically, which amounts to a
    symbolic perturbation of the right-hand side, so degenerate games
    terminate too. With ``exact=True`` the tableaux hold Fractions.

    If ``trace`` is a list, a :class:`TableauState` is appended after each
    pivot.
    """
    m, n = game.shape
    if not 1 <= initial_label <= m + n:
        raise ValueError(f"initial_label must lie in [1, {m + n}]")
    k0 = initial_label - 1
    if pivot_cap is None:
        pivot_cap = 10 * (m + n) * max(m, n)
    Rp = game.R + positivity_shift(game.R)
    Cp = game.C + positivity_shift(game.C)
    # x side: rows are columns j, x_i has label i and slack s_j has label m + j
    tx = _LhTableau(np.hstack([Cp.T, np.eye(n)]), range(m, m + n), range(m, m + n), exact)
    # y side: rows are rows i, slack r_i has label i and y_j has label m + j
    ty = _LhTableau(np.hstack([np.eye(m), Rp]), range(m), range(m), exact)

    entering = k0
    tab, other = (tx, ty) if k0 < m else (ty, tx)
    pivots = 0
    while True:
        leaving = tab.pivot(entering)
        pivots += 1
        if trace is not None:
            trace.append(TableauState(tuple(tx.basis), tuple(ty.basis), pivots))
        if leaving == k0:
            break
        if pivots >= pivot_cap:
            raise PivotCapExceeded(pivot_cap, pivots)
        entering = leaving
        tab, other = other, tab
    x = tx.values(list(range(m)))
    y = ty.values(list(range(m, m + n)))
    if x.sum() <= 0 or y.sum() <= 0:
        raise NumericalFailure("Lemke-Howson ended at the artificial equilibrium")
    return MixedProfile.from_weights(x, y)


def complementary_solution(lcp: LcpInstance, profile: MixedProfile) -> np.ndarray:
    """Scale an equilibrium to the LCP solution ``z = (x', y')`` of :func:`to_lcp`."""
    m = lcp.m
    Rp = lcp.M[:m, m:]
    Cp = lcp.M[m:, :m].T
    x, y = profile.x, profile.y
    return np.concatenate([x / (x @ Cp @ y), y / (x @ Rp @ y)])
