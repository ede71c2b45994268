"""Dense primal simplex and the zero-sum game LP.

The solver is a two-phase tableau simplex. Entering columns follow
Dantzig's rule until the objective stalls on degenerate pivots, after
which Bland's rule takes over for the rest of the phase. At an optimum the
basis is refactorized from the original data so the reported primal and
dual vectors carry no accumulated pivoting error.

Duals are reported as sensitivities: ``duals[i]`` is the rate of change of
the optimal objective with respect to ``rhs[i]``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg.blas import dger

from .errors import NumericalFailure
from .game import MixedProfile

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
RESIDUAL_CAP = 1e-8
STALL_WINDOW = 50

LE, EQ, GE = "<=", "=", ">="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class Backend(str, enum.Enum):
    SIMPLEX = "simplex"


@dataclass
class LpProblem:
    """``min``/``max`` ``c @ x`` subject to ``A[i] @ x (rel[i]) b[i]`` and ``lo <= x <= hi``.

    Bounds default to ``x >= 0``.
    """

    c: np.ndarray
    A: np.ndarray
    rel: Sequence[str]
    b: np.ndarray
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        nv = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nv)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.rel = list(self.rel)
        if len(self.rel) != self.A.shape[0] or self.b.size != self.A.shape[0]:
            raise ValueError("A, rel and b must describe the same number of constraints")
        bad = [r for r in self.rel if r not in (LE, EQ, GE)]
        if bad:
            raise ValueError(f"unknown relation(s) {bad}")
        self.lo = np.zeros(nv) if self.lo is None else np.asarray(self.lo, dtype=float).ravel()
        self.hi = np.full(nv, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float).ravel()
        if self.lo.size != nv or self.hi.size != nv:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: Status
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Tableau:
    """Standard-form tableau ``A x = b, x >= 0`` with the cost row last."""

    def __init__(self, A, b, basis, max_iter):
        rows, cols = A.shape
        # column-major so the rank-one update runs in place through BLAS
        self.T = np.zeros((rows + 1, cols + 1), order="F")
        self.T[:rows, :cols] = A
        self.T[:rows, -1] = b
        self.basis = np.array(basis, dtype=int)
        self.max_iter = max_iter
        self.iterations = 0

    def set_cost(self, cost):
        T = self.T
        T[-1, :-1] = cost
        T[-1, -1] = 0.0
        cb = cost[self.basis]
        T[-1] -= cb @ T[:-1]

    def pivot(self, r, e):
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        self.T = T = dger(-1.0, col, T[r].copy(), a=T, overwrite_a=1)
        T[:, e] = 0.0
        T[r, e] = 1.0
        self.basis[r] = e
        self.iterations += 1
        if self.iterations > self.max_iter:
            raise NumericalFailure(f"simplex exceeded {self.max_iter} pivots")

    def run(self, allowed):
        """Optimize the current cost row over columns in ``allowed``; False if unbounded."""
        T = self.T
        bland = False
        # the cost row stores the negated objective value
        best = -T[-1, -1]
        stall = 0
        while True:
            red = np.where(allowed, T[-1, :-1], 0.0)
            if bland:
                cand = np.flatnonzero(red < -OPT_TOL)
                if cand.size == 0:
                    return True
                e = int(cand[0])
            else:
                e = int(np.argmin(red))
                if red[e] >= -OPT_TOL:
                    return True
            col = T[:-1, e]
            pos = col > PIVOT_TOL
            if not pos.any():
                return False
            rhs = np.maximum(T[:-1, -1], 0.0)
            ratios = np.full(col.size, np.inf)
            ratios[pos] = rhs[pos] / col[pos]
            theta = ratios.min()
            ties = np.flatnonzero(ratios <= theta + 1e-12 * max(1.0, theta))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(col[ties])])
            self.pivot(r, e)
            T = self.T
            obj = -T[-1, -1]
            if obj < best - 1e-12 * max(1.0, abs(best)):
                best = obj
                stall = 0
            else:
                stall += 1
                if stall >= STALL_WINDOW and not bland:
                    logger.debug("simplex stalled for %d pivots; switching to Bland's rule", stall)
                    bland = True


def _standard_form(p: LpProblem):
    """Rewrite ``p`` as ``min cs @ z, As z (rel) bs, z >= 0`` with ``x = d + M z``."""
    nv = p.num_vars
    d = np.zeros(nv)
    cols = []
    ub_rows = []
    for j in range(nv):
        lo, hi = p.lo[j], p.hi[j]
        e = np.zeros(nv)
        e[j] = 1.0
        if np.isfinite(lo):
            d[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            d[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    M = np.array(cols).T if cols else np.zeros((nv, 0))
    sign = -1.0 if p.sense == "max" else 1.0
    cs = sign * (p.c @ M)
    const = float(p.c @ d)
    A = p.A @ M
    b = p.b - p.A @ d
    rel = list(p.rel)
    if ub_rows:
        U = np.zeros((len(ub_rows), M.shape[1]))
        for k, (col, width) in enumerate(ub_rows):
            U[k, col] = 1.0
        A = np.vstack([A, U])
        b = np.concatenate([b, [w for _, w in ub_rows]])
        rel += [LE] * len(ub_rows)
    return A, b, rel, cs, M, d, const, sign


def solve_lp(problem: LpProblem, max_iter: Optional[int] = None) -> LpSolution:
    """Solve ``problem`` with the two-phase simplex.

    Infeasible and unbounded problems are reported through
    ``LpSolution.status``; :class:`NumericalFailure` is raised only when the
    pivot budget runs out or the refactorized solution misses the residual
    cap.
    """
    A, b, rel, cs, M, d, const, sign = _standard_form(problem)
    k, nz = A.shape
    # one slack/surplus column per inequality row
    ineq = [i for i in range(k) if rel[i] != EQ]
    S = np.zeros((k, len(ineq)))
    for s, i in enumerate(ineq):
        S[i, s] = 1.0 if rel[i] == LE else -1.0
    As = np.hstack([A, S])
    bs = b.copy()
    flip = np.where(bs < 0, -1.0, 1.0)
    As *= flip[:, None]
    bs *= flip
    ns = As.shape[1]

    basis = np.full(k, -1, dtype=int)
    for s, i in enumerate(ineq):
        if As[i, nz + s] > 0:
            basis[i] = nz + s
    need_art = np.flatnonzero(basis < 0)
    Art = np.zeros((k, need_art.size))
    for a, i in enumerate(need_art):
        Art[i, a] = 1.0
        basis[i] = ns + a
    full = np.hstack([As, Art])
    if max_iter is None:
        max_iter = 50 * (k + full.shape[1]) + 1000
    tab = _Tableau(full, bs, basis, max_iter)
    total = full.shape[1]
    real = np.zeros(total, dtype=bool)
    real[:ns] = True

    if need_art.size:
        cost1 = np.zeros(total)
        cost1[ns:] = 1.0
        tab.set_cost(cost1)
        tab.run(np.ones(total, dtype=bool))
        infeas = -tab.T[-1, -1]
        if infeas > FEAS_TOL * max(1.0, np.abs(bs).max()):
            return LpSolution(Status.INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(k, dtype=bool)
        for r in range(k):
            if tab.basis[r] >= ns:
                row = tab.T[r, :ns]
                cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if cand.size:
                    tab.pivot(r, int(cand[np.argmax(np.abs(row[cand]))]))
                else:
                    keep[r] = False
        if not keep.all():
            T = tab.T
            tab.T = np.asfortranarray(np.vstack([T[:-1][keep], T[-1:]]))
            tab.basis = tab.basis[keep]
    else:
        keep = np.ones(k, dtype=bool)

    cost2 = np.zeros(total)
    cost2[:nz] = cs
    tab.set_cost(cost2)
    if not tab.run(real):
        return LpSolution(Status.UNBOUNDED, iterations=tab.iterations)

    B = tab.basis
    Ak = As[keep]
    bk = bs[keep]
    cfull = np.concatenate([cs, np.zeros(ns - nz)])
    z = np.zeros(ns)
    y_s = np.zeros(k)
    try:
        Bm = Ak[:, B]
        zB = np.linalg.solve(Bm, bk)
        yk = np.linalg.solve(Bm.T, cfull[B])
    except np.linalg.LinAlgError:
        raise NumericalFailure("optimal basis is singular")
    if zB.min() < -FEAS_TOL:
        # refactorization disagrees with the tableau; fall back to tableau values
        zB = np.maximum(tab.T[:-1, -1], 0.0)
    z[B] = np.maximum(zB, 0.0)
    y_s[keep] = yk
    resid = np.abs(As[keep] @ z - bk).max() if bk.size else 0.0
    if resid > RESIDUAL_CAP * max(1.0, np.abs(bk).max() if bk.size else 1.0):
        raise NumericalFailure(f"primal residual {resid:.3g} exceeds cap")

    x = d + M @ z[:nz]
    duals = (flip * y_s)[: problem.A.shape[0]]
    if problem.sense == "max":
        duals = -duals
    obj = float(problem.c @ x)
    return LpSolution(Status.OPTIMAL, x, duals, obj, tab.iterations)


@dataclass
class ZeroSumSolution:
    """Minimax solution of the zero-sum game in which the row player receives ``R``."""

    value: float
    x_star: np.ndarray
    y_star: np.ndarray
    row_secures: float
    col_concedes: float

    @property
    def profile(self) -> MixedProfile:
        return MixedProfile(self.x_star, self.y_star)


def _clean(v, tol=1e-13):
    v = np.where(v > tol, v, 0.0)
    return v / v.sum()


def solve_zero_sum(R) -> ZeroSumSolution:
    """Maximin strategy for the row player and minimax strategy for the column player.

    The payoffs are shifted so every entry is at least 1 and the LP
    ``max 1 @ v  s.t.  R_shift @ v <= 1, v >= 0`` is solved from its slack
    basis. Then ``y* = v / sum(v)``, the row strategy is the normalized dual
    vector, and the shifted game value is ``1 / sum(v)``.
    """
    R = np.asarray(R, dtype=float)
    m, n = R.shape
    shift = 1.0 - R.min()
    Rs = R + shift
    sol = solve_lp(LpProblem(np.ones(n), Rs, [LE] * m, np.ones(m), sense="max"))
    if not sol.optimal or sol.objective <= 0:
        raise NumericalFailure(f"zero-sum LP reported {sol.status.value}")
    y = _clean(sol.x)
    x = _clean(sol.duals)
    value = 1.0 / sol.objective - shift
    secures = float((x @ R).min())
    concedes = float((R @ y).max())
    return ZeroSumSolution(value, x, y, secures, concedes)
