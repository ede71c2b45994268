"""Bimatrix games, mixed profiles and the regret metrics.

Every algorithm in the package consumes a :class:`BimatrixGame` whose
payoffs lie in [0, 1] and returns a :class:`MixedProfile`. The quality of a
profile is measured by :func:`epsilon_of` (approximate NE),
:func:`ws_epsilon_of` (well-supported approximate NE) and the
exploitability carried in :class:`ApproxReport`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionMismatch, EmptySupport, NonFinitePayoff, ShapeMismatch

SUPPORT_THRESHOLD = 1e-10
ROW, COL = "row", "col"

_RANGE_TOL = 1e-12
_SUM_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineMap:
    """``normalized = (raw - offset) / scale``."""

    scale: float = 1.0
    offset: float = 0.0

    def apply(self, raw):
        return (np.asarray(raw, dtype=float) - self.offset) / self.scale

    def invert(self, normalized):
        return np.asarray(normalized, dtype=float) * self.scale + self.offset


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    """Two-player normal-form game with payoffs in [0, 1].

    Construct directly from matrices that already lie in [0, 1], or use
    :func:`normalize` for arbitrary finite payoffs.
    """

    R: np.ndarray
    C: np.ndarray
    norm_meta: Tuple[AffineMap, AffineMap] = (AffineMap(), AffineMap())

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        C = np.array(self.C, dtype=float)
        if R.ndim != 2 or C.ndim != 2 or R.size == 0:
            raise ShapeMismatch(f"payoffs must be non-empty matrices, got {R.shape} and {C.shape}")
        if R.shape != C.shape:
            raise ShapeMismatch(f"R has shape {R.shape} but C has shape {C.shape}")
        if not (np.isfinite(R).all() and np.isfinite(C).all()):
            raise NonFinitePayoff("payoff matrices contain NaN or infinite entries")
        for name, M in (("R", R), ("C", C)):
            if M.min() < -_RANGE_TOL or M.max() > 1 + _RANGE_TOL:
                raise ValueError(f"{name} has entries outside [0, 1]; use normalize()")
        object.__setattr__(self, "R", _frozen(np.clip(R, 0.0, 1.0)))
        object.__setattr__(self, "C", _frozen(np.clip(C, 0.0, 1.0)))

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def n(self) -> int:
        return self.R.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.R.shape

    def transpose(self) -> "BimatrixGame":
        """Swap the players' roles: the row player becomes the column player."""
        return BimatrixGame(self.C.T, self.R.T, (self.norm_meta[1], self.norm_meta[0]))

    def raw(self) -> Tuple[np.ndarray, np.ndarray]:
        """Payoffs before normalization."""
        return self.norm_meta[0].invert(self.R), self.norm_meta[1].invert(self.C)

    def __eq__(self, other):
        if not isinstance(other, BimatrixGame):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.R, other.R)
            and np.array_equal(self.C, other.C)
        )

    __hash__ = None


def _affine_for(raw: np.ndarray) -> AffineMap:
    lo, hi = float(raw.min()), float(raw.max())
    if hi - lo <= 0.0:
        # constant payoffs: every profile is an equilibrium, map to zeros
        return AffineMap(1.0, lo)
    return AffineMap(hi - lo, lo)


def normalize(raw_R, raw_C) -> BimatrixGame:
    """Map each player's payoffs affinely onto [0, 1].

    The minimum entry of each matrix goes to 0 and the maximum to 1; a
    constant matrix becomes all zeros. The maps are stored in
    ``game.norm_meta`` so raw payoffs can be recovered.
    """
    R = np.array(raw_R, dtype=float)
    C = np.array(raw_C, dtype=float)
    if R.ndim != 2 or C.ndim != 2 or R.size == 0 or C.size == 0:
        raise ShapeMismatch("payoffs must be non-empty matrices")
    if R.shape != C.shape:
        raise ShapeMismatch(f"R has shape {R.shape} but C has shape {C.shape}")
    if not (np.isfinite(R).all() and np.isfinite(C).all()):
        raise NonFinitePayoff("payoff matrices contain NaN or infinite entries")
    mR, mC = _affine_for(R), _affine_for(C)
    return BimatrixGame(mR.apply(R), mC.apply(C), (mR, mC))


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """A pair of mixed strategies ``x`` (rows) and ``y`` (columns)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        y = np.array(self.y, dtype=float).ravel()
        for name, v in (("x", x), ("y", y)):
            if v.size == 0 or not np.isfinite(v).all():
                raise ValueError(f"{name} must be a non-empty finite vector")
            if v.min() < -_SUM_TOL:
                raise ValueError(f"{name} has negative entries")
            if abs(v.sum() - 1.0) > _SUM_TOL:
                raise ValueError(f"{name} sums to {v.sum()!r}, not 1")
        object.__setattr__(self, "x", _frozen(np.clip(x, 0.0, None)))
        object.__setattr__(self, "y", _frozen(np.clip(y, 0.0, None)))

    @classmethod
    def from_weights(cls, x, y) -> "MixedProfile":
        """Clip tiny negatives and rescale nonnegative weights to sum to one."""
        return cls(_to_simplex(x), _to_simplex(y))

    @classmethod
    def pure(cls, i: int, j: int, m: int, n: int) -> "MixedProfile":
        return cls(unit(m, i), unit(n, j))

    @classmethod
    def uniform(cls, m: int, n: int) -> "MixedProfile":
        return cls(np.full(m, 1.0 / m), np.full(n, 1.0 / n))

    def support(self, threshold: float = SUPPORT_THRESHOLD):
        return np.flatnonzero(self.x > threshold), np.flatnonzero(self.y > threshold)

    def transpose(self) -> "MixedProfile":
        return MixedProfile(self.y, self.x)

    def distance(self, other: "MixedProfile") -> float:
        """L-infinity distance between two profiles of equal dimensions."""
        return float(max(np.abs(self.x - other.x).max(), np.abs(self.y - other.y).max()))

    def __eq__(self, other):
        if not isinstance(other, MixedProfile):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None


def unit(k: int, i: int) -> np.ndarray:
    e = np.zeros(k)
    e[i] = 1.0
    return e


def _to_simplex(v) -> np.ndarray:
    v = np.clip(np.asarray(v, dtype=float).ravel(), 0.0, None)
    s = v.sum()
    if not np.isfinite(s) or s <= 0.0:
        raise ValueError("weights must have a positive finite sum")
    return v / s


@dataclass(frozen=True)
class ApproxReport:
    regret_row: float
    regret_col: float
    epsilon: float
    ws_epsilon: float
    exploitability: float
    support_threshold: float = SUPPORT_THRESHOLD


def _check_dims(game: BimatrixGame, profile: MixedProfile):
    if profile.x.size != game.m or profile.y.size != game.n:
        raise DimensionMismatch(
            f"profile has dimensions ({profile.x.size}, {profile.y.size}) "
            f"but the game is {game.m}x{game.n}"
        )


def regrets(game: BimatrixGame, profile: MixedProfile) -> Tuple[float, float]:
    """Per-player gains from a best pure deviation, clamped at zero."""
    _check_dims(game, profile)
    x, y = profile.x, profile.y
    Ry = game.R @ y
    xC = x @ game.C
    f_row = Ry.max() - x @ Ry
    f_col = xC.max() - xC @ y
    return max(float(f_row), 0.0), max(float(f_col), 0.0)


def ws_epsilon_of(
    game: BimatrixGame, profile: MixedProfile, support_threshold: float = SUPPORT_THRESHOLD
) -> float:
    """Well-supported approximation of ``profile``.

    For each player, the gap between the best pure payoff and the worst
    payoff among pure strategies played with probability above
    ``support_threshold``; the larger of the two gaps is returned.
    """
    if not 0.0 <= support_threshold < 0.5:
        raise ValueError("support_threshold must lie in [0, 0.5)")
    _check_dims(game, profile)
    sx = profile.x > support_threshold
    sy = profile.y > support_threshold
    if not sx.any() or not sy.any():
        raise EmptySupport("thresholding removed a player's entire support")
    Ry = game.R @ profile.y
    xC = profile.x @ game.C
    ws = max(Ry.max() - Ry[sx].min(), xC.max() - xC[sy].min())
    return float(min(max(ws, 0.0), 1.0))


def epsilon_of(
    game: BimatrixGame, profile: MixedProfile, support_threshold: float = SUPPORT_THRESHOLD
) -> ApproxReport:
    """Regrets, approximation, well-supported approximation and exploitability."""
    f_row, f_col = regrets(game, profile)
    eps = max(f_row, f_col)
    ws = max(ws_epsilon_of(game, profile, support_threshold), eps)
    return ApproxReport(f_row, f_col, eps, ws, f_row + f_col, support_threshold)


def epsilon(game: BimatrixGame, profile: MixedProfile) -> float:
    return max(regrets(game, profile))


def best_response(game: BimatrixGame, against, player: str = ROW) -> int:
    """Lowest-index pure best response of ``player`` to the opponent's mixed strategy."""
    v = np.asarray(against, dtype=float).ravel()
    if player == ROW:
        if v.size != game.n:
            raise DimensionMismatch(f"row player responds to a length-{game.n} vector, got {v.size}")
        return int(np.argmax(game.R @ v))
    if player == COL:
        if v.size != game.m:
            raise DimensionMismatch(f"column player responds to a length-{game.m} vector, got {v.size}")
        return int(np.argmax(v @ game.C))
    raise ValueError(f"player must be 'row' or 'col', got {player!r}")


def pure_ws_matrix(game: BimatrixGame) -> np.ndarray:
    """Well-supported approximation of every pure profile ``(i, j)``."""
    R, C = game.R, game.C
    row_gap = R.max(axis=0)[None, :] - R
    col_gap = C.max(axis=1)[:, None] - C
    return np.maximum(row_gap, col_gap)


def best_pure_profile(game: BimatrixGame) -> Tuple[MixedProfile, float]:
    """Pure profile with the smallest well-supported approximation (first in row-major order)."""
    ws = pure_ws_matrix(game)
    i, j = np.unravel_index(int(np.argmin(ws)), ws.shape)
    return MixedProfile.pure(int(i), int(j), game.m, game.n), float(ws[i, j])
