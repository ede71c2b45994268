"""Exact minimization of a maximum of affine functions on an interval.

Every mixing step in the package has the form ``min_t max_k (a_k + b_k t)``
for a coefficient ``t`` in [0, 1]: the regret of one player is affine in the
mixing weight and the other player's regret is a maximum of affine pieces.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np


def upper_envelope(intercepts, slopes):
    """Indices of the lines on the upper envelope, ordered by increasing slope."""
    a = np.asarray(intercepts, dtype=float).ravel()
    b = np.asarray(slopes, dtype=float).ravel()
    # sort by slope, then by intercept descending so the first of equal slopes wins
    order = np.lexsort((-a, b))
    hull: list = []
    last_slope = None
    for k in order:
        if last_slope is not None and b[k] == last_slope:
            continue
        last_slope = b[k]
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # j is redundant if k overtakes i no later than j does
            if (a[i] - a[k]) * (b[j] - b[i]) <= (a[i] - a[j]) * (b[k] - b[i]):
                hull.pop()
            else:
                break
        hull.append(k)
    return hull


def minimize_max_affine(intercepts, slopes, lo: float = 0.0, hi: float = 1.0) -> Tuple[float, float]:
    """Return ``(t, value)`` minimizing ``max_k(a_k + b_k * t)`` over ``[lo, hi]``.

    The minimum of a convex piecewise-linear function sits at an endpoint or
    at a breakpoint of the upper envelope, so those are the only points
    evaluated. Ties go to the smallest ``t``.
    """
    a = np.asarray(intercepts, dtype=float).ravel()
    b = np.asarray(slopes, dtype=float).ravel()
    if a.size == 0 or a.size != b.size:
        raise ValueError("need the same positive number of intercepts and slopes")
    if not lo <= hi:
        raise ValueError("empty interval")
    hull = upper_envelope(a, b)
    points = [lo, hi]
    for i, j in zip(hull[:-1], hull[1:]):
        t = (a[i] - a[j]) / (b[j] - b[i])
        if lo < t < hi:
            points.append(t)
    pts = np.array(sorted(points))
    vals = (a[None, :] + pts[:, None] * b[None, :]).max(axis=1)
    k = int(np.argmin(vals))
    return float(pts[k]), float(vals[k])
