"""Vectorised golden-section search for unimodal objectives."""

from __future__ import annotations

import math

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, rtol: float = 1e-12, maxiter: int = 300):
    """Minimise ``f`` independently on each bracket ``[lo[i], hi[i]]``.

    ``f`` maps an array of abscissae (one per bracket) to objective values.
    Brackets shrink until their width is ``rtol`` times the initial width.
    The bracket endpoints are compared with the interior estimate at the end,
    so optima sitting exactly on an endpoint are returned exactly.

    Returns ``(x, fx, iterations)``.
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    a, b = lo.copy(), hi.copy()
    target = rtol * (hi - lo)
    x1 = b - INVPHI * (b - a)
    x2 = a + INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while it < maxiter and np.any(b - a > target):
        it += 1
        right = f2 > f1  # minimum lies in [a, x2]
        # shrink towards the left
        b = np.where(right, x2, b)
        x2n = np.where(right, x1, x2)
        f2n = np.where(right, f1, f2)
        # shrink towards the right
        a = np.where(right, a, x1)
        x1n = np.where(right, b - INVPHI * (b - a), x2)
        f1n = np.where(right, np.nan, f2)
        x2n = np.where(right, x2n, a + INVPHI * (b - a))
        # evaluate only the new interior point of each bracket
        probe = np.where(right, x1n, x2n)
        fp = f(probe)
        f1 = np.where(right, fp, f1n)
        f2 = np.where(right, f2n, fp)
        x1, x2 = x1n, x2n

    better = f1 <= f2
    x = np.where(better, x1, x2)
    fx = np.where(better, f1, f2)
    for end in (lo, hi):
        fe = f(end)
        take = fe <= fx
        x = np.where(take, end, x)
        fx = np.where(take, fe, fx)
    return x, fx, it
