"""Standard normal CDF, density and quantile.

``norm_cdf`` is computed through the complementary error function so the
lower tail keeps full relative precision.  ``norm_quantile`` starts from
Acklam's rational approximation (relative error about 1.15e-9) and applies
one Newton step against ``norm_cdf``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, log_ndtr

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758276161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT2PI


def norm_cdf(x):
    """P(Z <= x) for a standard normal Z."""
    xa = np.asarray(x, dtype=float)
    return _scalar_or_array(x, 0.5 * erfc(-xa / SQRT2))


def _acklam_lower(p):
    # p in (0, 0.5]; returns the approximate quantile (<= 0)
    out = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[tail] = num / den
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        out[mid] = num / den
    return out


def norm_quantile(p):
    """Inverse of :func:`norm_cdf`.

    Returns ``-inf`` at ``p == 0`` and ``+inf`` at ``p == 1``.  Values outside
    ``[0, 1]`` raise ``ValueError``.
    """
    pa = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(np.isnan(pa)) or np.any((pa < 0.0) | (pa > 1.0)):
        raise ValueError("quantile requires probabilities in [0, 1]")
    out = np.empty_like(pa)
    out[pa == 0.0] = -np.inf
    out[pa == 1.0] = np.inf
    inner = (pa > 0.0) & (pa < 1.0)
    if np.any(inner):
        pi = pa[inner]
        upper = pi > 0.5
        # work in the lower half where 1 - p is exact
        lower_p = np.where(upper, 1.0 - pi, pi)
        x = _acklam_lower(lower_p)
        # Newton step on log Phi, finite even for subnormal p
        ratio = np.exp(log_ndtr(x) + 0.5 * x * x) * SQRT2PI
        x = x - (log_ndtr(x) - np.log(lower_p)) * ratio
        out[inner] = np.where(upper, -x, x)
    if np.ndim(p) == 0:
        return float(out[0])
    return out.reshape(np.shape(p))
