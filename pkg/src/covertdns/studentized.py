"""Studentized range distribution by fixed-grid Gauss-Legendre quadrature.

``P(Q <= q) = integral f_s(s) W(q s) ds`` where ``W`` is the CDF of the
range of `k` standard normals and ``s = sqrt(chi2_df / df)``. Quantiles are
found by root bracketing; accuracy is about 1e-4 on q.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, ndtr
from scipy.stats import chi

_Z_NODES, _Z_WEIGHTS = np.polynomial.legendre.leggauss(128)
_S_NODES, _S_WEIGHTS = np.polynomial.legendre.leggauss(96)
_Z_LO, _Z_HI = -8.5, 8.5
# beyond this many degrees of freedom the scale factor is treated as exactly 1
_DF_INFINITE = 1e6


def _range_cdf(w: np.ndarray, k: int) -> np.ndarray:
    """CDF of the range of `k` iid standard normals, evaluated at each `w`."""
    half = (_Z_HI - _Z_LO) / 2
    z = _Z_LO + half * (_Z_NODES + 1.0)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    inner = np.clip(ndtr(z[None, :] + w[:, None]) - ndtr(z)[None, :], 0.0, 1.0) ** (k - 1)
    return np.clip(k * half * (inner * phi[None, :]) @ _Z_WEIGHTS, 0.0, 1.0)


@functools.lru_cache(maxsize=512)
def _scale_grid(df: float) -> tuple[np.ndarray, np.ndarray]:
    lo = chi.ppf(1e-12, df) / math.sqrt(df)
    hi = chi.ppf(1 - 1e-12, df) / math.sqrt(df)
    half = (hi - lo) / 2
    s = lo + half * (_S_NODES + 1.0)
    log_density = (
        (df / 2) * math.log(df) - gammaln(df / 2) - (df / 2 - 1) * math.log(2) + (df - 1) * np.log(s) - df * s * s / 2
    )
    return s, half * _S_WEIGHTS * np.exp(log_density)


def cdf(q: float, k: int, df: float) -> float:
    """``P(Q <= q)`` for the studentized range of `k` means with `df` error degrees of freedom."""
    if k < 2:
        raise ValueError("the studentized range needs k >= 2")
    if q <= 0:
        return 0.0
    if not math.isfinite(df) or df >= _DF_INFINITE:
        return float(_range_cdf(q, k)[0])
    s, weights = _scale_grid(float(df))
    return float(np.clip(weights @ _range_cdf(q * s, k), 0.0, 1.0))


@functools.lru_cache(maxsize=4096)
def ppf(p: float, k: int, df: float) -> float:
    """Quantile: the `q` with ``cdf(q, k, df) == p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    hi = 4.0
    while cdf(hi, k, df) < p:
        hi *= 2.0
        if hi > 1e4:
            raise ValueError("quantile search did not bracket; df too small?")
    return brentq(lambda q: cdf(q, k, df) - p, 0.0, hi, xtol=1e-7)
