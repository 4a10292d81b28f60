"""Trend extraction, autocorrelation and autoregressive fits on size series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .banded import second_difference_gram, solve_pentadiagonal_spd
from .errors import ConstantSeries, LagTooLarge, SeriesTooShort, SingularDesign
from .series import SizeSeries

DEFAULT_LAMBDA = 1600.0
DEFAULT_ORDER = 4


def _as_array(series) -> np.ndarray:
    if isinstance(series, SizeSeries):
        return series.values
    return np.asarray(series, dtype=float).ravel()


@dataclass(frozen=True, eq=False)
class HpDecomposition:
    trend: np.ndarray
    cycle: np.ndarray
    lam: float


def hp_filter(series, lam: float = DEFAULT_LAMBDA) -> HpDecomposition:
    """Hodrick-Prescott split of `series` into trend and cycle.

    The trend minimises ``sum((y - tau)**2) + lam * sum(diff(tau, 2)**2)``,
    i.e. solves ``(I + lam K'K) tau = y`` with `K` the second-difference
    operator. The least-squares line is removed first: it lies in the null
    space of `K`, so this changes nothing mathematically but keeps the
    solve accurate for very large `lam`.
    """
    y = _as_array(series)
    n = y.size
    if n < 4:
        raise SeriesTooShort(f"HP filter needs at least 4 observations, got {n}")
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if lam == 0:
        trend = y.copy()
    else:
        t = np.arange(n, dtype=float) - (n - 1) / 2.0
        slope = float(t @ (y - y.mean())) / float(t @ t)
        line = y.mean() + slope * t
        diag, off1, off2 = second_difference_gram(n)
        trend = line + solve_pentadiagonal_spd(1.0 + lam * diag, lam * off1, lam * off2, y - line)
    return HpDecomposition(trend=trend, cycle=y - trend, lam=float(lam))


@dataclass(frozen=True, eq=False)
class AcfResult:
    coefficients: np.ndarray

    @property
    def max_lag(self) -> int:
        return self.coefficients.size - 1


def autocorrelation(series, max_lag: int) -> AcfResult:
    """Sample autocorrelation up to `max_lag` using the full-series mean and variance."""
    y = _as_array(series)
    if max_lag < 1 or max_lag >= y.size:
        raise LagTooLarge(f"max_lag must be in [1, {y.size - 1}], got {max_lag}")
    dev = y - y.mean()
    denom = float(dev @ dev)
    if denom == 0.0:
        raise ConstantSeries("autocorrelation is undefined for a constant series")
    coefs = np.array([1.0] + [float(dev[k:] @ dev[:-k]) / denom for k in range(1, max_lag + 1)])
    return AcfResult(coefs)


@dataclass(frozen=True)
class ArmaIoc:
    """AR fingerprint: constant and lag coefficients with standard errors and p-values.

    ``std_errors`` and ``p_values`` list the constant first, then lags 1..order.
    """

    constant: float
    lags: tuple[float, ...]
    std_errors: tuple[float, ...]
    p_values: tuple[float, ...]
    n_obs: int
    family: str | None = None

    def __post_init__(self):
        for name in ("lags", "std_errors", "p_values"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if len(self.std_errors) != len(self.lags) + 1 or len(self.p_values) != len(self.lags) + 1:
            raise ValueError("std_errors and p_values need one entry per coefficient")
        if any(se < 0 for se in self.std_errors):
            raise ValueError("standard errors must be non-negative")
        if any(not 0.0 <= p <= 1.0 for p in self.p_values):
            raise ValueError("p-values must lie in [0, 1]")

    @property
    def order(self) -> int:
        return len(self.lags)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array((self.constant,) + self.lags)

    @property
    def errors(self) -> np.ndarray:
        return np.array(self.std_errors)

    @property
    def lag_sum(self) -> float:
        return float(sum(self.lags))

    @property
    def df_resid(self) -> int:
        return self.n_obs - self.order - 1


def min_length_for_ar(order: int = DEFAULT_ORDER, include_constant: bool = True) -> int:
    """Shortest series leaving two residual degrees of freedom."""
    return 2 * order + int(include_constant) + 2


def fit_ar(series, order: int = DEFAULT_ORDER, include_constant: bool = True, family: str | None = None) -> ArmaIoc:
    """Least-squares AR(`order`) fit of ``y_t`` on a constant and its lags.

    Uses ``t = order+1 .. T``; standard errors come from the unbiased
    residual variance, p-values from a two-sided Student-t with the
    residual degrees of freedom.
    """
    y = _as_array(series)
    n_total = y.size
    if order < 1:
        raise ValueError("order must be at least 1")
    need = min_length_for_ar(order, include_constant)
    if n_total < need:
        raise SeriesTooShort(f"AR({order}) needs at least {need} observations, got {n_total}")
    target = y[order:]
    lagged = np.column_stack([y[order - i : n_total - i] for i in range(1, order + 1)])
    n = target.size
    k = order + int(include_constant)

    if include_constant:
        x_mean = lagged.mean(axis=0)
        y_mean = target.mean()
        design = lagged - x_mean
        response = target - y_mean
    else:
        design, response = lagged, target
    norms = np.sqrt((design**2).sum(axis=0))
    if np.any(norms == 0.0) or np.linalg.matrix_rank(design / norms) < order:
        raise SingularDesign("lagged regressors are linearly dependent")
    scaled = design / norms
    q, r = np.linalg.qr(scaled)
    phi = np.linalg.solve(r, q.T @ response) / norms
    resid = response - design @ phi
    df = n - k
    sigma2 = float(resid @ resid) / df
    r_inv = np.linalg.inv(r)
    cov_phi = sigma2 * (r_inv @ r_inv.T) / np.outer(norms, norms)

    if include_constant:
        const = float(y_mean - x_mean @ phi)
        var_const = sigma2 / n + float(x_mean @ cov_phi @ x_mean)
        se = np.concatenate(([np.sqrt(max(var_const, 0.0))], np.sqrt(np.clip(np.diag(cov_phi), 0.0, None))))
    else:
        const = 0.0
        se = np.concatenate(([0.0], np.sqrt(np.clip(np.diag(cov_phi), 0.0, None))))
    coefs = np.concatenate(([const], phi))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, coefs / np.where(se > 0, se, 1.0), np.where(coefs == 0, 0.0, np.inf))
    pvals = 2.0 * stats.t.sf(np.abs(tstat), df)
    if not include_constant:
        pvals[0] = 1.0
    return ArmaIoc(
        constant=const,
        lags=tuple(phi.tolist()),
        std_errors=tuple(se.tolist()),
        p_values=tuple(np.clip(pvals, 0.0, 1.0).tolist()),
        n_obs=n,
        family=family,
    )
