"""Independent reference implementations used as test oracles."""

import functools

import numpy as np

from covertdns.trafficsim import family_session, simulate_session

MODES = ("doh", "dot")

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_session(family, mode, seed, count=1000, domain_seed=None):
    session = family_session(family, mode, seed, count, domain_seed=domain_seed)
    return session, simulate_session(session)


def dense_hp_trend(y, lam):
    n = len(y)
    k = np.zeros((n - 2, n))
    for i in range(n - 2):
        k[i, i : i + 3] = (1.0, -2.0, 1.0)
    return np.linalg.solve(np.eye(n) + lam * k.T @ k, np.asarray(y, dtype=float))


def naive_anova(groups):
    """Textbook one-way ANOVA with explicit loops."""
    all_values = [v for _, g in groups for v in g]
    n = len(all_values)
    grand = sum(all_values) / n
    ss_between = 0.0
    ss_within = 0.0
    for _, g in groups:
        m = sum(g) / len(g)
        ss_between += len(g) * (m - grand) ** 2
        for v in g:
            ss_within += (v - m) ** 2
    ss_total = sum((v - grand) ** 2 for v in all_values)
    df_b = len(groups) - 1
    df_w = n - len(groups)
    return {
        "ss_between": ss_between,
        "ss_within": ss_within,
        "ss_total": ss_total,
        "df_between": df_b,
        "df_within": df_w,
        "df_total": n - 1,
        "ms_between": ss_between / df_b,
        "ms_within": ss_within / df_w,
        "f_stat": (ss_between / df_b) / (ss_within / df_w),
    }


def simulate_ar(coefs, n, rng, const=0.0, sigma=1.0, burn=500):
    """AR(p) recursion driven by Gaussian noise."""
    p = len(coefs)
    y = np.zeros(n + burn + p)
    e = rng.normal(0.0, sigma, y.size)
    for t in range(p, y.size):
        y[t] = const + sum(coefs[i] * y[t - 1 - i] for i in range(p)) + e[t]
    return y[-n:]


def ols_line(y):
    t = np.arange(len(y), dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    return intercept + slope * t
