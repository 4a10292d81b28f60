"""Discretised normal distributions on finite lattices, with moment matching.

Both samplers in the package draw a continuous normal value and snap it to
the nearest point of a finite sorted lattice. ``clamp`` sends out-of-range
mass to the end points; ``truncate`` discards it and renormalises.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr


def lattice(lo: int, hi: int, count: int) -> np.ndarray:
    """`count` integer points spread evenly over ``[lo, hi]``; plain integers when dense enough."""
    if hi == lo or count <= 1:
        return np.array([float(lo)]) if hi == lo else np.array([float(lo), float(hi)])
    if count - 1 >= hi - lo:
        return np.arange(lo, hi + 1, dtype=float)
    return np.unique(np.rint(np.linspace(lo, hi, count)))


def _cell_edges(points: np.ndarray, mode: str) -> np.ndarray:
    mids = (points[1:] + points[:-1]) / 2.0
    if mode == "clamp":
        return np.concatenate(([-np.inf], mids, [np.inf]))
    first = points[0] - (mids[0] - points[0] if len(points) > 1 else 0.5)
    last = points[-1] + (points[-1] - mids[-1] if len(points) > 1 else 0.5)
    return np.concatenate(([first], mids, [last]))


def pmf(loc, scale: float, points: np.ndarray, mode: str = "clamp") -> np.ndarray:
    """Probability of each lattice point; `loc` may be an array (one row per location)."""
    loc = np.atleast_1d(np.asarray(loc, dtype=float))[:, None]
    edges = _cell_edges(points, mode)
    if scale <= 0:
        idx = np.clip(np.searchsorted(edges, loc[:, 0], side="right") - 1, 0, len(points) - 1)
        out = np.zeros((len(loc), len(points)))
        out[np.arange(len(loc)), idx] = 1.0
        return out
    cdf = ndtr((edges[None, :] - loc) / scale)
    probs = np.diff(cdf, axis=1)
    if mode == "truncate":
        total = probs.sum(axis=1, keepdims=True)
        # far outside the support: all mass to the nearest end point
        far = total[:, 0] < 1e-300
        probs = np.where(total > 0, probs / np.where(total > 0, total, 1.0), 0.0)
        if far.any():
            near_hi = loc[far, 0] > points[-1]
            probs[far] = 0.0
            probs[np.flatnonzero(far)[near_hi], -1] = 1.0
            probs[np.flatnonzero(far)[~near_hi], 0] = 1.0
    return probs


def moments(locs, weights, scale: float, points: np.ndarray, mode: str = "clamp") -> tuple[float, float]:
    """Mean and population stdev of the mixture over `locs` with mixing `weights`."""
    p = pmf(locs, scale, points, mode)
    mix = np.asarray(weights, dtype=float) @ p
    mean = float(mix @ points)
    var = float(mix @ (points - mean) ** 2)
    return mean, float(np.sqrt(max(var, 0.0)))


def solve_shift(offsets, weights, scale, points, target_mean, mode="clamp") -> float:
    """Shift `s` such that the mixture over ``s + offsets`` has mean `target_mean`."""
    offsets = np.asarray(offsets, dtype=float)
    span = points[-1] - points[0] + 10.0 * scale + 10.0
    lo = points[0] - offsets.max() - span
    hi = points[-1] - offsets.min() + span

    def f(s):
        return moments(s + offsets, weights, scale, points, mode)[0] - target_mean

    f_lo, f_hi = f(lo), f(hi)
    if f_lo >= 0:
        return lo
    if f_hi <= 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-10, rtol=1e-12)


def match_moments(offsets, weights, points, target_mean, target_sd, mode="clamp", scale_hint=None):
    """Find ``(shift, scale)`` reproducing both target moments as closely as the lattice allows.

    The scale never drops below a quarter of the lattice spacing, which keeps
    the mean continuous in the shift. When the target stdev cannot be
    bracketed (coupling alone already exceeds it, or a two-point lattice fixes
    the stdev through the mean) the scale is the floor or `scale_hint`.
    """
    offsets = np.asarray(offsets, dtype=float)
    if len(points) == 1:
        return float(points[0] - offsets.mean()), 0.0
    floor = 0.25 * float(np.min(np.diff(points)))
    upper = 4.0 * target_sd + (points[-1] - points[0]) + 1.0

    def sd_gap(scale):
        shift = solve_shift(offsets, weights, scale, points, target_mean, mode)
        return moments(shift + offsets, weights, scale, points, mode)[1] - target_sd

    hint = target_sd if scale_hint is None else scale_hint
    if len(points) == 2:
        scale = float(np.clip(hint, floor, upper))
        return solve_shift(offsets, weights, scale, points, target_mean, mode), scale
    lo_gap, hi_gap = sd_gap(floor), sd_gap(upper)
    if lo_gap < 0 < hi_gap:
        scale = brentq(sd_gap, floor, upper, xtol=1e-6)
    elif lo_gap >= 0 and abs(lo_gap) > 1e-3:
        scale = floor
    else:
        scale = float(np.clip(hint, floor, upper))
    return solve_shift(offsets, weights, scale, points, target_mean, mode), scale


def expected_unique(locs, weights, scale: float, points: np.ndarray, draws: int, mode: str = "clamp") -> float:
    """Expected number of distinct lattice points hit by `draws` independent samples."""
    mix = np.asarray(weights, dtype=float) @ pmf(locs, scale, points, mode)
    return float(np.sum(1.0 - (1.0 - mix) ** draws))
