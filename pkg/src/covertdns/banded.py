"""Symmetric positive-definite pentadiagonal systems via an LDL^T factorization."""

from __future__ import annotations

import numpy as np


def solve_pentadiagonal_spd(diag, off1, off2, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` for symmetric pentadiagonal `A`.

    `diag` has length n, `off1` holds ``A[i, i+1]`` (length n-1) and `off2`
    holds ``A[i, i+2]`` (length n-2). The factorization is ``A = L D L^T``
    with unit lower-bidiagonal-plus-one `L`; time and memory are O(n).
    Raises ``np.linalg.LinAlgError`` on a non-positive pivot.
    """
    a = np.asarray(diag, dtype=float).tolist()
    b = np.asarray(off1, dtype=float).tolist()
    c = np.asarray(off2, dtype=float).tolist()
    y = np.asarray(rhs, dtype=float).tolist()
    n = len(a)
    if len(y) != n or len(b) != max(n - 1, 0) or len(c) != max(n - 2, 0):
        raise ValueError("band lengths do not match the system size")
    b += [0.0, 0.0]
    c += [0.0, 0.0]

    d = [0.0] * n
    l1 = [0.0] * (n + 1)  # L[i+1, i]
    l2 = [0.0] * (n + 2)  # L[i+2, i]
    d_1 = d_2 = 0.0
    l1_1 = l1_2 = l2_1 = l2_2 = 0.0
    for i in range(n):
        di = a[i] - l1_1 * l1_1 * d_1 - l2_2 * l2_2 * d_2
        if not di > 0.0:
            raise np.linalg.LinAlgError(f"matrix is not positive definite (pivot {i})")
        d[i] = di
        l1i = (b[i] - l2_1 * l1_1 * d_1) / di
        l2i = c[i] / di
        l1[i] = l1i
        l2[i] = l2i
        # shift the two-step history window
        d_2, d_1 = d_1, di
        l1_2, l1_1 = l1_1, l1i
        l2_2, l2_1 = l2_1, l2i

    z = [0.0] * n
    z_1 = z_2 = 0.0
    for i in range(n):
        zi = y[i] - (l1[i - 1] * z_1 if i >= 1 else 0.0) - (l2[i - 2] * z_2 if i >= 2 else 0.0)
        z[i] = zi
        z_2, z_1 = z_1, zi

    x = [0.0] * n
    x_1 = x_2 = 0.0
    for i in range(n - 1, -1, -1):
        xi = z[i] / d[i] - l1[i] * x_1 - l2[i] * x_2
        x[i] = xi
        x_2, x_1 = x_1, xi
    return np.array(x)


def second_difference_gram(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bands of ``K^T K`` for the (n-2) x n second-difference operator `K`."""
    if n < 3:
        return np.zeros(n), np.zeros(max(n - 1, 0)), np.zeros(max(n - 2, 0))
    diag = np.full(n, 6.0)
    diag[[0, -1]] = 1.0
    diag[[1, -2]] = 5.0
    off1 = np.full(n - 1, -4.0)
    off1[[0, -1]] = -2.0
    off2 = np.ones(n - 2)
    if n == 3:
        diag = np.array([1.0, 4.0, 1.0])
        off1 = np.array([-2.0, -2.0])
    return diag, off1, off2
