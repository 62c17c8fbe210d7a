"""Hot loop for cyclic plane-rotation sweeps.

One sweep visits every plane (p, q), p < q, accumulates the 2x2 Gram
matrix of per-matrix (diagonal gap, twice off-diagonal) vectors, rotates
by half the angle of its dominant eigenvector, and applies the rotation to
the whole stack plus the accumulator.  The per-pair work is tiny, so the
Python/numpy version is overhead-bound; when numba is available the same
loop is JIT-compiled (identical arithmetic, no fastmath) and is what the
solvers actually call.
"""

from __future__ import annotations

import math

import numpy as np


def _sweep_stack_py(W: np.ndarray, U: np.ndarray, rotation_tol: float) -> int:
    n, d, _ = W.shape
    applied = 0
    for p in range(d - 1):
        for q in range(p + 1, d):
            g11 = 0.0
            g12 = 0.0
            g22 = 0.0
            for i in range(n):
                h1 = W[i, p, p] - W[i, q, q]
                h2 = 2.0 * W[i, p, q]
                g11 += h1 * h1
                g12 += h1 * h2
                g22 += h2 * h2
            if g11 == 0.0 and g22 == 0.0:
                continue
            psi = 0.5 * math.atan2(2.0 * g12, g11 - g22)
            x = math.cos(psi)
            c = math.sqrt((x + 1.0) / 2.0)
            s = math.sin(psi) / math.sqrt(2.0 * (x + 1.0))
            if s == 0.0 or abs(s) < rotation_tol:
                continue
            for i in range(n):
                for r in range(d):
                    wp = c * W[i, r, p] + s * W[i, r, q]
                    wq = -s * W[i, r, p] + c * W[i, r, q]
                    W[i, r, p] = wp
                    W[i, r, q] = wq
                for r in range(d):
                    wp = c * W[i, p, r] + s * W[i, q, r]
                    wq = -s * W[i, p, r] + c * W[i, q, r]
                    W[i, p, r] = wp
                    W[i, q, r] = wq
            for r in range(d):
                up = c * U[r, p] + s * U[r, q]
                uq = -s * U[r, p] + c * U[r, q]
                U[r, p] = up
                U[r, q] = uq
            applied += 1
    return applied


try:  # pragma: no cover - exercised implicitly by every solver call
    from numba import njit

    sweep_stack = njit("int64(float64[:, :, ::1], float64[:, ::1], float64)", cache=True)(
        _sweep_stack_py
    )
    HAVE_COMPILED_KERNEL = True
except ImportError:  # pragma: no cover
    sweep_stack = _sweep_stack_py
    HAVE_COMPILED_KERNEL = False
