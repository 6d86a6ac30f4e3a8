"""Projected gradient ascent on the unit sphere with step halving."""
from __future__ import annotations

import numpy as np

GRAD_TOL = 1e-8
MIN_STEP = 1e-14


def _unit(v):
    return v / np.linalg.norm(v)


def sphere_ascent(fun, grad, y0, tol=GRAD_TOL, max_iter=1000):
    """Locally maximise ``fun`` over the sphere starting from ``y0``.

    Moves along the tangent gradient by an angle-like step that doubles on
    success and halves on failure. Returns ``(y, fun(y))``.
    """
    y = _unit(np.asarray(y0, dtype=float))
    f = fun(y)
    step = 0.5
    for _ in range(max_iter):
        g = grad(y)
        g = g - (g @ y) * y
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            break
        d = g / gn
        while step >= MIN_STEP:
            cand = _unit(y + step * d)
            fc = fun(cand)
            if fc > f:
                y, f = cand, fc
                step = min(2.0 * step, 1.0)
                break
            step *= 0.5
        else:
            break
    return y, f


def random_starts(rng, n, count):
    starts = rng.standard_normal((count, n))
    return starts / np.linalg.norm(starts, axis=1, keepdims=True)
