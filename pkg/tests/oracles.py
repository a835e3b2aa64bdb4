"""Brute-force reference minimizers used by the prox tests and acceptance suite."""

import numpy as np


def scalar_objective(x, a, gamma, p):
    return (x - a) ** 2 + gamma * np.abs(x) ** p


def scalar_argmin(a, gamma, p, grid=2001, iters=200):
    """Global minimizer of ``(x - a)**2 + gamma |x|**p`` for ``0 < p < 1``.

    Vectorized over ``a`` and ``gamma``. On ``(0, |a|]`` the derivative
    ``2 (x - |a|) + gamma p x**(p-1)`` is increasing to the right of
    ``x0 = (gamma p (1-p) / 2)**(1/(2-p))``, so the nonzero local minimizer
    (if any) is found by bisection on ``[x0, |a|]``. A uniform grid on
    ``[0, |a|]`` guards against a missed branch. Ties go to 0.
    """
    a = np.asarray(a, dtype=np.float64)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), a.shape)
    c = np.abs(a)
    x0 = (gamma * p * (1 - p) / 2.0) ** (1.0 / (2.0 - p))

    def dfun(x):
        return 2.0 * (x - c) + gamma * p * np.maximum(x, 1e-300) ** (p - 1.0)

    lo = np.minimum(x0, c)
    hi = c.copy()
    has_root = (x0 < c) & (dfun(lo) < 0)
    lo = np.where(has_root, lo, 0.0)
    hi = np.where(has_root, hi, 0.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = dfun(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    root = 0.5 * (lo + hi)
    f_root = np.where(has_root, scalar_objective(root, c, gamma, p), np.inf)
    f_zero = c ** 2
    x = np.where(f_root < f_zero, root, 0.0)

    # coarse grid sanity check
    t = np.linspace(0.0, 1.0, grid)
    xs = c[..., None] * t
    fg = scalar_objective(xs, c[..., None], gamma[..., None], p).min(axis=-1)
    fx = scalar_objective(x, c, gamma, p)
    assert np.all(fx <= fg + 1e-10 * np.maximum(1.0, fg)), "bisection missed the global minimum"
    return np.sign(a) * x
