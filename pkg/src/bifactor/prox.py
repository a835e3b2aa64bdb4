"""Closed-form proximal maps.

``half_threshold(a, g)`` minimizes ``(x - a)**2 + g * |x|**0.5`` and
``two_thirds_threshold(c, g)`` minimizes ``(x - c)**2 + g * |x|**(2/3)``.
Both are odd in their first argument and return 0 at or below the jump
threshold, so ties between the zero and nonzero minimizers go to zero.
"""

from __future__ import annotations

import numpy as np

from .dense import robust_svd

_TWO_PI = 2.0 * np.pi


def _check_gamma(gamma) -> float:
    g = float(gamma)
    if not (g > 0.0 and np.isfinite(g)):
        raise ValueError(f"threshold parameter must be positive and finite, got {gamma}")
    return g


def soft_threshold(x, tau):
    """``sign(x) * max(|x| - tau, 0)``; works on scalars and arrays."""
    tau = _check_gamma(tau)
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def svt(A, tau: float) -> np.ndarray:
    """Singular value thresholding ``U soft(Sigma, tau) V^T``."""
    tau = _check_gamma(tau)
    A = np.asarray(A, dtype=np.float64)
    u, s, vt = robust_svd(A)
    s = s - tau
    k = int(np.count_nonzero(s > 0))
    if k == 0:
        return np.zeros_like(A)
    return (u[:, :k] * s[:k]) @ vt[:k]


def half_threshold_level(gamma: float) -> float:
    """Jump point ``(54 g**2)**(1/3) / 4`` of the half-thresholding map."""
    g = _check_gamma(gamma)
    return float(np.cbrt(54.0 * g * g) / 4.0)


def two_thirds_threshold_level(gamma: float) -> float:
    """Jump point ``(2/3) (3 g**3)**(1/4)`` of the two-thirds map."""
    g = _check_gamma(gamma)
    return float((2.0 / 3.0) * (3.0 * g ** 3) ** 0.25)


def half_threshold_matrix(A, gamma: float) -> np.ndarray:
    """Elementwise half-thresholding of an array."""
    g = _check_gamma(gamma)
    A = np.asarray(A, dtype=np.float64)
    a = np.abs(A)
    out = np.zeros_like(A)
    on = a > half_threshold_level(g)
    if np.any(on):
        av = a[on]
        arg = np.clip((g / 8.0) * (av / 3.0) ** -1.5, -1.0, 1.0)
        phi = np.arccos(arg)
        out[on] = (2.0 / 3.0) * A[on] * (1.0 + np.cos((_TWO_PI - 2.0 * phi) / 3.0))
    return out


def two_thirds_threshold_matrix(C, gamma: float) -> np.ndarray:
    """Elementwise two-thirds-thresholding of an array."""
    g = _check_gamma(gamma)
    C = np.asarray(C, dtype=np.float64)
    c = np.abs(C)
    out = np.zeros_like(C)
    on = c > two_thirds_threshold_level(g)
    if np.any(on):
        cv = c[on]
        arg = np.maximum((27.0 / 16.0) * cv * cv * g ** -1.5, 1.0)
        psi = (2.0 / np.sqrt(3.0)) * np.sqrt(np.sqrt(g) * np.cosh(np.arccosh(arg) / 3.0))
        inner = np.maximum(2.0 * cv / psi - psi * psi, 0.0)
        out[on] = np.sign(C[on]) * (psi + np.sqrt(inner)) ** 3 / 8.0
    return out


def half_threshold(a: float, gamma: float) -> float:
    """Global minimizer of ``(x - a)**2 + gamma * sqrt(|x|)``."""
    return float(half_threshold_matrix(np.array([[a]], dtype=np.float64), gamma)[0, 0])


def two_thirds_threshold(c: float, gamma: float) -> float:
    """Global minimizer of ``(x - c)**2 + gamma * |x|**(2/3)``."""
    return float(two_thirds_threshold_matrix(np.array([[c]], dtype=np.float64), gamma)[0, 0])
