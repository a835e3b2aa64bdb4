"""Norms and factored penalties for sparse and low-rank matrices.

The factored penalties are

* double nuclear (D-N): ``(||U||_* + ||V||_*)**2 / 4``
* Frobenius/nuclear (F-N): ``((||U||_F**2 + 2 ||V||_*) / 3) ** 1.5``

Minimized over all factorizations ``X = U V^T`` they equal the Schatten-1/2
and Schatten-2/3 quasi-norms of ``X``. ``spectral_factorization`` returns a
factorization that attains the minimum.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .dense import DimensionError, as_matrix, robust_svd, singular_values, thin_svd


class Kind(str, Enum):
    DN = "DN"
    FN = "FN"


def _check_exponent(p: float, name: str) -> float:
    p = float(p)
    if not (0.0 < p <= 2.0):
        raise ValueError(f"{name} must lie in (0, 2], got {p}")
    return p


def lp_quasi_norm_p(S, p: float) -> float:
    """Return ``sum |S_ij|**p``, the p-th power of the entrywise l_p norm."""
    p = _check_exponent(p, "p")
    a = np.abs(np.asarray(S, dtype=np.float64))
    return float(np.sum(a[a > 0] ** p))


def schatten_quasi_norm_q(X, q: float) -> float:
    """Return ``sum sigma_i(X)**q`` over all singular values."""
    q = _check_exponent(q, "q")
    s = singular_values(X)
    return float(np.sum(s[s > 0] ** q))


def nuclear_norm(X) -> float:
    return float(np.sum(singular_values(X)))


def _significant(X) -> np.ndarray:
    # singular values at rounding level are dropped (same cutoff as the
    # pseudo-inverse); with q < 1 a 1e-17 value would otherwise add ~1e-8
    s = singular_values(X)
    return s[s > max(np.shape(X)) * np.finfo(np.float64).eps * s[0]]


def dn_norm(X) -> float:
    """Schatten-1/2 quasi-norm ``(sum sigma**0.5)**2``.

    Singular values below ``max(m, n) * eps * sigma_1`` are treated as zero.
    """
    return float(np.sum(np.sqrt(_significant(X)))) ** 2


def fn_norm(X) -> float:
    """Schatten-2/3 quasi-norm ``(sum sigma**(2/3))**1.5``, same cutoff as :func:`dn_norm`."""
    return float(np.sum(np.cbrt(_significant(X)) ** 2)) ** 1.5


def _factors(U, V):
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.ndim != 2 or V.ndim != 2:
        raise DimensionError("factors must be two-dimensional")
    if U.shape[1] != V.shape[1]:
        raise DimensionError(f"factor column counts differ: {U.shape[1]} vs {V.shape[1]}")
    return U, V


def _nuc(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.sum(robust_svd(A, compute_uv=False)))


def dn_penalty(U, V) -> float:
    """Double nuclear penalty ``(||U||_* + ||V||_*)**2 / 4``."""
    U, V = _factors(U, V)
    return (_nuc(U) + _nuc(V)) ** 2 / 4.0


def fn_penalty(U, V) -> float:
    """Frobenius/nuclear penalty ``((||U||_F**2 + 2 ||V||_*) / 3) ** 1.5``."""
    U, V = _factors(U, V)
    return ((float(np.sum(U * U)) + 2.0 * _nuc(V)) / 3.0) ** 1.5


def spectral_factorization(X, d: int, kind: Kind | str) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``X = U V^T`` so that the chosen penalty attains its minimum.

    Parameters
    ----------
    X : array_like, shape (m, n)
    d : int
        Number of columns in each factor, ``1 <= d <= min(m, n)``. Exact
        attainment needs ``d >= rank(X)``.
    kind : {"DN", "FN"}
        ``DN`` splits the spectrum as ``sigma**(1/2)`` on both sides.
        ``FN`` puts ``sigma**(1/3)`` on ``U`` and ``sigma**(2/3)`` on ``V``.

    Returns
    -------
    U : ndarray, shape (m, d)
    V : ndarray, shape (n, d)
    """
    kind = Kind(kind)
    X = as_matrix(X, name="X")
    if not (1 <= int(d) <= min(X.shape)):
        raise DimensionError(f"d={d} outside [1, {min(X.shape)}]")
    sv = thin_svd(X, int(d))
    s = sv.singular_values
    if kind is Kind.DN:
        a, b = np.sqrt(s), np.sqrt(s)
    else:
        a, b = np.cbrt(s), np.cbrt(s) ** 2
    return sv.left * a, sv.right * b


def numerical_rank(X, rtol: float = 1e-8) -> int:
    """Count singular values above ``rtol * sigma_1``."""
    s = singular_values(X)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))
