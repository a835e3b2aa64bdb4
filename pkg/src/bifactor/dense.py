"""Dense matrix helpers: validation, thin SVD, masked projection, Gram solves.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 in C order.
Observation masks wrap a boolean array of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg as sla


class DimensionError(ValueError):
    """Raised when matrix shapes or ranks are inconsistent."""


class NumericalError(RuntimeError):
    """Raised when a factorization fails or produces non-finite output."""


def as_matrix(A, *, name: str = "matrix", finite: bool = True) -> np.ndarray:
    """Return ``A`` as a contiguous two-dimensional float64 array.

    Parameters
    ----------
    A : array_like
        Input data.
    name : str
        Used in error messages.
    finite : bool
        If True, reject NaN or Inf entries.
    """
    X = np.ascontiguousarray(A, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {X.shape}")
    if finite and not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


class ObservationMask:
    """Set of observed entries of an ``rows x cols`` matrix.

    Stored as a read-only boolean array. ``indices`` gives the observed
    positions in row-major (sorted) order.

    Parameters
    ----------
    observed : array_like of bool
        True where the entry is observed.
    """

    __slots__ = ("_b",)

    def __init__(self, observed):
        b = np.array(observed, dtype=bool, copy=True)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionError(f"mask must be a nonempty 2-D array, got shape {b.shape}")
        b.flags.writeable = False
        self._b = b

    @classmethod
    def full(cls, rows: int, cols: int) -> "ObservationMask":
        return cls(np.ones((rows, cols), dtype=bool))

    @classmethod
    def empty(cls, rows: int, cols: int) -> "ObservationMask":
        return cls(np.zeros((rows, cols), dtype=bool))

    @classmethod
    def from_indices(cls, rows: int, cols: int, pairs) -> "ObservationMask":
        """Build a mask from 0-based ``(i, j)`` pairs; duplicates are rejected."""
        b = np.zeros((rows, cols), dtype=bool)
        for i, j in pairs:
            if not (0 <= i < rows and 0 <= j < cols):
                raise DimensionError(f"index ({i}, {j}) outside {rows}x{cols}")
            if b[i, j]:
                raise ValueError(f"duplicate index ({i}, {j})")
            b[i, j] = True
        return cls(b)

    @property
    def shape(self) -> tuple[int, int]:
        return self._b.shape

    @property
    def array(self) -> np.ndarray:
        """Read-only boolean view."""
        return self._b

    @property
    def indices(self) -> np.ndarray:
        """Observed ``(i, j)`` pairs as a ``(count, 2)`` array, row-major order."""
        return np.argwhere(self._b)

    @property
    def count(self) -> int:
        return int(self._b.sum())

    @property
    def density(self) -> float:
        return self.count / self._b.size

    def complement(self) -> "ObservationMask":
        return ObservationMask(~self._b)

    def _check(self, A: np.ndarray) -> None:
        if A.shape != self._b.shape:
            raise DimensionError(f"shape mismatch: matrix {A.shape} vs mask {self._b.shape}")

    def __eq__(self, other) -> bool:
        return isinstance(other, ObservationMask) and np.array_equal(self._b, other._b)

    def __repr__(self) -> str:
        return f"ObservationMask(shape={self.shape}, observed={self.count})"


def project(mask: ObservationMask, A) -> np.ndarray:
    """Keep entries on the observed set and zero the rest."""
    A = np.asarray(A, dtype=np.float64)
    mask._check(A)
    return np.where(mask.array, A, 0.0)


def project_complement(mask: ObservationMask, A) -> np.ndarray:
    """Keep entries off the observed set and zero the rest."""
    A = np.asarray(A, dtype=np.float64)
    mask._check(A)
    return np.where(mask.array, 0.0, A)


@dataclass(frozen=True)
class ThinSvd:
    """Top-``k`` singular triplets ``left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


def robust_svd(A, compute_uv: bool = True):
    """Economy SVD through LAPACK ``gesdd``, retried with ``gesvd`` on failure.

    The divide-and-conquer driver occasionally fails to converge on finite
    input; the QR-iteration driver is slower but handles those cases.

    Returns
    -------
    (u, s, vt) or s
        As :func:`numpy.linalg.svd` with ``full_matrices=False``.

    Raises
    ------
    NumericalError
        If both drivers fail or the result is not finite.
    """
    A = np.asarray(A, dtype=np.float64)
    try:
        out = np.linalg.svd(A, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        try:
            out = sla.svd(A, full_matrices=False, compute_uv=compute_uv,
                          check_finite=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge: {exc}") from exc
    parts = out if compute_uv else (out,)
    if not all(np.all(np.isfinite(x)) for x in parts):
        raise NumericalError("SVD produced non-finite values")
    return out


def thin_svd(A, k: int | None = None) -> ThinSvd:
    """Top-``k`` singular triplets with a fixed sign convention.

    Each left singular vector is flipped (together with its right partner)
    so that its largest-magnitude entry is nonnegative. Ties in magnitude
    resolve to the first index.

    Parameters
    ----------
    A : array_like, shape (m, n)
    k : int, optional
        Number of triplets, ``1 <= k <= min(m, n)``. Defaults to ``min(m, n)``.

    Returns
    -------
    ThinSvd

    Raises
    ------
    DimensionError
        If ``k`` is out of range.
    NumericalError
        If the LAPACK routine fails.
    """
    A = as_matrix(A, name="A")
    kmax = min(A.shape)
    if k is None:
        k = kmax
    if not (1 <= int(k) <= kmax):
        raise DimensionError(f"k={k} outside [1, {kmax}]")
    k = int(k)
    u, s, vt = robust_svd(A)
    u = u[:, :k].copy()
    s = s[:k].copy()
    v = vt[:k].T.copy()
    pivot = np.argmax(np.abs(u), axis=0)
    flip = u[pivot, np.arange(k)] < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return ThinSvd(u, s, v)


def singular_values(A) -> np.ndarray:
    """All singular values of ``A`` in nonincreasing order."""
    return robust_svd(as_matrix(A, name="A"), compute_uv=False)


def spectral_norm(A) -> float:
    return float(singular_values(A)[0])


def solve_gram(B, G) -> np.ndarray:
    """Return ``B @ inv(G)`` for symmetric positive definite ``G``.

    Uses a Cholesky factorization; no explicit inverse is formed.

    Raises
    ------
    DimensionError
        If ``B`` and ``G`` are incompatible.
    numpy.linalg.LinAlgError
        If ``G`` is not positive definite.
    """
    B = np.asarray(B, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or B.ndim != 2 or B.shape[1] != G.shape[0]:
        raise DimensionError(f"cannot right-divide {B.shape} by {G.shape}")
    if not np.allclose(G, G.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(G).max())):
        raise np.linalg.LinAlgError("Gram matrix is not symmetric")
    try:
        c = sla.cho_factor(G, lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"Gram matrix is not positive definite: {exc}") from exc
    # X G = B  <=>  G X^T = B^T since G is symmetric
    return np.ascontiguousarray(sla.cho_solve(c, B.T, check_finite=False).T)


def pseudo_inverse(A) -> np.ndarray:
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values at or below ``max(m, n) * eps * sigma_max`` are treated
    as zero.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {A.shape}")
    m, n = A.shape
    if A.size == 0 or not np.any(A):
        return np.zeros((n, m))
    u, s, vt = robust_svd(A)
    cut = max(m, n) * np.finfo(np.float64).eps * s[0]
    keep = s > cut
    return (vt[keep].T / s[keep]) @ u[:, keep].T


# -- text matrix format -----------------------------------------------------

def read_matrix(path) -> tuple[np.ndarray, ObservationMask]:
    """Read the text matrix format.

    The first line holds ``rows cols``; each following line holds one row of
    whitespace-separated decimals. ``nan`` marks a missing entry.

    Returns
    -------
    D : ndarray
        Data with missing entries set to zero.
    mask : ObservationMask
        Observed entries.
    """
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: first line must be 'rows cols'")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from None
    if rows < 1 or cols < 1:
        raise ValueError(f"{path}: dimensions must be positive")
    body = lines[1:]
    if len(body) != rows:
        raise ValueError(f"{path}: expected {rows} data rows, found {len(body)}")
    data = np.empty((rows, cols))
    for i, ln in enumerate(body):
        toks = ln.split()
        if len(toks) != cols:
            raise ValueError(f"{path}: row {i + 1} has {len(toks)} values, expected {cols}")
        try:
            data[i] = [float(t) for t in toks]
        except ValueError:
            raise ValueError(f"{path}: row {i + 1} has a non-numeric value") from None
    if np.any(np.isinf(data)):
        raise ValueError(f"{path}: infinite entries are not allowed")
    observed = ~np.isnan(data)
    return np.where(observed, data, 0.0), ObservationMask(observed)


def write_matrix(path, A, mask: ObservationMask | None = None) -> None:
    """Write ``A`` in the text matrix format; entries off ``mask`` become ``nan``."""
    A = as_matrix(A, name="A")
    if mask is not None:
        mask._check(A)
    rows, cols = A.shape
    out = [f"{rows} {cols}"]
    for i in range(rows):
        vals = []
        for j in range(cols):
            if mask is not None and not mask.array[i, j]:
                vals.append("nan")
            else:
                vals.append(repr(float(A[i, j])))
        out.append(" ".join(vals))
    Path(path).write_text("\n".join(out) + "\n")


def read_mask(path, shape: tuple[int, int] | None = None) -> ObservationMask:
    """Read a mask file in the matrix format: nonzero entries are observed."""
    A, m = read_matrix(path)
    mask = ObservationMask((A != 0) & m.array)
    if shape is not None and mask.shape != tuple(shape):
        raise DimensionError(f"mask shape {mask.shape} does not match data shape {tuple(shape)}")
    return mask
