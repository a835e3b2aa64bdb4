"""Rank estimation from the decay of the leading singular values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dense import ObservationMask, as_matrix, project, singular_values


@dataclass(frozen=True)
class RankEstimate:
    """Result of :func:`estimate_rank`.

    Attributes
    ----------
    rank : int
        Estimated rank.
    singular_values : ndarray
        The top-``k`` singular values that were inspected.
    ratios : ndarray
        ``sigma[i+1] / sigma[i]`` for ``i = 0 .. k-2``; ``inf`` where
        ``sigma[i]`` is below the noise floor.
    gaps : ndarray
        ``sigma[i] - sigma[i+1]``, reported for diagnostics only.
    """

    rank: int
    singular_values: np.ndarray
    ratios: np.ndarray
    gaps: np.ndarray

    @property
    def criterion_values(self) -> np.ndarray:
        return self.ratios


def estimate_rank(D, mask: ObservationMask | None = None, k: int | None = None) -> RankEstimate:
    """Pick the index where consecutive singular values drop the most.

    The estimate is ``argmin_i sigma[i+1] / sigma[i]`` (1-based) over indices
    with ``sigma[i] > 1e-10 * sigma[0]``. Ties go to the smaller index.

    Parameters
    ----------
    D : array_like, shape (m, n)
    mask : ObservationMask, optional
        Observed entries; defaults to all.
    k : int, optional
        Number of singular values to inspect, default ``min(100, m, n)``.

    Raises
    ------
    ValueError
        If the observed data is all zero, the mask is empty or ``k < 2``.
    """
    D = as_matrix(D, name="D")
    m, n = D.shape
    if mask is None:
        mask = ObservationMask.full(m, n)
    if mask.count == 0:
        raise ValueError("mask is empty")
    if k is None:
        k = min(100, m, n)
    k = int(k)
    if not (2 <= k <= min(m, n)):
        raise ValueError(f"k must lie in [2, {min(m, n)}], got {k}")
    s = singular_values(project(mask, D))[:k]
    if s[0] == 0:
        raise ValueError("rank undefined: observed data is all zero")
    lead = s[:-1]
    valid = lead > 1e-10 * s[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(valid, s[1:] / np.where(valid, lead, 1.0), np.inf)
    rank = int(np.argmin(ratios)) + 1
    return RankEstimate(rank, s, ratios, lead - s[1:])
