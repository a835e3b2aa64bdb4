"""ADMM solvers for robust PCA with factored Schatten quasi-norm penalties.

Three models are solved for ``D`` observed on a mask ``Omega``:

``solve_sl_half``
    ``min (lam/2)(||U||_* + ||V||_*) + ||P_Omega(S)||_{1/2}^{1/2}``
    s.t. ``L + S = D``, ``L = U V^T``.
``solve_sl_two_thirds``
    ``min (lam/3)(||U||_F^2 + 2||V||_*) + ||P_Omega(S)||_{2/3}^{2/3}``
    with the same constraints.
``solve_rpca_nuclear``
    the convex baseline ``min lam ||L||_* + ||P_Omega(S)||_1`` s.t. ``L + S = D``.

All three share :class:`SolverOptions` and return a :class:`SolverReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum

import numpy as np

from .dense import (
    DimensionError,
    ObservationMask,
    as_matrix,
    project,
    pseudo_inverse,
    robust_svd,
    solve_gram,
    spectral_norm,
    thin_svd,
)
from .prox import half_threshold_matrix, two_thirds_threshold_matrix
from .rank import estimate_rank


class Termination(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"


@dataclass(frozen=True)
class SolverOptions:
    """Solver parameters. ``None`` means "use the solver's default".

    Attributes
    ----------
    d : int or None
        Factor rank. Estimated from the data when None.
    lam : float or None
        Regularization weight. RPCA default is ``sqrt(max(m, n))``.
    mu0 : float or None
        Initial penalty. RPCA default is ``1 / sigma_1(P_Omega(D))``.
    rho : float
        Penalty growth factor, > 1.
    mu_max : float or None
        Penalty cap.
    epsilon : float
        Stopping tolerance.
    max_iters : int
        Iteration cap.
    """

    d: int | None = None
    lam: float | None = None
    mu0: float | None = None
    rho: float = 1.1
    mu_max: float | None = None
    epsilon: float = 1e-5
    max_iters: int = 500

    def validate(self) -> None:
        if self.d is not None and int(self.d) < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not self.rho > 1.0:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mu0 is not None and not self.mu0 > 0.0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if self.mu_max is not None and not self.mu_max > 0.0:
            raise ValueError(f"mu_max must be positive, got {self.mu_max}")
        if self.lam is not None and not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class AdmmState:
    """Iterates of one run. Unused blocks (e.g. ``Uhat`` for F-N) are None."""

    U: np.ndarray
    V: np.ndarray
    Uhat: np.ndarray | None
    Vhat: np.ndarray
    L: np.ndarray
    S: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    Y3: np.ndarray | None
    Y4: np.ndarray | None
    mu: float
    iter: int = 0


@dataclass
class SolverReport:
    """Output of a solver run.

    ``residual_trace`` holds ``max(||UV^T - L||_F, ||L + S - D||_F) / ||D||_F``
    and ``stop_metric_trace`` the quantity compared against ``epsilon``.
    ``multiplier_norm_trace`` has one row per iteration with the spectral
    norms of the two factor multipliers (NaN where a multiplier is absent).
    ``mu_trace`` holds the penalty used in each iteration.
    """

    method: str
    U: np.ndarray
    V: np.ndarray
    L: np.ndarray
    S: np.ndarray
    objective_trace: np.ndarray
    residual_trace: np.ndarray
    stop_metric_trace: np.ndarray
    multiplier_norm_trace: np.ndarray
    mu_trace: np.ndarray
    termination: Termination
    iterations: int
    options: SolverOptions
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.termination is Termination.CONVERGED


# -- shared setup -----------------------------------------------------------

def _prepare(D, mask):
    D = as_matrix(D, name="D")
    m, n = D.shape
    if mask is None:
        mask = ObservationMask.full(m, n)
    if mask.shape != D.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match data shape {D.shape}")
    if mask.count == 0:
        raise ValueError("mask is empty")
    D = project(mask, D)
    normD = float(np.linalg.norm(D))
    if normD == 0.0:
        raise ValueError("observed data is all zero")
    return D, mask, normD


def resolve_rpca_options(D: np.ndarray, mask: ObservationMask, opts: SolverOptions | None,
                         need_rank: bool = True) -> SolverOptions:
    """Fill in data-dependent defaults for the RPCA solvers."""
    opts = opts or SolverOptions()
    opts.validate()
    m, n = D.shape
    d = opts.d
    if d is None and need_rank:
        d = estimate_rank(D, mask).rank
    if d is not None and int(d) > min(m, n):
        raise DimensionError(f"d={d} exceeds min(m, n)={min(m, n)}")
    s1 = spectral_norm(project(mask, D))
    return replace(
        opts,
        d=None if d is None else int(d),
        lam=math.sqrt(max(m, n)) if opts.lam is None else float(opts.lam),
        mu0=1.0 / s1 if opts.mu0 is None else float(opts.mu0),
        mu_max=1e10 if opts.mu_max is None else float(opts.mu_max),
        max_iters=int(opts.max_iters),
    )


def _spectral_init(L0: np.ndarray, d: int):
    sv = thin_svd(L0, d)
    r = np.sqrt(sv.singular_values)
    return sv.left * r, sv.right * r


def _dual_init(D: np.ndarray, lam: float) -> np.ndarray:
    return D / max(spectral_norm(D), float(np.abs(D).max()) / lam)


def _nuc(A: np.ndarray) -> float:
    return float(np.sum(robust_svd(A, compute_uv=False)))


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def stopping_metric(state: AdmmState, D) -> tuple[float, float]:
    """Scaled primal/KKT residual and relative factor gap.

    Returns ``(eps1 / ||D||_F, eps2)`` with

    * ``eps1 = max(||UV^T - L||, ||L + S - D||, ||Y1 pinv(Vhat) - pinv(Uhat^T) Y2^T||)``
    * ``eps2 = max(||Uhat - U|| / ||U||, ||Vhat - V|| / ||V||)``

    Terms involving ``Uhat`` are skipped when ``state.Uhat`` is None (the
    two-thirds model has no ``Uhat`` block). All norms are Frobenius.
    """
    D = np.asarray(D, dtype=np.float64)
    normD = float(np.linalg.norm(D))
    e1 = max(float(np.linalg.norm(state.U @ state.V.T - state.L)),
             float(np.linalg.norm(state.L + state.S - D)))
    if state.Uhat is not None:
        kkt = state.Y1 @ pseudo_inverse(state.Vhat) - pseudo_inverse(state.Uhat.T) @ state.Y2.T
        e1 = max(e1, float(np.linalg.norm(kkt)))
    e2 = _ratio(float(np.linalg.norm(state.Vhat - state.V)), float(np.linalg.norm(state.V)))
    if state.Uhat is not None:
        e2 = max(e2, _ratio(float(np.linalg.norm(state.Uhat - state.U)),
                            float(np.linalg.norm(state.U))))
    return _ratio(e1, normD), e2


def _lp(S: np.ndarray, mask: ObservationMask, p: float) -> float:
    a = np.abs(S[mask.array])
    if p == 0.5:
        return float(np.sum(np.sqrt(a)))
    return float(np.sum(np.cbrt(a) ** 2))


def svt_dual(A: np.ndarray, mu: float, cap: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``svt(A, cap / mu)`` and ``mu * (A - svt(A, cap / mu))``.

    The second output is the multiplier produced by a factor update of the
    form ``Y <- Y + mu * (X - Xhat)`` with ``A = X + Y / mu``. Building it
    from the singular values keeps its spectral norm at most ``cap`` even
    when ``mu`` is large enough that the direct difference loses precision.
    """
    u, s, vt = robust_svd(A)
    tau = cap / mu
    shrunk = s - tau
    k = int(np.count_nonzero(shrunk > 0))
    hat = (u[:, :k] * shrunk[:k]) @ vt[:k]
    dual = (u * np.minimum(mu * s, cap)) @ vt
    return hat, dual


def _finish(method, state, D, mask, opts, obj, res, stop, ynorm, mus, converged, extra=None):
    S = project(mask, state.S)
    return SolverReport(
        method=method,
        U=state.U,
        V=state.V,
        L=state.L,
        S=S,
        objective_trace=np.asarray(obj),
        residual_trace=np.asarray(res),
        stop_metric_trace=np.asarray(stop),
        multiplier_norm_trace=np.asarray(ynorm).reshape(-1, 2),
        mu_trace=np.asarray(mus),
        termination=Termination.CONVERGED if converged else Termination.MAX_ITERS,
        iterations=len(stop),
        options=opts,
        extra=extra or {},
    )


# -- (S+L)_{1/2} ------------------------------------------------------------

def solve_sl_half(D, mask: ObservationMask | None = None,
                  opts: SolverOptions | None = None) -> SolverReport:
    """Robust PCA with the double nuclear penalty and an l_{1/2} sparse term.

    One pass per iteration updates, in order, ``U``, ``V``, ``(Uhat, Vhat)``,
    ``L``, ``S``, the four multipliers and ``mu``. Entries of ``D`` off the
    mask are ignored (set to zero). The returned ``S`` is zero off the mask.

    Parameters
    ----------
    D : array_like, shape (m, n)
    mask : ObservationMask, optional
    opts : SolverOptions, optional

    Returns
    -------
    SolverReport
    """
    D, mask, normD = _prepare(D, mask)
    opts = resolve_rpca_options(D, mask, opts)
    d, lam, mu, rho, mu_max = opts.d, opts.lam, opts.mu0, opts.rho, opts.mu_max
    on = mask.array

    U, V = _spectral_init(D, d)
    st = AdmmState(U=U, V=V, Uhat=U.copy(), Vhat=V.copy(), L=D.copy(), S=np.zeros_like(D),
                   Y1=np.zeros_like(U), Y2=np.zeros_like(V), Y3=np.zeros_like(D),
                   Y4=_dual_init(D, lam), mu=mu)
    I = np.eye(d)
    obj, res, stop, ynorm, mus = [], [], [], [], []
    converged = False
    for k in range(opts.max_iters):
        mu = st.mu
        M = st.L - st.Y3 / mu
        st.U = solve_gram(st.Uhat + st.Y1 / mu + M @ st.V, I + st.V.T @ st.V)
        st.V = solve_gram(st.Vhat + st.Y2 / mu + M.T @ st.U, I + st.U.T @ st.U)
        # Y1 + mu (Uhat - U) == -mu (A - svt(A)) with A = U - Y1 / mu
        st.Uhat, dual1 = svt_dual(st.U - st.Y1 / mu, mu, lam / 2.0)
        st.Vhat, dual2 = svt_dual(st.V - st.Y2 / mu, mu, lam / 2.0)
        UV = st.U @ st.V.T
        st.L = 0.5 * (UV + st.Y3 / mu - st.S + D - st.Y4 / mu)
        R = D - st.L - st.Y4 / mu
        st.S = np.where(on, half_threshold_matrix(R, 2.0 / mu), R)
        st.Y1 = -dual1
        st.Y2 = -dual2
        st.Y3 += mu * (UV - st.L)
        st.Y4 += mu * (st.L + st.S - D)
        st.iter = k + 1

        e1, e2 = stopping_metric(st, D)
        stop.append(max(e1, e2))
        res.append(max(np.linalg.norm(UV - st.L), np.linalg.norm(st.L + st.S - D)) / normD)
        obj.append(0.5 * lam * (_nuc(st.Uhat) + _nuc(st.Vhat)) + _lp(st.S, mask, 0.5))
        ynorm.append((np.linalg.norm(st.Y1, 2), np.linalg.norm(st.Y2, 2)))
        mus.append(mu)
        st.mu = min(rho * mu, mu_max)
        if stop[-1] < opts.epsilon:
            converged = True
            break
    return _finish("sl-half", st, D, mask, opts, obj, res, stop, ynorm, mus, converged)


# -- (S+L)_{2/3} ------------------------------------------------------------

def solve_sl_two_thirds(D, mask: ObservationMask | None = None,
                        opts: SolverOptions | None = None) -> SolverReport:
    """Robust PCA with the Frobenius/nuclear penalty and an l_{2/3} sparse term.

    Same conventions as :func:`solve_sl_half`. There is no ``Uhat`` block, so
    three multipliers are used and the stopping metric omits the ``Uhat``
    and cross-multiplier terms. ``multiplier_norm_trace[:, 1]`` is NaN.
    """
    D, mask, normD = _prepare(D, mask)
    opts = resolve_rpca_options(D, mask, opts)
    d, lam, mu, rho, mu_max = opts.d, opts.lam, opts.mu0, opts.rho, opts.mu_max
    on = mask.array

    U, V = _spectral_init(D, d)
    # Y2/Y3 here play the roles of the L = UV^T and L + S = D multipliers
    st = AdmmState(U=U, V=V, Uhat=None, Vhat=V.copy(), L=D.copy(), S=np.zeros_like(D),
                   Y1=np.zeros_like(V), Y2=np.zeros_like(D), Y3=_dual_init(D, lam), Y4=None,
                   mu=mu)
    I = np.eye(d)
    obj, res, stop, ynorm, mus = [], [], [], [], []
    converged = False
    for k in range(opts.max_iters):
        mu = st.mu
        P = st.L - st.Y2 / mu
        st.U = solve_gram(mu * (P @ st.V), (2.0 * lam / 3.0) * I + mu * (st.V.T @ st.V))
        st.V = solve_gram(st.Vhat + st.Y1 / mu + P.T @ st.U, I + st.U.T @ st.U)
        st.Vhat, dual1 = svt_dual(st.V - st.Y1 / mu, mu, 2.0 * lam / 3.0)
        UV = st.U @ st.V.T
        st.L = 0.5 * (UV + st.Y2 / mu - st.S + D - st.Y3 / mu)
        R = D - st.L - st.Y3 / mu
        st.S = np.where(on, two_thirds_threshold_matrix(R, 2.0 / mu), R)
        st.Y1 = -dual1
        st.Y2 += mu * (UV - st.L)
        st.Y3 += mu * (st.L + st.S - D)
        st.iter = k + 1

        r1 = float(np.linalg.norm(UV - st.L))
        r2 = float(np.linalg.norm(st.L + st.S - D))
        e2 = _ratio(float(np.linalg.norm(st.Vhat - st.V)), float(np.linalg.norm(st.V)))
        stop.append(max(max(r1, r2) / normD, e2))
        res.append(max(r1, r2) / normD)
        obj.append(lam / 3.0 * (float(np.sum(st.U * st.U)) + 2.0 * _nuc(st.Vhat))
                   + _lp(st.S, mask, 2.0 / 3.0))
        ynorm.append((np.linalg.norm(st.Y1, 2), np.nan))
        mus.append(mu)
        st.mu = min(rho * mu, mu_max)
        if stop[-1] < opts.epsilon:
            converged = True
            break
    return _finish("sl-two-thirds", st, D, mask, opts, obj, res, stop, ynorm, mus, converged)


# -- convex baseline --------------------------------------------------------

def solve_rpca_nuclear(D, mask: ObservationMask | None = None,
                       opts: SolverOptions | None = None) -> SolverReport:
    """Convex robust PCA ``min lam ||L||_* + ||P_Omega(S)||_1`` s.t. ``L + S = D``.

    Inexact augmented Lagrangian iterations with a full SVD of ``L`` per
    step. Stops when ``||D - L - S||_F / ||D||_F < epsilon``. ``opts.d`` is
    ignored; the returned ``U, V`` split the final ``L`` spectrally.
    """
    D, mask, normD = _prepare(D, mask)
    opts = resolve_rpca_options(D, mask, opts, need_rank=False)
    lam, mu, rho, mu_max = opts.lam, opts.mu0, opts.rho, opts.mu_max
    on = mask.array

    Y = _dual_init(D, lam)
    S = np.zeros_like(D)
    L = np.zeros_like(D)
    obj, res, stop, mus = [], [], [], []
    converged = False
    for _ in range(opts.max_iters):
        u, s, vt = robust_svd(D - S + Y / mu)
        s = s - lam / mu
        r = int(np.count_nonzero(s > 0))
        L = (u[:, :r] * s[:r]) @ vt[:r]
        R = D - L + Y / mu
        S = np.where(on, np.sign(R) * np.maximum(np.abs(R) - 1.0 / mu, 0.0), R)
        Y += mu * (D - L - S)
        gap = float(np.linalg.norm(D - L - S)) / normD
        res.append(gap)
        stop.append(gap)
        obj.append(lam * float(np.sum(s[:r])) + float(np.abs(S[on]).sum()))
        mus.append(mu)
        mu = min(rho * mu, mu_max)
        if gap < opts.epsilon:
            converged = True
            break

    rank = max(1, int(np.count_nonzero(robust_svd(L, compute_uv=False) > 1e-10 * max(normD, 1.0))))
    Uf, Vf = _spectral_init(L, min(rank, min(L.shape))) if np.any(L) else (
        np.zeros((D.shape[0], 1)), np.zeros((D.shape[1], 1)))
    st = AdmmState(U=Uf, V=Vf, Uhat=None, Vhat=Vf, L=L, S=S, Y1=np.zeros_like(Vf),
                   Y2=np.zeros_like(Vf), Y3=Y, Y4=None, mu=mu)
    ynorm = np.full((len(stop), 2), np.nan)
    return _finish("nuclear", st, D, mask, opts, obj, res, stop, ynorm, mus, converged)


SOLVERS = {
    "sl-half": solve_sl_half,
    "sl-two-thirds": solve_sl_two_thirds,
    "nuclear": solve_rpca_nuclear,
}
