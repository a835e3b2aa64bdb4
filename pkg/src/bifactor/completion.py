"""Matrix completion with factored Schatten quasi-norm penalties.

``complete_dn`` solves
``min (lam/2)(||U||_* + ||V||_*) + 1/2 ||P_Omega(L - D)||_F^2``  s.t. ``L = U V^T``
and ``complete_fn`` the same problem with ``(lam/3)(||U||_F^2 + 2||V||_*)``.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .dense import DimensionError, ObservationMask, project, solve_gram
from .rank import estimate_rank
from .rpca import (
    AdmmState,
    SolverOptions,
    SolverReport,
    _finish,
    _nuc,
    _prepare,
    _ratio,
    _spectral_init,
    svt_dual,
)


def default_completion_lambda(D: np.ndarray, mask: ObservationMask) -> float:
    """Heuristic weight ``||P_Omega D||_F / sqrt(max(m, n) * |Omega| / (m n))``."""
    m, n = D.shape
    return float(np.linalg.norm(project(mask, D)) / math.sqrt(max(m, n) * mask.density))


def resolve_completion_options(D, mask, opts: SolverOptions | None) -> SolverOptions:
    opts = opts or SolverOptions()
    opts.validate()
    m, n = D.shape
    d = opts.d if opts.d is not None else estimate_rank(D, mask).rank
    if int(d) > min(m, n):
        raise DimensionError(f"d={d} exceeds min(m, n)={min(m, n)}")
    return replace(
        opts,
        d=int(d),
        lam=default_completion_lambda(D, mask) if opts.lam is None else float(opts.lam),
        mu0=1e-4 if opts.mu0 is None else float(opts.mu0),
        mu_max=1e20 if opts.mu_max is None else float(opts.mu_max),
        max_iters=int(opts.max_iters),
    )


def _complete(D, mask, opts, kind: str) -> SolverReport:
    D, mask, normD = _prepare(D, mask)
    opts = resolve_completion_options(D, mask, opts)
    d, lam, mu, rho, mu_max = opts.d, opts.lam, opts.mu0, opts.rho, opts.mu_max
    on = mask.array
    dn = kind == "dn"

    U, V = _spectral_init(D, d)
    st = AdmmState(U=U, V=V, Uhat=U.copy() if dn else None, Vhat=V.copy(), L=D.copy(),
                   S=np.zeros_like(D), Y1=np.zeros_like(U) if dn else None,
                   Y2=np.zeros_like(V), Y3=np.zeros_like(D), Y4=None, mu=mu)
    I = np.eye(d)
    obj, res, stop, ynorm, mus = [], [], [], [], []
    converged = False
    for k in range(opts.max_iters):
        mu = st.mu
        A = st.L + st.Y3 / mu
        if dn:
            st.U = solve_gram(A @ st.V + st.Uhat - st.Y1 / mu, st.V.T @ st.V + I)
            st.V = solve_gram(A.T @ st.U + st.Vhat - st.Y2 / mu, st.U.T @ st.U + I)
            # Y1 + mu (U - Uhat) == mu (A - svt(A)) with A = U + Y1 / mu
            st.Uhat, dual1 = svt_dual(st.U + st.Y1 / mu, mu, lam / 2.0)
            st.Vhat, dual2 = svt_dual(st.V + st.Y2 / mu, mu, lam / 2.0)
        else:
            st.U = solve_gram((mu * A) @ st.V, mu * (st.V.T @ st.V) + (2.0 * lam / 3.0) * I)
            st.V = solve_gram(A.T @ st.U + st.Vhat - st.Y2 / mu, st.U.T @ st.U + I)
            st.Vhat, dual2 = svt_dual(st.V + st.Y2 / mu, mu, 2.0 * lam / 3.0)
        UV = st.U @ st.V.T
        st.L = np.where(on, (D + mu * UV - st.Y3) / (1.0 + mu), UV - st.Y3 / mu)
        if dn:
            st.Y1 = dual1
        st.Y2 = dual2
        st.Y3 += mu * (st.L - UV)
        st.iter = k + 1

        r = float(np.linalg.norm(UV - st.L)) / normD
        e2 = _ratio(float(np.linalg.norm(st.Vhat - st.V)), float(np.linalg.norm(st.V)))
        if dn:
            e2 = max(e2, _ratio(float(np.linalg.norm(st.Uhat - st.U)), float(np.linalg.norm(st.U))))
        stop.append(max(r, e2))
        res.append(r)
        fit = 0.5 * float(np.sum((UV - D)[on] ** 2))
        if dn:
            obj.append(0.5 * lam * (_nuc(st.Uhat) + _nuc(st.Vhat)) + fit)
            ynorm.append((np.linalg.norm(st.Y1, 2), np.linalg.norm(st.Y2, 2)))
        else:
            obj.append(lam / 3.0 * (float(np.sum(st.U * st.U)) + 2.0 * _nuc(st.Vhat)) + fit)
            ynorm.append((np.linalg.norm(st.Y2, 2), np.nan))
        mus.append(mu)
        st.mu = min(rho * mu, mu_max)
        if stop[-1] < opts.epsilon:
            converged = True
            break

    st.L = st.U @ st.V.T
    st.S = np.zeros_like(D)
    return _finish(kind, st, D, mask, opts, obj, res, stop, ynorm, mus, converged)


def complete_dn(D, mask: ObservationMask, opts: SolverOptions | None = None) -> SolverReport:
    """Complete ``D`` from its entries on ``mask`` with the double nuclear penalty.

    Each iteration updates ``U``, ``V``, ``(Uhat, Vhat)`` by singular value
    thresholding with ``lam / (2 mu)``, then ``L`` by

    ``P_Omega((D + mu UV^T - Y3) / (1 + mu)) + P_Omega^c(UV^T - Y3 / mu)``

    and finally the multipliers and ``mu``. Defaults: ``mu0 = 1e-4``,
    ``mu_max = 1e20``, ``lam`` from :func:`default_completion_lambda`.
    Stops when ``max(||UV^T - L|| / ||D||, ||Uhat - U|| / ||U||,
    ||Vhat - V|| / ||V||) < epsilon``. The returned ``L`` equals ``U V^T``.
    """
    return _complete(D, mask, opts, "dn")


def complete_fn(D, mask: ObservationMask, opts: SolverOptions | None = None) -> SolverReport:
    """Complete ``D`` with the Frobenius/nuclear penalty.

    Like :func:`complete_dn` without the ``Uhat`` block; ``Vhat`` is
    thresholded with ``2 lam / (3 mu)``. ``multiplier_norm_trace[:, 0]``
    tracks the ``Vhat`` multiplier.
    """
    return _complete(D, mask, opts, "fn")


COMPLETERS = {"dn": complete_dn, "fn": complete_fn}
