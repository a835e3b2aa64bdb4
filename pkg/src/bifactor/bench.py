"""Synthetic data, recovery metrics and experiment drivers.

Random streams come from numpy's PCG64 bit generator seeded through
``SeedSequence([seed, *stream_ids])``, so every trial has its own stream and
results do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dense import ObservationMask, project
from .rank import estimate_rank
from .rpca import SOLVERS, SolverOptions

RNG_NAME = "numpy-PCG64/SeedSequence"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for the stream ``(seed, *stream)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one synthetic instance family.

    ``d_rule`` is ``"estimate"`` (rank estimation), ``"quarter"``
    (``floor(1.25 r)``) or an explicit positive integer.
    """

    m: int
    n: int
    r: int
    outlier_ratio: float = 0.0
    noise_factor: float = 0.0
    missing_ratio: float = 0.0
    seed: int = 0
    trials: int = 1
    d_rule: str | int = "estimate"

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("dimensions must be positive")
        if not (1 <= self.r <= min(self.m, self.n)):
            raise ValueError(f"rank r={self.r} outside [1, {min(self.m, self.n)}]")
        if not (0.0 <= self.outlier_ratio < 1.0):
            raise ValueError("outlier_ratio must lie in [0, 1)")
        if not (0.0 <= self.missing_ratio < 1.0):
            raise ValueError("missing_ratio must lie in [0, 1)")
        if self.noise_factor < 0:
            raise ValueError("noise_factor must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if isinstance(self.d_rule, str) and self.d_rule not in ("estimate", "quarter"):
            raise ValueError(f"unknown d_rule {self.d_rule!r}")

    def rank_for(self, D: np.ndarray, mask: ObservationMask) -> int:
        if self.d_rule == "estimate":
            return estimate_rank(D, mask).rank
        if self.d_rule == "quarter":
            return min(int(math.floor(1.25 * self.r)), min(self.m, self.n))
        return int(self.d_rule)


@dataclass(frozen=True)
class GroundTruth:
    Lstar: np.ndarray
    Sstar: np.ndarray
    mask: ObservationMask
    D: np.ndarray


def gen_synthetic(cfg: ExperimentConfig, trial: int = 0, *stream: int) -> GroundTruth:
    """Draw ``D = P_Omega(P Q^T + S* + nf * N)``.

    ``P`` and ``Q`` are standard normal, ``S*`` has
    ``round(outlier_ratio * m * n)`` entries uniform on ``[-5, 5]`` at
    uniformly random observed positions, and ``N`` is standard normal.
    ``round(missing_ratio * m * n)`` entries are left unobserved.
    """
    m, n, r = cfg.m, cfg.n, cfg.r
    rng = make_rng(cfg.seed, *stream, trial)
    P = rng.standard_normal((m, r))
    Q = rng.standard_normal((n, r))
    Lstar = P @ Q.T
    mask = random_observation_mask((m, n), cfg.missing_ratio, rng)
    S = np.zeros(m * n)
    on = np.flatnonzero(mask.array)
    k = min(int(round(cfg.outlier_ratio * m * n)), on.size)
    if k:
        pos = on[rng.choice(on.size, k, replace=False)]
        S[pos] = rng.uniform(-5.0, 5.0, k)
    Sstar = S.reshape(m, n)
    N = cfg.noise_factor * rng.standard_normal((m, n)) if cfg.noise_factor else 0.0
    D = project(mask, Lstar + Sstar + N)
    return GroundTruth(Lstar, Sstar, mask, D)


# -- metrics ----------------------------------------------------------------

def rse(L, Lbar) -> float:
    """Relative error ``||L - Lbar||_F / ||Lbar||_F``."""
    L = np.asarray(L, dtype=np.float64)
    Lbar = np.asarray(Lbar, dtype=np.float64)
    if L.shape != Lbar.shape:
        raise ValueError(f"shape mismatch {L.shape} vs {Lbar.shape}")
    ref = float(np.linalg.norm(Lbar))
    if ref == 0.0:
        raise ValueError("reference matrix is zero")
    return float(np.linalg.norm(L - Lbar)) / ref


def f_measure(S, Sstar, mask: ObservationMask | None = None, tol: float = 1e-3) -> float:
    """F-measure of the detected outlier support on the observed entries.

    An entry of ``S`` counts as detected when ``|S_ij| > tol``; the true
    support is the nonzero pattern of ``Sstar``.
    """
    S = np.asarray(S, dtype=np.float64)
    Sstar = np.asarray(Sstar, dtype=np.float64)
    if S.shape != Sstar.shape:
        raise ValueError(f"shape mismatch {S.shape} vs {Sstar.shape}")
    on = np.ones(S.shape, dtype=bool) if mask is None else mask.array
    est = (np.abs(S) > tol) & on
    true = (Sstar != 0) & on
    tp = int(np.sum(est & true))
    n_est, n_true = int(est.sum()), int(true.sum())
    prec = tp / n_est if n_est else 0.0
    rec = tp / n_true if n_true else 0.0
    if prec + rec == 0.0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)


def psnr(I, Iref, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    I = np.asarray(I, dtype=np.float64)
    Iref = np.asarray(Iref, dtype=np.float64)
    if I.shape != Iref.shape:
        raise ValueError(f"shape mismatch {I.shape} vs {Iref.shape}")
    mse = float(np.mean((I - Iref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def support_tol(noise_factor: float) -> float:
    """Noise-aware support threshold ``max(1e-3, 3 nf)``.

    Under Gaussian noise the sparse estimate absorbs noise entries of size
    about ``nf``. Counted as detections they make the F-measure track the
    noise level, so the drivers also report the F-measure at this threshold
    next to the standard one at 1e-3.
    """
    return max(1e-3, 3.0 * float(noise_factor))


# -- parallel map -----------------------------------------------------------

def resolve_jobs(jobs: int | None) -> int:
    """Worker count: explicit value, else ``BIFACTOR_JOBS``, else CPU count."""
    if jobs is None:
        env = os.environ.get("BIFACTOR_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ValueError(f"BIFACTOR_JOBS must be an integer, got {env!r}") from None
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ValueError(f"jobs must be positive, got {jobs}")
    return int(jobs)


def _pmap(fn, tasks: list, jobs: int | None) -> list:
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        return list(ex.map(fn, tasks))


def _solver_opts(d: int, epsilon: float, max_iters: int) -> SolverOptions:
    return SolverOptions(d=d, epsilon=epsilon, max_iters=max_iters)


# -- phase transition -------------------------------------------------------

def _phase_task(args):
    method, size, r, corr, seed, i, j, t, eps, max_iters = args
    cfg = ExperimentConfig(size, size, r, outlier_ratio=corr, seed=seed, d_rule="quarter")
    gt = gen_synthetic(cfg, t, i, j)
    rep = SOLVERS[method](gt.D, gt.mask, _solver_opts(cfg.rank_for(gt.D, gt.mask), eps, max_iters))
    return rse(rep.L, gt.Lstar)


def phase_transition(method: str, ranks, corruptions, size: int, trials: int, seed: int,
                     epsilon: float = 1e-5, max_iters: int = 500, jobs: int | None = 1,
                     success_rse: float = 1e-2) -> np.ndarray:
    """Success ratio per (rank, corruption) cell.

    A trial succeeds when the recovered ``L`` has RSE below ``success_rse``.
    Each cell uses ``d = floor(1.25 r)`` and a full mask. Trial ``t`` of
    cell ``(i, j)`` draws from stream ``(seed, i, j, t)``.

    Returns
    -------
    ndarray, shape (len(ranks), len(corruptions))
    """
    if method not in SOLVERS:
        raise ValueError(f"unknown method {method!r}")
    ranks, corruptions = list(ranks), list(corruptions)
    if not ranks or not corruptions:
        raise ValueError("rank and corruption grids must be nonempty")
    tasks = [(method, size, int(r), float(c), seed, i, j, t, epsilon, max_iters)
             for i, r in enumerate(ranks) for j, c in enumerate(corruptions) for t in range(trials)]
    errs = np.array(_pmap(_phase_task, tasks, jobs)).reshape(len(ranks), len(corruptions), trials)
    return (errs < success_rse).sum(axis=2) / trials


def phase_csv(method, ranks, corruptions, size, trials, seed, grid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "size", "trials", "seed", "rng", "rank", "corruption", "success_ratio"])
    for i, r in enumerate(ranks):
        for j, c in enumerate(corruptions):
            w.writerow([method, size, trials, seed, RNG_NAME, r, f"{c:.6g}", f"{grid[i, j]:.6g}"])
    return buf.getvalue()


# -- size sweep ------------------------------------------------------------

TABLE3_METHODS = ("sl-half", "sl-two-thirds", "nuclear")


def _table3_task(args):
    size, trial, seed, outlier_ratio, nf, eps, max_iters = args
    r = max(1, size // 50)
    cfg = ExperimentConfig(size, size, r, outlier_ratio=outlier_ratio, noise_factor=nf, seed=seed)
    gt = gen_synthetic(cfg, trial, size)
    d = cfg.rank_for(gt.D, gt.mask)
    out = []
    tol = support_tol(nf)
    for method in TABLE3_METHODS:
        t0 = time.perf_counter()
        rep = SOLVERS[method](gt.D, gt.mask, _solver_opts(d, eps, max_iters))
        dt = time.perf_counter() - t0
        out.append(dict(method=method, d=d, iterations=rep.iterations,
                        rse=rse(rep.L, gt.Lstar),
                        fm=f_measure(rep.S, gt.Sstar, gt.mask),
                        fm_noise=f_measure(rep.S, gt.Sstar, gt.mask, tol),
                        time=dt))
    return out


def table3_experiment(sizes, trials: int = 10, seed: int = 0, outlier_ratio: float = 0.2,
                      noise_factor: float = 0.5, epsilon: float = 1e-5, max_iters: int = 500,
                      jobs: int | None = 1) -> list[dict]:
    """Compare the three RPCA solvers on square ``size x size`` instances.

    True rank is ``size // 50``; ``d`` comes from rank estimation; the mask
    is full. Trial ``t`` at size ``s`` draws from stream ``(seed, s, t)``.

    Returns
    -------
    list of dict
        One row per (method, size) with mean RSE, mean F-measure at the
        standard 1e-3 threshold (``fm_mean``) and at :func:`support_tol`
        (``fm_noise_mean``), mean ``d``, mean iteration count and mean wall
        time.
    """
    sizes = [int(s) for s in sizes]
    tasks = [(s, t, seed, outlier_ratio, noise_factor, epsilon, max_iters)
             for s in sizes for t in range(trials)]
    results = _pmap(_table3_task, tasks, jobs)
    rows = []
    for s in sizes:
        per = [res for (ts, *_), res in zip(tasks, results) if ts == s]
        for k, method in enumerate(TABLE3_METHODS):
            recs = [p[k] for p in per]
            rows.append(dict(
                method=method, m=s, n=s, r=max(1, s // 50), outlier_ratio=outlier_ratio,
                noise_factor=noise_factor, trials=trials, seed=seed, rng=RNG_NAME,
                epsilon=epsilon, max_iters=max_iters, support_tol=support_tol(noise_factor),
                d_mean=float(np.mean([x["d"] for x in recs])),
                iterations_mean=float(np.mean([x["iterations"] for x in recs])),
                rse_mean=float(np.mean([x["rse"] for x in recs])),
                fm_mean=float(np.mean([x["fm"] for x in recs])),
                fm_noise_mean=float(np.mean([x["fm_noise"] for x in recs])),
                time_mean=float(np.mean([x["time"] for x in recs])),
                rse_all=[x["rse"] for x in recs],
            ))
    return rows


def table3_csv(rows: list[dict], timing: bool = True) -> str:
    cols = ["method", "m", "n", "r", "outlier_ratio", "noise_factor", "trials", "seed", "rng",
            "epsilon", "max_iters", "support_tol", "d_mean", "iterations_mean", "rse_mean",
            "fm_mean", "fm_noise_mean"]
    if timing:
        cols.append("time_mean")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- synthetic images -------------------------------------------------------

def synthetic_lowrank_image(size: int = 256, rank: int = 9, seed: int = 0) -> np.ndarray:
    """Nonnegative rank-``rank`` image ``P Q^T`` scaled to peak 255."""
    rng = make_rng(seed)
    P = rng.random((size, rank))
    Q = rng.random((size, rank))
    img = P @ Q.T
    return img * (255.0 / img.max())


def random_observation_mask(shape, missing_ratio: float, rng: np.random.Generator) -> ObservationMask:
    """Hide ``round(missing_ratio * size)`` entries chosen uniformly."""
    m, n = shape
    if not (0.0 <= missing_ratio < 1.0):
        raise ValueError("missing ratio must lie in [0, 1)")
    observed = np.ones(m * n, dtype=bool)
    k = int(round(missing_ratio * m * n))
    if k:
        observed[rng.choice(m * n, k, replace=False)] = False
    return ObservationMask(observed.reshape(m, n))
