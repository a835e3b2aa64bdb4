import csv
import io
import math

import numpy as np
import pytest

from bifactor import bench
from bifactor.bench import (
    ExperimentConfig,
    f_measure,
    gen_synthetic,
    phase_csv,
    phase_transition,
    psnr,
    resolve_jobs,
    rse,
    table3_csv,
    table3_experiment,
)
from bifactor.dense import ObservationMask
from bifactor.norms import numerical_rank


def test_gen_deterministic():
    cfg = ExperimentConfig(30, 20, 3, outlier_ratio=0.1, noise_factor=0.2, missing_ratio=0.2, seed=9)
    a, b = gen_synthetic(cfg), gen_synthetic(cfg)
    for k in ("Lstar", "Sstar", "D"):
        assert np.array_equal(getattr(a, k), getattr(b, k))
    assert a.mask == b.mask
    c = gen_synthetic(cfg, 1)
    assert not np.array_equal(a.Lstar, c.Lstar)


def test_gen_contents():
    cfg = ExperimentConfig(40, 30, 4, outlier_ratio=0.1, missing_ratio=0.25, seed=1)
    gt = gen_synthetic(cfg)
    assert gt.mask.count == 40 * 30 - 300
    assert np.count_nonzero(gt.Sstar) == 120
    assert not np.any(gt.Sstar[~gt.mask.array])
    assert np.all(np.abs(gt.Sstar) <= 5)
    np.testing.assert_array_equal(gt.D, np.where(gt.mask.array, gt.Lstar + gt.Sstar, 0.0))


def test_gen_no_outliers():
    gt = gen_synthetic(ExperimentConfig(10, 10, 2, seed=0))
    assert not np.any(gt.Sstar)


def test_gen_rank():
    g = np.random.default_rng(0)
    for i in range(20):
        m, n = g.integers(5, 40, size=2)
        r = int(g.integers(1, min(m, n) + 1))
        gt = gen_synthetic(ExperimentConfig(int(m), int(n), r, seed=i))
        assert numerical_rank(gt.Lstar) == r


@pytest.mark.parametrize("kw", [dict(r=0), dict(outlier_ratio=1.0), dict(missing_ratio=-0.1),
                                dict(noise_factor=-1), dict(trials=0), dict(d_rule="bogus")])
def test_config_validation(kw):
    base = dict(m=5, n=5, r=2)
    base.update(kw)
    with pytest.raises(ValueError):
        ExperimentConfig(**base)


def test_d_rules():
    gt = gen_synthetic(ExperimentConfig(50, 50, 4, seed=0))
    assert ExperimentConfig(50, 50, 4, d_rule="quarter").rank_for(gt.D, gt.mask) == 5
    assert ExperimentConfig(50, 50, 4, d_rule=7).rank_for(gt.D, gt.mask) == 7
    assert ExperimentConfig(50, 50, 4).rank_for(gt.D, gt.mask) == 4


def test_rse_examples(rng):
    L = rng.standard_normal((4, 3))
    assert rse(L, L) == 0.0
    assert rse(np.zeros_like(L), L) == 1.0
    assert rse(2 * L, L) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rse(L, np.zeros_like(L))


def test_f_measure_examples():
    S = np.zeros((4, 4))
    S[0, :2] = 3.0
    assert f_measure(S, S) == 1.0
    T = np.zeros((4, 4))
    T[1, :2] = 3.0
    assert f_measure(T, S) == 0.0
    U = S.copy()
    U[2, :2] = 1.0
    assert f_measure(U, S) == pytest.approx(2 / 3)
    assert f_measure(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0


def test_f_measure_mask_and_tol():
    S = np.array([[1.0, 5e-4], [2.0, 0.0]])
    Sstar = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert f_measure(S, Sstar) == pytest.approx(0.5)
    mask = ObservationMask(np.array([[True, True], [False, True]]))
    assert f_measure(S, Sstar, mask) == pytest.approx(2 / 3)
    assert f_measure(S, Sstar, tol=1e-4) == pytest.approx(0.8)


def test_psnr_examples():
    I = np.full((4, 4), 100.0)
    assert psnr(I, I) == math.inf
    assert psnr(I + 255.0, I) == pytest.approx(0.0)
    assert psnr(I + 25.5, I) == pytest.approx(20.0)


def test_support_tol():
    assert bench.support_tol(0.0) == 1e-3
    assert bench.support_tol(0.5) == 1.5


def test_resolve_jobs(monkeypatch):
    monkeypatch.setenv("BIFACTOR_JOBS", "3")
    assert resolve_jobs(None) == 3
    assert resolve_jobs(2) == 2
    monkeypatch.setenv("BIFACTOR_JOBS", "x")
    with pytest.raises(ValueError):
        resolve_jobs(None)
    monkeypatch.delenv("BIFACTOR_JOBS")
    assert resolve_jobs(None) >= 1
    with pytest.raises(ValueError):
        resolve_jobs(0)


def test_phase_grid_shape_and_parallel_equivalence():
    kw = dict(ranks=[1, 2], corruptions=[0.0, 0.05, 0.1], size=20, trials=2, seed=4,
              max_iters=60)
    a = phase_transition("sl-two-thirds", jobs=1, **kw)
    b = phase_transition("sl-two-thirds", jobs=2, **kw)
    assert a.shape == (2, 3)
    assert np.all((a >= 0) & (a <= 1))
    np.testing.assert_array_equal(a, b)
    text = phase_csv("sl-two-thirds", [1, 2], [0.0, 0.05, 0.1], 20, 2, 4, a)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 6 and rows[0]["rng"] == bench.RNG_NAME


def test_phase_rejects_unknown_method():
    with pytest.raises(ValueError):
        phase_transition("nope", [1], [0.0], 10, 1, 0)
    with pytest.raises(ValueError):
        phase_transition("nuclear", [], [0.0], 10, 1, 0)


def test_table3_small_deterministic():
    a = table3_experiment([50], trials=2, seed=3, max_iters=40, jobs=1)
    b = table3_experiment([50], trials=2, seed=3, max_iters=40, jobs=2)
    assert [r["method"] for r in a] == ["sl-half", "sl-two-thirds", "nuclear"]
    assert table3_csv(a, timing=False) == table3_csv(b, timing=False)
    header = table3_csv(a).splitlines()[0].split(",")
    assert "time_mean" in header and "rng" in header
    assert "time_mean" not in table3_csv(a, timing=False).splitlines()[0]
