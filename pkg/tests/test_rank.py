import numpy as np
import pytest

from bifactor.bench import ExperimentConfig, gen_synthetic
from bifactor.dense import ObservationMask
from bifactor.rank import estimate_rank
from conftest import lowrank


def test_clean_rank5(rng):
    est = estimate_rank(lowrank(rng, 50, 50, 5))
    assert est.rank == 5
    assert len(est.criterion_values) == len(est.singular_values) - 1 == 49
    assert len(est.gaps) == 49


def test_diag_gap():
    D = np.diag([10.0, 9.0, 8.0, 0.01, 0.005])
    assert estimate_rank(D).rank == 3


def test_scale_invariance(rng):
    D = lowrank(rng, 40, 30, 4) + 0.01 * rng.standard_normal((40, 30))
    base = estimate_rank(D).rank
    for c in (1e-3, 2.5, 1e4):
        assert estimate_rank(c * D).rank == base


def test_deterministic(rng):
    D = rng.standard_normal((30, 20))
    a, b = estimate_rank(D), estimate_rank(D)
    assert a.rank == b.rank
    assert np.array_equal(a.ratios, b.ratios)


def test_errors():
    with pytest.raises(ValueError, match="rank undefined"):
        estimate_rank(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        estimate_rank(np.ones((4, 4)), ObservationMask.empty(4, 4))
    with pytest.raises(ValueError):
        estimate_rank(np.ones((4, 4)), k=1)


def test_masked_input_uses_observed_entries(rng):
    D = lowrank(rng, 60, 60, 3)
    mask = ObservationMask(rng.random((60, 60)) < 0.9)
    noisy = D + 1e6 * ~mask.array
    assert estimate_rank(noisy, mask).rank == estimate_rank(D, mask).rank


def test_k_default_and_bounds():
    D = np.diag(np.arange(150, 0, -1.0))
    assert len(estimate_rank(D).singular_values) == 100
    assert len(estimate_rank(D, k=10).singular_values) == 10


def test_noisy_outlier_instance():
    cfg = ExperimentConfig(200, 200, 4, outlier_ratio=0.1, noise_factor=0.2, seed=3)
    gt = gen_synthetic(cfg)
    assert estimate_rank(gt.D, gt.mask).rank == 4
