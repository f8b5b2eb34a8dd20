"""Spectral warm start tests"""
import math

import numpy as np
import pytest

from engine.errors import InsufficientSamplesError
from engine.initialization import init_quality, initialize_asym, initialize_psd, required_init_samples
from engine.linalg import ObservationBatch
from engine.model import GroundTruth, ProblemStats, entries, gen_ground_truth, stats
from engine.sampling import INIT_STREAM, EntrySampler
from engine.state import AsymState, PsdState


def full_observation(gt: GroundTruth) -> ObservationBatch:
    rows = np.repeat(np.arange(gt.d1), gt.d2)
    cols = np.tile(np.arange(gt.d2), gt.d1)
    return ObservationBatch(rows, cols, entries(gt, rows, cols))


def test_psd_full_observation_recovers_target():
    gt = gen_ground_truth(30, 30, 3, kappa_target=2.0, seed=1, symmetric_psd=True)
    u0 = initialize_psd(full_observation(gt), 30, 3)
    assert np.allclose(u0 @ u0.T, gt.dense(), atol=1e-8)


def test_psd_single_coordinate_entry():
    x = np.eye(5)[:, :1]
    gt = GroundTruth(x=x, s=np.ones(1), y=x, symmetric_psd=True)
    u0 = initialize_psd([(0, 0, 1.0)], 5, 1)
    # scale d²/m = 25 on the only observed entry
    assert abs(u0[0, 0]) == pytest.approx(5.0)
    assert np.allclose(u0[1:], 0.0, atol=1e-12)
    assert init_quality(gt, PsdState.from_factor(u0))["frob_err"] == pytest.approx(24.0)


def test_psd_negative_curvature_is_clipped():
    init_set = [(0, 0, -1.0), (1, 1, 0.5), (2, 2, 0.25)]
    # the dominant direction has a negative Rayleigh quotient
    with pytest.raises(InsufficientSamplesError) as info:
        initialize_psd(init_set, 3, 1)
    assert info.value.usable == 0 and info.value.k == 1
    u0 = initialize_psd([(1, 1, 0.5), (2, 2, 0.25)], 3, 1)
    assert abs(u0[1, 0]) == pytest.approx(1.5) and abs(u0[0, 0]) < 1e-12


def test_rank_starved_sample_is_rejected():
    with pytest.raises(InsufficientSamplesError):
        initialize_psd([(0, 0, 0.3)], 5, 2)
    with pytest.raises(InsufficientSamplesError):
        initialize_asym([(0, 1, 0.3)], 4, 3, 2)
    with pytest.raises(ValueError):
        initialize_asym([], 4, 3, 1)


def test_asym_full_observation_is_exact_and_balanced():
    gt = gen_ground_truth(20, 25, 3, kappa_target=3.0, seed=2)
    u0, v0 = initialize_asym(full_observation(gt), 20, 25, 3)
    assert np.allclose(u0 @ v0.T, gt.dense(), atol=1e-8)
    assert np.linalg.norm(u0.T @ u0 - v0.T @ v0) < 1e-9
    assert np.linalg.norm(u0, 2) == pytest.approx(np.linalg.norm(v0, 2))


def test_asym_rank_one_coordinate_target():
    sigma = 0.7
    x = np.eye(4)[:, :1]
    y = np.eye(3)[:, 1:2]
    gt = GroundTruth(x=x, s=np.array([sigma]), y=y)
    u0, v0 = initialize_asym(full_observation(gt), 4, 3, 1)
    assert np.allclose(np.abs(u0[:, 0]), math.sqrt(sigma) * x[:, 0], atol=1e-12)
    assert np.allclose(np.abs(v0[:, 0]), math.sqrt(sigma) * y[:, 0], atol=1e-12)


def test_required_samples_formula():
    problem = ProblemStats(d1=100, d2=100, k=3, mu=2.0, mu_x=2.0, mu_y=2.0, kappa=2.0,
                           sigma_min=0.5, spectral_norm=1.0, frob_norm_sq=1.5)
    assert required_init_samples(problem, 100, 3, 0.25) == 8290


def test_init_quality_at_exact_factor():
    gt = gen_ground_truth(40, 40, 3, kappa_target=2.0, seed=3, symmetric_psd=True)
    report = init_quality(gt, PsdState.from_factor(gt.sqrt_factors()[0]))
    assert report["frob_err"] < 1e-12
    assert report["inside_region"]
    assert report["max_row_leverage_v"] is None

    asym = gen_ground_truth(30, 45, 3, kappa_target=2.0, seed=3)
    report = init_quality(asym, AsymState.from_factors(*asym.sqrt_factors()))
    assert report["frob_err"] < 1e-12
    assert report["rows_ok"] and report["inside_region"]


def test_init_quality_at_zero():
    gt = gen_ground_truth(40, 40, 3, kappa_target=4.0, seed=3, symmetric_psd=True)
    report = init_quality(gt, PsdState.from_factor(np.zeros((40, 3))))
    assert report["frob_err"] == pytest.approx(math.sqrt(1.3125), rel=1e-12)
    assert not report["frob_ok"] and not report["inside_region"]
    assert report["rows_ok"]


def test_psd_warm_start_at_formula_sample_count():
    gt = gen_ground_truth(100, 100, 3, kappa_target=2.0, seed=0, symmetric_psd=True)
    m = required_init_samples(stats(gt), 100, 3, 0.25)
    batch = EntrySampler(100, 100, seed=0, stream=INIT_STREAM).sample_init_set(gt, m)
    u0 = initialize_psd(batch, 100, 3)
    report = init_quality(gt, PsdState.from_factor(u0))
    dense_err = float(np.linalg.norm(gt.dense() - u0 @ u0.T))
    assert report["frob_err"] == pytest.approx(dense_err, rel=1e-9)


def test_asym_warm_start_on_rectangular_instance():
    d1, d2, k = 80, 120, 3
    gt = gen_ground_truth(d1, d2, k, kappa_target=2.0, seed=5)
    problem = stats(gt)
    m = required_init_samples(problem, max(d1, d2), k, 0.25)
    batch = EntrySampler(d1, d2, seed=5, stream=INIT_STREAM).sample_init_set(gt, m)
    u0, v0 = initialize_asym(batch, d1, d2, k, seed=5)
    report = init_quality(gt, AsymState.from_factors(u0, v0))

    product = u0 @ v0.T
    assert report["frob_err"] == pytest.approx(float(np.linalg.norm(gt.dense() - product)), rel=1e-9)
    assert report["max_row_leverage_u"] == pytest.approx(float(np.max(np.sum(product ** 2, axis=1))), rel=1e-9)
    assert report["max_row_leverage_v"] == pytest.approx(float(np.max(np.sum(product ** 2, axis=0))), rel=1e-9)
    assert report["row_threshold_u"] == pytest.approx(10 * problem.mu * k / d1)
    assert report["row_threshold_v"] == pytest.approx(10 * problem.mu * k / d2)
    assert report["rows_ok"]
    assert report["frob_err"] < math.sqrt(problem.frob_norm_sq)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
