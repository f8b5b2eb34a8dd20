"""Objective and diagnostics tests against dense oracles"""
import math

import numpy as np
import pytest

from engine.metrics import (CSV_COLUMNS, StepTrace, alignment_sigma_min, checkpoint, fit_decay,
                            frob_error_sq, full_gradient_asym, full_gradient_psd, max_row_leverage,
                            product_distance, row_leverage_u, row_leverage_v, spectral_norm)
from engine.linalg import qr_thin
from engine.model import gen_ground_truth
from engine.state import AsymState, PsdState


def test_objective_at_zero_is_frobenius_norm():
    gt = gen_ground_truth(20, 20, 3, kappa_target=4.0, seed=0)
    assert gt.s.tolist() == pytest.approx([1.0, 0.5, 0.25])
    assert frob_error_sq(gt, np.zeros((20, 3)), np.zeros((20, 3))) == pytest.approx(1.3125, rel=1e-12)


def test_objective_vanishes_at_exact_split():
    gt = gen_ground_truth(25, 35, 3, kappa_target=2.0, seed=1)
    u, v = gt.sqrt_factors()
    assert frob_error_sq(gt, u, v) < 1e-24
    psd = gen_ground_truth(25, 25, 3, kappa_target=2.0, seed=1, symmetric_psd=True)
    assert frob_error_sq(psd, psd.sqrt_factors()[0]) < 1e-24


def test_objective_matches_dense_oracle():
    gt = gen_ground_truth(40, 30, 3, kappa_target=3.0, seed=2)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((40, 3))
    v = rng.standard_normal((30, 3))
    dense = float(np.sum((u @ v.T - gt.dense()) ** 2))
    assert frob_error_sq(gt, u, v) == pytest.approx(dense, rel=1e-10)


def test_product_distance_matches_dense():
    rng = np.random.default_rng(1)
    u1, u2 = rng.standard_normal((12, 2)), rng.standard_normal((12, 2))
    v1, v2 = rng.standard_normal((9, 2)), rng.standard_normal((9, 2))
    dense = float(np.linalg.norm(u1 @ v1.T - u2 @ v2.T))
    assert product_distance(u1, v1, u2, v2) == pytest.approx(dense, rel=1e-12)


def test_row_leverage_conventions():
    rng = np.random.default_rng(2)
    u = rng.standard_normal((10, 2))
    u[3] = 0.0
    v = rng.standard_normal((8, 2))
    psd = PsdState.from_factor(u)
    assert row_leverage_u(psd, 3) == 0.0
    assert row_leverage_u(psd, 0) == pytest.approx(float(u[0] @ u[0]))

    asym = AsymState.from_factors(u, v)
    product = u @ v.T
    assert row_leverage_u(asym, 1) == pytest.approx(float(product[1] @ product[1]), rel=1e-12)
    assert row_leverage_v(asym, 4) == pytest.approx(float(product[:, 4] @ product[:, 4]), rel=1e-12)
    max_g, max_h = max_row_leverage(asym)
    assert max_g == pytest.approx(float(np.max(np.sum(product ** 2, axis=1))), rel=1e-12)
    assert max_h == pytest.approx(float(np.max(np.sum(product ** 2, axis=0))), rel=1e-12)
    assert max_row_leverage(psd)[1] is None


def test_alignment_extremes():
    gt = gen_ground_truth(30, 30, 3, seed=3)
    assert alignment_sigma_min(gt.x, gt.x) == pytest.approx(1.0)
    complement, _ = qr_thin(np.hstack([gt.x, np.random.default_rng(0).standard_normal((30, 3))]))
    assert alignment_sigma_min(gt.x, complement[:, 3:]) < 1e-12


def test_spectral_norm_from_gram():
    u = np.random.default_rng(4).standard_normal((15, 3))
    assert spectral_norm(u.T @ u) == pytest.approx(np.linalg.norm(u, 2), rel=1e-12)


def test_gradients_match_dense_forms():
    rng = np.random.default_rng(5)
    psd = gen_ground_truth(20, 20, 2, kappa_target=2.0, seed=5, symmetric_psd=True)
    u = rng.standard_normal((20, 2))
    m = psd.dense()
    assert np.allclose(full_gradient_psd(psd, u), 4.0 * (u @ u.T - m) @ u, atol=1e-12)

    gt = gen_ground_truth(20, 15, 2, kappa_target=2.0, seed=5)
    u = rng.standard_normal((20, 2))
    v = rng.standard_normal((15, 2))
    residual = u @ v.T - gt.dense()
    grad_u, grad_v = full_gradient_asym(gt, u, v)
    assert np.allclose(grad_u, 2.0 * residual @ v, atol=1e-12)
    assert np.allclose(grad_v, 2.0 * residual.T @ u, atol=1e-12)


def test_psd_gradient_inner_product_identity():
    d = 25
    gt = gen_ground_truth(d, d, 3, kappa_target=2.0, seed=9, symmetric_psd=True)
    u = np.random.default_rng(9).standard_normal((d, 3))
    inner = float(np.sum(full_gradient_psd(gt, u) * u))

    residual = u @ u.T - gt.dense()
    dense = 4.0 * np.trace(residual @ u @ u.T)
    # factored: tr((UUᵀ)²) = ‖UᵀU‖²_F and tr(MUUᵀ) = Σ s_i ‖(XᵀU)_i‖²
    xu = gt.x.T @ u
    factored = 4.0 * (np.sum((u.T @ u) ** 2) - np.sum(gt.s[:, None] * xu ** 2))
    assert inner == pytest.approx(dense, rel=1e-10)
    assert inner == pytest.approx(factored, rel=1e-10)


def test_gradient_vanishes_at_optimum_and_origin():
    gt = gen_ground_truth(20, 20, 3, kappa_target=2.0, seed=6, symmetric_psd=True)
    ustar = gt.sqrt_factors()[0]
    assert np.max(np.abs(full_gradient_psd(gt, ustar))) < 1e-14
    assert np.max(np.abs(full_gradient_psd(gt, np.zeros((20, 3))))) == 0.0


def test_checkpoint_fields():
    gt = gen_ground_truth(20, 20, 2, kappa_target=2.0, seed=7, symmetric_psd=True)
    state = PsdState.from_factor(gt.sqrt_factors()[0])
    point = checkpoint(gt, state, 5, 1234)
    assert point.step == 5 and point.elapsed_ns == 1234
    assert point.max_h is None
    assert point.sigma_min_align_u == point.sigma_min_align_v
    assert point.spectral_norm_u == pytest.approx(1.0)
    assert len(point.to_row()) == len(CSV_COLUMNS)


def test_checkpoint_of_overflowed_iterate():
    gt = gen_ground_truth(10, 12, 2, seed=8)
    u, v = gt.sqrt_factors()
    u = u.copy()
    u[0, 0] = np.inf
    point = checkpoint(gt, AsymState(u=u, v=v, gram_u=np.eye(2), gram_v=np.eye(2)), 3, 0)
    assert point.f == math.inf
    assert math.isnan(point.max_g)


def _points(values):
    return [StepTrace(step=100 * n, f=f, max_g=0.0, max_h=None, sigma_min_align_u=1.0,
                      sigma_min_align_v=1.0, spectral_norm_u=1.0, elapsed_ns=0)
            for n, f in enumerate(values)]


def test_fit_decay_recovers_geometric_rate():
    decay = fit_decay(_points([0.5 * 0.99 ** (100 * n) for n in range(10)]))
    assert decay["decay_factor"] == pytest.approx(0.99, rel=1e-9)
    assert decay["reduction"] == pytest.approx(0.99 ** -900, rel=1e-9)
    assert decay["points"] == 10


def test_fit_decay_stops_at_roundoff_floor():
    decay = fit_decay(_points([1.0, 1e-10, 1e-30, 1e-31]))
    assert decay["points"] == 2
    assert decay["decay_factor"] == pytest.approx(math.exp(math.log(1e-10) / 100), rel=1e-9)


def test_fit_decay_needs_two_points():
    decay = fit_decay(_points([1.0]))
    assert math.isnan(decay["slope"]) and decay["reduction"] == 1.0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
