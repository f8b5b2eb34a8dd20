"""Linear algebra kernel tests"""
import numpy as np
import pytest

from config import Config
from engine.errors import SubspaceNotConvergedError
from engine.linalg import (ObservationBatch, one_sided_jacobi, orthonormality_defect, qr_thin,
                           scaled_projection, svd_product, svd_small, topk_svd_sparse)
from engine.model import entries, gen_ground_truth
from engine.sampling import INIT_STREAM, EntrySampler


def _full_design(d1, d2):
    rows = np.repeat(np.arange(d1), d2)
    cols = np.tile(np.arange(d2), d1)
    return rows, cols


def test_qr_thin_orthonormal_with_nonnegative_diagonal():
    a = np.random.default_rng(0).standard_normal((20, 4))
    q, r = qr_thin(a)
    assert q.shape == (20, 4) and r.shape == (4, 4)
    assert orthonormality_defect(q) < 1e-12
    assert np.all(np.diag(r) >= 0)
    assert np.allclose(q @ r, a, atol=1e-12)
    assert np.allclose(np.tril(r, -1), 0.0)


def test_qr_thin_rejects_wide_input():
    with pytest.raises(ValueError):
        qr_thin(np.ones((2, 3)))


@pytest.mark.parametrize('shape', [(5, 4), (3, 6), (4, 4)])
def test_svd_small_lapack_and_jacobi_agree(shape):
    a = np.random.default_rng(1).standard_normal(shape)
    lapack = svd_small(a, method='lapack')
    jacobi = svd_small(a, method='jacobi')
    assert np.allclose(lapack.singular_values, jacobi.singular_values, atol=1e-12)
    for triple in (lapack, jacobi):
        assert np.allclose(triple.reconstruct(), a, atol=1e-12)
        assert orthonormality_defect(triple.left) < 1e-12
        assert orthonormality_defect(triple.right) < 1e-12
        assert np.all(np.diff(triple.singular_values) <= 0)


def test_jacobi_completes_basis_for_rank_deficient_input():
    a = np.outer(np.arange(1.0, 6.0), np.array([1.0, 2.0, 0.5]))
    triple = one_sided_jacobi(a)
    assert orthonormality_defect(triple.left) < 1e-12
    assert triple.singular_values[1] == 0.0 and triple.singular_values[2] == 0.0
    assert np.allclose(triple.reconstruct(), a, atol=1e-12)


def test_svd_small_follows_config(monkeypatch):
    monkeypatch.setattr(Config, 'SMALL_SVD_METHOD', 'jacobi')
    a = np.diag([3.0, 1.0, 2.0])
    assert np.allclose(svd_small(a).singular_values, [3.0, 2.0, 1.0])
    monkeypatch.setattr(Config, 'SMALL_SVD_METHOD', 'qr-magic')
    with pytest.raises(ValueError):
        svd_small(a)


def test_svd_product_matches_dense():
    rng = np.random.default_rng(2)
    u = rng.standard_normal((30, 3))
    v = rng.standard_normal((40, 3))
    triple = svd_product(u, v)
    dense = np.linalg.svd(u @ v.T, compute_uv=False)[:3]
    assert np.allclose(triple.singular_values, dense, rtol=1e-12)
    assert np.allclose(triple.reconstruct(), u @ v.T, atol=1e-12)


def test_scaled_projection_sums_duplicates():
    batch = ObservationBatch.from_entries([(0, 1, 2.0), (0, 1, 3.0), (2, 0, 1.0)])
    matrix = scaled_projection(batch, 2.0, 3, 2).toarray()
    assert matrix[0, 1] == 10.0
    assert matrix[2, 0] == 2.0
    assert np.count_nonzero(matrix) == 2


def test_scaled_projection_accepts_plain_entry_lists():
    matrix = scaled_projection([(1, 1, 4.0)], 0.5, 2, 2).toarray()
    assert matrix[1, 1] == 2.0


def test_scaled_projection_rejects_out_of_range():
    with pytest.raises(IndexError):
        scaled_projection([(3, 0, 1.0)], 1.0, 3, 3)


def test_full_design_projection_is_exact():
    gt = gen_ground_truth(12, 9, 2, kappa_target=2.0, seed=3)
    rows, cols = _full_design(12, 9)
    batch = ObservationBatch(rows, cols, entries(gt, rows, cols))
    assert np.allclose(scaled_projection(batch, 1.0, 12, 9).toarray(), gt.dense(), atol=1e-15)


def test_topk_recovers_fully_observed_low_rank_matrix():
    gt = gen_ground_truth(40, 30, 3, kappa_target=4.0, seed=4)
    rows, cols = _full_design(40, 30)
    batch = ObservationBatch(rows, cols, entries(gt, rows, cols))
    triple = topk_svd_sparse(batch, 1.0, 40, 30, 3, seed=0)
    assert np.allclose(triple.singular_values, gt.s, rtol=1e-10)
    assert np.allclose(triple.reconstruct(), gt.dense(), atol=1e-10)
    assert orthonormality_defect(triple.left) < 1e-10


def test_topk_reports_unsettled_subspace():
    rng = np.random.default_rng(5)
    rows, cols = _full_design(60, 60)
    batch = ObservationBatch(rows, cols, rng.standard_normal(3600))
    with pytest.raises(SubspaceNotConvergedError) as info:
        topk_svd_sparse(batch, 1.0, 60, 60, 5, power_iters=1)
    assert info.value.relative_change > Config.SUBSPACE_TOL
    assert info.value.power_iters == 1


def test_topk_of_empty_sample_is_zero():
    triple = topk_svd_sparse([], 1.0, 8, 6, 2, seed=0)
    assert np.array_equal(triple.singular_values, np.zeros(2))
    assert triple.left.shape == (8, 2) and triple.right.shape == (6, 2)
    assert np.allclose(triple.reconstruct(), 0.0)


def test_topk_matches_dense_svd_of_sampled_matrix():
    d, m = 100, 3000
    gt = gen_ground_truth(d, d, 3, kappa_target=2.0, seed=7)
    batch = EntrySampler(d, d, seed=7, stream=INIT_STREAM).sample_init_set(gt, m)
    scale = d * d / m
    triple = topk_svd_sparse(batch, scale, d, d, 3, power_iters=30, seed=1)
    dense = np.linalg.svd(scaled_projection(batch, scale, d, d).toarray(), compute_uv=False)
    assert np.allclose(triple.singular_values, dense[:3], rtol=1e-6)
    assert orthonormality_defect(triple.left) < 1e-10
    assert orthonormality_defect(triple.right) < 1e-10


def test_topk_single_pass_sketch_skips_convergence_check():
    rng = np.random.default_rng(5)
    rows, cols = _full_design(60, 60)
    batch = ObservationBatch(rows, cols, rng.standard_normal(3600))
    triple = topk_svd_sparse(batch, 1.0, 60, 60, 5, power_iters=0)
    assert len(triple.singular_values) == 5
    with pytest.raises(ValueError):
        topk_svd_sparse(batch, 1.0, 60, 60, 5, power_iters=-1)


@pytest.mark.parametrize('method', ['lapack', 'jacobi'])
def test_svd_small_matches_gram_eigenvalues(method):
    a = np.random.default_rng(8).standard_normal((4, 4))
    triple = svd_small(a, method=method)
    oracle = np.sqrt(np.clip(np.linalg.eigvalsh(a.T @ a), 0.0, None))[::-1]
    assert np.allclose(triple.singular_values, oracle, atol=1e-8)
    assert np.linalg.norm(triple.reconstruct() - a) < 1e-10 * np.linalg.norm(a)


@pytest.mark.parametrize('method', ['lapack', 'jacobi'])
def test_svd_small_of_rotation(method):
    theta = 0.7
    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    triple = svd_small(rotation, method=method)
    assert np.allclose(triple.singular_values, [1.0, 1.0], atol=1e-14)
    assert np.allclose(triple.reconstruct(), rotation, atol=1e-14)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
