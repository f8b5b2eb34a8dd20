"""Entry sampler tests"""
import numpy as np
import pytest
from scipy.stats import chisquare

from engine.model import entry, gen_ground_truth
from engine.sampling import BLOCK_SIZE, INIT_STREAM, ONLINE_STREAM, EntrySampler, derive_sampler


def test_same_seed_and_stream_replays_draws():
    a = EntrySampler(30, 20, seed=5, stream=ONLINE_STREAM)
    b = EntrySampler(30, 20, seed=5, stream=ONLINE_STREAM)
    rows_a, cols_a = a.draw_indices(BLOCK_SIZE + 17)
    rows_b, cols_b = b.draw_indices(BLOCK_SIZE + 17)
    assert np.array_equal(rows_a, rows_b) and np.array_equal(cols_a, cols_b)


def test_streams_are_independent():
    init = derive_sampler(30, 20, 5, INIT_STREAM)
    online = derive_sampler(30, 20, 5, ONLINE_STREAM)
    rows_i, cols_i = init.draw_indices(200)
    rows_o, cols_o = online.draw_indices(200)
    assert not (np.array_equal(rows_i, rows_o) and np.array_equal(cols_i, cols_o))


def test_draws_stay_in_range():
    rows, cols = EntrySampler(7, 3, seed=1).draw_indices(5000)
    assert rows.min() >= 0 and rows.max() < 7
    assert cols.min() >= 0 and cols.max() < 3


def test_next_entry_reports_true_values():
    gt = gen_ground_truth(12, 8, 2, kappa_target=2.0, seed=0)
    sampler = EntrySampler(12, 8, seed=3)
    for _ in range(100):
        i, j, value = sampler.next_entry(gt)
        assert value == entry(gt, i, j)


def test_next_entry_and_draw_indices_share_one_stream():
    gt = gen_ground_truth(12, 8, 2, seed=0)
    singles = EntrySampler(12, 8, seed=9)
    block = EntrySampler(12, 8, seed=9)
    rows, cols = block.draw_indices(50)
    for n in range(50):
        i, j, _ = singles.next_entry(gt)
        assert (i, j) == (rows[n], cols[n])


def test_init_set_matches_index_stream():
    gt = gen_ground_truth(10, 10, 2, seed=2, symmetric_psd=True)
    batch = EntrySampler(10, 10, seed=4, stream=INIT_STREAM).sample_init_set(gt, 300)
    rows, cols = EntrySampler(10, 10, seed=4, stream=INIT_STREAM).draw_indices(300)
    assert len(batch) == 300
    assert np.array_equal(batch.rows, rows) and np.array_equal(batch.cols, cols)
    i, j, value = next(iter(batch))
    assert value == entry(gt, i, j)


def test_init_set_rejects_bad_requests():
    gt = gen_ground_truth(10, 10, 2, seed=2)
    with pytest.raises(ValueError):
        EntrySampler(10, 10).sample_init_set(gt, 0)
    with pytest.raises(ValueError):
        EntrySampler(10, 9).sample_init_set(gt, 5)
    with pytest.raises(ValueError):
        EntrySampler(0, 4)


def test_cells_are_uniform():
    draws = 1_000_000
    rows, cols = EntrySampler(10, 10, seed=11).draw_indices(draws)
    counts = np.bincount(rows * 10 + cols, minlength=100)
    expected = draws / 100
    sigma = np.sqrt(draws * 0.01 * 0.99)
    assert np.all(np.abs(counts - expected) < 5 * sigma)
    assert chisquare(counts).pvalue > 1e-6


def test_every_cell_is_seen_with_enough_draws():
    d1 = d2 = 5
    rows, cols = EntrySampler(d1, d2, seed=6).draw_indices(20 * d1 * d2)
    assert len(set(zip(rows.tolist(), cols.tolist()))) == d1 * d2


def test_single_cell_grid():
    gt = gen_ground_truth(1, 1, 1, seed=3)
    sampler = EntrySampler(1, 1, seed=0)
    for _ in range(5):
        assert sampler.next_entry(gt) == (0, 0, entry(gt, 0, 0))
    assert abs(entry(gt, 0, 0)) == pytest.approx(1.0)


def test_next_entry_checks_dimensions_on_every_call():
    sampler = EntrySampler(10, 10, seed=0)
    sampler.next_entry(gen_ground_truth(10, 10, 2, seed=0))
    with pytest.raises(ValueError):
        sampler.next_entry(gen_ground_truth(50, 50, 2, seed=0))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
