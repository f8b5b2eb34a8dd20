"""Trace CSV and result file tests"""
import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from engine.linalg import ObservationBatch
from engine.metrics import StepTrace
from engine.model import gen_ground_truth, stats
from services.trace_writer import TraceWriter, read_trace
from storage import ResultStore, convert_numpy


def _point(step, f=0.1, max_h=None):
    return StepTrace(step=step, f=f, max_g=0.3, max_h=max_h, sigma_min_align_u=0.9,
                     sigma_min_align_v=0.8, spectral_norm_u=1.1, elapsed_ns=step * 10)


def test_trace_round_trips_floats_exactly(tmp_path):
    f = 1.0 / 3.0
    with TraceWriter(str(tmp_path), 'asym-practical-abc', 'deadbeef', symmetric=False) as writer:
        writer(_point(0, f=f, max_h=0.25))
        writer(_point(10, f=f / 7, max_h=0.5))
    trace = read_trace(writer.path)
    assert trace["meta"] == {"config_hash": "deadbeef", "g_convention": "product_row_norm_sq"}
    assert trace["rows"][0]["f"] == f and trace["rows"][1]["f"] == f / 7
    assert trace["rows"][1]["elapsed_ns"] == 100
    assert writer.rows_written == 2


def test_trace_rejects_out_of_order_steps(tmp_path):
    with TraceWriter(str(tmp_path), 'psd-abc', 'hash', symmetric=True) as writer:
        writer(_point(5))
        with pytest.raises(ValueError):
            writer(_point(5))
    assert read_trace(writer.path)["rows"][0]["max_h"] is None


def test_closed_writer_refuses_rows(tmp_path):
    writer = TraceWriter(str(tmp_path), 'psd-abc', 'hash', symmetric=True)
    with pytest.raises(RuntimeError):
        writer.write(_point(0))


def test_trace_keeps_non_finite_values(tmp_path):
    with TraceWriter(str(tmp_path), 'psd-abc', 'hash', symmetric=True) as writer:
        writer(_point(0, f=math.inf))
    assert read_trace(writer.path)["rows"][0]["f"] == math.inf


def test_concurrent_writers_share_one_new_directory(tmp_path):
    target = str(tmp_path / 'sweep' / 'cell')

    def open_both(n):
        ResultStore(target)
        with TraceWriter(target, f'psd-{n}', 'hash', symmetric=True) as writer:
            writer(_point(0))
        return writer.path

    with ThreadPoolExecutor(max_workers=16) as pool:
        paths = list(pool.map(open_both, range(32)))
    assert len(set(paths)) == 32
    assert all(read_trace(path)["rows"][0]["step"] == 0 for path in paths)


def test_convert_numpy():
    payload = convert_numpy({"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True),
                             "d": float('nan'), "e": (np.int32(4), -math.inf)})
    assert payload == {"a": 1.5, "b": [0, 1, 2], "c": True, "d": "nan", "e": [4, "-inf"]}
    json.dumps(payload)


def test_result_store_files(tmp_path):
    store = ResultStore(str(tmp_path / 'nested'))
    gt = gen_ground_truth(8, 6, 2, kappa_target=2.0, seed=1)
    loaded = ResultStore.load_ground_truth(store.save_ground_truth('run', gt, 'h1'))
    assert np.array_equal(loaded.x, gt.x) and np.array_equal(loaded.s, gt.s)

    store.save_stats('run', stats(gt), 'h1')
    assert store.load_json('run.stats.json')["config_hash"] == 'h1'

    path = store.save_init_set('run', ObservationBatch.from_entries([(0, 1, 0.1), (2, 3, -0.5)]), 'h1')
    with open(path, encoding='utf-8') as handle:
        assert handle.read().splitlines() == ['# config_hash=h1', 'i,j,value', '0,1,0.1', '2,3,-0.5']


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
