"""
Experiment Orchestrator
Coordinates generation, runs, sweeps and verification and owns their output files

Every public method returns a dict with a "status" key and the process exit
code it maps to.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import logging
import statistics
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from config import Config, RunConfig, configure_logging
from engine.errors import CompletionError, DivergenceError, RunError
from engine.experiment import build_ground_truth, warm_start
from engine.initialization import required_init_samples
from engine.metrics import fit_decay
from engine.model import stats
from engine.sampling import INIT_STREAM, ONLINE_STREAM, derive_sampler
from engine.sgd import run
from services.trace_writer import TraceWriter
from services.verifier import verifier
from storage import ResultStore

logger = logging.getLogger(__name__)


def _trial_seed(base_seed: int, value_index: int, repeat: int) -> int:
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=(value_index, repeat))
    return int(sequence.generate_state(1)[0])


def _sweep_trial(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Process-pool entry point: one sweep cell, isolated from the others"""
    config = RunConfig(**payload["config"])
    if payload.get("isolated"):
        configure_logging(prefix=config.run_id())
    try:
        result = ExperimentOrchestrator().run_experiment(config, payload.get("ground_truth"))
    except Exception as e:
        logger.exception("trial failed")
        result = {"status": "failed", "exit_code": 2, "error": f"{type(e).__name__}: {e}",
                  "run_id": config.run_id(), "config_hash": config.config_hash()}
    result["value_index"] = payload["value_index"]
    result["value"] = payload["value"]
    result["repeat"] = payload["repeat"]
    return result


class ExperimentOrchestrator:
    """
    Drives the engine end to end:
    1. Generates or loads the ground truth
    2. Draws the warm-start set and initializes
    3. Runs the online phase, streaming the trace to CSV
    4. Writes summaries and reports
    """

    def __init__(self):
        self.name = "ExperimentOrchestrator"

    def generate(self, config: RunConfig) -> Dict[str, Any]:
        """
        Write the ground truth and its measured statistics

        Args:
            config: Run configuration (dims, rank, kappa, seed)

        Returns:
            Status dict with the written paths and the statistics
        """
        store = ResultStore(config.output_dir)
        run_id = config.run_id()
        config_hash = config.config_hash()
        gt = build_ground_truth(config)
        problem = stats(gt)

        result = {
            "status": "success",
            "exit_code": 0,
            "run_id": run_id,
            "config_hash": config_hash,
            "ground_truth_path": store.save_ground_truth(run_id, gt, config_hash),
            "stats_path": store.save_stats(run_id, problem, config_hash),
            "stats": problem.model_dump(),
        }
        if config.dump_init_set:
            m = config.m_init or required_init_samples(problem, gt.d, config.k, config.init_constant)
            batch = derive_sampler(gt.d1, gt.d2, config.seed, INIT_STREAM).sample_init_set(gt, m)
            result["init_set_path"] = store.save_init_set(run_id, batch, config_hash)
        return result

    def run_experiment(self, config: RunConfig, ground_truth_path: Optional[str] = None) -> Dict[str, Any]:
        """
        Warm start plus online run; trace CSV and summary JSON land in config.output_dir

        Args:
            config: Run configuration
            ground_truth_path: Optional ground-truth file from `generate`

        Returns:
            Summary dict (also written as <run_id>.summary.json)
        """
        store = ResultStore(config.output_dir)
        run_id = config.run_id()
        config_hash = config.config_hash()
        gt = ResultStore.load_ground_truth(ground_truth_path) if ground_truth_path else None

        summary: Dict[str, Any] = {
            "run_id": run_id,
            "config_hash": config_hash,
            "config": config.model_dump(mode='json'),
        }
        try:
            experiment = warm_start(config, gt)
        except CompletionError as e:
            summary.update(status="failed", exit_code=e.exit_code, error=str(e))
            store.save_json(f"{run_id}.summary.json", summary)
            return summary

        if config.dump_init_set:
            summary["init_set_path"] = store.save_init_set(run_id, experiment.init_set, config_hash)

        sampler = derive_sampler(experiment.gt.d1, experiment.gt.d2, config.seed, ONLINE_STREAM)
        writer = TraceWriter(config.output_dir, run_id, config_hash, config.symmetric)
        error: Optional[RunError] = None
        with writer:
            try:
                trace = run(experiment.gt, experiment.state, sampler, config,
                            eta=experiment.eta, sink=writer)
            except RunError as e:
                error = e
                trace = e.trace

        summary.update(
            algorithm=config.algorithm,
            eta=experiment.eta,
            trace_path=writer.path,
            g_convention=writer.g_convention,
            init_quality=experiment.init_report,
            steps=trace.steps_done,
            T=config.T,
            final_f=trace.final_f,
            diverged=trace.diverged,
            ns_per_step=trace.ns_per_step,
            decay=fit_decay(trace.checkpoints),
        )
        if error is None:
            summary.update(status="success", exit_code=0)
        else:
            summary.update(status="diverged" if isinstance(error, DivergenceError) else "degenerate",
                           exit_code=error.exit_code, error=str(error), failed_step=error.step)
        summary["summary_path"] = store.save_json(f"{run_id}.summary.json", summary)
        return summary

    def _trial_config(self, config: RunConfig, axis: str, value: Any, seed: int,
                      output_dir: str) -> Dict[str, Any]:
        data = config.model_dump()
        data[axis] = value
        if axis == 'd1' and config.symmetric:
            data['d2'] = value
        if axis == 'eta':
            data['c'] = None
        elif axis == 'c':
            data['eta'] = None
        if axis != 'seed':
            data['seed'] = seed
        data['output_dir'] = output_dir
        # Validate here so a bad value fails the sweep up front
        return RunConfig(**data).model_dump(mode='json')

    def sweep(self, config: RunConfig, axis: str, values: Sequence[Any], repeats: int = 1,
              workers: Optional[int] = None, ground_truth_path: Optional[str] = None) -> Dict[str, Any]:
        """
        Run config over axis=values, repeats times each, across processes

        repeats == 1 keeps the base seed, so a one-value sweep reproduces `run`;
        otherwise seeds come from SeedSequence(seed, spawn_key=(value_index, repeat)).
        A failing trial marks its cell failed and the sweep carries on.
        """
        if axis not in RunConfig.model_fields or axis in ('output_dir', 'dump_init_set'):
            raise ValueError(f"cannot sweep over {axis!r}")
        if repeats < 1:
            raise ValueError('repeats must be >= 1')

        sweep_hash = config.config_hash()
        sweep_dir = os.path.join(config.output_dir, f"sweep-{axis}-{sweep_hash[:12]}")
        payloads = []
        for value_index, value in enumerate(values):
            for repeat in range(repeats):
                seed = config.seed if repeats == 1 else _trial_seed(config.seed, value_index, repeat)
                payloads.append({
                    "config": self._trial_config(config, axis, value, seed, sweep_dir),
                    "ground_truth": ground_truth_path,
                    "value_index": value_index,
                    "value": value,
                    "repeat": repeat,
                    "isolated": (workers or Config.SWEEP_WORKERS) > 1,
                })

        workers = workers or Config.SWEEP_WORKERS
        rows: List[Dict[str, Any]] = []
        if workers <= 1:
            for payload in tqdm(payloads, desc=f"sweep {axis}"):
                rows.append(_sweep_trial(payload))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(_sweep_trial, payload): payload for payload in payloads}
                for future in tqdm(as_completed(futures), total=len(futures), desc=f"sweep {axis}"):
                    payload = futures[future]
                    try:
                        rows.append(future.result())
                    except Exception as e:
                        rows.append({"status": "failed", "exit_code": 2, "error": f"{type(e).__name__}: {e}",
                                     "value_index": payload["value_index"], "value": payload["value"],
                                     "repeat": payload["repeat"]})

        rows.sort(key=lambda r: (r["value_index"], r["repeat"]))
        for row in rows:
            row["sweep_config_hash"] = sweep_hash

        cells = []
        for value_index, value in enumerate(values):
            members = [r for r in rows if r["value_index"] == value_index]
            done = [r for r in members if r.get("status") == "success"]
            cells.append({
                "value": value,
                "trials": len(members),
                "failed": len(members) - len(done),
                "status": "success" if len(done) == len(members) else "failed",
                "median_final_f": statistics.median(r["final_f"] for r in done) if done else None,
                "median_ns_per_step": statistics.median(r["ns_per_step"] for r in done) if done else None,
                "median_init_frob_err": statistics.median(r["init_quality"]["frob_err"] for r in done) if done else None,
            })

        report = {
            "status": "success" if all(c["status"] == "success" for c in cells) else "partial",
            "exit_code": 0,
            "axis": axis,
            "values": list(values),
            "repeats": repeats,
            "config_hash": sweep_hash,
            "cells": cells,
            "rows": rows,
        }
        report["report_path"] = ResultStore(sweep_dir).save_json('sweep.json', report)
        return report

    def verify(self, selection: Optional[Sequence[str]] = None, seed: int = 0,
               output_dir: Optional[str] = None) -> Dict[str, Any]:
        """Run the verification suite and write verify-<seed>.json"""
        report = verifier.run_suite(selection, seed=seed)
        report["exit_code"] = 0 if report["status"] == "passed" else 1
        report["report_path"] = ResultStore(output_dir).save_json(f"verify-{seed}.json", report)
        return report


# Global orchestrator instance
orchestrator = ExperimentOrchestrator()
