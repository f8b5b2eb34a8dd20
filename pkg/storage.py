"""
Result storage
JSON and CSV files for ground truths, summaries, reports and warm-start samples
"""
import csv
import json
import math
import os
from typing import Any, Dict, Optional

import numpy as np

from config import Config
from engine.linalg import ObservationBatch
from engine.model import GroundTruth, ProblemStats, ground_truth_from_dict, ground_truth_to_dict


def convert_numpy(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-serializable types"""
    if isinstance(obj, np.ndarray):
        return convert_numpy(obj.tolist())
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    elif isinstance(obj, ProblemStats):
        return obj.model_dump()
    elif isinstance(obj, dict):
        return {k: convert_numpy(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_numpy(item) for item in obj]
    return obj


class ResultStore:
    """Owns one output directory; every file name starts with the run id"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = output_dir or Config.OUTPUT_DIR
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def save_json(self, name: str, payload: Dict[str, Any]) -> str:
        target = self.path(name)
        with open(target, 'w', encoding='utf-8') as handle:
            json.dump(convert_numpy(payload), handle, indent=2, sort_keys=True)
            handle.write('\n')
        return target

    def load_json(self, name: str) -> Dict[str, Any]:
        with open(self.path(name), 'r', encoding='utf-8') as handle:
            return json.load(handle)

    def save_ground_truth(self, run_id: str, gt: GroundTruth, config_hash: str) -> str:
        payload = ground_truth_to_dict(gt)
        payload["config_hash"] = config_hash
        return self.save_json(f"{run_id}.ground_truth.json", payload)

    @staticmethod
    def load_ground_truth(path: str) -> GroundTruth:
        with open(path, 'r', encoding='utf-8') as handle:
            return ground_truth_from_dict(json.load(handle))

    def save_stats(self, run_id: str, problem: ProblemStats, config_hash: str) -> str:
        payload = problem.model_dump()
        payload["config_hash"] = config_hash
        return self.save_json(f"{run_id}.stats.json", payload)

    def save_init_set(self, run_id: str, batch: ObservationBatch, config_hash: str) -> str:
        """Ω_init as i,j,value rows, values in repr form"""
        target = self.path(f"{run_id}.init_set.csv")
        with open(target, 'w', encoding='utf-8', newline='') as handle:
            handle.write(f"# config_hash={config_hash}\n")
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['i', 'j', 'value'])
            for i, j, value in batch:
                writer.writerow([i, j, repr(value)])
        return target
