"""
Trace Writer
Streams run checkpoints to a CSV file as they are produced
"""
import csv
import os
from typing import List, Optional

from engine.metrics import CSV_COLUMNS, G_CONVENTION_ASYM, G_CONVENTION_PSD, StepTrace


def _cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


class TraceWriter:
    """
    CSV sink for StepTrace records

    The file opens with two comment lines (config hash and g_i convention),
    then a header and one row per checkpoint in step order. Floats are written
    with repr so a reload is exact.
    """

    def __init__(self, output_dir: str, run_id: str, config_hash: str, symmetric: bool):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)
        self.path = os.path.join(output_dir, f"{run_id}.trace.csv")
        self.config_hash = config_hash
        self.g_convention = G_CONVENTION_PSD if symmetric else G_CONVENTION_ASYM
        self.rows_written = 0
        self._last_step: Optional[int] = None
        self._handle = None
        self._writer = None

    def open(self):
        self._handle = open(self.path, 'w', encoding='utf-8', newline='')
        self._handle.write(f"# config_hash={self.config_hash}\n")
        self._handle.write(f"# g_convention={self.g_convention}\n")
        self._writer = csv.writer(self._handle, lineterminator='\n')
        self._writer.writerow(CSV_COLUMNS)
        return self

    def write(self, point: StepTrace):
        if self._writer is None:
            raise RuntimeError('trace writer is not open')
        if self._last_step is not None and point.step <= self._last_step:
            raise ValueError(f"trace rows must be strictly increasing in step ({point.step} after {self._last_step})")
        self._writer.writerow([_cell(v) for v in point.to_row()])
        self._handle.flush()
        self._last_step = point.step
        self.rows_written += 1

    __call__ = write

    def close(self):
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            self._writer = None

    def __enter__(self):
        return self.open()

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False


def read_trace(path: str) -> dict:
    """Load a trace file back into {meta, rows} (floats parsed exactly)"""
    meta = {}
    rows: List[dict] = []
    with open(path, 'r', encoding='utf-8') as handle:
        lines = handle.read().splitlines()
    body = []
    for line in lines:
        if line.startswith('# '):
            key, _, value = line[2:].partition('=')
            meta[key] = value
        else:
            body.append(line)
    for record in csv.DictReader(body):
        row = {}
        for key, value in record.items():
            if value == '':
                row[key] = None
            elif key in ('step', 'elapsed_ns'):
                row[key] = int(value)
            else:
                row[key] = float(value)
        rows.append(row)
    return {"meta": meta, "rows": rows}
