"""
Configuration settings for the completion engine
Environment defaults plus the validated per-run configuration
"""
import hashlib
import json
import logging
import os
from typing import Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, model_validator

# Load .env file if it exists (local development)
load_dotenv()


class Config:
    # Output
    OUTPUT_DIR = os.getenv('MC_OUTPUT_DIR', 'runs')
    DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'DEBUG' if DEBUG else 'INFO').upper()

    # Linear algebra
    SMALL_SVD_METHOD = os.getenv('MC_SMALL_SVD', 'lapack')
    POWER_ITERS = int(os.getenv('MC_POWER_ITERS', '8'))
    # 0 means oversample by k
    OVERSAMPLE = int(os.getenv('MC_OVERSAMPLE', '0'))
    SUBSPACE_TOL = 1e-6
    POWER_ITER_RETRIES = 3

    # Online phase
    GRAM_REFRESH_INTERVAL = int(os.getenv('MC_GRAM_REFRESH', '1024'))
    SIGMA_FLOOR = 1e-12
    GRAM_DRIFT_TOL = 1e-6
    DIVERGENCE_FACTOR = 10.0

    # Calibrated constants for the step size and the warm-start sample count
    STEP_CONSTANT = float(os.getenv('MC_STEP_CONSTANT', '8.0'))
    INIT_CONSTANT = float(os.getenv('MC_INIT_CONSTANT', '0.25'))

    # Sweeps
    SWEEP_WORKERS = int(os.getenv('MC_SWEEP_WORKERS', str(os.cpu_count() or 1)))


def configure_logging(level: Optional[str] = None, prefix: Optional[str] = None):
    """Configure root logging for the CLI; sweep workers pass their run id as prefix"""
    tag = f"[{prefix}] " if prefix else ''
    logging.basicConfig(
        level=getattr(logging, (level or Config.LOG_LEVEL), logging.INFO),
        format=f'%(asctime)s %(levelname)s {tag}%(name)s: %(message)s',
        force=True
    )


Algorithm = Literal['psd', 'asym-theoretical', 'asym-practical']

# Fields that only say where results go; they never change the numbers
OUTPUT_FIELDS = {'output_dir', 'dump_init_set'}


class RunConfig(BaseModel):
    """One experiment: problem instance, warm start and online phase"""

    algorithm: Algorithm = 'psd'
    d1: int = Field(100, ge=1)
    d2: Optional[int] = Field(None, ge=1)
    k: int = Field(3, ge=1)
    # c = STEP_CONSTANT is calibrated at kappa = 2
    kappa: float = Field(2.0, ge=1.0)
    eta: Optional[float] = Field(None, ge=0.0)
    c: Optional[float] = Field(None, gt=0.0)
    T: int = Field(10000, ge=0)
    m_init: Optional[int] = Field(None, ge=1)
    init_constant: float = Field(default_factory=lambda: Config.INIT_CONSTANT, gt=0.0)
    trace_interval: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)
    gram_refresh_interval: int = Field(default_factory=lambda: Config.GRAM_REFRESH_INTERVAL, ge=1)
    power_iters: int = Field(default_factory=lambda: Config.POWER_ITERS, ge=1)
    output_dir: str = Field(default_factory=lambda: Config.OUTPUT_DIR)
    dump_init_set: bool = False

    @model_validator(mode='after')
    def _check_consistency(self):
        if self.d2 is None:
            self.d2 = self.d1
        if self.algorithm == 'psd' and self.d2 != self.d1:
            raise ValueError('psd runs need d1 == d2')
        if self.k > min(self.d1, self.d2):
            raise ValueError(f'rank k={self.k} exceeds min(d1, d2)={min(self.d1, self.d2)}')
        if self.eta is not None and self.c is not None:
            raise ValueError('set exactly one of eta or c')
        if self.eta is None and self.c is None:
            self.c = Config.STEP_CONSTANT
        return self

    @property
    def symmetric(self) -> bool:
        return self.algorithm == 'psd'

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON of every field that affects the numbers"""
        payload = self.model_dump(mode='json', exclude=OUTPUT_FIELDS)
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def run_id(self) -> str:
        return f"{self.algorithm}-{self.config_hash()[:12]}"


def load_run_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """
    Build a RunConfig from a JSON/YAML file and flag overrides

    Args:
        path: Optional config file (.json, .yaml or .yml)
        overrides: Field values that win over the file (None values are ignored)

    Returns:
        Validated RunConfig
    """
    data = {}
    if path:
        with open(path, 'r', encoding='utf-8') as handle:
            if path.endswith(('.yaml', '.yml')):
                data = yaml.safe_load(handle) or {}
            else:
                data = json.load(handle)

    overrides = overrides or {}
    # A flag for one step-size source replaces the file's other one
    if overrides.get('eta') is not None:
        data.pop('c', None)
    if overrides.get('c') is not None:
        data.pop('eta', None)

    for key, value in overrides.items():
        if value is not None:
            data[key] = value

    return RunConfig(**data)
