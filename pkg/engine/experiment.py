"""
Experiment Pipeline
Ground truth → warm-start sample → spectral initialization → online run
"""
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple

from config import RunConfig
from engine.initialization import init_quality, initialize_asym, initialize_psd, required_init_samples
from engine.linalg import ObservationBatch
from engine.metrics import StepTrace
from engine.model import GroundTruth, ProblemStats, gen_ground_truth, stats
from engine.sampling import INIT_STREAM, ONLINE_STREAM, derive_sampler
from engine.sgd import RunTrace, State, make_state, resolve_eta, run

logger = logging.getLogger(__name__)


@dataclass
class Experiment:
    config: RunConfig
    gt: GroundTruth
    problem: ProblemStats
    init_set: ObservationBatch
    state: State
    eta: float
    init_report: Dict[str, Any]


def build_ground_truth(config: RunConfig) -> GroundTruth:
    return gen_ground_truth(config.d1, config.d2, config.k, kappa_target=config.kappa,
                            seed=config.seed, symmetric_psd=config.symmetric)


def warm_start(config: RunConfig, gt: Optional[GroundTruth] = None) -> Experiment:
    """
    Draw Ω_init from the init stream and build the initial state

    Args:
        config: Run configuration
        gt: Ground truth to use instead of generating one from the config

    Returns:
        Experiment holding the warm start, its quality report and the step size
    """
    gt = gt if gt is not None else build_ground_truth(config)
    if (gt.d1, gt.d2, gt.k) != (config.d1, config.d2, config.k):
        raise ValueError(f"ground truth is {gt.d1}x{gt.d2} rank {gt.k}, config says "
                         f"{config.d1}x{config.d2} rank {config.k}")
    problem = stats(gt)
    m = config.m_init or required_init_samples(problem, gt.d, config.k, config.init_constant)

    init_set = derive_sampler(gt.d1, gt.d2, config.seed, INIT_STREAM).sample_init_set(gt, m)
    if config.symmetric:
        u0 = initialize_psd(init_set, gt.d1, config.k, seed=config.seed, power_iters=config.power_iters)
        state = make_state('psd', u0)
    else:
        u0, v0 = initialize_asym(init_set, gt.d1, gt.d2, config.k, seed=config.seed,
                                 power_iters=config.power_iters)
        state = make_state(config.algorithm, u0, v0)

    report = init_quality(gt, state)
    report["m_init"] = m
    report["m_over_d1d2"] = m / (gt.d1 * gt.d2)
    eta = resolve_eta(config, problem)
    logger.info("warm start: m=%d frob_err=%.3e inside_region=%s eta=%.3e",
                m, report["frob_err"], report["inside_region"], eta)
    return Experiment(config=config, gt=gt, problem=problem, init_set=init_set,
                      state=state, eta=eta, init_report=report)


def execute(config: RunConfig, gt: Optional[GroundTruth] = None,
            sink: Optional[Callable[[StepTrace], None]] = None) -> Tuple[Experiment, RunTrace]:
    """Warm start, then config.T online steps from the online stream"""
    experiment = warm_start(config, gt)
    sampler = derive_sampler(experiment.gt.d1, experiment.gt.d2, config.seed, ONLINE_STREAM)
    trace = run(experiment.gt, experiment.state, sampler, config, eta=experiment.eta, sink=sink)
    return experiment, trace
