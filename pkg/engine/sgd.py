"""
Online SGD
Single-entry steppers for the PSD and asymmetric factorizations and the run loop
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from config import Config, RunConfig
from engine.errors import DegeneracyError, DivergenceError, GramConsistencyError, RunError
from engine.linalg import DenseMatrix, svd_product, svd_small
from engine.metrics import StepTrace, checkpoint
from engine.model import GroundTruth, ProblemStats, log_dim, stats
from engine.sampling import EntrySampler
from engine.state import AsymState, PsdState, Variant, gram_drift

logger = logging.getLogger(__name__)

State = Union[PsdState, AsymState]
Observation = Tuple[int, int, float]


def _residual(a: np.ndarray, b: np.ndarray, value: float, step: int) -> float:
    r = float(a @ b) - value
    if not math.isfinite(r):
        raise DivergenceError('non-finite residual; the step size is too large', step=step)
    return r


def sg_psd(u: DenseMatrix, i: int, j: int, value: float) -> List[Tuple[int, np.ndarray]]:
    """
    Nonzero rows of SG(U) = 2d²(UUᵀ − M)_ij (e_ie_jᵀ + e_je_iᵀ)U

    Returns:
        [(row index, row)], one entry when i == j (the operator doubles)
    """
    d = u.shape[0]
    scale = 2.0 * d * d * (float(u[i] @ u[j]) - value)
    if i == j:
        return [(i, 2.0 * scale * u[i])]
    return [(i, scale * u[j]), (j, scale * u[i])]


def sg_asym(u: DenseMatrix, v: DenseMatrix, i: int, j: int,
            value: float) -> Tuple[Tuple[int, np.ndarray], Tuple[int, np.ndarray]]:
    """Nonzero rows of the pair 2d1d2(UVᵀ − M)_ij (e_ie_jᵀV, e_je_iᵀU)"""
    scale = 2.0 * u.shape[0] * v.shape[0] * (float(u[i] @ v[j]) - value)
    return (i, scale * v[j]), (j, scale * u[i])


def step_psd(state: PsdState, obs: Observation, eta: float) -> PsdState:
    """One Algorithm-1 step; rows i and j are read before either is written"""
    i, j, value = obs
    d = state.u.shape[0]
    ui = state.u[i].copy()
    uj = state.u[j].copy()
    c = 2.0 * eta * d * d * _residual(ui, uj, value, state.step + 1)

    if i == j:
        new_i = ui - 2.0 * c * ui
        state.gram += np.outer(new_i, new_i) - np.outer(ui, ui)
        state.u[i] = new_i
    else:
        new_i = ui - c * uj
        new_j = uj - c * ui
        state.gram += (np.outer(new_i, new_i) - np.outer(ui, ui)
                       + np.outer(new_j, new_j) - np.outer(uj, uj))
        state.u[i] = new_i
        state.u[j] = new_j
    state.step += 1
    return state


def _apply_row_pair(state: AsymState, i: int, j: int, ui: np.ndarray, vj: np.ndarray,
                    new_ui: np.ndarray, new_vj: np.ndarray):
    state.gram_u += np.outer(new_ui, new_ui) - np.outer(ui, ui)
    state.gram_v += np.outer(new_vj, new_vj) - np.outer(vj, vj)
    state.u[i] = new_ui
    state.v[j] = new_vj


def step_asym_theoretical(state: AsymState, obs: Observation, eta: float) -> AsymState:
    """
    One Algorithm-2 step: renormalize to the balanced split of SVD(UVᵀ), then
    the plain row update. O(dk²) per step.
    """
    i, j, value = obs
    d1, d2 = state.u.shape[0], state.v.shape[0]
    triple = svd_product(state.u, state.v)
    if triple.singular_values[-1] < Config.SIGMA_FLOOR:
        raise DegeneracyError(
            f"sigma_k of UVᵀ is {triple.singular_values[-1]:.3e}, below the floor",
            step=state.step + 1)

    root = np.sqrt(triple.singular_values)
    state.u = triple.left * root
    state.v = triple.right * root
    state.gram_u = np.diag(triple.singular_values)
    state.gram_v = state.gram_u.copy()

    ui = state.u[i].copy()
    vj = state.v[j].copy()
    c = 2.0 * eta * d1 * d2 * _residual(ui, vj, value, state.step + 1)
    _apply_row_pair(state, i, j, ui, vj, ui - c * vj, vj - c * ui)
    state.step += 1
    return state


def practical_transforms(gram_u: DenseMatrix, gram_v: DenseMatrix,
                         step: int = 0) -> Tuple[DenseMatrix, DenseMatrix]:
    """
    k×k maps (T_V, T_U) that carry the renormalized update back to U, V

    With gram_u = R_U D_U R_Uᵀ, gram_v = R_V D_V R_Vᵀ and
    D_U^1/2 R_Uᵀ R_V D_V^1/2 = Q_U D Q_Vᵀ:
        T_V = R_V D_V^-1/2 Q_V Q_Uᵀ D_U^1/2 R_Uᵀ
        T_U = R_U D_U^-1/2 Q_U Q_Vᵀ D_V^1/2 R_Vᵀ
    """
    left = svd_small(gram_u)
    right = svd_small(gram_v)
    smallest = min(left.singular_values[-1], right.singular_values[-1])
    if smallest < Config.SIGMA_FLOOR:
        raise DegeneracyError(f"Gram sigma_min is {smallest:.3e}, below the floor", step=step)

    r_u, r_v = left.left, right.left
    root_u = np.sqrt(left.singular_values)
    root_v = np.sqrt(right.singular_values)
    core = svd_small((root_u[:, None] * (r_u.T @ r_v)) * root_v[None, :])
    q_u, q_v = core.left, core.right

    t_v = (r_v / root_v) @ q_v @ q_u.T @ (root_u[:, None] * r_u.T)
    t_u = (r_u / root_u) @ q_u @ q_v.T @ (root_v[:, None] * r_v.T)
    return t_v, t_u


def step_asym_practical(state: AsymState, obs: Observation, eta: float) -> AsymState:
    """One Algorithm-3 step; only row i of U and row j of V change, O(k³)"""
    i, j, value = obs
    d1, d2 = state.u.shape[0], state.v.shape[0]
    t_v, t_u = practical_transforms(state.gram_u, state.gram_v, step=state.step + 1)

    ui = state.u[i].copy()
    vj = state.v[j].copy()
    c = 2.0 * eta * d1 * d2 * _residual(ui, vj, value, state.step + 1)
    if c != 0.0:
        _apply_row_pair(state, i, j, ui, vj, ui - c * (vj @ t_v), vj - c * (ui @ t_u))
    state.step += 1
    return state


STEPPERS: Dict[str, Callable[[State, Observation, float], State]] = {
    'psd': step_psd,
    'asym-theoretical': step_asym_theoretical,
    'asym-practical': step_asym_practical,
}


def make_state(algorithm: str, u: DenseMatrix, v: Optional[DenseMatrix] = None) -> State:
    """Fresh state with exact Gram matrices for the given algorithm"""
    if algorithm == 'psd':
        return PsdState.from_factor(u)
    if v is None:
        raise ValueError(f"{algorithm} needs both U and V")
    variant = Variant.THEORETICAL if algorithm == 'asym-theoretical' else Variant.PRACTICAL
    return AsymState.from_factors(u, v, variant=variant)


def refresh_grams(state: State):
    """Replace the cached Grams with exact ones, failing on excessive drift"""
    drift = gram_drift(state)
    if drift > Config.GRAM_DRIFT_TOL:
        raise GramConsistencyError(f"Gram drift {drift:.3e} exceeds {Config.GRAM_DRIFT_TOL:g}",
                                   step=state.step)
    if isinstance(state, PsdState):
        state.gram = state.u.T @ state.u
    else:
        state.gram_u = state.u.T @ state.u
        state.gram_v = state.v.T @ state.v


def recommended_eta(problem: ProblemStats, d: int, k: int, c: float) -> float:
    """η = c / (μ·d·k·κ³·‖M‖·log d)"""
    return c / (problem.mu * d * k * problem.kappa ** 3 * problem.spectral_norm * log_dim(d))


def resolve_eta(config: RunConfig, problem: ProblemStats) -> float:
    if config.eta is not None:
        return config.eta
    return recommended_eta(problem, max(config.d1, config.d2), config.k, config.c)


@dataclass
class RunTrace:
    algorithm: str
    eta: float
    checkpoints: List[StepTrace] = field(default_factory=list)
    final_state: Optional[State] = None
    steps_done: int = 0
    step_ns: int = 0
    diverged: bool = False

    @property
    def ns_per_step(self) -> float:
        return self.step_ns / self.steps_done if self.steps_done else 0.0

    @property
    def final_f(self) -> float:
        return self.checkpoints[-1].f if self.checkpoints else float('nan')


def run(gt: GroundTruth, state: State, sampler: EntrySampler, config: RunConfig,
        eta: Optional[float] = None,
        sink: Optional[Callable[[StepTrace], None]] = None) -> RunTrace:
    """
    Execute config.T online steps

    Args:
        gt: Ground truth answering the sampler's entry queries
        state: Warm-start state, advanced in place
        sampler: Online-phase observation stream
        config: Run configuration (algorithm, T, trace cadence, Gram refresh)
        eta: Step size; resolved from config when omitted
        sink: Called with every checkpoint, in step order

    Returns:
        RunTrace with a checkpoint at step 0, every trace_interval steps and at T

    Raises:
        DivergenceError, DegeneracyError, GramConsistencyError, each with the
        partial trace attached as `.trace`
    """
    if eta is None:
        eta = resolve_eta(config, stats(gt))
    step_fn = STEPPERS[config.algorithm]
    trace = RunTrace(algorithm=config.algorithm, eta=eta)

    def record(step: int):
        point = checkpoint(gt, state, step, trace.step_ns)
        trace.checkpoints.append(point)
        if sink is not None:
            sink(point)
        return point

    initial = record(0)
    limit = Config.DIVERGENCE_FACTOR * initial.f
    floor = 1e-12 * float(np.sum(gt.s ** 2))
    logger.info("run %s: eta=%.3e T=%d f0=%.3e", config.algorithm, eta, config.T, initial.f)

    try:
        for t in range(1, config.T + 1):
            obs = sampler.next_entry(gt)
            start = time.perf_counter_ns()
            step_fn(state, obs, eta)
            trace.step_ns += time.perf_counter_ns() - start
            trace.steps_done = t

            if t % config.gram_refresh_interval == 0:
                refresh_grams(state)
            if t % config.trace_interval == 0 or t == config.T:
                point = record(t)
                if not math.isfinite(point.f) or (point.f > limit and point.f > floor):
                    raise DivergenceError(
                        f"f={point.f:.3e} exceeds {Config.DIVERGENCE_FACTOR:g}x its initial value",
                        step=t)
    except RunError as err:
        trace.diverged = isinstance(err, DivergenceError)
        trace.final_state = state
        err.trace = trace
        logger.warning("run %s stopped: %s", config.algorithm, err)
        raise

    trace.final_state = state
    logger.info("run %s: done, f=%.3e, %.0f ns/step", config.algorithm, trace.final_f, trace.ns_per_step)
    return trace
