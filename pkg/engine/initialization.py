"""
Spectral Initialization
Warm start from the top-k SVD of the rescaled sampled matrix
"""
import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np

from config import Config
from engine.errors import InsufficientSamplesError, SubspaceNotConvergedError
from engine.linalg import (DenseMatrix, EntriesLike, ObservationBatch, SvdTriple,
                           as_batch, scaled_projection, topk_svd_sparse)
from engine.metrics import frob_error_sq, max_row_leverage
from engine.model import GroundTruth, ProblemStats, log_dim, stats
from engine.state import AsymState, PsdState

logger = logging.getLogger(__name__)


def _topk_with_retries(batch: ObservationBatch, scale: float, d1: int, d2: int, k: int,
                       seed: int, power_iters: Optional[int]) -> SvdTriple:
    """topk_svd_sparse, doubling the power iterations when the subspace has not settled"""
    iters = Config.POWER_ITERS if power_iters is None else power_iters
    for attempt in range(Config.POWER_ITER_RETRIES + 1):
        try:
            return topk_svd_sparse(batch, scale, d1, d2, k, power_iters=iters, seed=seed)
        except SubspaceNotConvergedError as err:
            if attempt == Config.POWER_ITER_RETRIES:
                raise
            logger.info("subspace not converged (change %.2e at %d iters), retrying with %d",
                        err.relative_change, iters, iters * 2)
            iters *= 2


def _check_usable(values: np.ndarray, k: int, m: int):
    usable = int(np.count_nonzero(values > Config.SIGMA_FLOOR))
    if usable < k:
        raise InsufficientSamplesError(
            f"only {usable} of {k} directions survive with {m} samples; increase m_init",
            usable=usable, k=k)


def initialize_psd(init_set: EntriesLike, d: int, k: int, seed: int = 0,
                   power_iters: Optional[int] = None) -> DenseMatrix:
    """
    PSD warm start U0 with U0U0ᵀ ≈ top-k part of (d²/m)·P_Ω(M)

    The sampled matrix is symmetrized to (A + Aᵀ)/2 before the SVD, and
    directions whose Rayleigh quotient is negative get weight zero.

    Args:
        init_set: Observed entries Ω_init (duplicates allowed)
        d: Dimension of M
        k: Target rank
        seed: Seed of the randomized SVD start block
        power_iters: Subspace iterations (defaults to Config.POWER_ITERS)

    Returns:
        d×k matrix U0 = W·D^1/2

    Raises:
        InsufficientSamplesError: fewer than k nonzero directions survive
    """
    batch = as_batch(init_set)
    m = len(batch)
    if m < 1:
        raise ValueError('the warm-start set needs at least one sample')

    # Each observation contributes half to (i, j) and half to (j, i)
    symmetric = ObservationBatch(
        rows=np.concatenate([batch.rows, batch.cols]),
        cols=np.concatenate([batch.cols, batch.rows]),
        values=np.concatenate([batch.values, batch.values]) * 0.5,
    )
    scale = d * d / m
    triple = _topk_with_retries(symmetric, scale, d, d, k, seed, power_iters)

    matrix = scaled_projection(symmetric, scale, d, d)
    rayleigh = np.einsum('ij,ij->j', triple.left, matrix @ triple.left)
    values = np.where(rayleigh < 0.0, 0.0, triple.singular_values)
    clipped = int(np.count_nonzero(rayleigh < 0.0))
    if clipped:
        logger.info("initialize_psd: clipped %d negative-curvature direction(s)", clipped)

    _check_usable(values, k, m)
    return triple.left * np.sqrt(values)


def initialize_asym(init_set: EntriesLike, d1: int, d2: int, k: int, seed: int = 0,
                    power_iters: Optional[int] = None) -> Tuple[DenseMatrix, DenseMatrix]:
    """
    Balanced warm start U0 = W_U·D^1/2, V0 = W_V·D^1/2 from (d1·d2/m)·P_Ω(M)
    """
    batch = as_batch(init_set)
    m = len(batch)
    if m < 1:
        raise ValueError('the warm-start set needs at least one sample')

    triple = _topk_with_retries(batch, d1 * d2 / m, d1, d2, k, seed, power_iters)
    _check_usable(triple.singular_values, k, m)
    root = np.sqrt(triple.singular_values)
    return triple.left * root, triple.right * root


def required_init_samples(problem: ProblemStats, d: int, k: int, c0: float) -> int:
    """⌈c0·μ·d·k²·κ²·log d⌉ warm-start samples"""
    return int(math.ceil(c0 * problem.mu * d * k * k * problem.kappa ** 2 * log_dim(d)))


def init_quality(gt: GroundTruth, state) -> Dict[str, Any]:
    """
    Check a warm start against the local-region conditions

    Frobenius condition ‖M − U0V0ᵀ‖_F ≤ σ_min/20 for both shapes. Row condition
    ‖e_iᵀU0‖² ≤ 10μkκ/d (PSD) or ‖e_iᵀU0V0ᵀ‖² ≤ 10μk/d1 and
    ‖e_jᵀV0U0ᵀ‖² ≤ 10μk/d2 (asymmetric), all with measured μ and κ and ‖M‖ = 1.
    """
    problem = stats(gt)
    spectral = problem.spectral_norm
    frob_err = math.sqrt(frob_error_sq(gt, state.u, state.v))
    frob_threshold = gt.sigma_min / 20.0
    max_g, max_h = max_row_leverage(state)

    if isinstance(state, PsdState):
        row_threshold_u = 10.0 * problem.mu * gt.k * problem.kappa / gt.d * spectral
        row_threshold_v = None
        rows_ok = max_g <= row_threshold_u
    else:
        row_threshold_u = 10.0 * problem.mu * gt.k / gt.d1 * spectral
        row_threshold_v = 10.0 * problem.mu * gt.k / gt.d2 * spectral
        rows_ok = max_g <= row_threshold_u and max_h <= row_threshold_v

    frob_ok = frob_err <= frob_threshold
    return {
        "frob_err": frob_err,
        "frob_threshold": frob_threshold,
        "frob_ok": bool(frob_ok),
        "max_row_leverage_u": max_g,
        "max_row_leverage_v": max_h,
        "row_threshold_u": row_threshold_u,
        "row_threshold_v": row_threshold_v,
        "rows_ok": bool(rows_ok),
        "inside_region": bool(frob_ok and rows_ok),
        "mu": problem.mu,
        "kappa": problem.kappa,
    }
