"""
Trajectory Metrics
Objective, row leverage, alignment and gradients, all in factored form so M
is never materialized
"""
import math
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from engine.linalg import DenseMatrix, svd_small
from engine.model import GroundTruth
from engine.state import AsymState, PsdState

State = Union[PsdState, AsymState]

CSV_COLUMNS = ['step', 'f', 'max_g', 'max_h', 'sigma_min_align_u',
               'sigma_min_align_v', 'spectral_norm_u', 'elapsed_ns']

# g_i convention recorded next to every trace
G_CONVENTION_PSD = 'row_norm_sq'             # ‖e_iᵀU‖²
G_CONVENTION_ASYM = 'product_row_norm_sq'    # ‖e_iᵀUVᵀ‖²


@dataclass
class StepTrace:
    step: int
    f: float
    max_g: float
    max_h: Optional[float]
    sigma_min_align_u: float
    sigma_min_align_v: float
    spectral_norm_u: float
    elapsed_ns: int

    def to_row(self) -> List:
        values = asdict(self)
        return [values[name] for name in CSV_COLUMNS]


def _stacked_frobenius(a: DenseMatrix, b: DenseMatrix) -> float:
    """‖a·bᵀ‖_F via QR of both tall factors"""
    _, ra = np.linalg.qr(a, mode='reduced')
    _, rb = np.linalg.qr(b, mode='reduced')
    return float(np.linalg.norm(ra @ rb.T))


def product_distance(u1: DenseMatrix, v1: DenseMatrix, u2: DenseMatrix, v2: DenseMatrix) -> float:
    """‖U1V1ᵀ − U2V2ᵀ‖_F in O(dk²)"""
    return _stacked_frobenius(np.hstack([u1, -u2]), np.hstack([v1, v2]))


def product_norm(u: DenseMatrix, v: DenseMatrix) -> float:
    """‖UVᵀ‖_F in O(dk²)"""
    return _stacked_frobenius(u, v)


def frob_error_sq(gt: GroundTruth, u: DenseMatrix, v: Optional[DenseMatrix] = None) -> float:
    """
    f = ‖UVᵀ − M‖²_F (PSD: pass only u)

    Uses the stacked factorization [U, −X·S]·[V, Y]ᵀ = UVᵀ − M, which is exact
    and free of the cancellation a trace expansion suffers near the optimum.
    """
    v = u if v is None else v
    dist = product_distance(u, v, gt.scaled_x(), gt.y)
    return dist * dist


def row_leverage_u(state: State, i: int) -> float:
    """g_i: ‖e_iᵀU‖² for PSD runs, ‖e_iᵀUVᵀ‖² for asymmetric ones"""
    row = state.u[i]
    if isinstance(state, PsdState):
        return float(row @ row)
    return float(row @ state.gram_v @ row)


def row_leverage_v(state: State, j: int) -> float:
    """h_j = ‖e_jᵀVUᵀ‖²"""
    row = state.v[j]
    if isinstance(state, PsdState):
        return float(row @ row)
    return float(row @ state.gram_u @ row)


def max_row_leverage(state: State) -> Tuple[float, Optional[float]]:
    """(max_i g_i, max_j h_j); h is None for PSD runs"""
    if isinstance(state, PsdState):
        return float(np.max(np.einsum('ij,ij->i', state.u, state.u))), None
    g = np.einsum('ij,jk,ik->i', state.u, state.gram_v, state.u)
    h = np.einsum('ij,jk,ik->i', state.v, state.gram_u, state.v)
    return float(np.max(g)), float(np.max(h))


def alignment_sigma_min(basis: DenseMatrix, factor: DenseMatrix) -> float:
    """σ_min(basisᵀ·factor) for an orthonormal basis"""
    return float(svd_small(basis.T @ factor).singular_values[-1])


def spectral_norm(gram: DenseMatrix) -> float:
    """‖U‖ from its Gram matrix"""
    return math.sqrt(max(float(svd_small(gram).singular_values[0]), 0.0))


def full_gradient_psd(gt: GroundTruth, u: DenseMatrix) -> DenseMatrix:
    """∇f(U) = 4(UUᵀ − M)U = 4(U(UᵀU) − X·S·(XᵀU))"""
    return 4.0 * (u @ (u.T @ u) - gt.scaled_x() @ (gt.x.T @ u))


def full_gradient_asym(gt: GroundTruth, u: DenseMatrix, v: DenseMatrix) -> Tuple[DenseMatrix, DenseMatrix]:
    """(∇_U f, ∇_V f) = (2(UVᵀ − M)V, 2(UVᵀ − M)ᵀU)"""
    grad_u = 2.0 * (u @ (v.T @ v) - gt.scaled_x() @ (gt.y.T @ v))
    grad_v = 2.0 * (v @ (u.T @ u) - (gt.y * gt.s) @ (gt.x.T @ u))
    return grad_u, grad_v


def full_gradient(gt: GroundTruth, state: State):
    """Gradient of f at the current iterate, dispatched on the state kind"""
    if isinstance(state, PsdState):
        return full_gradient_psd(gt, state.u)
    return full_gradient_asym(gt, state.u, state.v)


def checkpoint(gt: GroundTruth, state: State, step: int, elapsed_ns: int) -> StepTrace:
    """All per-checkpoint diagnostics in O(dk²)"""
    arrays = [state.u, state.gram_u] if isinstance(state, PsdState) else [state.u, state.v, state.gram_u, state.gram_v]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        # Overflowed iterate: report f = inf and let the caller stop the run
        nan = float('nan')
        return StepTrace(step=step, f=float('inf'), max_g=nan, max_h=None if isinstance(state, PsdState) else nan,
                         sigma_min_align_u=nan, sigma_min_align_v=nan, spectral_norm_u=nan,
                         elapsed_ns=int(elapsed_ns))
    max_g, max_h = max_row_leverage(state)
    align_u = alignment_sigma_min(gt.x, state.u)
    align_v = align_u if isinstance(state, PsdState) else alignment_sigma_min(gt.y, state.v)
    return StepTrace(
        step=step,
        f=frob_error_sq(gt, state.u, state.v),
        max_g=max_g,
        max_h=max_h,
        sigma_min_align_u=align_u,
        sigma_min_align_v=align_v,
        spectral_norm_u=spectral_norm(state.gram_u),
        elapsed_ns=int(elapsed_ns),
    )


def fit_decay(checkpoints: Sequence[StepTrace], floor: float = 1e-26) -> Dict[str, float]:
    """
    Least-squares line through log f over the checkpoints

    The fit stops at the first checkpoint at or below the floating-point floor,
    where f only reflects roundoff, or at the first non-finite one.

    Returns:
        slope (per step), decay_factor = exp(slope), reduction = f_first / f_last
    """
    steps = np.array([c.step for c in checkpoints], dtype=np.float64)
    values = np.array([c.f for c in checkpoints], dtype=np.float64)
    first = values[0] if len(values) else float('nan')
    last = values[-1] if len(values) else float('nan')
    reduction = float(first / last) if last > 0 else float('inf')

    usable = np.logical_and.accumulate(np.isfinite(values) & (values > floor)) if len(values) else values.astype(bool)
    if np.count_nonzero(usable) < 2:
        return {"slope": float('nan'), "decay_factor": float('nan'), "reduction": reduction, "points": int(np.count_nonzero(usable))}

    slope, _ = np.polyfit(steps[usable], np.log(values[usable]), 1)
    return {
        "slope": float(slope),
        "decay_factor": float(math.exp(slope)),
        "reduction": reduction,
        "points": int(np.count_nonzero(usable)),
    }
