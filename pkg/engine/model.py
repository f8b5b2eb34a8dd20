"""
Ground Truth Model
Factored rank-k target M = X·S·Yᵀ, entry oracle and coherence diagnostics
"""
import math
from dataclasses import dataclass
from typing import Dict, Any

import numpy as np
from pydantic import BaseModel

from engine.errors import NotOrthonormalError
from engine.linalg import DenseMatrix, orthonormality_defect, qr_thin


@dataclass(frozen=True)
class GroundTruth:
    """
    Rank-k target kept in factored form

    x: d1×k left singular vectors, s: k singular values (nonincreasing, s[0] = 1),
    y: d2×k right singular vectors. With symmetric_psd set, y is x and M = X·S·Xᵀ.
    """
    x: DenseMatrix
    s: np.ndarray
    y: DenseMatrix
    symmetric_psd: bool = False

    def __post_init__(self):
        if self.x.shape[1] != len(self.s) or self.y.shape[1] != len(self.s):
            raise ValueError('factor widths must match the number of singular values')
        if orthonormality_defect(self.x) >= 1e-10 or orthonormality_defect(self.y) >= 1e-10:
            raise NotOrthonormalError('ground-truth factors must have orthonormal columns')
        if np.any(np.diff(self.s) > 0) or self.s[-1] <= 0:
            raise ValueError('singular values must be positive and nonincreasing')
        if self.symmetric_psd and self.x.shape[0] != self.y.shape[0]:
            raise ValueError('a symmetric PSD target must be square')

    @property
    def d1(self) -> int:
        return self.x.shape[0]

    @property
    def d2(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return len(self.s)

    @property
    def d(self) -> int:
        return max(self.d1, self.d2)

    @property
    def sigma_min(self) -> float:
        return float(self.s[-1])

    def scaled_x(self) -> DenseMatrix:
        """X·S, the left factor of M with the singular values folded in"""
        return self.x * self.s

    def sqrt_factors(self):
        """Balanced exact factors (X·S^1/2, Y·S^1/2)"""
        root = np.sqrt(self.s)
        return self.x * root, self.y * root

    def dense(self) -> DenseMatrix:
        """Materialize M (small d only; oracles and tests)"""
        return (self.x * self.s) @ self.y.T


class ProblemStats(BaseModel):
    """Coherence and conditioning of a ground truth"""
    d1: int
    d2: int
    k: int
    mu: float
    mu_x: float
    mu_y: float
    kappa: float
    sigma_min: float
    spectral_norm: float
    frob_norm_sq: float


def coherence(w: DenseMatrix) -> float:
    """
    Coherence (d/k)·max_i ‖row_i(w)‖² of an orthonormal basis

    Args:
        w: d×k matrix with orthonormal columns

    Returns:
        Coherence in [1, d/k]
    """
    w = np.asarray(w, dtype=np.float64)
    defect = orthonormality_defect(w)
    if defect > 1e-8:
        raise NotOrthonormalError(f"coherence needs orthonormal columns (defect {defect:.2e})")
    d, k = w.shape
    return float(d / k * np.max(np.einsum('ij,ij->i', w, w)))


def gen_ground_truth(d1: int, d2: int, k: int, kappa_target: float = 1.0,
                     seed: int = 0, symmetric_psd: bool = False) -> GroundTruth:
    """
    Seeded instance with Gaussian-QR singular vectors and a geometric spectrum

    Singular values run geometrically from 1 down to 1/kappa_target, so ‖M‖ = 1
    and κ(M) = kappa_target exactly. Incoherence is measured, not promised.
    """
    if k > min(d1, d2):
        raise ValueError(f"k={k} exceeds min(d1, d2)={min(d1, d2)}")
    if kappa_target < 1.0:
        raise ValueError('kappa_target must be >= 1')
    if symmetric_psd and d1 != d2:
        raise ValueError('a symmetric PSD target must be square')

    rng = np.random.default_rng(seed)
    x, _ = qr_thin(rng.standard_normal((d1, k)))
    y = x if symmetric_psd else qr_thin(rng.standard_normal((d2, k)))[0]
    if k == 1:
        s = np.ones(1)
    else:
        s = kappa_target ** (-np.arange(k) / (k - 1))
    return GroundTruth(x=x, s=s, y=y, symmetric_psd=symmetric_psd)


def entry(gt: GroundTruth, i: int, j: int) -> float:
    """M_ij = Σ_l x[i,l]·s[l]·y[j,l], summed left to right"""
    if not (0 <= i < gt.d1 and 0 <= j < gt.d2):
        raise IndexError(f"entry ({i}, {j}) outside {gt.d1}x{gt.d2}")
    xi = gt.x[i]
    yj = gt.y[j]
    s = gt.s
    total = xi[0] * s[0] * yj[0]
    for l in range(1, gt.k):
        total += xi[l] * s[l] * yj[l]
    return float(total)


def entries(gt: GroundTruth, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Vectorized entry(); same summation order, so values are bit-identical"""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if len(rows) == 0:
        return np.empty(0)
    if rows.min() < 0 or rows.max() >= gt.d1 or cols.min() < 0 or cols.max() >= gt.d2:
        raise IndexError('entry index out of range')
    products = (gt.x[rows] * gt.s) * gt.y[cols]
    total = products[:, 0].copy()
    for l in range(1, gt.k):
        total += products[:, l]
    return total


def stats(gt: GroundTruth) -> ProblemStats:
    """Measured coherence and conditioning"""
    mu_x = coherence(gt.x)
    mu_y = mu_x if gt.symmetric_psd else coherence(gt.y)
    return ProblemStats(
        d1=gt.d1,
        d2=gt.d2,
        k=gt.k,
        mu=max(mu_x, mu_y),
        mu_x=mu_x,
        mu_y=mu_y,
        kappa=float(gt.s[0] / gt.s[-1]),
        sigma_min=gt.sigma_min,
        spectral_norm=float(gt.s[0]),
        frob_norm_sq=float(np.sum(gt.s ** 2)),
    )


def ground_truth_to_dict(gt: GroundTruth) -> Dict[str, Any]:
    """Self-describing payload: dims, k, s, X and Y row-major"""
    return {
        "format": "factored-ground-truth",
        "version": 1,
        "d1": gt.d1,
        "d2": gt.d2,
        "k": gt.k,
        "symmetric_psd": gt.symmetric_psd,
        "s": gt.s.tolist(),
        "x": gt.x.tolist(),
        "y": None if gt.symmetric_psd else gt.y.tolist(),
    }


def ground_truth_from_dict(payload: Dict[str, Any]) -> GroundTruth:
    if payload.get("format") != "factored-ground-truth":
        raise ValueError('not a ground-truth file')
    x = np.asarray(payload["x"], dtype=np.float64).reshape(payload["d1"], payload["k"])
    symmetric = bool(payload["symmetric_psd"])
    y = x if symmetric else np.asarray(payload["y"], dtype=np.float64).reshape(payload["d2"], payload["k"])
    s = np.asarray(payload["s"], dtype=np.float64)
    # Step sizes and region bounds assume ‖M‖ = s[0] = 1
    if len(s) == 0 or abs(s[0] - 1.0) > 1e-12:
        raise ValueError(f"ground truth is not normalized: s[0] = {s[0] if len(s) else None}, expected 1")
    return GroundTruth(x=x, s=s, y=y, symmetric_psd=symmetric)


def log_dim(d: int) -> float:
    """log d, floored at 1 so tiny instances stay well defined"""
    return max(math.log(d), 1.0)
