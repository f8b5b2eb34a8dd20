"""
Dense Linear Algebra Kernels
Thin QR, small SVDs, SVD of a factored product and randomized top-k SVD
of a sampled sparse matrix
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from config import Config
from engine.errors import SubspaceNotConvergedError

logger = logging.getLogger(__name__)

# Row-major float64 arrays stand in for DenseMatrix throughout the engine
DenseMatrix = np.ndarray


@dataclass(frozen=True)
class SvdTriple:
    """left · diag(singular_values) · rightᵀ with orthonormal left/right columns"""
    left: DenseMatrix
    singular_values: np.ndarray
    right: DenseMatrix

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> DenseMatrix:
        return (self.left * self.singular_values) @ self.right.T


@dataclass
class ObservationBatch:
    """Vectorized list of observed (i, j, value) entries"""
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        for i, j, value in zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()):
            yield i, j, value

    @classmethod
    def from_entries(cls, entries: Iterable[Tuple[int, int, float]]) -> 'ObservationBatch':
        triples = list(entries)
        if not triples:
            return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))
        rows, cols, values = zip(*triples)
        return cls(np.asarray(rows, dtype=np.int64),
                   np.asarray(cols, dtype=np.int64),
                   np.asarray(values, dtype=np.float64))


EntriesLike = Union[ObservationBatch, Sequence[Tuple[int, int, float]]]


def as_batch(entries: EntriesLike) -> ObservationBatch:
    if isinstance(entries, ObservationBatch):
        return entries
    return ObservationBatch.from_entries(entries)


def orthonormality_defect(q: DenseMatrix) -> float:
    """‖qᵀq − I‖_F"""
    return float(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))


def _debug_check(triple: SvdTriple, a: Optional[DenseMatrix] = None):
    if not Config.DEBUG:
        return
    assert orthonormality_defect(triple.left) < 1e-9, 'left factor lost orthonormality'
    assert orthonormality_defect(triple.right) < 1e-9, 'right factor lost orthonormality'
    assert np.all(np.diff(triple.singular_values) <= 1e-12), 'singular values not sorted'
    if a is not None:
        scale = max(np.linalg.norm(a), 1.0)
        assert np.linalg.norm(triple.reconstruct() - a) < 1e-9 * scale, 'reconstruction residual too large'


def qr_thin(a: DenseMatrix) -> Tuple[DenseMatrix, DenseMatrix]:
    """
    Thin QR with a nonnegative diagonal on r

    Args:
        a: d×k matrix with d ≥ k (rank deficiency allowed)

    Returns:
        (q, r) with q d×k orthonormal and r k×k upper-triangular
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] < a.shape[1]:
        raise ValueError(f"qr_thin needs rows >= cols, got {a.shape}")
    q, r = np.linalg.qr(a, mode='reduced')
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs, r * signs[:, None]


def one_sided_jacobi(a: DenseMatrix, tol: float = 1e-15, max_sweeps: int = 60) -> SvdTriple:
    """
    One-sided (Hestenes) Jacobi SVD for small matrices

    Orthogonalizes the columns of a by plane rotations; the column norms are the
    singular values.
    """
    a = np.asarray(a, dtype=np.float64)
    transposed = a.shape[0] < a.shape[1]
    work = (a.T if transposed else a).copy()
    m, n = work.shape
    rotations = np.eye(n)

    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = work[:, p] @ work[:, p]
                beta = work[:, q] @ work[:, q]
                gamma = work[:, p] @ work[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                col_p = work[:, p].copy()
                work[:, p] = c * col_p - s * work[:, q]
                work[:, q] = s * col_p + c * work[:, q]
                rot_p = rotations[:, p].copy()
                rotations[:, p] = c * rot_p - s * rotations[:, q]
                rotations[:, q] = s * rot_p + c * rotations[:, q]
        if not rotated:
            break

    values = np.linalg.norm(work, axis=0)
    order = np.argsort(-values, kind='stable')
    values = values[order]
    work = work[:, order]
    rotations = rotations[:, order]

    scale = values[0] if n and values[0] > 0 else 1.0
    nonzero = int(np.sum(values > 1e-14 * scale))
    left = np.zeros((m, n))
    left[:, :nonzero] = work[:, :nonzero] / values[:nonzero]
    if nonzero < n:
        # Complete the basis for the null directions
        basis, _ = np.linalg.qr(np.hstack([left[:, :nonzero], np.eye(m)]))
        left[:, nonzero:] = basis[:, nonzero:n]
        values[nonzero:] = 0.0

    if transposed:
        return SvdTriple(left=rotations, singular_values=values, right=left)
    return SvdTriple(left=left, singular_values=values, right=rotations)


def svd_small(a: DenseMatrix, method: Optional[str] = None) -> SvdTriple:
    """
    SVD of a small (k×k-sized) dense matrix

    Args:
        a: k1×k2 matrix, both sides at most a few hundred
        method: 'lapack' or 'jacobi' (defaults to Config.SMALL_SVD_METHOD)

    Returns:
        SvdTriple with min(k1, k2) singular values, nonincreasing
    """
    method = method or Config.SMALL_SVD_METHOD
    a = np.asarray(a, dtype=np.float64)
    if method == 'jacobi':
        triple = one_sided_jacobi(a)
    elif method == 'lapack':
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        triple = SvdTriple(left=u, singular_values=s, right=vt.T)
    else:
        raise ValueError(f"unknown small SVD method: {method}")
    _debug_check(triple, a)
    return triple


def svd_product(u: DenseMatrix, v: DenseMatrix) -> SvdTriple:
    """
    SVD of u·vᵀ without materializing the d1×d2 product

    QR of both factors, then a k×k core SVD.
    """
    qu, ru = qr_thin(u)
    qv, rv = qr_thin(v)
    core = svd_small(ru @ rv.T)
    triple = SvdTriple(left=qu @ core.left,
                       singular_values=core.singular_values,
                       right=qv @ core.right)
    _debug_check(triple)
    return triple


def scaled_projection(entries: EntriesLike, scale: float, d1: int, d2: int) -> sparse.csr_matrix:
    """scale·P_Ω(M) as CSR; duplicate (i, j) samples are summed"""
    batch = as_batch(entries)
    if len(batch) and (batch.rows.min() < 0 or batch.rows.max() >= d1
                       or batch.cols.min() < 0 or batch.cols.max() >= d2):
        raise IndexError('observed entry index out of range')
    matrix = sparse.coo_matrix((batch.values * scale, (batch.rows, batch.cols)), shape=(d1, d2))
    return matrix.tocsr()


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    top = max(float(np.max(np.abs(old))) if len(old) else 0.0, float(np.max(np.abs(new))) if len(new) else 0.0)
    if top == 0.0:
        return 0.0
    return float(np.max(np.abs(new - old)) / top)


def topk_svd_sparse(entries: EntriesLike, scale: float, d1: int, d2: int, k: int,
                    power_iters: Optional[int] = None, seed: int = 0,
                    oversample: Optional[int] = None) -> SvdTriple:
    """
    Top-k SVD of scale·P_Ω(M) by randomized subspace iteration

    Args:
        entries: Observed (i, j, value) samples; duplicates are summed
        scale: Multiplier, d1·d2/|Ω| for the warm start
        d1, d2: Matrix shape
        k: Target rank
        power_iters: Subspace iterations (None means Config.POWER_ITERS; 0 skips the
            convergence check)
        seed: Seed of the Gaussian starting block
        oversample: Extra columns (defaults to Config.OVERSAMPLE, 0 meaning k)

    Returns:
        SvdTriple of rank k

    Raises:
        SubspaceNotConvergedError: singular values still moving after power_iters
    """
    if k > min(d1, d2):
        raise ValueError(f"k={k} exceeds min(d1, d2)={min(d1, d2)}")
    if power_iters is None:
        power_iters = Config.POWER_ITERS
    if power_iters < 0:
        raise ValueError(f"power_iters must be >= 0, got {power_iters}")
    if oversample is None:
        oversample = Config.OVERSAMPLE or k
    width = min(k + oversample, min(d1, d2))

    matrix = scaled_projection(entries, scale, d1, d2)
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((d2, width))

    q, _ = qr_thin(matrix @ omega)
    previous = None
    change = np.inf
    for _ in range(power_iters):
        z, rz = qr_thin(matrix.T @ q)
        # B = qᵀA = rzᵀ zᵀ, so its singular values are those of rz
        current = svd_small(rz.T).singular_values[:k]
        if previous is not None:
            change = _relative_change(current, previous)
        previous = current
        q, _ = qr_thin(matrix @ z)

    z, rz = qr_thin(matrix.T @ q)
    core = svd_small(rz.T)
    final = core.singular_values[:k]
    if previous is not None:
        change = _relative_change(final, previous)
    # power_iters = 0 is a single-pass sketch with nothing to compare against
    if power_iters > 0 and change > Config.SUBSPACE_TOL:
        raise SubspaceNotConvergedError(
            f"top-{k} singular values moved by {change:.2e} after {power_iters} power iterations",
            relative_change=change, power_iters=power_iters)

    logger.debug("topk_svd_sparse: nnz=%d k=%d iters=%d change=%.2e",
                 matrix.nnz, k, power_iters, change)
    triple = SvdTriple(left=(q @ core.left)[:, :k],
                       singular_values=final.copy(),
                       right=(z @ core.right)[:, :k])
    _debug_check(triple)
    return triple
