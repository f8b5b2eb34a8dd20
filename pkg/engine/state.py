"""
Iterate state for the online steppers
Factors plus cached k×k Gram matrices
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from engine.linalg import DenseMatrix


class Variant(str, Enum):
    THEORETICAL = 'theoretical'
    PRACTICAL = 'practical'


@dataclass
class PsdState:
    """U_t with gram = UᵀU"""
    u: DenseMatrix
    gram: DenseMatrix
    step: int = 0

    @classmethod
    def from_factor(cls, u: DenseMatrix) -> 'PsdState':
        u = np.array(u, dtype=np.float64)
        return cls(u=u, gram=u.T @ u)

    @property
    def v(self) -> DenseMatrix:
        return self.u

    @property
    def gram_u(self) -> DenseMatrix:
        return self.gram

    @property
    def gram_v(self) -> DenseMatrix:
        return self.gram

    def copy(self) -> 'PsdState':
        return PsdState(u=self.u.copy(), gram=self.gram.copy(), step=self.step)


@dataclass
class AsymState:
    """U_t, V_t with gram_u = UᵀU and gram_v = VᵀV"""
    u: DenseMatrix
    v: DenseMatrix
    gram_u: DenseMatrix
    gram_v: DenseMatrix
    variant: Variant = Variant.PRACTICAL
    step: int = 0

    @classmethod
    def from_factors(cls, u: DenseMatrix, v: DenseMatrix,
                     variant: Variant = Variant.PRACTICAL) -> 'AsymState':
        u = np.array(u, dtype=np.float64)
        v = np.array(v, dtype=np.float64)
        return cls(u=u, v=v, gram_u=u.T @ u, gram_v=v.T @ v, variant=Variant(variant))

    def copy(self) -> 'AsymState':
        return AsymState(u=self.u.copy(), v=self.v.copy(), gram_u=self.gram_u.copy(),
                         gram_v=self.gram_v.copy(), variant=self.variant, step=self.step)


def gram_drift(state) -> float:
    """Largest relative gap between cached and exact Gram matrices"""
    pairs = [(state.gram_u, state.u)]
    if isinstance(state, AsymState):
        pairs.append((state.gram_v, state.v))
    worst = 0.0
    for cached, factor in pairs:
        exact = factor.T @ factor
        worst = max(worst, float(np.linalg.norm(cached - exact) / (1.0 + np.linalg.norm(exact))))
    return worst
