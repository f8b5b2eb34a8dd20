"""
Engine error types
Every error knows the CLI exit code it maps to: 2 for run failures, 3 for
problems the config can fix. Exit 1 is reserved for failed checks.
"""
from typing import Optional


class CompletionError(Exception):
    """Base class for failures raised by the completion engine"""
    exit_code = 2


class NotOrthonormalError(CompletionError, ValueError):
    """A basis expected to have orthonormal columns does not"""


class SubspaceNotConvergedError(CompletionError):
    """Randomized subspace iteration did not stabilize within its power iterations"""

    def __init__(self, message: str, relative_change: float, power_iters: int):
        super().__init__(message)
        self.relative_change = relative_change
        self.power_iters = power_iters


class InsufficientSamplesError(CompletionError):
    """The warm-start sample set leaves fewer than k usable directions"""
    # m_init too small for this instance
    exit_code = 3

    def __init__(self, message: str, usable: int, k: int):
        super().__init__(message)
        self.usable = usable
        self.k = k


class RunError(CompletionError):
    """A failure during the online phase, tagged with the step it happened at"""

    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.step = step
        # Filled in by the run loop with the partial trace
        self.trace: Optional[object] = None


class DivergenceError(RunError):
    """The objective blew up (non-finite residual or f above the divergence factor)"""


class DegeneracyError(RunError):
    """A singular value needed for a -1/2 power or a D^1/2 split fell below the floor"""


class GramConsistencyError(RunError):
    """Incrementally maintained Gram matrix drifted away from the exact one"""
