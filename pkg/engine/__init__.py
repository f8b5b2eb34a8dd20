"""
Completion Engine Package
"""
from .errors import (CompletionError, DegeneracyError, DivergenceError, GramConsistencyError,
                     InsufficientSamplesError, NotOrthonormalError, RunError,
                     SubspaceNotConvergedError)
from .linalg import (ObservationBatch, SvdTriple, qr_thin, scaled_projection, svd_product,
                     svd_small, topk_svd_sparse)
from .model import GroundTruth, ProblemStats, coherence, entry, gen_ground_truth, stats
from .sampling import EntrySampler, derive_sampler
from .state import AsymState, PsdState, Variant
from .metrics import StepTrace, alignment_sigma_min, checkpoint, frob_error_sq, full_gradient
from .initialization import init_quality, initialize_asym, initialize_psd, required_init_samples
from .sgd import (RunTrace, make_state, recommended_eta, resolve_eta, run, step_asym_practical,
                  step_asym_theoretical, step_psd)

__all__ = [
    'CompletionError', 'DegeneracyError', 'DivergenceError', 'GramConsistencyError',
    'InsufficientSamplesError', 'NotOrthonormalError', 'RunError', 'SubspaceNotConvergedError',
    'ObservationBatch', 'SvdTriple', 'qr_thin', 'scaled_projection', 'svd_product',
    'svd_small', 'topk_svd_sparse',
    'GroundTruth', 'ProblemStats', 'coherence', 'entry', 'gen_ground_truth', 'stats',
    'EntrySampler', 'derive_sampler',
    'AsymState', 'PsdState', 'Variant',
    'StepTrace', 'alignment_sigma_min', 'checkpoint', 'frob_error_sq', 'full_gradient',
    'init_quality', 'initialize_asym', 'initialize_psd', 'required_init_samples',
    'RunTrace', 'make_state', 'recommended_eta', 'resolve_eta', 'run',
    'step_asym_practical', 'step_asym_theoretical', 'step_psd',
]
