"""
Entry Sampling
Seeded, replayable streams of uniformly random observed entries
"""
from typing import Tuple

import numpy as np

from engine.linalg import ObservationBatch
from engine.model import GroundTruth, entries, entry

# Fixed stream indices under one master seed
INIT_STREAM = 0
ONLINE_STREAM = 1
# Verification and sweep trials start here so they never collide with a run's streams
TRIAL_STREAM_BASE = 1000

BLOCK_SIZE = 4096


def derive_seed_sequence(seed: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(stream,))


class EntrySampler:
    """
    With-replacement uniform sampler over [d1]×[d2]

    Index pairs are drawn in blocks from a PCG64 stream; identical seeds and
    call sequences replay identical draws bit for bit.
    """

    def __init__(self, d1: int, d2: int, seed: int = 0, stream: int = ONLINE_STREAM):
        if d1 < 1 or d2 < 1:
            raise ValueError('sampler dimensions must be positive')
        self.d1 = d1
        self.d2 = d2
        self.seed = seed
        self.stream = stream
        self.rng = np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, stream)))
        self._rows = np.empty(0, dtype=np.int64)
        self._cols = np.empty(0, dtype=np.int64)
        self._pos = 0

    def _refill(self, size: int):
        self._rows = self.rng.integers(0, self.d1, size=size)
        self._cols = self.rng.integers(0, self.d2, size=size)
        self._pos = 0

    def draw_indices(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Next n (i, j) pairs from the stream"""
        rows = np.empty(n, dtype=np.int64)
        cols = np.empty(n, dtype=np.int64)
        filled = 0
        while filled < n:
            if self._pos >= len(self._rows):
                self._refill(max(BLOCK_SIZE, n - filled))
            take = min(n - filled, len(self._rows) - self._pos)
            rows[filled:filled + take] = self._rows[self._pos:self._pos + take]
            cols[filled:filled + take] = self._cols[self._pos:self._pos + take]
            self._pos += take
            filled += take
        return rows, cols

    def _check_dims(self, gt: GroundTruth):
        if (gt.d1, gt.d2) != (self.d1, self.d2):
            raise ValueError(f"sampler is {self.d1}x{self.d2} but ground truth is {gt.d1}x{gt.d2}")

    def next_entry(self, gt: GroundTruth) -> Tuple[int, int, float]:
        """One uniform observation (i, j, M_ij)"""
        self._check_dims(gt)
        if self._pos >= len(self._rows):
            self._refill(BLOCK_SIZE)
        i = int(self._rows[self._pos])
        j = int(self._cols[self._pos])
        self._pos += 1
        return i, j, entry(gt, i, j)

    def sample_init_set(self, gt: GroundTruth, m: int) -> ObservationBatch:
        """
        Draw the warm-start set Ω_init

        Args:
            gt: Ground truth providing the observed values
            m: Number of draws (with replacement, duplicates kept)

        Returns:
            ObservationBatch of m entries
        """
        if m < 1:
            raise ValueError('the warm-start set needs at least one sample')
        self._check_dims(gt)
        rows, cols = self.draw_indices(m)
        return ObservationBatch(rows=rows, cols=cols, values=entries(gt, rows, cols))


def derive_sampler(d1: int, d2: int, seed: int, stream: int) -> EntrySampler:
    return EntrySampler(d1, d2, seed=seed, stream=stream)
