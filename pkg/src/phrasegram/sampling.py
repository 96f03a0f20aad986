"""Smoothed unigram noise distribution and negative-sample drawing.

Noise probabilities are proportional to count**exponent (default 3/4).
Sampling uses an exact cumulative table with binary search, so empirical
frequencies converge to the exact probabilities with no quantization
error from a slot table.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NoiseDistribution", "build_noise_distribution", "SamplingError"]

EXCLUSION_RETRY_LIMIT = 100


class SamplingError(RuntimeError):
    """Sampling could not produce a valid draw within the retry budget."""


class NoiseDistribution:
    """Immutable categorical distribution over dense ids.

    probs[i] = counts[i]**exponent / Z.  Safe for concurrent reads; each
    caller supplies its own random generator.
    """

    def __init__(self, probs: np.ndarray, exponent: float):
        self.probs = probs
        self.exponent = exponent
        self.cumulative = np.cumsum(probs)
        # Guard against rounding drift at the top of the table.
        self.cumulative[-1] = 1.0

    def __len__(self) -> int:
        return len(self.probs)

    def sample(
        self,
        rng: np.random.Generator,
        k: int,
        exclude: int | None = None,
    ) -> np.ndarray:
        """Draw k ids i.i.d.; draws equal to exclude are redrawn.

        Redrawing (rather than skipping) keeps the result length at
        exactly k.  Raises SamplingError if an excluded draw cannot be
        replaced within the retry limit.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        ids = np.searchsorted(self.cumulative, rng.random(k), side="right")
        if exclude is not None:
            bad = ids == exclude
            retries = 0
            while bad.any():
                retries += 1
                if retries > EXCLUSION_RETRY_LIMIT:
                    raise SamplingError(
                        f"could not draw a sample != {exclude} "
                        f"within {EXCLUSION_RETRY_LIMIT} retries"
                    )
                n_bad = int(bad.sum())
                ids[bad] = np.searchsorted(
                    self.cumulative, rng.random(n_bad), side="right"
                )
                bad = ids == exclude
        return ids


def build_noise_distribution(
    counts: np.ndarray, exponent: float = 0.75
) -> NoiseDistribution:
    """Build the smoothed unigram distribution P(i) = counts[i]**exponent / Z.

    Requires at least one positive count and exponent > 0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if exponent <= 0:
        raise ValueError("exponent must be > 0")
    if counts.size == 0 or not (counts > 0).any():
        raise ValueError("no sampleable mass: counts are empty or all zero")
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    powered = counts**exponent
    z = powered.sum()
    return NoiseDistribution(powered / z, exponent)
