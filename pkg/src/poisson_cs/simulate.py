"""Poisson measurement generation y ~ Poisson(Phi x).

Sampling uses numpy's ``Generator.poisson``, which switches between direct
inversion at small rates and the PTRS transformed-rejection sampler at large
ones, so rates spanning 1e0 to 1e8+ are exact and fast.  Every consumer of
randomness owns its own PCG64 stream; parallel trials derive child streams
from a master seed through ``SeedSequence([master, *path])`` (the documented
splitting rule used throughout the experiment harness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParamError, LengthMismatchError
from .sensing import SensingMatrix

__all__ = ["MeasurementVector", "poisson_draw", "measure", "derive_rng"]


@dataclass(frozen=True)
class MeasurementVector:
    """Photon counts, the rates they were drawn from, and the seed used."""

    counts: np.ndarray
    rates: np.ndarray
    seed: object

    def __post_init__(self):
        if self.counts.shape != self.rates.shape:
            raise LengthMismatchError("counts and rates differ in length")

    def __len__(self) -> int:
        return self.counts.size


def derive_rng(master_seed, *path) -> np.random.Generator:
    """Child generator for stream ``path`` under ``master_seed``.

    Identical (master_seed, path) pairs always yield identical streams;
    distinct paths yield statistically independent ones.
    """
    seq = np.random.SeedSequence([int(master_seed), *[int(p) for p in path]])
    return np.random.Generator(np.random.PCG64(seq))


def poisson_draw(rate: float, rng: np.random.Generator) -> int:
    """One exact Poisson sample at the given rate; rate 0 returns 0."""
    rate = float(rate)
    if math.isnan(rate) or math.isinf(rate) or rate < 0.0:
        raise InvalidParamError(f"rate must be finite and >= 0, got {rate}")
    if rate == 0.0:
        return 0
    return int(rng.poisson(rate))


def measure(phi: SensingMatrix, x, seed) -> MeasurementVector:
    """Draw y_i ~ Poisson((Phi x)_i) independently per coordinate.

    ``seed`` may be an integer or a Generator; integers create a fresh PCG64
    stream so repeated calls are reproducible.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != phi.dim:
        raise LengthMismatchError(
            f"signal length {x.size} does not match matrix dim {phi.dim}"
        )
    if np.any(x < 0.0):
        raise InvalidParamError("signal must be non-negative")
    rates = phi.entries @ x
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.poisson(rates).astype(np.int64)
    counts.setflags(write=False)
    rates.setflags(write=False)
    return MeasurementVector(counts=counts, rates=rates, seed=seed)
