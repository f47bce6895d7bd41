"""Statistical behavior of sqrt(J(y, Phi x)) across Poisson realizations.

The square root of the Jensen-Shannon divergence between a Poisson
measurement vector and its rate vector concentrates: its mean is at most
sqrt(N/4), its variance is bounded by (11 + 5*sum(1/s_i)) / max(0, 4*(2 -
sum(1/s_i))) with s_i = N*(Phi x)_i (about 11/8 when every s_i is large),
and sqrt(N)*(1/2 + sqrt(11)/8) is exceeded with probability at most
2*exp(-N/2).  This module samples the statistic, evaluates those bounds,
KS-tests the empirical distribution against a moment-matched Gaussian, and
turns the quantiles into the constraint radius used by the constrained
reconstruction problem.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .divergences import jsd_rowwise
from .errors import InvalidParamError, MissingSamplesError
from .sensing import SensingMatrix

__all__ = [
    "SqjsdSampleSet",
    "ConcentrationBounds",
    "KsResult",
    "EpsilonMode",
    "monte_carlo_sqjsd",
    "concentration_bounds",
    "ks_gaussian_test",
    "choose_epsilon",
    "TAIL_COEFFICIENT",
]

# 1/2 + sqrt(11)/8 = 0.914578...; the sqrt(N)-scaled tail radius.
TAIL_COEFFICIENT = 0.5 + math.sqrt(11.0) / 8.0


@dataclass(frozen=True)
class SqjsdSampleSet:
    """Monte-Carlo draws of sqrt(J(y, Phi x)) for one fixed (Phi, x)."""

    samples: np.ndarray
    n_measurements: int
    intensity: float
    trials: int

    def __post_init__(self):
        if self.samples.size != self.trials:
            raise InvalidParamError("trials must equal the number of samples")

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def var(self) -> float:
        return float(np.var(self.samples, ddof=1))

    def percentile(self, q: float) -> float:
        # Linear interpolation between closest order statistics.
        return float(np.percentile(self.samples, q))


@dataclass(frozen=True)
class ConcentrationBounds:
    """Mean/variance/tail bounds evaluated for a concrete (Phi, x) pair."""

    mean_bound: float
    var_bound: float
    tail_epsilon: float
    tail_prob: float
    s_min: float


def monte_carlo_sqjsd(
    phi: SensingMatrix, x, trials: int, seed
) -> SqjsdSampleSet:
    """Sample sqrt(J(y, Phi x)) over independent Poisson realizations of y."""
    if trials < 2:
        raise InvalidParamError(f"need trials >= 2, got {trials}")
    x = np.asarray(x, dtype=float)
    rates = phi.entries @ x
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.poisson(lam=rates, size=(trials, rates.size)).astype(float)
    samples = np.sqrt(jsd_rowwise(counts, rates))
    samples.setflags(write=False)
    return SqjsdSampleSet(
        samples=samples,
        n_measurements=phi.n_measurements,
        intensity=float(np.sum(x)),
        trials=trials,
    )


def concentration_bounds(phi: SensingMatrix, x) -> ConcentrationBounds:
    """Evaluate the concentration bounds at s_i = N * (Phi x)_i."""
    x = np.asarray(x, dtype=float)
    N = phi.n_measurements
    s = N * (phi.entries @ x)
    s_min = float(np.min(s)) if s.size else 0.0
    if np.any(s == 0.0):
        inv_sum = math.inf
    else:
        inv_sum = float(np.sum(1.0 / s))
    denom = 4.0 * (2.0 - inv_sum)
    if inv_sum >= 2.0 or denom <= 0.0:
        var_bound = math.inf
    else:
        var_bound = (11.0 + 5.0 * inv_sum) / denom
    return ConcentrationBounds(
        mean_bound=math.sqrt(N / 4.0),
        var_bound=var_bound,
        tail_epsilon=math.sqrt(N) * TAIL_COEFFICIENT,
        tail_prob=1.0 - 2.0 * math.exp(-N / 2.0),
        s_min=s_min,
    )


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float
    passed: bool


def _ks_critical(alpha: float, n: int) -> float:
    # Asymptotic one-sample critical value c(alpha)/sqrt(n),
    # c(alpha) = sqrt(-ln(alpha/2)/2); c(0.01) = 1.6276.
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ks_gaussian_test(samples, alpha: float = 0.01) -> KsResult:
    """One-sample KS test against a Gaussian with the sample's own moments.

    Follows the plain moment-matched procedure (no small-sample correction
    for the estimated parameters): statistic D_n against the fitted normal
    CDF, pass iff D_n < c(alpha)/sqrt(n).  Degenerate (zero-variance)
    samples are rejected with an error.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParamError(f"alpha must lie in (0,1), got {alpha}")
    vals = np.sort(np.asarray(getattr(samples, "samples", samples), dtype=float))
    n = vals.size
    if n < 30:
        raise InvalidParamError(f"need at least 30 samples, got {n}")
    mu = float(np.mean(vals))
    sd = float(np.std(vals, ddof=1))
    if sd == 0.0:
        raise InvalidParamError("zero-variance samples: KS test degenerate")
    cdf = ndtr((vals - mu) / sd)
    idx = np.arange(1, n + 1, dtype=float)
    d_plus = np.max(idx / n - cdf)
    d_minus = np.max(cdf - (idx - 1.0) / n)
    statistic = float(max(d_plus, d_minus))
    critical = _ks_critical(alpha, n)
    return KsResult(statistic=statistic, critical=critical, passed=statistic < critical)


class EpsilonMode(enum.Enum):
    THEORY = "theory"
    PERCENTILE = "percentile"


def choose_epsilon(
    mode: EpsilonMode | str,
    N: int,
    samples: SqjsdSampleSet | None = None,
) -> float:
    """Constraint radius for the constrained reconstruction problem.

    THEORY uses the tail bound sqrt(N)*(1/2 + sqrt(11)/8); PERCENTILE uses
    the empirical 99th percentile of a sample set (>= 100 trials).
    """
    mode = EpsilonMode(mode) if not isinstance(mode, EpsilonMode) else mode
    if mode is EpsilonMode.THEORY:
        return math.sqrt(N) * TAIL_COEFFICIENT
    if samples is None or samples.trials < 100:
        raise MissingSamplesError("percentile mode needs a sample set with >= 100 trials")
    return samples.percentile(99.0)
