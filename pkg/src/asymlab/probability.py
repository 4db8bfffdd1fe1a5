"""The doubling-map toy universe and measure-ratio probability.

Orbits of x -> 2x (mod 1) are computed in exact rational arithmetic: float
inputs are converted to the dyadic rationals they already are, so no orbit
is ever contaminated by rounding (naive float doubling collapses to 0 after
~53 ticks).  Under the uniform measure on [0, 1) the per-tick events
"state < 1/2" are independent fair bits, which the law-of-large-numbers
estimator uses directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ZeroExperimentMass

Rational = Union[Fraction, int, float, str]

ONE_HALF = Fraction(1, 2)


def _as_fraction(x: Rational) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)  # exact for ints and floats


@dataclass(frozen=True, eq=False)
class BernoulliUniverse:
    """Doubling-map universe with discrete ticks.

    The state sequence starts at ``initial_condition`` (tick 0) and advances
    by x -> 2x mod 1 for ``horizon`` ticks in total.
    """

    initial_condition: Rational
    horizon: int

    def __post_init__(self):
        x0 = _as_fraction(self.initial_condition)
        if not 0 <= x0 < 1:
            raise ValueError("initial condition must lie in [0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        object.__setattr__(self, "initial_condition", x0)


@dataclass(frozen=True, eq=False)
class EventSpec:
    """Per-tick threshold event: state < threshold (or >= with below=False)."""

    threshold: Rational = ONE_HALF
    below: bool = True

    def __post_init__(self):
        object.__setattr__(self, "threshold", _as_fraction(self.threshold))

    def holds(self, state: Fraction) -> bool:
        return (state < self.threshold) if self.below \
            else (state >= self.threshold)


def orbit(u: BernoulliUniverse) -> list:
    """Exact doubling-map orbit: states at ticks 0 .. horizon-1.

    Rational states stay exact, so orbits of odd-denominator rationals are
    eventually periodic instead of decaying to zero.
    """
    x0 = u.initial_condition
    num, den = x0.numerator, x0.denominator
    states = []
    for _ in range(u.horizon):
        states.append(Fraction(num, den))
        num = (num << 1) % den
    return states


def relative_frequency(u: BernoulliUniverse,
                       event: EventSpec = EventSpec()) -> Fraction:
    """Fraction of ticks at which the event holds, as an exact rational.

    For the canonical below-1/2 event on dyadic initial conditions the
    frequency is read off the binary digits directly (tick i is below 1/2
    exactly when digit i+1 of x0 is zero); other cases walk the orbit.
    """
    x0 = u.initial_condition
    n = u.horizon
    den = x0.denominator
    if (event.below and event.threshold == ONE_HALF
            and den & (den - 1) == 0):
        bits = den.bit_length() - 1
        num = x0.numerator
        if n <= bits:
            head = num >> (bits - n)
            ones = head.bit_count()
        else:
            ones = num.bit_count()  # all remaining digits are zero
        return Fraction(n - ones, n)
    hits = sum(1 for s in orbit(u) if event.holds(s))
    return Fraction(hits, n)


def sample_uniform_initial(rng: np.random.Generator,
                           bits: int = 1152) -> Fraction:
    """Uniform dyadic initial condition with enough digits that the first
    ~bits ticks behave as independent fair bits."""
    raw = int.from_bytes(rng.bytes(bits // 8), "big")
    return Fraction(raw, 1 << (8 * (bits // 8)))


def mean_frequency_uniform(n_samples: int, horizon: int,
                           seed: int) -> tuple:
    """Mean and standard error of the below-1/2 frequency over uniformly
    sampled initial conditions."""
    rng = np.random.default_rng(seed)
    bits = 8 * ((horizon + 128) // 8 + 1)
    freqs = np.array([
        float(relative_frequency(
            BernoulliUniverse(sample_uniform_initial(rng, bits), horizon)))
        for _ in range(n_samples)])
    return float(np.mean(freqs)), float(np.std(freqs) / np.sqrt(n_samples))


# ---------------------------------------------------------------------------
# law of large numbers deviation measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LlnEstimate:
    n: int
    epsilon: float
    measure: float
    chebyshev_bound: float
    mc_sigma: float
    n_samples: int


def lln_deviation_measure(event_prob: float, n: int, epsilon: float,
                          n_samples: int = 20000,
                          seed: int = 0) -> LlnEstimate:
    """Monte Carlo estimate of the measure of trajectories whose empirical
    frequency over n equivalent events deviates from the probability by at
    least epsilon.

    For independent equal-probability events the hit count over any
    trajectory is Binomial(n, P) under the uniform measure, so the counts
    are sampled directly.  The estimate must respect the Chebyshev bound
    P(1-P) / (n epsilon^2).
    """
    if not 0.0 < event_prob < 1.0:
        raise ValueError("event probability must be in (0, 1)")
    if n < 1 or epsilon <= 0.0:
        raise ValueError("need n >= 1 and epsilon > 0")
    rng = np.random.default_rng(seed)
    counts = rng.binomial(n, event_prob, size=n_samples)
    deviate = np.abs(counts / n - event_prob) >= epsilon
    p_hat = float(np.mean(deviate))
    mc_sigma = float(np.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / n_samples)
                             / n_samples))
    bound = event_prob * (1.0 - event_prob) / (n * epsilon * epsilon)
    return LlnEstimate(n=n, epsilon=epsilon, measure=p_hat,
                       chebyshev_bound=bound, mc_sigma=mc_sigma,
                       n_samples=n_samples)


# ---------------------------------------------------------------------------
# measurement probability as a ratio of masses
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasurementQuery:
    """Masses of a result event nested inside an experiment event."""

    experiment_mass: float
    result_mass: float

    def __post_init__(self):
        if self.experiment_mass < 0.0 or self.result_mass < 0.0:
            raise ValueError("masses must be nonnegative")
        if self.result_mass > self.experiment_mass * (1.0 + 1e-12):
            raise ValueError("result mass cannot exceed experiment mass")


def measurement_probability(q: MeasurementQuery) -> float:
    """P(result | experiment) = result mass / experiment mass.

    Invariant under common rescaling of both masses, which is what makes an
    unnormalizable underlying measure harmless here.
    """
    if q.experiment_mass <= 0.0:
        raise ZeroExperimentMass("experiment event has zero mass")
    return q.result_mass / q.experiment_mass


def digit_matrix(rng: np.random.Generator, n_samples: int,
                 n_digits: int) -> np.ndarray:
    """Binary digit matrix of uniformly sampled initial conditions
    (row k, column i = digit i+1 of sample k); the tick-i state of the
    doubling map is below 1/2 exactly when that digit is zero.  Used for
    independence testing of the dyadic digit events."""
    bits = 8 * ((n_digits + 64) // 8 + 1)
    out = np.empty((n_samples, n_digits), dtype=np.int64)
    for k in range(n_samples):
        x = sample_uniform_initial(rng, bits)
        num = x.numerator
        total = x.denominator.bit_length() - 1
        for i in range(n_digits):
            out[k, i] = (num >> (total - 1 - i)) & 1
    return out
