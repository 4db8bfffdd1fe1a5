"""Exception taxonomy shared by all modules.

Every failure mode that an operation is contractually allowed to raise has
its own class, so callers (and the CLI exit-code mapping) can dispatch on
type rather than on message text.
"""


class AsymlabError(Exception):
    """Base class for all library errors."""


class ConfigError(AsymlabError):
    """Invalid configuration or input file."""


# -- limit estimation ------------------------------------------------------

class NotConverged(AsymlabError):
    """A t -> infinity limit shows oscillation or divergence."""


class TooFewSamples(AsymlabError):
    """Trajectory does not carry enough samples for extrapolation."""


class NotRegular(AsymlabError):
    """A transformation has no asymptotic transform at the probed point."""


# -- transformations -------------------------------------------------------

class NonCausal(AsymlabError):
    """Time map is not strictly increasing on the sampled times."""


class NonPositiveTime(AsymlabError):
    """Compactification requires strictly positive time."""


class NotAsymptoticallyIdentical(AsymlabError):
    """Operation requires an asymptotically identical transformation."""


# -- classical dynamics ----------------------------------------------------

class StepUnstable(AsymlabError):
    """Energy drift of the symplectic integration exceeded its threshold."""


class ParticleOverlap(AsymlabError):
    """Separation fell below the softening floor of a singular potential."""


class NoRoot(AsymlabError):
    """Bracketed root search failed to find a solution."""


class NonMonotoneDeflection(AsymlabError):
    """Deflection angle is not invertible on the probed impact parameters."""


# -- grid quantum mechanics ------------------------------------------------

class GridTooSmall(AsymlabError):
    """Probability reached the grid boundary without an absorber."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class BoxUnresolvable(AsymlabError):
    """A velocity box is below grid resolution at the requested time."""


# -- measure transfer ------------------------------------------------------

class UnresolvedBoundary(AsymlabError):
    """Adaptive subdivision hit its depth limit with mass still straddling."""


class DiscontinuityDetected(AsymlabError):
    """Image diameter of a box fails to shrink under subdivision."""


class NotInvariant(AsymlabError):
    """Measure is not invariant under the requested group action."""


# -- probability -----------------------------------------------------------

class ZeroExperimentMass(AsymlabError):
    """Conditional probability requested with zero experiment mass."""
