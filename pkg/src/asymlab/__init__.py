"""asymlab: numerical laboratory for asymptotic velocities, asymptotically
Euclidean transformations, and asymptotic quantum measures."""

__version__ = "0.1.0"

from . import (classical, errors, fileio, geometry, measures, probability,
               quantum, semiclassical, transforms)

__all__ = [
    "__version__",
    "classical",
    "errors",
    "fileio",
    "geometry",
    "measures",
    "probability",
    "quantum",
    "semiclassical",
    "transforms",
]
