"""Semiclassical densities for free 1D motion.

The classical position density spread from a point source with uniform
momentum density is |d^2 W / dx1 dx2| / (2 pi) with W the classical action;
for free motion that is m / (2 pi t), which coincides exactly with the
squared free propagator, leaving a vanishing interference term.  A two-source
toy exposes the nonzero cross term of superposed propagators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def free_action(m: float, t1: float, x1, t2: float, x2):
    """Classical action of the free path from (t1, x1) to (t2, x2)."""
    if t2 <= t1:
        raise ValueError("need t2 > t1")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return m * (x2 - x1) ** 2 / (2.0 * (t2 - t1))


def free_propagator(m: float, x_from, x_to, t: float) -> np.ndarray:
    """Free 1D propagator K(x_from -> x_to, t), hbar = 1."""
    if t <= 0.0:
        raise ValueError("propagation time must be positive")
    x_from = np.asarray(x_from, dtype=float)
    x_to = np.asarray(x_to, dtype=float)
    amp = np.sqrt(m / (2.0j * np.pi * t))
    return amp * np.exp(1j * m * (x_to - x_from) ** 2 / (2.0 * t))


def classical_density_free(m: float, t: float) -> float:
    """|d^2 W / dx1 dx2| / (2 pi) = m / (2 pi |t|) for the free action."""
    if t == 0.0:
        raise ValueError("density diverges at t = 0")
    return m / (2.0 * np.pi * abs(t))


@dataclass(frozen=True, eq=False)
class SemiclassicalComparison:
    x_grid: np.ndarray
    rho_C: np.ndarray
    rho_Q: np.ndarray
    interference: np.ndarray


def semiclassical_density_compare(m: float, t: float,
                                  x_grid) -> SemiclassicalComparison:
    """Free-particle comparison: classical Van Vleck density vs |K|^2.

    With a single classical path the sum over path pairs has no cross terms,
    so the interference rho_C - rho_Q vanishes identically.
    """
    x = np.asarray(x_grid, dtype=float)
    rho_c = np.full_like(x, classical_density_free(m, t))
    rho_q = np.abs(free_propagator(m, 0.0, x, t)) ** 2
    return SemiclassicalComparison(x_grid=x, rho_C=rho_c, rho_Q=rho_q,
                                   interference=rho_c - rho_q)


@dataclass(frozen=True, eq=False)
class TwoSourceToy:
    x_grid: np.ndarray
    total: np.ndarray
    incoherent: np.ndarray
    cross_term: np.ndarray


def two_source_interference(m: float, t: float, x_grid, x1: float,
                            x2: float) -> TwoSourceToy:
    """Superpose free propagation from two point sources.

    |psi1 + psi2|^2 = |psi1|^2 + |psi2|^2 + 2 Re(psi1 conj(psi2)); the cross
    term is the two-path interference contribution.
    """
    x = np.asarray(x_grid, dtype=float)
    psi1 = free_propagator(m, x1, x, t)
    psi2 = free_propagator(m, x2, x, t)
    total = np.abs(psi1 + psi2) ** 2
    incoherent = np.abs(psi1) ** 2 + np.abs(psi2) ** 2
    cross = 2.0 * np.real(psi1 * np.conj(psi2))
    return TwoSourceToy(x_grid=x, total=total, incoherent=incoherent,
                        cross_term=cross)
