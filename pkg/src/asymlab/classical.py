"""Classical N-body dynamics and the 1D barrier closed-form oracle.

The Lagrangian dynamics is integrated with velocity Verlet from a common
origin (an N-bigbang start), then re-sampled on a geometric time grid for
asymptotic-velocity extraction.  The square barrier is non-differentiable,
so the integrator sees a C2-smoothed ramp of width ``smoothing`` while the
closed-form trajectory oracle stays exact.  Scattering cross-sections follow
the impact-parameter Jacobian rho_I(s) * (s / sin Theta) * |ds/dTheta|, with
the deflection function computed by trajectory integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (ConfigError, NoRoot, NonMonotoneDeflection,
                     ParticleOverlap, StepUnstable)
from .geometry import (NBigBang, SampledTrajectory, SpaceTimePoint,
                       geometric_times)

DEFAULT_DT = 5e-4
DEFAULT_DRIFT_THRESHOLD = 1e-3


# ---------------------------------------------------------------------------
# potential catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Central potential V(r) from a small bounded catalog.

    ``value``/``derivative`` are the smoothed forms used by the integrator;
    ``sharp_value`` is the unsmoothed piecewise form (they differ only for
    the square barrier).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def value(self, r):
        return _VALUE[self.kind](np.asarray(r, dtype=float), self.params)

    def derivative(self, r):
        return _DERIV[self.kind](np.asarray(r, dtype=float), self.params)

    def sharp_value(self, r):
        if self.kind == "square_barrier":
            r = np.asarray(r, dtype=float)
            p = self.params
            return np.where(np.abs(r) <= p["a"], p["V0"], 0.0)
        return self.value(r)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    @property
    def is_singular(self) -> bool:
        return self.kind == "central_repulsive_power"

    @property
    def softening_floor(self) -> float:
        return self.params.get("r_floor", 0.0) if self.is_singular else 0.0


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _smoothstep_deriv(u):
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    out[inside] = 30.0 * ui * ui * (1.0 - ui) ** 2
    return out


def _barrier_value(r, p):
    a, delta, V0 = p["a"], p["smoothing"], p["V0"]
    u = (np.abs(r) - (a - delta)) / delta
    return V0 * (1.0 - _smoothstep(u))


def _barrier_deriv(r, p):
    a, delta, V0 = p["a"], p["smoothing"], p["V0"]
    u = (np.abs(r) - (a - delta)) / delta
    return -V0 * _smoothstep_deriv(np.asarray(u)) / delta


_VALUE = {
    "zero": lambda r, p: np.zeros_like(r),
    "square_barrier": _barrier_value,
    "gaussian": lambda r, p: p["V0"] * np.exp(-r * r / (2.0 * p["w"] ** 2)),
    "soft_coulomb": lambda r, p: p["q"] / np.sqrt(r * r + p["s"] ** 2),
    "central_repulsive_power": lambda r, p: p["k"] / np.maximum(r, p["r_floor"]) ** p["n"],
}

_DERIV = {
    "zero": lambda r, p: np.zeros_like(r),
    "square_barrier": _barrier_deriv,
    "gaussian": lambda r, p: -p["V0"] * r / p["w"] ** 2
    * np.exp(-r * r / (2.0 * p["w"] ** 2)),
    "soft_coulomb": lambda r, p: -p["q"] * r / (r * r + p["s"] ** 2) ** 1.5,
    "central_repulsive_power": lambda r, p: -p["n"] * p["k"]
    / np.maximum(r, p["r_floor"]) ** (p["n"] + 1),
}


def zero_potential() -> PotentialSpec:
    return PotentialSpec("zero")


def square_barrier(V0: float, a: float,
                   smoothing: Optional[float] = None) -> PotentialSpec:
    if V0 <= 0.0 or a <= 0.0:
        raise ConfigError("square barrier needs V0 > 0 and a > 0")
    if smoothing is None:
        smoothing = 1e-3 * a
    if not 0.0 < smoothing < a:
        raise ConfigError("smoothing width must be in (0, a)")
    return PotentialSpec("square_barrier",
                         {"V0": V0, "a": a, "smoothing": smoothing})


def gaussian_potential(V0: float, w: float) -> PotentialSpec:
    if w <= 0.0:
        raise ConfigError("gaussian width must be positive")
    return PotentialSpec("gaussian", {"V0": V0, "w": w})


def soft_coulomb(q: float, s: float) -> PotentialSpec:
    if s <= 0.0:
        raise ConfigError("soft-coulomb softening must be positive")
    return PotentialSpec("soft_coulomb", {"q": q, "s": s})


def central_repulsive_power(k: float, n: int,
                            r_floor: float = 1e-6) -> PotentialSpec:
    if k <= 0.0 or n < 1:
        raise ConfigError("power potential needs k > 0 and n >= 1")
    return PotentialSpec("central_repulsive_power",
                         {"k": k, "n": int(n), "r_floor": r_floor})


_POTENTIAL_BUILDERS = {
    "zero": zero_potential,
    "square_barrier": square_barrier,
    "gaussian": gaussian_potential,
    "soft_coulomb": soft_coulomb,
    "central_repulsive_power": central_repulsive_power,
}


def potential_from_json(spec: dict) -> PotentialSpec:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("potential spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind not in _POTENTIAL_BUILDERS:
        raise ConfigError(f"unknown potential {kind!r}; "
                          f"catalog: {sorted(_POTENTIAL_BUILDERS)}")
    try:
        return _POTENTIAL_BUILDERS[kind](**spec.get("params", {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for potential {kind!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# system specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Masses plus pair potentials V_ij(|x_i - x_j|) and optional external
    central potentials V_i(|x_i|).

    The pair-potential Lagrangian covers interacting N-bigbangs; external
    central terms carry the single-particle barrier and scattering setups.
    """

    masses: tuple
    pair_potentials: dict = field(default_factory=dict)
    external_potentials: dict = field(default_factory=dict)

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        if not masses or any(m <= 0.0 for m in masses):
            raise ConfigError("masses must be positive")
        pairs = {}
        for key, pot in self.pair_potentials.items():
            i, j = sorted(int(k) for k in key)
            if not (0 <= i < j < len(masses)):
                raise ConfigError(f"bad pair index {key}")
            pairs[(i, j)] = pot
        ext = {int(k): v for k, v in self.external_potentials.items()}
        for i in ext:
            if not 0 <= i < len(masses):
                raise ConfigError(f"bad external potential index {i}")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "pair_potentials", pairs)
        object.__setattr__(self, "external_potentials", ext)

    @property
    def n(self) -> int:
        return len(self.masses)


def system_from_json(spec: dict) -> SystemSpec:
    try:
        masses = spec["masses"]
    except (KeyError, TypeError) as exc:
        raise ConfigError("system spec needs a 'masses' list") from exc
    pairs = {}
    for entry in spec.get("pair_potentials", []):
        pairs[(entry["i"], entry["j"])] = potential_from_json(entry["potential"])
    ext = {}
    for entry in spec.get("external_potentials", []):
        ext[entry["i"]] = potential_from_json(entry["potential"])
    return SystemSpec(masses=tuple(masses), pair_potentials=pairs,
                      external_potentials=ext)


# ---------------------------------------------------------------------------
# velocity Verlet integration of an N-bigbang
# ---------------------------------------------------------------------------

def _forces(sys: SystemSpec, x: np.ndarray) -> np.ndarray:
    f = np.zeros_like(x)
    for i, pot in sys.external_potentials.items():
        r = float(np.linalg.norm(x[i]))
        if pot.is_singular and r < pot.softening_floor:
            raise ParticleOverlap(
                f"particle {i} inside softening floor of external potential")
        if r > 0.0:
            f[i] -= float(pot.derivative(r)) * x[i] / r
    for (i, j), pot in sys.pair_potentials.items():
        d = x[i] - x[j]
        r = float(np.linalg.norm(d))
        if pot.is_singular and r < pot.softening_floor:
            raise ParticleOverlap(f"particles {i},{j} inside softening floor")
        if r > 0.0:
            g = float(pot.derivative(r)) / r
            f[i] -= g * d
            f[j] += g * d
    return f


def _potential_energy(sys: SystemSpec, x: np.ndarray) -> float:
    v = 0.0
    for i, pot in sys.external_potentials.items():
        v += float(pot.value(np.linalg.norm(x[i])))
    for (i, j), pot in sys.pair_potentials.items():
        v += float(pot.value(np.linalg.norm(x[i] - x[j])))
    return v


def integrate_nbigbang(sys: SystemSpec, v_I, t_final: float,
                       dt: float = DEFAULT_DT,
                       drift_threshold: float = DEFAULT_DRIFT_THRESHOLD,
                       grid_decades: int = 3,
                       grid_ratio: float = 1.25,
                       energy_stride: int = 20) -> NBigBang:
    """Velocity Verlet from the common origin (0, 0) with initial velocities
    ``v_I`` (shape (N, 3) or flat 3N), re-gridded geometrically.

    ``dt`` must resolve the sharpest potential feature (for the smoothed
    barrier: several steps across the ramp width).  Energy drift is sampled
    every ``energy_stride`` steps and recorded in ``meta['energy_drift']``;
    :class:`StepUnstable` is raised when it exceeds ``drift_threshold``.
    """
    if t_final <= 0.0 or dt <= 0.0:
        raise ValueError("t_final and dt must be positive")
    v_I = np.asarray(v_I, dtype=float)
    if v_I.ndim == 1:
        if v_I.size % 3:
            raise ValueError("flat initial velocities must have length 3N")
        v_I = v_I.reshape(-1, 3)
    if v_I.shape[0] != sys.n:
        raise ValueError("initial velocities must match the number of masses")

    m = np.asarray(sys.masses)[:, None]
    steps = int(np.ceil(t_final / dt))
    dt = t_final / steps
    half = 0.5 * dt / m
    x = np.zeros_like(v_I)
    v = v_I.copy()
    f = _forces(sys, x)
    e0 = float(0.5 * np.sum(m * v * v)) + _potential_energy(sys, x)
    e_scale = max(abs(e0), float(0.5 * np.sum(m * v * v)), 1e-12)

    history = np.empty((steps + 1, sys.n, 3))
    history[0] = x
    drift = 0.0
    for k in range(steps):
        v += half * f
        x += dt * v
        f = _forces(sys, x)
        v += half * f
        history[k + 1] = x
        if k % energy_stride == 0 or k == steps - 1:
            e = float(0.5 * np.sum(m * v * v)) + _potential_energy(sys, x)
            drift = max(drift, abs(e - e0) / e_scale)
    if drift > drift_threshold:
        raise StepUnstable(f"relative energy drift {drift:.3g} exceeds "
                           f"threshold {drift_threshold:.3g}")

    t_hist = np.linspace(0.0, t_final, steps + 1)
    t_geo = geometric_times(t_final * 10.0 ** (-grid_decades), t_final,
                            grid_ratio)
    times = np.concatenate([[0.0], t_geo])
    trajs = []
    for i in range(sys.n):
        pos = np.column_stack([
            np.interp(times, t_hist, history[:, i, c]) for c in range(3)])
        trajs.append(SampledTrajectory(times, pos))
    origin = SpaceTimePoint(0.0, np.zeros(3))
    return NBigBang(origin=origin, trajectories=tuple(trajs),
                    meta={"energy_drift": drift, "dt": dt, "t_final": t_final})


def sample_initial_velocities(window_lo, window_hi, n_samples: int,
                              seed: int) -> np.ndarray:
    """Uniform v_I samples in a box, one spawned stream per sample so the
    result is independent of evaluation order."""
    lo = np.asarray(window_lo, dtype=float)
    hi = np.asarray(window_hi, dtype=float)
    streams = np.random.SeedSequence(seed).spawn(n_samples)
    return np.stack([
        np.random.default_rng(s).uniform(lo, hi) for s in streams])


# ---------------------------------------------------------------------------
# the 1D square barrier in closed form
# ---------------------------------------------------------------------------

def barrier_trajectory_oracle(m: float, V0: float, a: float, v_I, t):
    """Exact piecewise trajectory for a particle started at the origin on
    top of the barrier: x = v_I t inside, then the outgoing branch with exit
    speed sqrt(v_I^2 + 2 V0 / m).  Mirrored for v_I < 0; x = 0 for v_I = 0.
    """
    if m <= 0.0 or V0 <= 0.0 or a <= 0.0:
        raise ValueError("barrier parameters must be positive")
    v_I = np.asarray(v_I, dtype=float)
    t = np.asarray(t, dtype=float)
    sign = np.sign(v_I)
    speed = np.abs(v_I)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_exit = np.where(speed > 0.0, a / np.where(speed > 0.0, speed, 1.0),
                          np.inf)
        v_out = np.sqrt(speed * speed + 2.0 * V0 / m)
        inside = speed * t
        outside = a + (t - t_exit) * v_out
    x = np.where(t <= t_exit, inside, outside)
    return sign * np.where(speed > 0.0, x, 0.0)


def omega_V_barrier(m: float, V0: float, v_I):
    """Asymptotic velocity map printed as sign(v_I) (|v_I| + sqrt(2 V0/m)).

    Kept exactly in its printed form; the trajectory-consistent variant is
    :func:`omega_V_from_trajectory`, and the two disagree away from v_I -> 0.
    """
    v_I = np.asarray(v_I, dtype=float)
    s = np.sqrt(2.0 * V0 / m)
    return np.where(v_I == 0.0, 0.0, np.sign(v_I) * (np.abs(v_I) + s))


def omega_V_from_trajectory(m: float, V0: float, v_I):
    """Asymptotic velocity implied by the closed-form trajectory:
    sign(v_I) sqrt(v_I^2 + 2 V0 / m), with 0 at v_I = 0."""
    v_I = np.asarray(v_I, dtype=float)
    out = np.sign(v_I) * np.sqrt(v_I * v_I + 2.0 * V0 / m)
    return np.where(v_I == 0.0, 0.0, out)


@dataclass(frozen=True, eq=False)
class DeltaCBarrier:
    """The attainable asymptotic velocities (-inf, -s) u {0} u (s, +inf)."""

    threshold: float

    def contains(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return (np.abs(v) > self.threshold) | (v == 0.0)

    @property
    def components(self):
        s = self.threshold
        return ((-np.inf, -s), (0.0,), (s, np.inf))


def delta_C_barrier(m: float, V0: float) -> DeltaCBarrier:
    if V0 <= 0.0 or m <= 0.0:
        raise ValueError("need V0 > 0 and m > 0")
    return DeltaCBarrier(threshold=float(np.sqrt(2.0 * V0 / m)))


# ---------------------------------------------------------------------------
# asymptotic boundary conditions for the barrier
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryConditionSolve:
    v: float
    t_list: np.ndarray
    v_I_of_t: np.ndarray
    v_I_limit: float
    degenerate: bool


def _boundary_equation(v_I, t, v, m, V0, a):
    return a + (t - a / v_I) * np.sqrt(v_I * v_I + 2.0 * V0 / m) - v * t


def solve_asymptotic_boundary_condition(m: float, V0: float, a: float,
                                        v: float,
                                        t_list: Sequence[float]) -> BoundaryConditionSolve:
    """Solve the boundary condition x(t) = v t for the initial velocity at
    each t, then extrapolate t -> infinity.

    For |v| above sqrt(2 V0 / m) the limit is sqrt(v^2 - 2 V0 / m) (with the
    sign of v); below it the whole range degenerates onto the v_I -> 0
    trajectory and the solution decays like 1/t.
    """
    t_arr = np.asarray(sorted(t_list), dtype=float)
    if t_arr.size == 0 or np.any(t_arr <= 0.0):
        raise ValueError("t_list must contain positive times")
    s = np.sqrt(2.0 * V0 / m)
    degenerate = abs(v) <= s

    if v == 0.0:
        vals = np.zeros_like(t_arr)
        return BoundaryConditionSolve(v=v, t_list=t_arr, v_I_of_t=vals,
                                      v_I_limit=0.0, degenerate=True)

    target = abs(v)
    vals = np.empty_like(t_arr)
    for k, t in enumerate(t_arr):
        lo = 1e-14
        hi = max(target, 1e-6)
        expand = 0
        while _boundary_equation(hi, t, target, m, V0, a) <= 0.0:
            hi *= 2.0
            expand += 1
            if expand > 60:
                raise NoRoot(f"no bracket for v={v} at t={t}")
        vals[k] = brentq(_boundary_equation, lo, hi,
                         args=(t, target, m, V0, a), xtol=1e-15, rtol=1e-15)
    vals *= np.sign(v)

    limit = _richardson_inverse_t(t_arr, vals)
    return BoundaryConditionSolve(v=v, t_list=t_arr, v_I_of_t=vals,
                                  v_I_limit=limit, degenerate=degenerate)


def _richardson_inverse_t(t: np.ndarray, y: np.ndarray) -> float:
    """Extrapolate y(t) -> y(inf) assuming an expansion in powers of 1/t.

    Uses up to two Richardson levels on the trailing geometric tail; falls
    back to the last value for short or non-geometric inputs.
    """
    if t.size < 2:
        return float(y[-1])
    r = t[-1] / t[-2]
    level1 = (r * y[-1] - y[-2]) / (r - 1.0)
    if t.size < 3 or abs(t[-2] / t[-3] - r) > 0.01 * r:
        return float(level1)
    level1_prev = (r * y[-2] - y[-3]) / (r - 1.0)
    r2 = r * r
    return float((r2 * level1 - level1_prev) / (r2 - 1.0))


# ---------------------------------------------------------------------------
# scattering: deflection function and cross-sections
# ---------------------------------------------------------------------------

def _characteristic_radius(potential: PotentialSpec, E: float) -> float:
    p = potential.params
    if potential.kind == "central_repulsive_power":
        return (p["k"] / E) ** (1.0 / p["n"])
    if potential.kind == "gaussian":
        return p["w"]
    if potential.kind == "soft_coulomb":
        return max(p["s"], abs(p["q"]) / E)
    if potential.kind == "square_barrier":
        return p["a"]
    return 1.0


def deflection_function(potential: PotentialSpec, E: float, s_values,
                        m: float = 1.0, r_start: Optional[float] = None,
                        dt: Optional[float] = None) -> np.ndarray:
    """Deflection angle Theta(s) by batched trajectory integration.

    All impact parameters are integrated simultaneously; each particle
    starts at z = -r_start with speed sqrt(2 E / m) along +z and runs until
    every particle is outside r_start again and outgoing.
    """
    if potential.is_zero:
        raise NonMonotoneDeflection("zero potential scatters nothing")
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    if np.any(s_values < 0.0):
        raise ValueError("impact parameters must be nonnegative")
    v_inf = np.sqrt(2.0 * E / m)
    R = _characteristic_radius(potential, E)
    if r_start is None:
        r_start = max(10.0 * R, 2.0 * float(np.max(s_values)), 5.0)
    if dt is None:
        dt = 1e-3 * R / v_inf

    n = s_values.size
    x = np.zeros((n, 3))
    x[:, 0] = s_values
    x[:, 2] = -r_start
    v = np.zeros((n, 3))
    v[:, 2] = v_inf

    def forces(pos):
        r = np.linalg.norm(pos, axis=1)
        r_safe = np.maximum(r, 1e-300)
        if potential.is_singular and np.any(r < potential.softening_floor):
            raise ParticleOverlap("scattering trajectory hit softening floor")
        g = potential.derivative(r) / r_safe
        return -g[:, None] * pos

    f = forces(x)
    max_steps = int(np.ceil(6.0 * r_start / (v_inf * dt)))
    for _ in range(max_steps):
        v += 0.5 * dt * f / m
        x += dt * v
        f = forces(x)
        v += 0.5 * dt * f / m
        r = np.linalg.norm(x, axis=1)
        outgoing = np.einsum("ij,ij->i", x, v) > 0.0
        if np.all((r > r_start) & outgoing):
            break
    else:
        raise StepUnstable("deflection integration did not escape")

    v_hat = v / np.linalg.norm(v, axis=1, keepdims=True)
    return np.arccos(np.clip(v_hat[:, 2], -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class CrossSectionResult:
    theta_grid: np.ndarray
    sigma: np.ndarray
    rho_S: np.ndarray
    rho_I: np.ndarray
    s_of_theta: np.ndarray
    covered: np.ndarray
    s_grid: np.ndarray
    theta_of_s: np.ndarray
    intensity: float


def _as_density(rho_I) -> Callable[[np.ndarray], np.ndarray]:
    if rho_I is None:
        return lambda s: np.ones_like(s)
    if np.isscalar(rho_I):
        return lambda s: np.full_like(s, float(rho_I))
    return rho_I


def classical_cross_section(potential: PotentialSpec, E: float,
                            rho_I, theta_grid, s_grid=None, m: float = 1.0,
                            deflection=None) -> CrossSectionResult:
    """Differential cross-section from the impact-parameter Jacobian.

    Theta(s) is computed on ``s_grid`` (trajectory integration), required to
    be strictly monotone; ds/dTheta comes from central differences.  With
    uniform incident density the result is the textbook cross-section; a
    general ``rho_I`` realizes a nonuniform incident flux.
    """
    if s_grid is None:
        R = _characteristic_radius(potential, E)
        s_grid = np.linspace(0.05 * R, 1.5 * R, 40)
    s_grid = np.asarray(s_grid, dtype=float)
    theta_of_s = (deflection_function(potential, E, s_grid, m=m)
                  if deflection is None else np.asarray(deflection, dtype=float))

    dtheta = np.diff(theta_of_s)
    if not (np.all(dtheta < 0.0) or np.all(dtheta > 0.0)):
        raise NonMonotoneDeflection(
            "deflection angle is not monotone on the probed impact "
            "parameters (rainbow angle present)")
    if np.ptp(theta_of_s) < 1e-12:
        raise NonMonotoneDeflection("deflection function is degenerate")

    # 3-point central differences for ds/dTheta on the s-grid
    ds_dtheta_grid = np.gradient(s_grid, theta_of_s)

    theta_grid = np.asarray(theta_grid, dtype=float)
    lo, hi = min(theta_of_s[0], theta_of_s[-1]), max(theta_of_s[0], theta_of_s[-1])
    covered = (theta_grid >= lo) & (theta_grid <= hi)

    order = np.argsort(theta_of_s)
    s_of_theta = np.interp(theta_grid, theta_of_s[order], s_grid[order],
                           left=np.nan, right=np.nan)
    ds_dtheta = np.interp(theta_grid, theta_of_s[order], ds_dtheta_grid[order],
                          left=np.nan, right=np.nan)

    density = _as_density(rho_I)
    rho_I_vals = density(s_of_theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho_S = rho_I_vals * s_of_theta / np.sin(theta_grid) * np.abs(ds_dtheta)
    rho_S = np.where(covered, rho_S, 0.0)

    # reference intensity: incoming particles per unit area over the probed
    # annulus, so uniform density rho_I = I gives sigma = rho_S / I
    s_samples = np.linspace(s_grid[0], s_grid[-1], 257)
    w = density(s_samples) * s_samples
    area_flux = np.trapezoid(w, s_samples)
    area = 0.5 * (s_grid[-1] ** 2 - s_grid[0] ** 2)
    intensity = float(area_flux / area) if area > 0.0 else 1.0
    sigma = rho_S / intensity if intensity > 0.0 else np.zeros_like(rho_S)

    return CrossSectionResult(theta_grid=theta_grid, sigma=sigma, rho_S=rho_S,
                              rho_I=np.where(covered, rho_I_vals, 0.0),
                              s_of_theta=s_of_theta, covered=covered,
                              s_grid=s_grid, theta_of_s=theta_of_s,
                              intensity=intensity)


def monte_carlo_cross_section(potential: PotentialSpec, E: float,
                              n_samples: int, s_min: float, s_max: float,
                              theta_edges, seed: int, m: float = 1.0,
                              deflection_table=None):
    """Histogram oracle for the cross-section: impact parameters sampled
    uniformly in area measure, angles read from a deflection table, counts
    binned per solid angle.  Returns (sigma, sigma_err) per bin.

    The dynamics (the deflection table) is shared with the Jacobian route;
    the Jacobian itself is not used, which is the point of the oracle.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(s_min ** 2, s_max ** 2, size=n_samples)
    s = np.sqrt(u)
    if deflection_table is None:
        s_table = np.linspace(s_min, s_max, 201)
        theta_table = deflection_function(potential, E, s_table, m=m)
    else:
        s_table, theta_table = deflection_table
    theta = np.interp(s, s_table, theta_table)

    theta_edges = np.asarray(theta_edges, dtype=float)
    counts, _ = np.histogram(theta, bins=theta_edges)
    solid_angle = 2.0 * np.pi * (np.cos(theta_edges[:-1])
                                 - np.cos(theta_edges[1:]))
    solid_angle = np.abs(solid_angle)
    area = np.pi * (s_max ** 2 - s_min ** 2)
    sigma = counts * area / (n_samples * solid_angle)
    sigma_err = np.sqrt(np.maximum(counts, 1.0)) * area / (n_samples * solid_angle)
    return sigma, sigma_err


@dataclass(frozen=True, eq=False)
class EmissionDensityResult:
    theta_emission: np.ndarray
    rho_E: np.ndarray
    s_grid: np.ndarray
    rho_I: np.ndarray
    theta_of_s: np.ndarray


def reverse_emission_density(potential: PotentialSpec, E: float,
                             rho_S: Callable[[np.ndarray], np.ndarray],
                             z0: float, s_grid=None,
                             m: float = 1.0) -> EmissionDensityResult:
    """Invert the scattering Jacobian: from a target scattered density
    rho_S(Theta) recover the incident density rho_I(s) and the source
    emission density rho_E(theta) with theta = s / |z0|.
    """
    if potential.is_zero:
        raise NonMonotoneDeflection("zero potential scatters nothing")
    if s_grid is None:
        R = _characteristic_radius(potential, E)
        s_grid = np.linspace(0.05 * R, 1.5 * R, 40)
    s_grid = np.asarray(s_grid, dtype=float)
    theta_of_s = deflection_function(potential, E, s_grid, m=m)
    dtheta = np.diff(theta_of_s)
    if not (np.all(dtheta < 0.0) or np.all(dtheta > 0.0)):
        raise NonMonotoneDeflection("deflection angle is not monotone")

    dtheta_ds = np.gradient(theta_of_s, s_grid)
    rho_S_vals = np.asarray(rho_S(theta_of_s), dtype=float)
    rho_I_vals = rho_S_vals * np.sin(theta_of_s) / s_grid * np.abs(dtheta_ds)
    return EmissionDensityResult(theta_emission=s_grid / abs(z0),
                                 rho_E=rho_I_vals, s_grid=s_grid,
                                 rho_I=rho_I_vals, theta_of_s=theta_of_s)
