"""Space-time geometry: trajectories, asymptotic velocities, and the
classification of causal transformations by their behavior at time infinity.

Trajectories are sampled on geometric time grids so that the t -> infinity
limit is probed with uniform per-decade information.  The limit gamma(t)/t is
refined by fitting the decay model ``e(t) = v + c t^-p`` over the trailing
decades; oscillation (the signature of a non-regular trajectory) is detected
from the within-decade spread of the raw estimates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (NonCausal, NonPositiveTime, NotConverged, NotRegular,
                     TooFewSamples)
from .transforms import CausalTransform, invert_time_map

DEFAULT_GRID_RATIO = 1.25
MIN_SEPARATION = 1e-9

_P_GRID = np.linspace(0.1, 3.0, 30)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpaceTimePoint:
    """A point (t, x) of Galilean space-time, x a 3-vector."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (3,):
            raise ValueError("position must be a 3-vector")
        if not (np.isfinite(self.t) and np.all(np.isfinite(x))):
            raise ValueError("space-time point must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)


@dataclass(frozen=True, eq=False)
class SampledTrajectory:
    """Future-directed semitrajectory sampled at strictly increasing times."""

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise TooFewSamples("need at least 2 samples")
        if x.shape != (t.size, 3):
            raise ValueError("positions must have shape (n, 3)")
        if not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValueError("samples must be finite")
        t.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def origin(self) -> SpaceTimePoint:
        return SpaceTimePoint(self.t0, self.positions[0])

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True, eq=False)
class NBigBang:
    """N semitrajectories sharing a common origin, disjoint elsewhere.

    Disjointness is certified only on shared sample times with a minimum
    separation threshold; the sampled representation cannot do better.
    """

    origin: SpaceTimePoint
    trajectories: tuple
    meta: Optional[dict] = None

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise ValueError("an N-bigbang needs at least one trajectory")
        for traj in trajs:
            if abs(traj.t0 - self.origin.t) > 1e-12 or \
                    np.max(np.abs(traj.positions[0] - self.origin.x)) > 1e-9:
                raise ValueError("all trajectories must start at the origin")
        _check_disjoint(trajs, self.origin.t)
        object.__setattr__(self, "trajectories", trajs)

    @property
    def n(self) -> int:
        return len(self.trajectories)


def _check_disjoint(trajs, t_origin: float, min_sep: float = MIN_SEPARATION):
    for i in range(len(trajs)):
        for j in range(i + 1, len(trajs)):
            ti, tj = trajs[i].times, trajs[j].times
            shared, ia, ja = np.intersect1d(ti, tj, return_indices=True)
            keep = shared > t_origin
            if not np.any(keep):
                continue
            d = np.linalg.norm(
                trajs[i].positions[ia[keep]] - trajs[j].positions[ja[keep]],
                axis=1)
            if np.min(d) < min_sep:
                raise ValueError(
                    f"trajectories {i} and {j} are not disjoint at sampled "
                    f"t > origin (min separation {np.min(d):.3g})")


@dataclass(frozen=True, eq=False)
class AsymptoticVelocityEstimate:
    """Result of the gamma(t)/t limit extraction."""

    value: np.ndarray
    residual: float
    converged: bool
    decade_delta: float = np.nan
    exponent: float = np.nan

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "value", v)


@dataclass(frozen=True, eq=False)
class IntervalBox:
    """Half-open axis-aligned box (a, b] in velocity space."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be equal-length vectors")
        if not np.all(hi > lo):
            raise ValueError("box sides must be strictly positive")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return self.lo.size

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, points) -> np.ndarray:
        """Half-open membership lo < p <= hi, vectorized over rows."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p > self.lo) & (p <= self.hi), axis=1)

    def shrink(self, eps: float) -> "IntervalBox":
        """The interval I_minus_eps = (a + eps, b - eps]."""
        if not 0.0 < eps < float(np.min(self.sides)) / 2.0:
            raise ValueError("eps must be in (0, min side / 2)")
        return IntervalBox(self.lo + eps, self.hi - eps)

    def grow(self, eps: float) -> "IntervalBox":
        """The interval I_plus_eps = (a - eps, b + eps]."""
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        return IntervalBox(self.lo - eps, self.hi + eps)

    def scaled(self, t: float) -> "IntervalBox":
        """Spatial cross-section {v t : v in box} of the cone at time t > 0."""
        if t <= 0.0:
            raise NonPositiveTime("cone cross-sections require t > 0")
        return IntervalBox(self.lo * t, self.hi * t)

    def partition(self, per_axis) -> list:
        """Uniform partition into a grid of half-open boxes."""
        counts = np.broadcast_to(np.asarray(per_axis, dtype=int),
                                 (self.dimension,))
        edges = [np.linspace(self.lo[i], self.hi[i], counts[i] + 1)
                 for i in range(self.dimension)]
        boxes = []
        for idx in np.ndindex(*counts):
            lo = np.array([edges[i][idx[i]] for i in range(self.dimension)])
            hi = np.array([edges[i][idx[i] + 1] for i in range(self.dimension)])
            boxes.append(IntervalBox(lo, hi))
        return boxes


@dataclass(frozen=True, eq=False)
class ConePatch:
    """Cone region swept by a velocity box: at time t the set {v t : v in base}."""

    base: IntervalBox

    def at(self, t: float) -> IntervalBox:
        return self.base.scaled(t)


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------

def geometric_times(t0: float, t_final: float,
                    ratio: float = DEFAULT_GRID_RATIO) -> np.ndarray:
    """Geometric grid t0 * ratio^k covering [t0, t_final], endpoint included."""
    if t0 <= 0.0 or t_final <= t0 or ratio <= 1.0:
        raise ValueError("need 0 < t0 < t_final and ratio > 1")
    n = int(np.ceil(np.log(t_final / t0) / np.log(ratio)))
    t = t0 * ratio ** np.arange(n + 1)
    t[-1] = t_final
    return t


def ray_trajectory(v, t0: float = 1.0, t_final: float = 1e5,
                   ratio: float = DEFAULT_GRID_RATIO) -> SampledTrajectory:
    """The cone semitrajectory v^c: straight ray x = v t."""
    t = geometric_times(t0, t_final, ratio)
    v = np.asarray(v, dtype=float)
    return SampledTrajectory(t, np.outer(t, v))


def sampled_from_function(fn, t0: float = 1.0, t_final: float = 1e5,
                          ratio: float = DEFAULT_GRID_RATIO) -> SampledTrajectory:
    """Sample a vectorized function t -> x(t) on a geometric grid."""
    t = geometric_times(t0, t_final, ratio)
    x = np.asarray(fn(t), dtype=float)
    if x.shape != (t.size, 3):
        raise ValueError("trajectory function must return shape (n, 3)")
    return SampledTrajectory(t, x)


# ---------------------------------------------------------------------------
# asymptotic velocity estimation
# ---------------------------------------------------------------------------

def _power_fit(t: np.ndarray, e: np.ndarray):
    """Least-squares fit of e(t) = v + c t^-p with p scanned on a grid.

    Returns (v, p, sse).  For each candidate p the model is linear in (v, c),
    so a plain lstsq solves it; the best p is the one with the smallest
    residual, which realizes the log-residual decay fit.
    """
    best = None
    for p in _P_GRID:
        design = np.column_stack([np.ones_like(t), t ** (-p)])
        coef, *_ = np.linalg.lstsq(design, e, rcond=None)
        sse = float(np.sum((design @ coef - e) ** 2))
        if best is None or sse < best[2]:
            best = (coef[0], float(p), sse)
    return best


def estimate_asymptotic_velocity(traj: SampledTrajectory,
                                 tol: float = 1e-6) -> AsymptoticVelocityEstimate:
    """Extract the limit of gamma(t)/t from a sampled semitrajectory.

    The raw per-sample estimates ``e_k = x_k / t_k`` are grouped into decades
    (t in (T/10^(j+1), T/10^j]).  Oscillation is flagged when the
    within-decade spread fails to decay between the last two decades; in that
    case :class:`NotConverged` is raised.  Otherwise the value is the
    power-law fit over the trailing two decades, and ``converged`` records
    whether the fit agrees with the fit ending one decade earlier to within
    ``tol``.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    mask = traj.times > 0.0
    t = traj.times[mask]
    x = traj.positions[mask]
    if t.size < 4:
        raise TooFewSamples("need at least 4 samples with t > 0")
    e = x / t[:, None]
    if not np.all(np.isfinite(e)):
        raise NotConverged("non-finite velocity estimates")

    T = t[-1]
    decade = np.floor(np.log10(T / t) - 1e-12).astype(int)
    decade = np.clip(decade, 0, None)

    def members(j):
        return np.nonzero(decade == j)[0]

    idx0, idx1 = members(0), members(1)
    # Within-decade range (max - min per component) must decay decade over
    # decade for a regular trajectory.  A quiet decade (range below floor)
    # anywhere in the trailing window marks a transient, not oscillation, so
    # the flag requires every inspected decade to stay loud AND non-decaying.
    def decade_range(idx):
        if idx.size < 3:
            return None
        return float(np.max(e[idx].max(axis=0) - e[idx].min(axis=0)))

    spreads = [decade_range(members(j)) for j in range(3)]
    scale = max(1.0, float(np.linalg.norm(e[-1])))
    floor = max(tol, 1e-13 * scale)
    s0, s1, s2 = (spreads + [None, None, None])[:3]
    if s0 is not None and s1 is not None and s0 > floor and s1 > floor \
            and s0 >= 0.8 * s1:
        if s2 is None or (s2 > floor and s1 >= 0.8 * s2):
            raise NotConverged(
                "within-decade spread does not decay over the trailing "
                f"decades ({spreads}): trajectory is not asymptotically "
                "regular")

    def fit_over(lo, hi):
        window = (t > lo) & (t <= hi)
        if np.count_nonzero(window) < 4:
            return None
        return _power_fit(t[window], e[window])

    fit0 = fit_over(T / 10.0, T)
    if fit0 is None:
        raise TooFewSamples("trailing decade carries too few samples")
    value, exponent, _ = fit0

    decade_delta = np.nan
    converged = False
    fit1 = fit_over(T / 100.0, T / 10.0)
    if fit1 is not None:
        decade_delta = float(np.linalg.norm(fit0[0] - fit1[0]))
        converged = decade_delta < tol

    residual = float(np.linalg.norm(e[-1] - value))
    return AsymptoticVelocityEstimate(value=value, residual=residual,
                                      converged=converged,
                                      decade_delta=decade_delta,
                                      exponent=exponent)


def estimate_bigbang_velocity(bb: NBigBang, tol: float = 1e-6):
    """Per-trajectory asymptotic velocities of an N-bigbang, stacked (N, 3)."""
    estimates = [estimate_asymptotic_velocity(traj, tol)
                 for traj in bb.trajectories]
    values = np.stack([est.value for est in estimates])
    return values, estimates


# ---------------------------------------------------------------------------
# transformations acting on trajectories
# ---------------------------------------------------------------------------

def apply_transform(f: CausalTransform,
                    traj: SampledTrajectory) -> SampledTrajectory:
    """Image trajectory {(f_T(t), f_X(t, gamma(t)))}."""
    t_new = np.asarray(f.time_map(traj.times), dtype=float)
    if t_new.shape != traj.times.shape:
        raise NonCausal("time map must be vectorized over sample times")
    if not np.all(np.diff(t_new) > 0.0):
        raise NonCausal("time map is not strictly increasing on the samples")
    x_new = np.asarray(f.space_map(traj.times, traj.positions), dtype=float)
    return SampledTrajectory(t_new, x_new)


def transform_nbigbang(f: CausalTransform, bb: NBigBang) -> NBigBang:
    trajs = tuple(apply_transform(f, traj) for traj in bb.trajectories)
    return NBigBang(origin=trajs[0].origin, trajectories=trajs, meta=bb.meta)


def estimate_asymptotic_transform(f: CausalTransform, v, tol: float = 1e-4,
                                  t0: float = 1.0, t_final: float = 1e5,
                                  ratio: float = DEFAULT_GRID_RATIO) -> np.ndarray:
    """The induced velocity map f+(v), estimated on the transformed ray v^c.

    Raises :class:`NotRegular` when the limit does not settle.  When the
    instance carries a closed-form map, gross disagreement (beyond what the
    estimator can explain) triggers a warning, not an error.
    """
    ray = ray_trajectory(v, t0=t0, t_final=t_final, ratio=ratio)
    try:
        est = estimate_asymptotic_velocity(apply_transform(f, ray), tol)
    except NotConverged as exc:
        raise NotRegular(f"transform {f.name!r} is not asymptotically "
                         f"regular at v={np.asarray(v)}: {exc}") from exc
    if f.analytic_plus is not None:
        expected = np.asarray(f.analytic_plus(np.asarray(v, dtype=float)),
                              dtype=float)
        if np.linalg.norm(est.value - expected) > max(0.05, 100.0 * tol):
            warnings.warn(
                f"estimated asymptotic transform of {f.name!r} deviates from "
                f"its closed form by {np.linalg.norm(est.value - expected):.3g}",
                RuntimeWarning, stacklevel=2)
    return est.value


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

ASYMPTOTICALLY_IDENTICAL = "asymptotically_identical"
ASYMPTOTICALLY_EUCLIDEAN = "asymptotically_euclidean"
OTHER = "other"


@dataclass(frozen=True, eq=False)
class TransformClassification:
    kind: str
    rotation: np.ndarray
    v0: np.ndarray
    residual: float
    orthogonality_defect: float

    @property
    def is_identical(self) -> bool:
        return self.kind == ASYMPTOTICALLY_IDENTICAL

    @property
    def is_euclidean(self) -> bool:
        return self.kind in (ASYMPTOTICALLY_IDENTICAL, ASYMPTOTICALLY_EUCLIDEAN)


def default_probe_velocities() -> np.ndarray:
    """The 13 probes {0, +-e_i, (e_i +- e_j)/|.| for i<j}: symmetric and
    overdetermined for a 3D affine fit."""
    probes = [np.zeros(3)]
    eye = np.eye(3)
    for i in range(3):
        probes.append(eye[i])
        probes.append(-eye[i])
    for i in range(3):
        for j in range(i + 1, 3):
            for s in (1.0, -1.0):
                probes.append((eye[i] + s * eye[j]) / np.sqrt(2.0))
    return np.stack(probes[:13])


def classify_transform(f: CausalTransform, probe_velocities=None,
                       tol: Optional[float] = None, use_analytic: bool = True,
                       estimator_tol: float = 1e-4,
                       t_final: float = 1e5) -> TransformClassification:
    """Fit v -> R v - v0 to f+ on the probe set and classify.

    Euclidean requires the fitted matrix orthogonal (max-norm defect below
    tol) and fit residuals below tol; identical additionally requires R = I
    and v0 = 0.  Default tolerance: 1e-6 when the closed-form map is used,
    1e-3 for estimated maps.  :class:`NotRegular` propagates.
    """
    probes = (default_probe_velocities() if probe_velocities is None
              else np.atleast_2d(np.asarray(probe_velocities, dtype=float)))
    if probes.shape[0] < 13:
        raise ValueError("need at least 13 probe velocities")
    analytic = use_analytic and f.analytic_plus is not None
    if tol is None:
        tol = 1e-6 if analytic else 1e-3

    if analytic:
        images = np.stack([np.asarray(f.analytic_plus(p), dtype=float)
                           for p in probes])
    else:
        images = np.stack([estimate_asymptotic_transform(
            f, p, tol=estimator_tol, t_final=t_final) for p in probes])

    design = np.column_stack([probes, np.ones(probes.shape[0])])
    coef, *_ = np.linalg.lstsq(design, images, rcond=None)
    R = coef[:3].T
    v0 = -coef[3]
    residual = float(np.max(np.linalg.norm(design @ coef - images, axis=1)))
    defect = float(np.max(np.abs(R.T @ R - np.eye(3))))

    kind = OTHER
    if residual < tol and defect < tol:
        kind = ASYMPTOTICALLY_EUCLIDEAN
        if (np.max(np.abs(R - np.eye(3))) < tol
                and np.linalg.norm(v0) < tol):
            kind = ASYMPTOTICALLY_IDENTICAL
    return TransformClassification(kind=kind, rotation=R, v0=v0,
                                   residual=residual,
                                   orthogonality_defect=defect)


# ---------------------------------------------------------------------------
# compactification
# ---------------------------------------------------------------------------

def compactify(p: SpaceTimePoint):
    """h(t, x) = (1/t, x/t): maps [a, inf) x R^3 onto (0, 1/a] x V."""
    if p.t <= 0.0:
        raise NonPositiveTime("compactification requires t > 0")
    return 1.0 / p.t, p.x / p.t


def uncompactify(s: float, w) -> SpaceTimePoint:
    if s <= 0.0:
        raise NonPositiveTime("inverse compactification requires s > 0")
    return SpaceTimePoint(1.0 / s, np.asarray(w, dtype=float) / s)


def compactified_map(f: CausalTransform, s: float, w):
    """h . f . h^-1 evaluated at (s, w); regular at s -> 0 iff f is
    asymptotically regular, with limit (0, f+(w))."""
    p = uncompactify(s, w)
    t_new = float(np.atleast_1d(f.time_map(np.asarray([p.t])))[0])
    x_new = np.asarray(f.space_map(np.asarray([p.t]), p.x[None, :]),
                       dtype=float)[0]
    return compactify(SpaceTimePoint(t_new, x_new))


# ---------------------------------------------------------------------------
# cone sandwich
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SandwichReport:
    times: np.ndarray
    holds: np.ndarray
    max_displacement: np.ndarray
    t0: Optional[float]


def _box_lattice(box: IntervalBox, per_axis: int) -> np.ndarray:
    axes = [np.linspace(box.lo[i], box.hi[i], per_axis)
            for i in range(box.dimension)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def cone_sandwich_check(f: CausalTransform, box: IntervalBox, eps: float,
                        times: Sequence[float],
                        samples_per_axis: int = 5) -> SandwichReport:
    """Check I_minus_eps^c(t) <= f(I^c)(t) <= I_plus_eps^c(t) per time.

    At each t the lattice of rays v in I is pushed through f and read off at
    time t (inverting the time map where needed).  The upper inclusion is
    tested directly on the image samples; the lower inclusion is tested via
    the preimages of the I_minus_eps lattice when the transform carries an
    inverse, and otherwise via the sup-displacement criterion (displacement
    below eps implies both inclusions).
    """
    if box.dimension != 3:
        raise ValueError("sandwich check operates on 3D velocity boxes")
    if not 0.0 < eps < float(np.min(box.sides)) / 2.0:
        raise ValueError("eps must be in (0, min side / 2)")
    times = np.asarray(sorted(times), dtype=float)
    if np.any(times <= 0.0):
        raise ValueError("sandwich times must be positive")

    lattice = _box_lattice(box, samples_per_axis)
    inner = box.shrink(eps)
    outer = box.grow(eps)
    inner_lattice = _box_lattice(inner, samples_per_axis)
    has_inverse = (f.space_map_inverse is not None
                   and f.time_map_inverse is not None)

    holds = np.zeros(times.size, dtype=bool)
    max_disp = np.zeros(times.size)
    for k, t in enumerate(times):
        t_prime = invert_time_map(f, float(t))
        if t_prime <= 0.0:
            raise NonCausal(f"preimage time of t={t} is not positive")
        tp = np.full(lattice.shape[0], t_prime)
        images = np.asarray(f.space_map(tp, lattice * t_prime), dtype=float) / t
        disp = float(np.max(np.linalg.norm(images - lattice, axis=1)))
        max_disp[k] = disp
        upper_ok = bool(np.all(outer.contains(images)))
        if has_inverse:
            tt = np.full(inner_lattice.shape[0], t_prime)
            pre = np.asarray(
                f.space_map_inverse(tt, inner_lattice * t), dtype=float) / t_prime
            lower_ok = bool(np.all(box.contains(pre)))
        else:
            lower_ok = disp <= eps
        holds[k] = upper_ok and lower_ok

    t0 = None
    for k in range(times.size):
        if np.all(holds[k:]):
            t0 = float(times[k])
            break
    return SandwichReport(times=times, holds=holds,
                          max_displacement=max_disp, t0=t0)
