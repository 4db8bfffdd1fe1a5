"""Measure transfer along maps, quotient measures under group actions, and
the initial-condition measure constructions.

Measures are box-grid discretizations with uniform density per box; sigma
algebra claims reduce to box-refinement additivity.  Transfer along a map
uses adaptive box subdivision: pushforward assigns subdivided source mass to
target boxes once the image diameter resolves, pullback evaluates the target
measure on the image set and flags boxes whose image diameter refuses to
shrink (the signature of a discontinuity, where the plain pullback is wrong
and the time-limit construction must be used instead).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .classical import barrier_trajectory_oracle, omega_V_from_trajectory
from .errors import (ConfigError, DiscontinuityDetected, NotInvariant,
                     UnresolvedBoundary)
from .geometry import IntervalBox

_EDGE_NUDGE = 1e-9


# ---------------------------------------------------------------------------
# discrete measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative masses on non-overlapping half-open boxes, with uniform
    density inside each box.  ``unassigned`` tracks transfer mass that fell
    outside the box partition (kept for exact mass accounting)."""

    boxes: tuple
    masses: np.ndarray
    unassigned: float = 0.0

    def __post_init__(self):
        boxes = tuple(self.boxes)
        masses = np.asarray(self.masses, dtype=float)
        if len(boxes) != masses.size:
            raise ValueError("one mass per box required")
        if np.any(masses < -1e-15):
            raise ValueError("masses must be nonnegative")
        dims = {b.dimension for b in boxes}
        if len(dims) > 1:
            raise ValueError("boxes must share one dimension")
        _check_no_overlap(boxes)
        masses = np.maximum(masses, 0.0)
        masses.flags.writeable = False
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "masses", masses)

    @property
    def dimension(self) -> int:
        return self.boxes[0].dimension

    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def measure_of_box(self, lo, hi) -> float:
        """Measure of an arbitrary half-open box via per-axis overlap
        fractions of the uniform in-box densities."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        out = 0.0
        for box, mass in zip(self.boxes, self.masses):
            frac = 1.0
            for i in range(box.dimension):
                left = max(box.lo[i], lo[i])
                right = min(box.hi[i], hi[i])
                if right <= left:
                    frac = 0.0
                    break
                frac *= (right - left) / (box.hi[i] - box.lo[i])
            out += mass * frac
        return out

    def density_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for box, mass in zip(self.boxes, self.masses):
            inside = box.contains(pts)
            out[inside] = mass / box.volume
        return out

    def normalized(self) -> "DiscreteMeasure":
        total = self.total_mass()
        if total <= 0.0:
            raise ValueError("cannot normalize a zero measure")
        return DiscreteMeasure(self.boxes, self.masses / total)


def _check_no_overlap(boxes):
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            a, b = boxes[i], boxes[j]
            overlap = np.minimum(a.hi, b.hi) - np.maximum(a.lo, b.lo)
            if np.all(overlap > 1e-12 * np.maximum(a.sides, b.sides)):
                raise ValueError(f"boxes {i} and {j} overlap")


def uniform_measure(window: IntervalBox, per_axis=1,
                    density: float = 1.0) -> DiscreteMeasure:
    boxes = window.partition(per_axis)
    masses = np.array([density * b.volume for b in boxes])
    return DiscreteMeasure(tuple(boxes), masses)


def measure_from_density(window: IntervalBox, per_axis, fn,
                         quad_points: int = 33) -> DiscreteMeasure:
    """Box measure from a pointwise density, midpoint-quadratured per box."""
    boxes = window.partition(per_axis)
    masses = []
    for b in boxes:
        axes = [np.linspace(b.lo[i], b.hi[i], quad_points + 1)
                for i in range(b.dimension)]
        mids = [0.5 * (a[1:] + a[:-1]) for a in axes]
        grid = np.meshgrid(*mids, indexing="ij")
        vals = np.asarray(fn(*grid), dtype=float)
        cell = np.prod([a[1] - a[0] for a in axes])
        masses.append(float(np.sum(vals) * cell))
    return DiscreteMeasure(tuple(boxes), np.asarray(masses))


# ---------------------------------------------------------------------------
# measurable maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasurableMap:
    """Pointwise map between box spaces; ``forward`` is vectorized over rows
    of shape (k, dim_in) and returns (k, dim_out)."""

    forward: Callable[[np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int
    admits_pullback: bool = True
    name: str = "map"
    affine: Optional[tuple] = None  # (matrix, offset) when exactly affine

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self.forward(pts), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        return out


def identity_map(dim: int) -> MeasurableMap:
    return MeasurableMap(forward=lambda p: p, dim_in=dim, dim_out=dim,
                         name="identity",
                         affine=(np.eye(dim), np.zeros(dim)))


def linear_map(matrix, offset=None) -> MeasurableMap:
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    b = np.zeros(A.shape[0]) if offset is None else np.asarray(offset, float)
    return MeasurableMap(forward=lambda p: p @ A.T + b, dim_in=A.shape[1],
                         dim_out=A.shape[0], name="linear", affine=(A, b))


def barrier_velocity_map(m: float, V0: float) -> MeasurableMap:
    """Initial velocity -> asymptotic velocity for the 1D barrier, in the
    trajectory-consistent form sign(v) sqrt(v^2 + 2 V0 / m) with the
    discontinuity (and an atom image) at v = 0."""
    def fwd(p):
        return omega_V_from_trajectory(m, V0, p[:, 0])[:, None]

    return MeasurableMap(forward=fwd, dim_in=1, dim_out=1,
                         name="barrier_omega_V")


def _box_probe_points(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Corners (nudged inward on the open faces) plus the center."""
    side = hi - lo
    lo_in = lo + _EDGE_NUDGE * side
    corners = []
    for idx in np.ndindex(*(2,) * lo.size):
        corners.append(np.where(np.asarray(idx) == 0, lo_in, hi))
    corners.append(0.5 * (lo + hi))
    return np.stack(corners)


# ---------------------------------------------------------------------------
# pushforward
# ---------------------------------------------------------------------------

def default_target_grid(mu: DiscreteMeasure, f: MeasurableMap,
                        per_axis: int = 32) -> list:
    pts = np.concatenate([f(_box_probe_points(b.lo, b.hi))
                          for b in mu.boxes])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = 1e-9 * np.maximum(hi - lo, 1.0) + 1e-12
    window = IntervalBox(lo - pad, hi + pad)
    return window.partition(per_axis)


def pushforward(mu: DiscreteMeasure, f: MeasurableMap,
                target_boxes: Optional[Sequence[IntervalBox]] = None,
                max_depth: int = 48,
                unresolved_tol: float = 1e-9) -> DiscreteMeasure:
    """Transfer mass along ``f``: target mass is the source mass of the
    preimage, realized by subdividing source boxes until each image is
    smaller than an eighth of the smallest target side and assigning by the
    image of the center.

    Mass is conserved exactly: whatever lands outside the target partition
    accumulates in ``unassigned``.  Raises :class:`UnresolvedBoundary` when
    more than ``unresolved_tol`` of the total mass is still straddling at
    the subdivision limit.
    """
    if target_boxes is None:
        target_boxes = default_target_grid(mu, f)
    target_boxes = tuple(target_boxes)
    t_lo = np.stack([b.lo for b in target_boxes])
    t_hi = np.stack([b.hi for b in target_boxes])
    threshold = float(np.min(t_hi - t_lo)) / 8.0

    out = np.zeros(len(target_boxes))
    unassigned = 0.0
    unresolved = 0.0
    total = mu.total_mass()

    stack = [(b.lo.copy(), b.hi.copy(), float(m), 0)
             for b, m in zip(mu.boxes, mu.masses) if m > 0.0]
    while stack:
        lo, hi, mass, depth = stack.pop()
        images = f(_box_probe_points(lo, hi))
        diam = float(np.max(images.max(axis=0) - images.min(axis=0)))
        if diam < threshold or depth >= max_depth:
            if diam >= threshold:
                unresolved += mass
            center_img = images[-1]
            hit = np.nonzero(np.all((center_img > t_lo)
                                    & (center_img <= t_hi), axis=1))[0]
            if hit.size:
                out[hit[0]] += mass
            else:
                unassigned += mass
            continue
        axis = int(np.argmax(hi - lo))
        mid = 0.5 * (lo[axis] + hi[axis])
        lo_hi = hi.copy()
        lo_hi[axis] = mid
        hi_lo = lo.copy()
        hi_lo[axis] = mid
        stack.append((lo, lo_hi, 0.5 * mass, depth + 1))
        stack.append((hi_lo, hi, 0.5 * mass, depth + 1))

    if unresolved > unresolved_tol * max(total, 1e-300):
        raise UnresolvedBoundary(
            f"{unresolved:.3g} of {total:.3g} mass still straddles target "
            f"boundaries at depth {max_depth}")
    return DiscreteMeasure(target_boxes, out, unassigned=unassigned)


# ---------------------------------------------------------------------------
# pullback
# ---------------------------------------------------------------------------

def _image_intervals(f: MeasurableMap, lo, hi, resolution: float,
                     max_depth: int, stuck_limit: int = 6) -> list:
    """Cover the image of a box by small 1D intervals via adaptive
    subdivision; raise :class:`DiscontinuityDetected` when the image
    diameter fails to halve for ``stuck_limit`` consecutive levels."""
    out = []
    stack = [(np.asarray(lo, float), np.asarray(hi, float), np.inf, 0, 0)]
    while stack:
        b_lo, b_hi, parent_diam, depth, stuck = stack.pop()
        images = f(_box_probe_points(b_lo, b_hi))
        diam = float(images.max() - images.min())
        if diam <= resolution:
            out.append((float(images.min()), float(images.max())))
            continue
        stuck = stuck + 1 if diam > 0.55 * parent_diam else 0
        if stuck >= stuck_limit:
            raise DiscontinuityDetected(
                f"image diameter stuck near {diam:.3g} after {stuck} "
                "subdivision levels: box contains a discontinuity of the map")
        if depth >= max_depth:
            raise UnresolvedBoundary("pullback subdivision limit reached")
        axis = int(np.argmax(b_hi - b_lo))
        mid = 0.5 * (b_lo[axis] + b_hi[axis])
        left_hi = b_hi.copy()
        left_hi[axis] = mid
        right_lo = b_lo.copy()
        right_lo[axis] = mid
        stack.append((b_lo, left_hi, diam, depth + 1, stuck))
        stack.append((right_lo, b_hi, diam, depth + 1, stuck))
    return out


def _merge_intervals(intervals: list) -> list:
    if not intervals:
        return []
    intervals = sorted(intervals)
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= merged[-1][1] + 1e-300:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def pullback(mu_target: DiscreteMeasure, f: MeasurableMap,
             source_boxes: Sequence[IntervalBox],
             max_depth: int = 48) -> DiscreteMeasure:
    """Source mass of a box is the target measure of its image set.

    Valid only away from discontinuities of ``f``: a box whose image
    diameter does not shrink under subdivision raises
    :class:`DiscontinuityDetected`, directing callers to the time-limit
    transfer (:func:`corrected_transfer`).
    """
    if not f.admits_pullback:
        raise ConfigError(f"map {f.name!r} does not admit pullback")
    source_boxes = tuple(source_boxes)

    if f.affine is not None:
        A, b = f.affine
        masses = []
        for box in source_boxes:
            corners = np.stack([
                np.where(np.asarray(idx) == 0, box.lo, box.hi)
                for idx in np.ndindex(*(2,) * box.dimension)])
            images = corners @ A.T + b
            masses.append(mu_target.measure_of_box(images.min(axis=0),
                                                   images.max(axis=0)))
        return DiscreteMeasure(source_boxes, np.asarray(masses))

    if f.dim_out != 1:
        raise ConfigError("generic pullback supports 1D image spaces only")
    sides = np.concatenate([b.sides for b in mu_target.boxes])
    resolution = float(np.min(sides)) / 8.0
    masses = []
    for box in source_boxes:
        pieces = _merge_intervals(
            _image_intervals(f, box.lo, box.hi, resolution, max_depth))
        total = 0.0
        for lo, hi in pieces:
            if hi > lo:
                total += mu_target.measure_of_box([lo], [hi])
        masses.append(total)
    return DiscreteMeasure(source_boxes, np.asarray(masses))


# ---------------------------------------------------------------------------
# corrected transfer (time-limit construction)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransferResult:
    t_list: np.ndarray
    masses: np.ndarray
    limit: float
    limit_delta: float


def corrected_transfer(eta_provider: Callable[[float, float, float], float],
                       flow_map: Callable[[float, np.ndarray], np.ndarray],
                       box_I: IntervalBox, t_list: Sequence[float],
                       samples: int = 257) -> TransferResult:
    """Initial-velocity box mass as the t -> infinity limit of the spatial
    measure on the flowed image X_t(box).

    ``eta_provider(t, lo, hi)`` is the spatial measure at time t (supplied
    by the quantum module); ``flow_map(t, v)`` gives classical positions at
    time t for initial velocities v.  The image of the (connected) box under
    the continuous flow is the interval spanned by the sampled positions.
    """
    if box_I.dimension != 1:
        raise ConfigError("corrected transfer runs on 1D velocity boxes")
    t_arr = np.asarray(sorted(t_list), dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("transfer times must be positive")
    v = np.linspace(box_I.lo[0], box_I.hi[0], samples)
    masses = np.empty(t_arr.size)
    for k, t in enumerate(t_arr):
        x = np.asarray(flow_map(float(t), v), dtype=float)
        lo, hi = float(np.min(x)), float(np.max(x))
        masses[k] = eta_provider(float(t), lo, hi) if hi > lo else 0.0
    delta = abs(masses[-1] - masses[-2]) if t_arr.size >= 2 else np.nan
    return TransferResult(t_list=t_arr, masses=masses,
                          limit=float(masses[-1]), limit_delta=float(delta))


def barrier_flow_map(m: float, V0: float, a: float):
    """Classical flow X_t for the 1D barrier (positions at time t of
    trajectories started at the origin with initial velocity v)."""
    def flow(t, v):
        return barrier_trajectory_oracle(m, V0, a, v, t)

    return flow


def free_flow_map():
    def flow(t, v):
        return np.asarray(v, dtype=float) * t

    return flow


# ---------------------------------------------------------------------------
# quotient measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupActionSpec:
    """Group action on the plane with a finite Haar window.

    ``translations_along_axis``: translations along coordinate ``axis``;
    the window is an interval of shift amounts and its Haar mass is its
    length.  ``euclidean_on_V``: rotations about the origin (the compact
    part of the planar Euclidean group; the full group quotients the plane
    to a point); the window is an angle interval.
    """

    kind: str
    window: tuple
    axis: int = 0

    def __post_init__(self):
        if self.kind not in ("translations_along_axis", "euclidean_on_V"):
            raise ConfigError(f"unknown group action {self.kind!r}")
        lo, hi = (float(self.window[0]), float(self.window[1]))
        if hi <= lo:
            raise ConfigError("group window must have positive Haar mass")
        object.__setattr__(self, "window", (lo, hi))

    @property
    def haar_mass(self) -> float:
        return self.window[1] - self.window[0]


@dataclass(frozen=True, eq=False)
class QuotientResult:
    boxes: tuple
    values: np.ndarray
    values_second_window: np.ndarray

    @property
    def window_independence_defect(self) -> float:
        return float(np.max(np.abs(self.values - self.values_second_window)))


def _sector_measure(mu: DiscreteMeasure, r_lo, r_hi, th_lo, th_hi,
                    n_r=128, n_th=128) -> float:
    r_edges = np.linspace(r_lo, r_hi, n_r + 1)
    th_edges = np.linspace(th_lo, th_hi, n_th + 1)
    r_mid = 0.5 * (r_edges[1:] + r_edges[:-1])
    th_mid = 0.5 * (th_edges[1:] + th_edges[:-1])
    dr = r_edges[1] - r_edges[0]
    dth = th_edges[1] - th_edges[0]
    R, TH = np.meshgrid(r_mid, th_mid, indexing="ij")
    pts = np.column_stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()])
    dens = mu.density_at(pts).reshape(R.shape)
    return float(np.sum(dens * R) * dr * dth)


def quotient_measure(mu: DiscreteMeasure, action: GroupActionSpec,
                     delta_B: Sequence[IntervalBox],
                     transversal_offset: float = 0.0,
                     invariance_tol: float = 1e-9,
                     second_window: Optional[tuple] = None) -> QuotientResult:
    """Quotient measure on the transversal: the measure of the slab swept by
    the Haar window, divided by the window's Haar mass.

    The input measure must be invariant under the action (pre-checked; the
    violation raises :class:`NotInvariant`).  The result is recomputed with
    a second Haar window so callers can verify window independence.
    """
    if mu.dimension != 2:
        raise ConfigError("quotient measure operates on planar measures")
    delta_B = tuple(delta_B)
    for b in delta_B:
        if b.dimension != 1:
            raise ConfigError("transversal sets must be 1D intervals")
    g_lo, g_hi = action.window
    if second_window is None:
        second_window = (g_lo, g_lo + 2.0 * action.haar_mass)

    if action.kind == "translations_along_axis":
        axis = action.axis
        other = 1 - axis

        def slab_measure(b, window, offset):
            lo = np.empty(2)
            hi = np.empty(2)
            lo[axis] = window[0] + offset
            hi[axis] = window[1] + offset
            lo[other] = b.lo[0]
            hi[other] = b.hi[0]
            return mu.measure_of_box(lo, hi)

        # invariance pre-check: shift the probe slabs along the action
        shift = action.haar_mass / 3.0
        for b in delta_B:
            ref = slab_measure(b, action.window, transversal_offset)
            moved = slab_measure(b, action.window, transversal_offset + shift)
            scale = max(abs(ref), abs(moved), 1e-12)
            if abs(ref - moved) > invariance_tol * scale:
                raise NotInvariant(
                    f"measure varies by {abs(ref - moved):.3g} under the "
                    "translation action")

        values = np.array([
            slab_measure(b, action.window, transversal_offset)
            / action.haar_mass for b in delta_B])
        alt = np.array([
            slab_measure(b, second_window, transversal_offset)
            / (second_window[1] - second_window[0]) for b in delta_B])
        return QuotientResult(boxes=delta_B, values=values,
                              values_second_window=alt)

    # rotations about the origin
    def sector(b, window, offset):
        return _sector_measure(mu, b.lo[0], b.hi[0],
                               window[0] + offset, window[1] + offset)

    shift = action.haar_mass / 3.0
    for b in delta_B:
        ref = sector(b, action.window, transversal_offset)
        moved = sector(b, action.window, transversal_offset + shift)
        scale = max(abs(ref), abs(moved), 1e-12)
        if abs(ref - moved) > max(invariance_tol, 1e-3) * scale:
            raise NotInvariant(
                f"measure varies by {abs(ref - moved):.3g} under rotations")
    values = np.array([sector(b, action.window, transversal_offset)
                       / action.haar_mass for b in delta_B])
    alt = np.array([sector(b, second_window, transversal_offset)
                    / (second_window[1] - second_window[0]) for b in delta_B])
    return QuotientResult(boxes=delta_B, values=values,
                          values_second_window=alt)


# ---------------------------------------------------------------------------
# initial-condition measures
# ---------------------------------------------------------------------------

def build_pi_C(window: IntervalBox, masses: Sequence[float],
               per_axis: int = 1) -> DiscreteMeasure:
    """Uniform initial-momentum measure: density prod_i m_i^(d_i) / (2 pi)^D
    per unit velocity volume, D the window dimension.

    The normalization matches the free-motion quantum measure, which is the
    Lebesgue measure of the momentum image of the box divided by (2 pi)^D.
    """
    D = window.dimension
    masses = [float(m) for m in masses]
    if not masses or D % len(masses):
        raise ConfigError("window dimension must be a multiple of the "
                          "number of particles")
    d_i = D // len(masses)
    density = float(np.prod([m ** d_i for m in masses])) / (2.0 * np.pi) ** D
    return uniform_measure(window, per_axis=per_axis, density=density)


@dataclass(frozen=True, eq=False)
class NcdicTable:
    """Per-box comparison of initial-velocity and asymptotic-velocity
    measures, each normalized over the window so the regularized quantum
    masses are comparable with the analytic normalizations."""

    boxes: tuple
    pi_C: np.ndarray
    pi_Q: np.ndarray
    mu_C: np.ndarray
    mu_Q: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.pi_Q - self.pi_C

    def rows(self):
        for k, box in enumerate(self.boxes):
            yield (box, self.pi_C[k], self.pi_Q[k], self.mu_C[k],
                   self.mu_Q[k], self.gap[k])


def ncdic_report(potential, window: IntervalBox, per_axis: int,
                 n: int, extent: float, sigma: float,
                 t_list: Sequence[float], dt: float,
                 mass: float = 1.0, provider=None) -> NcdicTable:
    """Build the initial-condition comparison table for a 1D system.

    pi_C is the uniform initial-velocity measure; pi_Q transfers the
    late-time quantum spatial measure back through the classical flow;
    mu_C pushes pi_C forward through the velocity map; mu_Q is the cone
    measure of the evolved source.  All columns are normalized over the
    window.  An existing eta provider for the same setup can be passed to
    reuse its cached states.
    """
    from .quantum import PointSourceSpec, make_eta_provider

    if window.dimension != 1:
        raise ConfigError("the comparison table runs on 1D windows")
    boxes = tuple(window.partition(per_axis))
    t_arr = np.asarray(sorted(t_list), dtype=float)
    t_max = float(t_arr[-1])

    if provider is None:
        source = PointSourceSpec(x0=(0.0,), sigma=sigma)
        provider = make_eta_provider(1, n, extent, source, potential, dt,
                                     mass=mass)

    if potential is None or potential.is_zero:
        flow = free_flow_map()
        velocity_map = identity_map(1)
    elif potential.kind == "square_barrier":
        V0, a = potential.params["V0"], potential.params["a"]
        flow = barrier_flow_map(mass, V0, a)
        velocity_map = barrier_velocity_map(mass, V0)
    else:
        raise ConfigError(
            "comparison table supports the zero and barrier potentials")

    mu_Q = np.array([
        provider.mass_on_interval(t_max, b.lo[0] * t_max, b.hi[0] * t_max)
        for b in boxes])
    pi_Q = np.array([
        corrected_transfer(provider, flow, b, t_arr).limit for b in boxes])

    pi_C_measure = build_pi_C(window, [mass], per_axis=per_axis)
    pi_C = pi_C_measure.masses.copy()
    mu_C = pushforward(pi_C_measure, velocity_map, target_boxes=boxes).masses

    def norm(v):
        total = float(np.sum(v))
        return v / total if total > 0.0 else v

    return NcdicTable(boxes=boxes, pi_C=norm(pi_C), pi_Q=norm(pi_Q),
                      mu_C=norm(mu_C), mu_Q=norm(mu_Q))
