"""Causal space-time transformations and the named transform catalog.

A causal transformation factors as ``f(t, x) = (f_T(t), f_X(t, x))`` with a
strictly increasing time map.  Instances carry evaluable maps plus, when
known in closed form, the induced map on asymptotic velocities and the
inverse maps.  The catalog provides the parametric families used by the CLI
(galilean, scale, log_drift, shear_over_t, swirl); arbitrary user
expressions are deliberately not supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NoRoot


@dataclass(frozen=True, eq=False)
class CausalTransform:
    """Space-time transformation ``(t, x) -> (f_T(t), f_X(t, x))``.

    ``time_map`` takes a float array of times; ``space_map`` takes
    ``(times, positions)`` with positions of shape (k, 3) and must return the
    same shape.  ``analytic_plus`` is the closed-form asymptotic transform
    ``v -> f_plus(v)`` when available, ``None`` otherwise.  Inverse maps are
    optional and enable exact inversion instead of root finding.
    """

    time_map: Callable[[np.ndarray], np.ndarray]
    space_map: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_plus: Optional[Callable[[np.ndarray], np.ndarray]] = None
    time_map_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    space_map_inverse: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return self.time_map(t), self.space_map(t, x)

    def without_analytic(self) -> "CausalTransform":
        """Copy with the closed-form asymptotic map stripped (forces estimation)."""
        return replace(self, analytic_plus=None)


def identity_transform() -> CausalTransform:
    return CausalTransform(
        time_map=lambda t: t,
        space_map=lambda t, x: x,
        analytic_plus=lambda v: np.asarray(v, dtype=float),
        time_map_inverse=lambda t: t,
        space_map_inverse=lambda t, x: x,
        name="identity",
    )


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about ``axis`` by ``angle`` radians."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ConfigError("rotation axis must be nonzero")
    k = axis / n
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


def galilean(rotation=None, v0=(0.0, 0.0, 0.0), x0=(0.0, 0.0, 0.0),
             t0: float = 0.0) -> CausalTransform:
    """``f(t, x) = (t + t0, R x - v0 t + x0)``; asymptotic map ``v -> R v - v0``."""
    R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    if R.shape != (3, 3):
        raise ConfigError("rotation must be a 3x3 matrix")
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-10):
        raise ConfigError("rotation matrix must be orthogonal")
    v0 = np.asarray(v0, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    Rinv = R.T

    def space(t, x):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return x @ R.T - np.outer(t, v0) + x0

    def space_inv(t, x):
        # t is the *original* time of the point being recovered
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (x + np.outer(t, v0) - x0) @ Rinv.T

    return CausalTransform(
        time_map=lambda t: t + t0,
        space_map=space,
        analytic_plus=lambda v: np.asarray(v, dtype=float) @ R.T - v0,
        time_map_inverse=lambda t: t - t0,
        space_map_inverse=space_inv,
        name="galilean",
        params={"v0": tuple(v0), "x0": tuple(x0), "t0": t0},
    )


def boost(v0) -> CausalTransform:
    return galilean(v0=v0)


def scale(a: float) -> CausalTransform:
    """Uniform dilation ``f(t, x) = (a t, a x)``; asymptotically identical."""
    if a <= 0.0:
        raise ConfigError("scale factor must be positive")
    return CausalTransform(
        time_map=lambda t: a * t,
        space_map=lambda t, x: a * x,
        analytic_plus=lambda v: np.asarray(v, dtype=float),
        time_map_inverse=lambda t: t / a,
        space_map_inverse=lambda t, x: x / a,
        name="scale",
        params={"a": a},
    )


def log_drift(c: float, direction=(1.0, 0.0, 0.0)) -> CausalTransform:
    """Drift ``x -> x + c log(1 + t) d_hat``; asymptotically identical.

    The displacement grows without bound but only like log t, so the induced
    velocity perturbation ``c log(1 + t) / t`` vanishes.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def shift(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return c * np.log1p(np.maximum(t, 0.0))

    return CausalTransform(
        time_map=lambda t: t,
        space_map=lambda t, x: x + np.outer(shift(t), d),
        analytic_plus=lambda v: np.asarray(v, dtype=float),
        time_map_inverse=lambda t: t,
        space_map_inverse=lambda t, x: x - np.outer(shift(t), d),
        name="log_drift",
        params={"c": c, "direction": tuple(d)},
    )


def shear_over_t(c: float, src_axis: int = 0, dst_axis: int = 1) -> CausalTransform:
    """Time-saturating shear ``x -> x + c (t/(1+t)) x[src] e_dst``.

    Identity at t = 0, full shear at time infinity; the asymptotic transform
    is the linear shear ``v -> v + c v[src] e_dst``, which is not orthogonal,
    so the transformation is neither identical nor Euclidean.
    """
    if src_axis == dst_axis:
        raise ConfigError("shear axes must differ")

    def ramp(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return c * t / (1.0 + t)

    def space(t, x):
        out = np.array(x, dtype=float, copy=True)
        out[..., dst_axis] = out[..., dst_axis] + ramp(t) * x[..., src_axis]
        return out

    def space_inv(t, x):
        out = np.array(x, dtype=float, copy=True)
        out[..., dst_axis] = out[..., dst_axis] - ramp(t) * x[..., src_axis]
        return out

    def plus(v):
        v = np.asarray(v, dtype=float)
        out = np.array(v, copy=True)
        out[..., dst_axis] = out[..., dst_axis] + c * v[..., src_axis]
        return out

    return CausalTransform(
        time_map=lambda t: t,
        space_map=space,
        analytic_plus=plus,
        time_map_inverse=lambda t: t,
        space_map_inverse=space_inv,
        name="shear_over_t",
        params={"c": c, "src_axis": src_axis, "dst_axis": dst_axis},
    )


def swirl(angle: float, axis=(0.0, 0.0, 1.0)) -> CausalTransform:
    """Rotation by ``angle * t / (1 + t)`` about ``axis``.

    The rotation angle saturates, so the asymptotic transform is the fixed
    rotation by ``angle``: an asymptotically Euclidean transformation with
    no boost part.
    """
    axis = np.asarray(axis, dtype=float)
    R_inf = rotation_matrix(axis, angle)

    def space(t, x):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(np.asarray(x, dtype=float))
        for i, ti in enumerate(t):
            out[i] = rotation_matrix(axis, angle * ti / (1.0 + ti)) @ x[i]
        return out

    def space_inv(t, x):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(np.asarray(x, dtype=float))
        for i, ti in enumerate(t):
            out[i] = rotation_matrix(axis, -angle * ti / (1.0 + ti)) @ x[i]
        return out

    return CausalTransform(
        time_map=lambda t: t,
        space_map=space,
        analytic_plus=lambda v: np.asarray(v, dtype=float) @ R_inf.T,
        time_map_inverse=lambda t: t,
        space_map_inverse=space_inv,
        name="swirl",
        params={"angle": angle, "axis": tuple(axis)},
    )


def compose(g: CausalTransform, f: CausalTransform) -> CausalTransform:
    """Composition ``g . f`` acting as ``g(f(t, x))``."""

    def time_map(t):
        return g.time_map(f.time_map(t))

    def space_map(t, x):
        return g.space_map(f.time_map(np.atleast_1d(np.asarray(t, dtype=float))),
                           f.space_map(t, x))

    plus = None
    if g.analytic_plus is not None and f.analytic_plus is not None:
        plus = lambda v: g.analytic_plus(f.analytic_plus(v))  # noqa: E731

    time_inv = None
    space_inv = None
    if (g.time_map_inverse is not None and f.time_map_inverse is not None
            and g.space_map_inverse is not None and f.space_map_inverse is not None):
        def time_inv(t):  # noqa: F811
            return f.time_map_inverse(g.time_map_inverse(t))

        def space_inv(t, x):  # noqa: F811
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return f.space_map_inverse(t, g.space_map_inverse(f.time_map(t), x))

    return CausalTransform(
        time_map=time_map,
        space_map=space_map,
        analytic_plus=plus,
        time_map_inverse=time_inv,
        space_map_inverse=space_inv,
        name=f"{g.name}.{f.name}",
        params={"outer": g.params, "inner": f.params},
    )


def inverse(f: CausalTransform) -> CausalTransform:
    """Inverse transformation; requires invertible maps on the instance."""
    if f.time_map_inverse is None or f.space_map_inverse is None:
        raise ConfigError(f"transform {f.name!r} carries no inverse maps")

    def space_map(t, x):
        # position map of the inverse: first recover the original time
        t_orig = f.time_map_inverse(np.atleast_1d(np.asarray(t, dtype=float)))
        return f.space_map_inverse(t_orig, x)

    plus = None
    if f.analytic_plus is not None and f.name in (
            "identity", "scale", "log_drift", "swirl", "shear_over_t", "galilean"):
        plus = _analytic_inverse_plus(f)

    return CausalTransform(
        time_map=f.time_map_inverse,
        space_map=space_map,
        analytic_plus=plus,
        time_map_inverse=f.time_map,
        space_map_inverse=lambda t, x: f.space_map(f.time_map_inverse(
            np.atleast_1d(np.asarray(t, dtype=float))), x),
        name=f"{f.name}^-1",
        params=f.params,
    )


def _analytic_inverse_plus(f: CausalTransform):
    if f.name in ("identity", "scale", "log_drift"):
        return lambda v: np.asarray(v, dtype=float)
    if f.name == "swirl":
        R = rotation_matrix(np.asarray(f.params["axis"]), -f.params["angle"])
        return lambda v: np.asarray(v, dtype=float) @ R.T
    if f.name == "shear_over_t":
        c, sa, da = f.params["c"], f.params["src_axis"], f.params["dst_axis"]

        def plus(v):
            out = np.array(v, dtype=float, copy=True)
            out[..., da] = out[..., da] - c * out[..., sa]
            return out

        return plus
    if f.name == "galilean":
        # f+(v) = R v - v0, so (f+)^-1(w) = R^T (w + v0)
        v0 = np.asarray(f.params["v0"], dtype=float)
        probe = np.eye(3)
        R = np.stack([f.analytic_plus(probe[i]) + v0 for i in range(3)], axis=1)
        return lambda v: (np.asarray(v, dtype=float) + v0) @ R

    return None


def invert_time_map(f: CausalTransform, t: float,
                    bracket=(1e-8, 1e12)) -> float:
    """Solve ``f_T(t') = t`` for t', using the closed form when available."""
    if f.time_map_inverse is not None:
        return float(np.atleast_1d(f.time_map_inverse(np.asarray([t])))[0])
    lo, hi = bracket

    def g(s):
        return float(np.atleast_1d(f.time_map(np.asarray([s])))[0]) - t

    glo, ghi = g(lo), g(hi)
    if glo > 0.0 or ghi < 0.0:
        raise NoRoot(f"time map of {f.name!r} does not bracket t={t}")
    return float(brentq(g, lo, hi, xtol=1e-13, rtol=1e-13))


_CATALOG = {
    "identity": identity_transform,
    "galilean": galilean,
    "scale": scale,
    "log_drift": log_drift,
    "shear_over_t": shear_over_t,
    "swirl": swirl,
}


def build_transform(spec: dict) -> CausalTransform:
    """Build a catalog transform from ``{"name": ..., "params": {...}}``.

    Galilean rotations may be given either as a 3x3 matrix under ``rotation``
    or as ``{"axis": [...], "angle": ...}``.
    """
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError("transform spec must be a dict with a 'name' key")
    name = spec["name"]
    if name not in _CATALOG:
        raise ConfigError(
            f"unknown transform {name!r}; catalog: {sorted(_CATALOG)}")
    params = dict(spec.get("params", {}))
    if name == "galilean" and isinstance(params.get("rotation"), dict):
        rot = params["rotation"]
        params["rotation"] = rotation_matrix(rot["axis"], rot["angle"])
    try:
        return _CATALOG[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for transform {name!r}: {exc}") from exc
