"""File formats: trajectory CSV, bigbang manifests, binary grid states,
measure CSVs, and atomic JSON writing.

All CSV floats are written with repr-style shortest round-trip formatting so
reruns with identical configuration produce byte-identical files.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .geometry import IntervalBox, NBigBang, SampledTrajectory, SpaceTimePoint
from .quantum import GridState

_STATE_HEADER = struct.Struct("<IIddd")  # dim, n, extent, mass, t


def _fmt(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# trajectories: CSV with header t,x,y,z
# ---------------------------------------------------------------------------

def write_trajectory_csv(path, traj: SampledTrajectory) -> None:
    lines = ["t,x,y,z"]
    for t, pos in zip(traj.times, traj.positions):
        lines.append(",".join([_fmt(t)] + [_fmt(c) for c in pos]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_trajectory_csv(path) -> SampledTrajectory:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read trajectory from {path}: {exc}") from exc
    if data.shape[1] != 4:
        raise ConfigError("trajectory CSV needs columns t,x,y,z")
    return SampledTrajectory(data[:, 0], data[:, 1:4])


def write_nbigbang(directory, bb: NBigBang, stem: str = "trajectory") -> Path:
    """One CSV per trajectory plus a manifest listing files and origin."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for k, traj in enumerate(bb.trajectories):
        name = f"{stem}_{k:03d}.csv"
        write_trajectory_csv(directory / name, traj)
        files.append(name)
    manifest = {
        "origin": {"t": bb.origin.t, "x": list(map(float, bb.origin.x))},
        "files": files,
        "meta": bb.meta or {},
    }
    write_json(directory / "bigbang.json", manifest)
    return directory / "bigbang.json"


def read_nbigbang(manifest_path) -> NBigBang:
    manifest = read_json(manifest_path)
    base = Path(manifest_path).parent
    try:
        origin = SpaceTimePoint(float(manifest["origin"]["t"]),
                                np.asarray(manifest["origin"]["x"]))
        trajs = tuple(read_trajectory_csv(base / name)
                      for name in manifest["files"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed bigbang manifest: {exc}") from exc
    return NBigBang(origin=origin, trajectories=trajs,
                    meta=manifest.get("meta") or None)


# ---------------------------------------------------------------------------
# grid states: little-endian header + interleaved re/im float64
# ---------------------------------------------------------------------------

def write_state(path, state: GridState) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _STATE_HEADER.pack(state.dim, state.n, state.extent,
                                state.mass, state.t)
    payload = np.ascontiguousarray(state.psi, dtype="<c16").tobytes()
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(header)
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_state(path) -> GridState:
    try:
        with open(path, "rb") as handle:
            raw = handle.read(_STATE_HEADER.size)
            dim, n, extent, mass, t = _STATE_HEADER.unpack(raw)
            data = np.frombuffer(handle.read(), dtype="<c16")
    except (OSError, struct.error, ValueError) as exc:
        raise ConfigError(f"cannot read state from {path}: {exc}") from exc
    expected = n ** dim
    if data.size != expected:
        raise ConfigError(f"state payload has {data.size} samples, "
                          f"expected {expected}")
    psi = data.reshape((n,) * dim).copy()
    return GridState(dim=dim, n=n, extent=extent, psi=psi, t=t, mass=mass)


# ---------------------------------------------------------------------------
# measures as CSV
# ---------------------------------------------------------------------------

def _box_header(dim: int, with_t: bool) -> str:
    cols = [f"lo_{i}" for i in range(dim)] + [f"hi_{i}" for i in range(dim)]
    if with_t:
        cols.append("t")
    cols.append("mass")
    return ",".join(cols)


def write_measure_csv(path, boxes: Sequence[IntervalBox], masses,
                      t: float = None) -> None:
    dim = boxes[0].dimension
    lines = [_box_header(dim, t is not None)]
    for box, mass in zip(boxes, np.asarray(masses, dtype=float)):
        cells = [_fmt(v) for v in box.lo] + [_fmt(v) for v in box.hi]
        if t is not None:
            cells.append(_fmt(t))
        cells.append(_fmt(mass))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_table_csv(path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
