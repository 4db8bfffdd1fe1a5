"""Single entry point: every experiment is a subcommand with JSON config,
deterministic seeds, CSV outputs, and a JSON run manifest.

Exit codes: 0 success, 1 config error, 2 non-convergence, 3 resource/grid
error, 4 acceptance failure.  Identical config and seed reproduce outputs
byte for byte; the manifest journals the run (config hash, seed, version,
wall time, output files).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import acceptance as acc
from . import classical as cl
from . import fileio
from . import geometry as geo
from . import measures as ms
from . import probability as pb
from . import quantum as qm
from . import transforms as tr
from .errors import (AsymlabError, BoxUnresolvable, ConfigError, GridTooSmall,
                     NoRoot, NonMonotoneDeflection, NotConverged, NotRegular,
                     ParticleOverlap, StepUnstable, UnresolvedBoundary)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_RESOURCE = 3
EXIT_ACCEPTANCE = 4

_NONCONVERGENT = (NotConverged, NotRegular, NoRoot, NonMonotoneDeflection)
_RESOURCE = (GridTooSmall, BoxUnresolvable, StepUnstable, ParticleOverlap,
             UnresolvedBoundary)

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_POTENTIAL = {
    "type": "object",
    "properties": {"kind": {"type": "string"}, "params": {"type": "object"}},
    "required": ["kind"],
}
_TRANSFORM = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
    "required": ["name"],
}
_BOX = {
    "type": "object",
    "properties": {"lo": _VEC, "hi": _VEC},
    "required": ["lo", "hi"],
}

SCHEMAS = {
    "asymvel": {
        "type": "object",
        "properties": {
            "example": {"enum": ["1a", "1b", "1c"]},
            "file": {"type": "string"},
            "v": _VEC,
            "t_final": _POS,
            "tol": _POS,
            "out": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "classical_sim": {
        "type": "object",
        "properties": {
            "masses": {"type": "array", "items": _POS, "minItems": 1},
            "pair_potentials": {"type": "array"},
            "external_potentials": {"type": "array"},
            "v_I": {"type": "array"},
            "sampler": {
                "type": "object",
                "properties": {"lo": _VEC, "hi": _VEC, "n": _INT,
                               "seed": {"type": "integer"}},
                "required": ["lo", "hi", "n", "seed"],
            },
            "t_final": _POS,
            "dt": _POS,
            "out_dir": {"type": "string"},
        },
        "required": ["masses", "t_final", "dt", "out_dir"],
        "additionalProperties": False,
    },
    "boundary_solve": {
        "type": "object",
        "properties": {
            "m": _POS, "V0": _POS, "a": _POS, "v": _NUM,
            "t_geomspace": {"type": "array", "items": _NUM, "minItems": 3,
                            "maxItems": 3},
            "out": {"type": "string"},
        },
        "required": ["m", "V0", "a", "v", "out"],
        "additionalProperties": False,
    },
    "cross_section": {
        "type": "object",
        "properties": {
            "potential": _POTENTIAL, "E": _POS, "mass": _POS,
            "s_min": _POS, "s_max": _POS, "n_s": _INT,
            "theta_deg": {"type": "array", "items": _NUM, "minItems": 3,
                          "maxItems": 3},
            "out": {"type": "string"},
        },
        "required": ["potential", "E", "s_min", "s_max", "out"],
        "additionalProperties": False,
    },
    "quantum_measure": {
        "type": "object",
        "properties": {
            "dim": {"enum": [1, 2]}, "n": _INT, "extent": _POS,
            "mass": _POS, "x0": _VEC,
            "sigmas": {"type": "array", "items": _POS, "minItems": 1},
            "potential": _POTENTIAL,
            "boxes": {"type": "array", "items": _BOX, "minItems": 1},
            "t_list": {"type": "array", "items": _POS, "minItems": 1},
            "dt": _POS,
            "out": {"type": "string"},
        },
        "required": ["n", "extent", "sigmas", "boxes", "t_list", "dt", "out"],
        "additionalProperties": False,
    },
    "aet_check": {
        "type": "object",
        "properties": {
            "n": _INT, "extent": _POS, "sigma": _POS, "mass": _POS,
            "potential": _POTENTIAL, "transform": _TRANSFORM,
            "box": _BOX,
            "eps_list": {"type": "array", "items": _POS, "minItems": 1},
            "t_list": {"type": "array", "items": _POS, "minItems": 1},
            "dt": _POS, "enforce": {"type": "boolean"},
            "out": {"type": "string"},
        },
        "required": ["n", "extent", "sigma", "transform", "box", "eps_list",
                     "t_list", "dt", "out"],
        "additionalProperties": False,
    },
    "transfer": {
        "type": "object",
        "properties": {
            "m": _POS, "V0": _POS, "a": _POS, "b": _POS, "sigma": _POS,
            "n": _INT, "extent": _POS, "dt": _POS,
            "t_list": {"type": "array", "items": _POS, "minItems": 2},
            "out": {"type": "string"},
        },
        "required": ["m", "V0", "a", "b", "sigma", "n", "extent", "dt",
                     "t_list", "out"],
        "additionalProperties": False,
    },
    "quotient": {
        "type": "object",
        "properties": {
            "action": {
                "type": "object",
                "properties": {"kind": {"type": "string"},
                               "window": {"type": "array", "items": _NUM,
                                          "minItems": 2, "maxItems": 2},
                               "axis": {"type": "integer"}},
                "required": ["kind", "window"],
            },
            "delta_B": {"type": "array", "items": _BOX, "minItems": 1},
            "extent": _POS, "per_axis": _INT,
            "out": {"type": "string"},
        },
        "required": ["action", "delta_B", "out"],
        "additionalProperties": False,
    },
    "bernoulli": {
        "type": "object",
        "properties": {
            "mode": {"enum": ["orbit", "frequency", "lln"]},
            "x0": {"type": "string"}, "horizon": _INT,
            "P": _POS, "eps_list": {"type": "array", "items": _POS},
            "n_list": {"type": "array", "items": _INT},
            "n_samples": _INT, "seed": {"type": "integer"},
            "out": {"type": "string"},
        },
        "required": ["mode", "out"],
        "additionalProperties": False,
    },
    "ncdic": {
        "type": "object",
        "properties": {
            "potential": _POTENTIAL, "window": _BOX, "per_axis": _INT,
            "n": _INT, "extent": _POS, "sigma": _POS, "mass": _POS,
            "t_list": {"type": "array", "items": _POS, "minItems": 1},
            "dt": _POS, "out": {"type": "string"},
        },
        "required": ["window", "per_axis", "n", "extent", "sigma", "t_list",
                     "dt", "out"],
        "additionalProperties": False,
    },
    "suite": {
        "type": "object",
        "properties": {"only": {"type": "string"}, "out": {"type": "string"}},
        "additionalProperties": False,
    },
}


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _write_manifest(subcommand: str, config: dict, outputs, started: float,
                    seed=None) -> None:
    out_dir = Path(outputs[0]).parent if outputs else Path(".")
    manifest = {
        "subcommand": subcommand,
        "config_hash": _config_hash(config),
        "seed": seed,
        "tool_version": __version__,
        "wall_time_s": time.time() - started,
        "outputs": [str(p) for p in outputs],
    }
    fileio.write_json(out_dir / f"{subcommand}.manifest.json", manifest)


def _load_config(args, name: str) -> dict:
    config = {}
    if getattr(args, "config", None):
        config.update(fileio.read_json(args.config))
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        config[key] = value
    try:
        jsonschema.validate(config, SCHEMAS[name])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid {name} config: {exc.message}") from exc
    return config


def _parse_vec(text: str):
    return [float(part) for part in text.split(",") if part.strip()]


def _box_from(spec: dict) -> geo.IntervalBox:
    return geo.IntervalBox(spec["lo"], spec["hi"])


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

_EXAMPLE_BUILDERS = {
    "1a": lambda v, T: geo.sampled_from_function(
        lambda t: np.outer(t, v) + np.outer(np.sin(1.7 * t),
                                            [0.3, 0.4, 0.0]), t_final=T),
    "1b": lambda v, T: geo.sampled_from_function(
        lambda t: np.outer(np.sqrt(t), np.ones(3)), t_final=max(T, 1e6)),
    "1c": lambda v, T: geo.sampled_from_function(
        lambda t: np.outer(t * np.sin(1.3 * t), v), t_final=T),
}


def cmd_asymvel(args) -> int:
    config = _load_config(args, "asymvel")
    started = time.time()
    tol = config.get("tol", 5e-3)
    v = np.asarray(config.get("v", [1.0, 0.0, 0.0]), dtype=float)
    if "file" in config:
        traj = fileio.read_trajectory_csv(config["file"])
    elif "example" in config:
        traj = _EXAMPLE_BUILDERS[config["example"]](
            v, config.get("t_final", 1e4))
    else:
        raise ConfigError("asymvel needs either 'example' or 'file'")

    rows = []
    pos = traj.times[traj.times > 0.0]
    T = pos[-1]
    decade_ends = [T / 10.0 ** j for j in
                   range(int(np.log10(T / pos[0])), -1, -1)]
    for t_end in decade_ends:
        keep = traj.times <= t_end * (1.0 + 1e-12)
        if np.count_nonzero(traj.times[keep] > 0.0) < 5:
            continue
        sub = geo.SampledTrajectory(traj.times[keep], traj.positions[keep])
        est = geo.estimate_asymptotic_velocity(sub, tol=tol)
        rows.append((float(sub.final_time), float(est.value[0]),
                     float(est.value[1]), float(est.value[2]),
                     float(est.residual)))

    out = config.get("out", "asymvel.csv")
    fileio.write_table_csv(out, ["T", "estimate_x", "estimate_y",
                                 "estimate_z", "residual"], rows)
    _write_manifest("asymvel", config, [out], started)
    final = rows[-1]
    print(f"estimate: ({final[1]}, {final[2]}, {final[3]})  "
          f"residual {final[4]}")
    return EXIT_OK


def cmd_classical_sim(args) -> int:
    config = _load_config(args, "classical_sim")
    started = time.time()
    sys_spec = cl.system_from_json(config)
    out_dir = Path(config["out_dir"])
    seed = None
    if "sampler" in config:
        s = config["sampler"]
        seed = s["seed"]
        n_particles = sys_spec.n
        samples = cl.sample_initial_velocities(
            np.tile(s["lo"], n_particles), np.tile(s["hi"], n_particles),
            s["n"], seed)
        v_list = [sample.reshape(n_particles, 3) for sample in samples]
    elif "v_I" in config:
        v_list = [np.asarray(config["v_I"], dtype=float)]
    else:
        raise ConfigError("classical_sim needs 'v_I' or 'sampler'")

    from .parallel import pmap

    def run(item):
        index, v_I = item
        bb = cl.integrate_nbigbang(sys_spec, v_I, config["t_final"],
                                   config["dt"])
        target = out_dir if len(v_list) == 1 else out_dir / f"run_{index:04d}"
        return fileio.write_nbigbang(target, bb)

    outputs = pmap(run, list(enumerate(v_list)))
    _write_manifest("classical_sim", config, [str(p) for p in outputs],
                    started, seed=seed)
    print(f"integrated {len(v_list)} initial condition(s) -> {out_dir}")
    return EXIT_OK


def cmd_boundary_solve(args) -> int:
    config = _load_config(args, "boundary_solve")
    started = time.time()
    lo, hi, count = config.get("t_geomspace", [1e2, 1e6, 9])
    t_list = np.geomspace(lo, hi, int(count))
    sol = cl.solve_asymptotic_boundary_condition(
        config["m"], config["V0"], config["a"], config["v"], t_list)
    out = config["out"]
    fileio.write_table_csv(out, ["t", "v_I"],
                           [(float(t), float(vi))
                            for t, vi in zip(sol.t_list, sol.v_I_of_t)])
    _write_manifest("boundary_solve", config, [out], started)
    print(f"v_I limit: {sol.v_I_limit}  degenerate: {sol.degenerate}")
    return EXIT_OK


def cmd_cross_section(args) -> int:
    config = _load_config(args, "cross_section")
    started = time.time()
    pot = cl.potential_from_json(config["potential"])
    s_grid = np.linspace(config["s_min"], config["s_max"],
                         config.get("n_s", 96))
    lo_deg, hi_deg, n_theta = config.get("theta_deg", [30.0, 160.0, 40])
    theta_grid = np.radians(np.linspace(lo_deg, hi_deg, int(n_theta)))
    res = cl.classical_cross_section(pot, config["E"], None, theta_grid,
                                     s_grid=s_grid,
                                     m=config.get("mass", 1.0))
    out = config["out"]
    fileio.write_table_csv(out, ["theta", "sigma"],
                           [(float(t), float(s))
                            for t, s in zip(res.theta_grid, res.sigma)])
    _write_manifest("cross_section", config, [out], started)
    print(f"cross-section on {theta_grid.size} angles -> {out}")
    return EXIT_OK


def cmd_quantum_measure(args) -> int:
    config = _load_config(args, "quantum_measure")
    started = time.time()
    dim = config.get("dim", 1)
    x0 = tuple(config.get("x0", [0.0] * dim))
    pot = (cl.potential_from_json(config["potential"])
           if "potential" in config else None)
    boxes = [_box_from(b) for b in config["boxes"]]
    outputs = []
    out_base = Path(config["out"])
    for sigma in config["sigmas"]:
        scan = qm.asymptotic_quantum_measure(
            dim, config["n"], config["extent"],
            qm.PointSourceSpec(x0=x0, sigma=sigma), pot, boxes,
            config["t_list"], config["dt"], mass=config.get("mass", 1.0))
        path = out_base.with_name(
            f"{out_base.stem}_sigma_{sigma}{out_base.suffix or '.csv'}")
        rows = []
        for gm in scan.measures:
            for box, mass in zip(gm.boxes, gm.masses):
                rows.append(tuple(float(c) for c in box.lo)
                            + tuple(float(c) for c in box.hi)
                            + (float(gm.t_used), float(mass)))
        header = ([f"lo_{i}" for i in range(dim)]
                  + [f"hi_{i}" for i in range(dim)] + ["t", "mass"])
        fileio.write_table_csv(path, header, rows)
        outputs.append(str(path))
        print(f"sigma={sigma}: limit masses {scan.limit} "
              f"(last-step delta {scan.limit_delta})")
    _write_manifest("quantum_measure", config, outputs, started)
    return EXIT_OK


def cmd_aet_check(args) -> int:
    config = _load_config(args, "aet_check")
    started = time.time()
    pot = (cl.potential_from_json(config["potential"])
           if "potential" in config else None)
    f = tr.build_transform(config["transform"])
    rep = qm.aet_invariance_check(
        1, config["n"], config["extent"],
        qm.PointSourceSpec(x0=(0.0,), sigma=config["sigma"]), pot, f,
        _box_from(config["box"]), config["eps_list"], config["t_list"],
        config["dt"], mass=config.get("mass", 1.0),
        enforce=config.get("enforce", True))
    out = config["out"]
    rows = []
    for k, t in enumerate(rep.t_list):
        for j, eps in enumerate(rep.eps_list):
            rows.append((float(t), float(eps),
                         float(rep.mass_lower[k, j]),
                         float(rep.mass_transformed[k]),
                         float(rep.mass_upper[k, j]),
                         float(rep.mass_box[k]),
                         int(rep.sandwich_holds[k, j])))
    fileio.write_table_csv(out, ["t", "eps", "mass_lower", "mass_transformed",
                                 "mass_upper", "mass_box", "holds"], rows)
    _write_manifest("aet_check", config, [out], started)
    print(f"classification: {rep.classification_kind}; t0 per eps: "
          f"{rep.t0_per_eps}; final rel mismatch {rep.final_rel_mismatch}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    config = _load_config(args, "transfer")
    started = time.time()
    m, V0, a, b = (config[k] for k in ("m", "V0", "a", "b"))
    pot = cl.square_barrier(V0, a)
    provider = qm.make_eta_provider(
        1, config["n"], config["extent"],
        qm.PointSourceSpec(x0=(0.0,), sigma=config["sigma"]), pot,
        config["dt"], mass=m)
    res = ms.corrected_transfer(provider, ms.barrier_flow_map(m, V0, a),
                                geo.IntervalBox([-b], [b]), config["t_list"])
    s = float(np.sqrt(2.0 * V0 / m))
    w = float(np.sqrt(2.0 * V0 / m + b * b))
    t_max = float(sorted(config["t_list"])[-1])

    def mu(lo, hi):
        return provider.mass_on_interval(t_max, lo * t_max, hi * t_max)

    reference = mu(-w, w)
    naive = mu(-w, -s) + mu(s, w)
    out = config["out"]
    rows = [(float(t), float(mass))
            for t, mass in zip(res.t_list, res.masses)]
    fileio.write_table_csv(out, ["t", "corrected_mass"], rows)
    _write_manifest("transfer", config, [out], started)
    print(f"corrected {res.limit}  reference {reference}  naive {naive}")
    return EXIT_OK


def cmd_quotient(args) -> int:
    config = _load_config(args, "quotient")
    started = time.time()
    extent = config.get("extent", 5.0)
    leb = ms.uniform_measure(
        geo.IntervalBox([-extent, -extent], [extent, extent]),
        per_axis=config.get("per_axis", 10), density=1.0)
    act = config["action"]
    action = ms.GroupActionSpec(act["kind"], window=tuple(act["window"]),
                                axis=act.get("axis", 0))
    delta_B = [_box_from(b) for b in config["delta_B"]]
    res = ms.quotient_measure(leb, action, delta_B)
    out = config["out"]
    rows = [(float(b.lo[0]), float(b.hi[0]), float(v), float(v2))
            for b, v, v2 in zip(res.boxes, res.values,
                                res.values_second_window)]
    fileio.write_table_csv(out, ["lo", "hi", "value", "value_second_window"],
                           rows)
    _write_manifest("quotient", config, [out], started)
    print(f"quotient values {res.values}; window independence defect "
          f"{res.window_independence_defect}")
    return EXIT_OK


def cmd_bernoulli(args) -> int:
    config = _load_config(args, "bernoulli")
    started = time.time()
    out = config["out"]
    mode = config["mode"]
    seed = config.get("seed", 0)
    if mode in ("orbit", "frequency"):
        from fractions import Fraction
        x0 = Fraction(config.get("x0", "1/7"))
        horizon = config.get("horizon", 99)
        universe = pb.BernoulliUniverse(x0, horizon)
        if mode == "orbit":
            rows = [(k, str(state))
                    for k, state in enumerate(pb.orbit(universe))]
            fileio.write_table_csv(out, ["tick", "state"], rows)
            print(f"orbit of {x0} for {horizon} ticks -> {out}")
        else:
            freq = pb.relative_frequency(universe)
            fileio.write_table_csv(out, ["x0", "horizon", "frequency"],
                                   [(str(x0), horizon, str(freq))])
            print(f"relative frequency of state < 1/2: {freq}")
    else:
        rows = []
        for n in config.get("n_list", [100, 1000, 10000]):
            for eps in config.get("eps_list", [0.05, 0.1]):
                est = pb.lln_deviation_measure(
                    config.get("P", 0.5), n, eps,
                    n_samples=config.get("n_samples", 40000), seed=seed)
                rows.append((n, float(eps), float(est.measure),
                             float(est.chebyshev_bound)))
        fileio.write_table_csv(out, ["n", "epsilon", "measure",
                                     "chebyshev_bound"], rows)
        print(f"deviation-measure curve -> {out}")
    _write_manifest("bernoulli", config, [out], started, seed=seed)
    return EXIT_OK


def cmd_ncdic(args) -> int:
    config = _load_config(args, "ncdic")
    started = time.time()
    pot = (cl.potential_from_json(config["potential"])
           if "potential" in config else None)
    table = ms.ncdic_report(pot, _box_from(config["window"]),
                            per_axis=config["per_axis"], n=config["n"],
                            extent=config["extent"], sigma=config["sigma"],
                            t_list=config["t_list"], dt=config["dt"],
                            mass=config.get("mass", 1.0))
    out = config["out"]
    rows = [(float(box.lo[0]), float(box.hi[0]), float(pc), float(pq),
             float(mc), float(mq), float(gap))
            for box, pc, pq, mc, mq, gap in table.rows()]
    fileio.write_table_csv(out, ["lo_0", "hi_0", "pi_C", "pi_Q", "mu_C",
                                 "mu_Q", "gap"], rows)
    _write_manifest("ncdic", config, [out], started)
    print(f"comparison table ({len(rows)} boxes) -> {out}")
    return EXIT_OK


def cmd_suite(args) -> int:
    config = _load_config(args, "suite")
    started = time.time()
    results = acc.run_all(only=config.get("only"))
    if not results:
        raise ConfigError(f"no criteria match module {config.get('only')!r}")
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] criterion {res.index:2d} ({res.module}) "
              f"{res.name} [{res.runtime:.1f}s]: {res.details}")
    summary = {
        "version": __version__,
        "results": [
            {"index": r.index, "name": r.name, "module": r.module,
             "passed": r.passed, "runtime_s": r.runtime,
             "details": r.details} for r in results],
        "all_passed": all(r.passed for r in results),
    }
    out = config.get("out", "suite_summary.json")
    fileio.write_json(out, summary)
    _write_manifest("suite", config, [out], started)
    if not summary["all_passed"]:
        return EXIT_ACCEPTANCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_config_arg(parser):
    parser.add_argument("--config", help="JSON config file; flags override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asymlab",
        description="Numerical experiments on asymptotic velocities, "
                    "transformation classes, and asymptotic measures.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asymvel", help="asymptotic velocity of a trajectory")
    _add_config_arg(p)
    p.add_argument("--example", choices=["1a", "1b", "1c"])
    p.add_argument("--file")
    p.add_argument("--v", type=_parse_vec)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_asymvel)

    p = sub.add_parser("classical_sim", help="integrate an N-bigbang")
    _add_config_arg(p)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_classical_sim)

    p = sub.add_parser("boundary_solve",
                       help="asymptotic boundary condition for the barrier")
    _add_config_arg(p)
    p.add_argument("--m", type=float)
    p.add_argument("--V0", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_boundary_solve)

    p = sub.add_parser("cross_section", help="classical cross-section")
    _add_config_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cross_section)

    p = sub.add_parser("quantum_measure",
                       help="asymptotic quantum measure scan")
    _add_config_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quantum_measure)

    p = sub.add_parser("aet_check", help="measure invariance sandwich check")
    _add_config_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_aet_check)

    p = sub.add_parser("transfer", help="corrected initial-velocity transfer")
    _add_config_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("quotient", help="quotient measure examples")
    _add_config_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quotient)

    p = sub.add_parser("bernoulli", help="doubling-map universe experiments")
    _add_config_arg(p)
    p.add_argument("--mode", choices=["orbit", "frequency", "lln"])
    p.add_argument("--x0")
    p.add_argument("--horizon", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bernoulli)

    p = sub.add_parser("ncdic", help="initial-condition measure comparison")
    _add_config_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ncdic)

    p = sub.add_parser("suite", help="run the acceptance battery")
    _add_config_arg(p)
    p.add_argument("--only", help="restrict to one module's criteria")
    p.add_argument("--out")
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NONCONVERGENT as exc:
        print(f"not asymptotically regular: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except _RESOURCE as exc:
        print(f"resource/grid error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
