"""The acceptance battery: one function per criterion, each checking its
analytic oracle at a pinned tolerance.

Both the pytest acceptance module and the CLI ``suite`` subcommand run this
battery; a criterion returns a result record with a pass flag and a short
evidence string.  Expensive runs (the barrier measure scan) are cached and
shared between criteria.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import classical as cl
from . import geometry as geo
from . import measures as ms
from . import probability as pb
from . import quantum as qm
from . import semiclassical as sc
from . import transforms as tr
from .errors import NotConverged


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    module: str
    passed: bool
    runtime: float
    details: str


# ---------------------------------------------------------------------------
# 1. asymptotic velocity canonical examples
# ---------------------------------------------------------------------------

def crit_01_velocity_examples():
    v = np.array([1.0, 0.0, 0.0])
    x0 = np.array([0.3, 0.4, 0.0])
    traj = geo.sampled_from_function(
        lambda t: np.outer(t, v) + np.outer(np.sin(1.7 * t), x0),
        t_final=1e4)
    est_a = geo.estimate_asymptotic_velocity(traj, tol=5e-3)
    err_a = float(np.linalg.norm(est_a.value - v))
    ok_a = err_a < 1e-3 and est_a.converged

    traj = geo.sampled_from_function(
        lambda t: np.outer(np.sqrt(t), np.ones(3)), t_final=1e6)
    est_b = geo.estimate_asymptotic_velocity(traj, tol=5e-3)
    err_b = float(np.linalg.norm(est_b.value))
    ok_b = err_b < 2e-3 and est_b.converged

    traj = geo.sampled_from_function(
        lambda t: np.outer(t * np.sin(1.3 * t), v), t_final=1e4)
    try:
        geo.estimate_asymptotic_velocity(traj, tol=5e-3)
        ok_c = False
        note_c = "no NotConverged raised"
    except NotConverged:
        ok_c = True
        note_c = "NotConverged raised"
    return ok_a and ok_b and ok_c, (
        f"drift-case err {err_a:.2e} (<1e-3), power-decay err {err_b:.2e} "
        f"(<2e-3), oscillating case: {note_c}")


# ---------------------------------------------------------------------------
# 2. transform algebra on the catalog
# ---------------------------------------------------------------------------

def _catalog():
    R = tr.rotation_matrix([0.0, 0.0, 1.0], 0.6)
    return [
        tr.galilean(rotation=R, v0=[0.3, -0.2, 0.1], x0=[1.0, 2.0, 3.0],
                    t0=0.5),
        tr.scale(2.0),
        tr.log_drift(0.5),
        tr.shear_over_t(0.7),
        tr.swirl(0.8),
    ]


def crit_02_transform_algebra():
    tol = 1e-3
    probes = geo.default_probe_velocities()
    worst_probe = 0.0
    class_ok = True
    for f in _catalog():
        want = geo.classify_transform(f).kind
        got = geo.classify_transform(f.without_analytic(), tol=tol)
        class_ok &= got.kind == want
        for p in probes:
            est = geo.estimate_asymptotic_transform(f, p, tol=1e-4)
            worst_probe = max(worst_probe, float(np.linalg.norm(
                est - f.analytic_plus(p))))

    f, g = tr.boost([0.5, 0.0, 0.0]), tr.swirl(0.8)
    comp = tr.compose(g, f).without_analytic()
    v = np.array([0.7, -0.4, 0.2])
    comp_err = float(np.linalg.norm(
        geo.estimate_asymptotic_transform(comp, v, tol=1e-4)
        - g.analytic_plus(f.analytic_plus(v))))

    fg = _catalog()[0]
    w = fg.analytic_plus(v)
    inv_err = float(np.linalg.norm(geo.estimate_asymptotic_transform(
        tr.inverse(fg).without_analytic(), w, tol=1e-4) - v))

    cls = geo.classify_transform(fg)
    R = tr.rotation_matrix([0.0, 0.0, 1.0], 0.6)
    fit_err = max(float(np.max(np.abs(cls.rotation - R))),
                  float(np.linalg.norm(cls.v0 - [0.3, -0.2, 0.1])))

    ok = (class_ok and worst_probe < tol and comp_err < 2.0 * tol
          and inv_err < tol and fit_err < 1e-6)
    return ok, (
        f"probe err {worst_probe:.2e} (<1e-3), composition {comp_err:.2e} "
        f"(<2e-3), inverse {inv_err:.2e} (<1e-3), analytic fit {fit_err:.2e} "
        f"(<1e-6), classes {'match' if class_ok else 'MISMATCH'}")


# ---------------------------------------------------------------------------
# 3. barrier oracle, boundary conditions
# ---------------------------------------------------------------------------

def crit_03_barrier():
    m, V0, a, v_I = 1.0, 0.5, 1.0, 2.0
    delta = 0.02
    pot = cl.square_barrier(V0, a, smoothing=delta)
    sys1 = cl.SystemSpec(masses=(m,), external_potentials={0: pot})
    bb = cl.integrate_nbigbang(sys1, [[v_I, 0.0, 0.0]], t_final=50.0,
                               dt=2.5e-4)
    traj = bb.trajectories[0]
    oracle = cl.barrier_trajectory_oracle(m, V0, a, v_I, traj.times)
    outside = np.abs(traj.positions[:, 0]) > a + delta
    ode_err = float(np.max(np.abs(traj.positions[outside, 0]
                                  - oracle[outside])))

    t_list = np.geomspace(1e2, 1e6, 9)
    sol = cl.solve_asymptotic_boundary_condition(m, V0, a, 3.0, t_list)
    bc_err = abs(sol.v_I_limit - np.sqrt(8.0))

    deg = cl.solve_asymptotic_boundary_condition(m, V0, a, 0.5, t_list)
    slope = float(np.polyfit(np.log(t_list[3:]),
                             np.log(deg.v_I_of_t[3:]), 1)[0])

    ok = (ode_err < 5e-3 and bc_err < 1e-6 and abs(slope + 1.0) < 0.05
          and deg.degenerate)
    return ok, (
        f"ODE vs closed form {ode_err:.2e} (<5e-3), boundary limit err "
        f"{bc_err:.2e} (<1e-6), degenerate decay exponent {slope:.4f} "
        f"(-1 +- 0.05)")


# ---------------------------------------------------------------------------
# 4. free-particle measure: Lebesgue ratios and the boost rule
# ---------------------------------------------------------------------------

def crit_04_free_measure():
    n, extent = 4096, 25.0
    boxes = [geo.IntervalBox([0.1], [0.6]), geo.IntervalBox([-0.85], [-0.35])]
    t_list = [0.12, 0.24, 0.48]
    scans = qm.sigma_ladder_scan(1, n, extent, (0.0,), [0.2, 0.1, 0.05],
                                 None, boxes, t_list, dt=0.1)
    devs = [abs(s.limit[0] / s.limit[1] - 1.0) for s in scans]
    ladder_ok = devs[-1] < 0.02 and devs[0] > devs[1] > devs[2]

    v0, t = 0.4, 0.48
    src = qm.PointSourceSpec(x0=(0.0,), sigma=0.05)
    state = qm.gaussian_source_state(1, n, extent, src)
    box = geo.IntervalBox([0.1], [0.6])
    boosted = qm.evolve(qm.boost_state(state, [v0]), None, t, dt=t)
    plain = qm.evolve(state, None, t, dt=t)
    m_boost = qm.spatial_box_mass(boosted, box.scaled(t))
    m_shift = qm.spatial_box_mass(
        plain, geo.IntervalBox(box.lo - v0, box.hi - v0).scaled(t))
    boost_dev = abs(m_boost - m_shift) / m_shift

    ok = ladder_ok and boost_dev < 0.01
    return ok, (
        f"ratio deviation ladder {devs[0]:.4f} -> {devs[1]:.4f} -> "
        f"{devs[2]:.4f} (last <0.02, monotone), boost shift dev "
        f"{boost_dev:.2e} (<0.01)")


# ---------------------------------------------------------------------------
# 5. AET invariance of the measure
# ---------------------------------------------------------------------------

def crit_05_aet_invariance():
    n, extent = 4096, 130.0
    src = qm.PointSourceSpec(x0=(0.0,), sigma=0.35)
    box = geo.IntervalBox([-0.2], [0.8])
    t_list = [2.0, 4.0, 8.0, 16.0]
    rep = qm.aet_invariance_check(1, n, extent, src, None, tr.log_drift(0.5),
                                  box, [0.05, 0.15], t_list, dt=1.0)
    gaps = np.abs(rep.mass_transformed - rep.mass_box)
    shrinking = bool(np.all(np.diff(gaps) < 0.0))
    main_ok = (rep.sandwich_satisfied and rep.final_rel_mismatch <= 0.05
               and shrinking)

    neg = qm.aet_invariance_check(1, n, extent, src, None,
                                  tr.boost([1.2, 0.0, 0.0]), box, [0.05],
                                  t_list, dt=1.0, enforce=False)
    neg_ok = (not neg.sandwich_satisfied) and neg.final_rel_mismatch > 0.05

    ok = main_ok and neg_ok
    return ok, (
        f"log_drift: t0 per eps {rep.t0_per_eps}, final mismatch "
        f"{rep.final_rel_mismatch:.4f} (<=0.05), |f(I)-I| gap shrinking: "
        f"{shrinking}; boost control violated: {not neg.sandwich_satisfied} "
        f"(mismatch {neg.final_rel_mismatch:.3f})")


# ---------------------------------------------------------------------------
# 6 & 11 shared barrier scan
# ---------------------------------------------------------------------------

_BARRIER = dict(m=1.0, V0=0.5, a=0.5, b=0.5, sigma=0.35, n=8192,
                extent=300.0, dt=1e-3, t_list=(10.0, 20.0, 40.0))


@lru_cache(maxsize=1)
def _barrier_provider():
    p = _BARRIER
    src = qm.PointSourceSpec(x0=(0.0,), sigma=p["sigma"])
    pot = cl.square_barrier(p["V0"], p["a"])
    return qm.make_eta_provider(1, p["n"], p["extent"], src, pot, p["dt"],
                                mass=p["m"])


def crit_06_corrected_transfer():
    p = _BARRIER
    provider = _barrier_provider()
    s = np.sqrt(2.0 * p["V0"] / p["m"])
    w = np.sqrt(2.0 * p["V0"] / p["m"] + p["b"] ** 2)
    t_list = list(p["t_list"])
    flow = ms.barrier_flow_map(p["m"], p["V0"], p["a"])
    res = ms.corrected_transfer(provider, flow,
                                geo.IntervalBox([-p["b"]], [p["b"]]), t_list)
    t_max = t_list[-1]

    def mu(lo, hi):
        return provider.mass_on_interval(t_max, lo * t_max, hi * t_max)

    reference = mu(-w, w)
    rel_dev = abs(res.limit - reference) / reference
    naive = mu(-w, -s) + mu(s, w)
    exceeds = res.limit > naive
    ok = rel_dev <= 0.05 and exceeds
    return ok, (
        f"corrected {res.limit:.5f} vs reference {reference:.5f} "
        f"(rel dev {rel_dev:.4f} <=0.05), naive bands {naive:.5f} "
        f"(strictly exceeded: {exceeds})")


def crit_07_quotient():
    leb = ms.uniform_measure(geo.IntervalBox([-5.0, -5.0], [5.0, 5.0]),
                             per_axis=10, density=1.0)
    action = ms.GroupActionSpec("translations_along_axis",
                                window=(-1.0, 1.5), axis=0)
    res = ms.quotient_measure(leb, action, [geo.IntervalBox([0.3], [1.0])])
    length_err = abs(res.values[0] - 0.7)
    indep = res.window_independence_defect
    ok = length_err < 1e-12 and indep < 1e-12
    return ok, (f"strip value err {length_err:.2e} (<1e-12), window "
                f"independence {indep:.2e} (<1e-12)")


def crit_08_bernoulli():
    from fractions import Fraction

    freq = pb.relative_frequency(pb.BernoulliUniverse(Fraction(1, 7), 999))
    exact_ok = freq == Fraction(2, 3)

    lln_ok = True
    notes = []
    for eps in (0.05, 0.1):
        vals = []
        for n in (100, 1000, 10000):
            est = pb.lln_deviation_measure(0.5, n, eps, n_samples=40000,
                                           seed=17)
            vals.append(est.measure)
            lln_ok &= est.measure <= est.chebyshev_bound + 3.0 * est.mc_sigma
        lln_ok &= vals[0] > vals[1] >= vals[2]
        notes.append(f"eps={eps}: {vals[0]:.4f}>{vals[1]:.4f}>={vals[2]:.4f}")
    ok = exact_ok and lln_ok
    return ok, (f"freq(1/7) == 2/3: {exact_ok}; deviation measures "
                + ", ".join(notes) + " all under Chebyshev + 3 sigma")


def crit_09_cross_section():
    pot = cl.central_repulsive_power(1.0, 12)
    E = 1.0
    s_grid = np.linspace(0.05, 1.4, 96)
    theta = cl.deflection_function(pot, E, s_grid)

    edges = np.radians(np.linspace(30.0, 160.0, 14))
    centers = 0.5 * (edges[:-1] + edges[1:])
    res = cl.classical_cross_section(pot, E, None, centers, s_grid=s_grid,
                                     deflection=theta)
    sig_mc, err_mc = cl.monte_carlo_cross_section(
        pot, E, 10 ** 6, 0.05, 1.4, edges, seed=42,
        deflection_table=(s_grid, theta))
    z = np.abs(res.sigma - sig_mc) / err_mc
    mc_ok = bool(np.max(z) < 3.0)

    rev = cl.reverse_emission_density(pot, E, lambda th: np.ones_like(th),
                                      z0=-50.0, s_grid=s_grid)
    th_int = np.linspace(np.sort(theta)[3], np.sort(theta)[-4], 200)
    rt = cl.classical_cross_section(
        pot, E, lambda s: np.interp(s, rev.s_grid, rev.rho_I), th_int,
        s_grid=s_grid, deflection=theta)
    rt_err = float(np.max(np.abs(rt.rho_S - 1.0)))
    ok = mc_ok and rt_err < 0.02
    return ok, (f"max |z| vs 1e6-sample MC {np.max(z):.2f} (<3), emission "
                f"round-trip max rel err {rt_err:.4f} (<0.02)")


def crit_10_semiclassical():
    m, t = 1.0, 2.0
    x = np.linspace(-8.0, 8.0, 801)
    cmp_ = sc.semiclassical_density_compare(m, t, x)
    rel = np.max(np.abs(cmp_.rho_Q - cmp_.rho_C) / cmp_.rho_C)
    interf = np.max(np.abs(cmp_.interference))
    value_err = abs(cmp_.rho_C[0] - 1.0 / (4.0 * np.pi))

    toy = sc.two_source_interference(m, 1.5, x, -1.0, 1.0)
    cross_err = np.max(np.abs(toy.total - toy.incoherent - toy.cross_term))
    ok = (rel < 1e-10 and interf < 1e-10 * cmp_.rho_C[0]
          and value_err < 1e-15 and cross_err < 1e-8)
    return ok, (
        f"|K|^2 vs m/(2 pi t): rel {rel:.2e} (<1e-10), interference "
        f"{interf:.2e}, two-source cross-term defect {cross_err:.2e} (<1e-8)")


def crit_11_ncdic():
    free = ms.ncdic_report(None, geo.IntervalBox([-1.0], [1.0]), per_axis=8,
                           n=4096, extent=25.0, sigma=0.05,
                           t_list=[0.12, 0.24, 0.48], dt=0.1)
    free_dev = float(np.max(np.abs(free.pi_Q - free.pi_C) / free.pi_C))

    p = _BARRIER
    pot = cl.square_barrier(p["V0"], p["a"])
    table = ms.ncdic_report(pot, geo.IntervalBox([-3.5], [3.5]), per_axis=14,
                            n=p["n"], extent=p["extent"], sigma=p["sigma"],
                            t_list=list(p["t_list"]), dt=p["dt"],
                            provider=_barrier_provider())
    s = np.sqrt(2.0 * p["V0"] / p["m"])
    gap_mass = 0.0
    for box, mass in zip(table.boxes, table.mu_Q):
        if box.lo[0] >= 0.0 and box.hi[0] <= s:
            gap_mass += float(mass)
    ok = free_dev < 0.02 and gap_mass > 0.0
    return ok, (
        f"free pi_Q vs pi_C max rel dev {free_dev:.4f} (<0.02); barrier "
        f"gap-box normalized mass {gap_mass:.4f} (>0, regression value)")


CRITERIA = [
    (1, "asymptotic velocity canonical examples", "geometry",
     crit_01_velocity_examples),
    (2, "transform algebra and classification", "geometry",
     crit_02_transform_algebra),
    (3, "barrier oracle and boundary conditions", "classical",
     crit_03_barrier),
    (4, "free-particle measure ratios and boost rule", "quantum",
     crit_04_free_measure),
    (5, "measure invariance under identical transforms", "quantum",
     crit_05_aet_invariance),
    (6, "corrected transfer on the barrier", "measures",
     crit_06_corrected_transfer),
    (7, "quotient measure strip example", "measures", crit_07_quotient),
    (8, "doubling-map universe and LLN", "probability", crit_08_bernoulli),
    (9, "cross-section vs Monte Carlo", "classical", crit_09_cross_section),
    (10, "semiclassical density comparison", "quantum",
     crit_10_semiclassical),
    (11, "initial-condition measure comparison", "measures", crit_11_ncdic),
]


def run_criterion(index: int) -> CriterionResult:
    for idx, name, module, fn in CRITERIA:
        if idx == index:
            start = time.perf_counter()
            passed, details = fn()
            return CriterionResult(index=idx, name=name, module=module,
                                   passed=passed,
                                   runtime=time.perf_counter() - start,
                                   details=details)
    raise KeyError(f"no criterion {index}")


def run_all(only: str = None):
    results = []
    for idx, name, module, fn in CRITERIA:
        if only is not None and module != only:
            continue
        results.append(run_criterion(idx))
    return results
