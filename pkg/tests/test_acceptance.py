"""End-to-end acceptance checks, one test per criterion, at the stated tolerances.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts the same condition.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from eulerhydro.conservation_law import (
    envelope,
    godunov_reference,
    h_c,
    legendre_transform,
    make_flux,
    oleinik_check,
    riemann_solution,
    tabulated_flux,
)
from eulerhydro.dynamics import CoupledSimulator, SimulationRun, simulate
from eulerhydro.equilibrium import build_flux_table, estimate_flux, structural_checks
from eulerhydro.experiments import RiemannData, hydro_experiment, riemann_local_equilibrium, stability_experiment
from eulerhydro.glimm import GlimmConfig, expected_contraction, glimm_run, r_valued_approximation
from eulerhydro.lattice_core import LatticeConfig, generator_apply, get_model, microscopic_flux
from eulerhydro.metrics import delta_steps, l1_distance
from eulerhydro.profiles import PiecewiseConstantProfile, steps

TASEP_FLUX = make_flux("quadratic")


def test_criterion_01_generator_identity(criterion):
    worst = 0.0
    count = 0
    for name, K, L in (("tasep", 1, 8), ("k-exclusion", 2, 6)):
        model = get_model(name, K=K) if name == "k-exclusion" else get_model(name)
        for sites in itertools.product(range(K + 1), repeat=L):
            c = LatticeConfig.ring(np.array(sites))
            # the configuration set is closed under rotation, so intervals starting at 0 cover every (x, y)
            j0 = microscopic_flux(c, model, 0)
            for y in range(1, L):
                lhs = generator_apply(lambda s, y=y: float(s[1:y + 1].sum()), c, model)
                worst = max(worst, abs(lhs - (j0 - microscopic_flux(c, model, y))))
                count += 1
    ok = criterion(1, worst == 0.0, f"max |L f - (j_x - j_y)| = {worst:g} over {count} (config, interval) pairs")
    assert ok


def test_criterion_02_attractiveness(criterion):
    violations = 0
    runs = 0
    times = np.linspace(10.0, 1000.0, 100)
    for name, K in (("tasep", 1), ("k-exclusion", 2)):
        model = get_model(name, K=K) if name == "k-exclusion" else get_model(name)
        for seed in range(50):
            rng = np.random.default_rng([seed, K])
            b = rng.integers(0, K + 1, 500)
            a = np.minimum(b, rng.integers(0, K + 1, 500))
            sim = CoupledSimulator(model, LatticeConfig.ring(a), LatticeConfig.ring(b), seed=seed)
            sa, sb = sim.advance(1000.0, snapshot_times=times)
            violations += int(np.sum(sa > sb))
            runs += 1
    ok = criterion(2, violations == 0, f"{runs} coupled runs, {violations} order violations")
    assert ok


@pytest.mark.slow
def test_criterion_03_tasep_flux(criterion):
    s = estimate_flux(get_model("tasep"), 0.5, L=1000, horizon=1e5, replicas=10, seed=0)
    z = (s.estimate - 0.25) / s.stderr
    ok = abs(s.estimate - 0.25) <= 3 * s.stderr and s.stderr <= 0.003
    finite_ring = 500 * 500 / (1000 * 999)
    criterion(3, ok, f"G = {s.estimate:.6f} +/- {s.stderr:.2e}, z vs 0.25 = {z:.2f} "
                     f"(finite-ring value {finite_ring:.6f}, z = {(s.estimate - finite_ring) / s.stderr:.2f})")
    assert ok


@pytest.mark.slow
def test_criterion_04_two_exclusion_bounds(criterion):
    model = get_model("k-exclusion", K=2)
    table = build_flux_table(model, np.linspace(0, 2, 11), L=1000, burn_in=1e4, horizon=2e4, replicas=10, seed=0)
    rep = structural_checks(table, model)
    ok = rep.applicable and rep["bounds"].passed and rep["symmetry"].passed
    criterion(4, ok, f"bounds {rep['bounds'].passed}, symmetry {rep['symmetry'].passed}, "
                     f"concavity {rep['concavity'].passed}; G(1) = {table(1.0):.4f}")
    assert ok


def test_criterion_05_riemann_vs_godunov(criterion):
    errs = {}
    for lam, rho in ((1, 0), (0, 1), (0.8, 0.2), (0.2, 0.8)):
        sol = riemann_solution(TASEP_FLUX, lam, rho)
        u0 = steps([-6, 0, 6], [lam, rho])
        ref = godunov_reference(TASEP_FLUX, u0, 1e-3, 1.0, domain=(-4, 4))
        c = ref.centers
        m = (c > -2) & (c < 2)
        errs[(lam, rho)] = float(np.sum(np.abs(ref.values[m] - sol(c[m], 1.0))) * ref.mesh)
    worst = max(errs.values())
    ok = criterion(5, worst <= 1e-2, "L1 errors " + ", ".join(f"{k}: {v:.2e}" for k, v in errs.items()))
    assert ok


def test_criterion_06_legendre(criterion):
    env = envelope(make_flux("cubic"), 0.0, 1.0)
    rng = np.random.default_rng(6)
    vs = []
    while len(vs) < 20:
        v = float(rng.uniform(env.v_lo - 0.3, env.v_hi + 0.3))
        if not env.in_sigma_low(v, tol=1e-3):
            vs.append(v)
    h = 1e-6
    gaps = [abs((legendre_transform(env, v + h) - legendre_transform(env, v - h)) / (2 * h) - h_c(env, v)[1]) for v in vs]
    ok = criterion(6, max(gaps) <= 1e-4, f"max |finite difference - h_c| = {max(gaps):.2e} at 20 velocities")
    assert ok


def test_criterion_07_glimm_trend(criterion):
    u0 = steps([-1, -0.5, 0, 0.5], [0.9, 0.6, 0.3])
    ref = godunov_reference(TASEP_FLUX, u0, 1e-3, 1.0).profile()
    meds = []
    for dx in (0.1, 0.05, 0.025):
        e = [l1_distance(glimm_run(u0, TASEP_FLUX, GlimmConfig(dx, 0.5, 1.0, seed=s)).at(1.0), ref, (-2, 2))
             for s in range(10)]
        meds.append(float(np.median(e)))
    ok = criterion(7, meds[0] > meds[1] > meds[2], "median L1 errors " + ", ".join(f"{m:.4f}" for m in meds))
    assert ok


def test_criterion_08_glimm_contraction(criterion):
    u0 = steps([-1, -0.5, 0, 0.5], [0.9, 0.6, 0.3])
    v0 = steps([-1.2, -0.4, 0.1, 0.5], [0.8, 0.6, 0.4])
    est = expected_contraction(u0, v0, TASEP_FLUX, GlimmConfig(0.05, 0.5, 0.5), -2.5, 2.5, 0.5,
                               n_sequences=1000, seed=0)
    ok = criterion(8, est.holds(3.0), f"E L1 = {est.mean:.4f} +/- {est.stderr:.4f} vs initial {est.bound:.4f}")
    assert ok


def _exact_delta(p: PiecewiseConstantProfile, q: PiecewiseConstantProfile) -> Fraction:
    fr = lambda a: [Fraction(float(x)) for x in a]
    return delta_steps(fr(p.breakpoints), fr(p.values), fr(q.breakpoints), fr(q.values))


def test_criterion_09_r_valued(criterion):
    rng = np.random.default_rng(9)
    worst = Fraction(-1)
    for _ in range(20):
        grid = np.unique(np.concatenate([[0.0], rng.integers(1, 33, rng.integers(2, 8)) / 16]))
        n = int(rng.integers(2, 9))
        gaps = rng.integers(2, 12, n) / 32
        b = np.concatenate([[0.0], np.cumsum(gaps)]) - 1.0
        u = PiecewiseConstantProfile(b, rng.choice(grid, n))
        tv = u.total_variation()
        delta = float(rng.uniform(0.3, 1.5) * tv) if tv > 0 else 1.0
        eps = float(gaps.min() / 4)
        out = r_valued_approximation(u, eps, delta, grid)
        assert set(out.values.tolist()) <= set(grid.tolist())
        worst = max(worst, _exact_delta(out, u) - Fraction(eps) * Fraction(delta))
    ok = criterion(9, worst <= 0, f"max (Delta - eps*delta) over 20 profiles = {float(worst):.3g} (exact rational)")
    assert ok


@pytest.mark.slow
def test_criterion_10_hydrodynamic_limit(criterion):
    model = get_model("tasep")
    meds = {}
    for N in (1000, 2000):
        rep = hydro_experiment(model, RiemannData(0.8, 0.2), N, 1.0, "quadratic", seeds=range(10))
        meds[N] = rep.measurements["median_l1_error"]
    ok = criterion(10, meds[2000] <= 0.05 and meds[2000] < meds[1000],
                   f"median L1: N=1000 {meds[1000]:.4f}, N=2000 {meds[2000]:.4f}")
    assert ok


@pytest.mark.slow
def test_criterion_11_local_equilibrium(criterion):
    rep = riemann_local_equilibrium(get_model("tasep"), 1.0, 0.0, "quadratic", 2000, 1.0, [-0.5, 0.0, 0.5], 50,
                                    seeds=range(10), tolerance=0.03)
    med = rep.measurements["median"]
    target = (0.75, 0.5, 0.25)
    ok = all(abs(m - h) <= 0.03 for m, h in zip(med, target))
    criterion(11, ok, "median blocks " + ", ".join(f"{m:.3f}" for m in med) + " vs 0.75, 0.5, 0.25")
    assert ok


@pytest.mark.slow
def test_criterion_12_stability(criterion):
    u = PiecewiseConstantProfile.indicator(-0.5, 0.0, 0.5)
    v = PiecewiseConstantProfile.indicator(-0.25, 0.25, 0.5)
    nn_max = []
    m2_med = []
    for N in (500, 1000, 2000):
        nn = stability_experiment(get_model("tasep"), u, v, N, 0.2, seeds=range(10))
        nn_max.append(nn.measurements["max_excess"])
        m2 = stability_experiment(get_model("tasep-range2"), u, v, N, 0.2, seeds=range(10))
        m2_med.append((m2.measurements["median_excess"], m2.params["slack"]))
    shrinking = abs(m2_med[0][0]) > abs(m2_med[1][0]) > abs(m2_med[2][0])
    within = all(med <= slack for med, slack in m2_med)
    ok = max(nn_max) <= 0 and shrinking and within
    criterion(12, ok, "nearest-neighbour max excess " + ", ".join(f"{x:.4f}" for x in nn_max)
              + "; range-2 median excess " + ", ".join(f"{m:.4f}" for m, _ in m2_med))
    assert ok


def test_criterion_13_property_suite(criterion):
    rng = np.random.default_rng(13)
    failures = []

    # Delta pseudometric on random rational triples
    def rand_steps():
        n = int(rng.integers(1, 6))
        b = sorted({Fraction(int(k), 8) for k in rng.integers(-40, 40, n + 1)})
        while len(b) < n + 1:
            b.append(b[-1] + Fraction(1, 8))
        return b, [Fraction(int(k), 4) for k in rng.integers(0, 9, len(b) - 1)]

    for _ in range(300):
        a, b, c = rand_steps(), rand_steps(), rand_steps()
        ab, ba = delta_steps(*a, *b), delta_steps(*b, *a)
        if ab != ba or delta_steps(*a, *c) > ab + delta_steps(*b, *c) or delta_steps(*a, *a) != 0:
            failures.append("pseudometric")

    # envelope geometry and Oleinik checks on random piecewise-linear fluxes (exact hulls)
    for _ in range(50):
        nodes = np.linspace(0, 1, int(rng.integers(3, 12)))
        vals = np.concatenate([[0.0], rng.uniform(-0.5, 0.5, nodes.size - 2), [0.0]])
        f = tabulated_flux(nodes, vals)
        for lam, rho in ((0.0, 1.0), (1.0, 0.0)):
            env = envelope(f, lam, rho)
            if np.any(env.s * (f(nodes) - env.value(nodes)) < 0):
                failures.append("envelope above flux")
            if env.value(lam) != f(lam) or env.value(rho) != f(rho):
                failures.append("endpoint contact")
            if np.any(np.diff(env.slopes) < 0):
                failures.append("hull not convex")
            for _, left, right in riemann_solution(f, lam, rho).jumps():
                if not oleinik_check(f, left, right):
                    failures.append("oleinik")

    # mass conservation on rings
    for seed in range(20):
        model = get_model("k-exclusion", K=2, kernel={1: 0.5, -1: 0.3, 2: 0.2})
        sites = rng.integers(0, 3, 60)
        res = simulate(SimulationRun(model, LatticeConfig.ring(sites), 50.0, seed=seed,
                                     snapshot_times=tuple(np.linspace(1, 50, 25))))
        if np.any(res.snapshots.sum(axis=1) != sites.sum()):
            failures.append("mass")
    ok = criterion(13, not failures, "no violations" if not failures else f"violations: {sorted(set(failures))}")
    assert ok
