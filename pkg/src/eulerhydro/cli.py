"""Command-line entry point: ``eulerhydro <subcommand> [options]``.

Every subcommand writes ``report.json`` plus CSV series into ``--out`` and
two-column ``(x, value)`` files into ``--out/plotdata``.  A JSON file given
with ``--config`` supplies defaults for any option (keys use the option's
long name with dashes replaced by underscores).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .conservation_law import make_flux, riemann_solution
from .dynamics import SimulationRun, bond_current, export_snapshots, simulate
from .equilibrium import FluxTable, build_flux_table, structural_checks
from .errors import EulerHydroError
from .experiments import (
    ExperimentReport,
    RiemannData,
    Verdict,
    hydro_experiment,
    propagation_experiment,
    riemann_local_equilibrium,
    sample_configuration,
    stability_experiment,
)
from .glimm import GlimmConfig, glimm_run
from .lattice_core import LatticeConfig, get_model, load_model, validate_model
from .profiles import PiecewiseConstantProfile


def _write_series(path: Path, header: Sequence[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _plot(out: Path, name: str, x, y) -> Path:
    return _write_series(out / "plotdata" / f"{name}.csv", ["x", "value"], zip(np.asarray(x, float), np.asarray(y, float)))


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def parse_profile(spec) -> PiecewiseConstantProfile:
    """``"b0,b1,...:v0,v1,..."``, a mapping with ``breakpoints``/``values``, or a CSV path."""
    if isinstance(spec, PiecewiseConstantProfile):
        return spec
    if isinstance(spec, dict):
        return PiecewiseConstantProfile(np.array(spec["breakpoints"], float), np.array(spec["values"], float))
    text = str(spec)
    if text.endswith(".csv"):
        return PiecewiseConstantProfile.from_csv(text)
    if ":" not in text:
        raise argparse.ArgumentTypeError("profile must look like 'b0,b1,...:v0,...'")
    b, v = text.split(":", 1)
    return PiecewiseConstantProfile(np.array(_floats(b)), np.array(_floats(v)))


def _model(args):
    if getattr(args, "model_file", None):
        return load_model(args.model_file)
    params = {}
    if getattr(args, "K", None) is not None:
        params["K"] = int(args.K)
    return get_model(args.model, **params)


def _flux(args):
    src = args.flux
    if isinstance(src, str) and src.endswith(".csv"):
        return FluxTable.from_csv(src).to_flux()
    if isinstance(src, str) and src.endswith(".json"):
        return make_flux(json.loads(Path(src).read_text(encoding="utf-8")))
    return make_flux(src)


def _seeds(args) -> list[int]:
    return [args.seed + i for i in range(args.replicas)]


def _finish(args, report: ExperimentReport) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_json(out / "report.json")
    for v in report.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.name}: {v.value:.6g} {v.op} {v.threshold:.6g}")
    if not report.verdicts:
        print(f"wrote {out / 'report.json'}")
    return 0 if report.passed else 1


def cmd_validate(args) -> int:
    model = _model(args)
    rep = validate_model(model)
    report = ExperimentReport(
        "validate",
        {"model": model.to_dict()},
        {"violations": [{"assumption": v.assumption, "message": v.message, "witness": list(v.witness)} for v in rep.violations]},
        [Verdict("violations", float(len(rep.violations)), "==", 0.0)],
    )
    for v in rep.violations:
        print(f"{v.assumption}: {v.message}")
    return _finish(args, report)


def cmd_simulate(args) -> int:
    model = _model(args)
    out = Path(args.out)
    if args.profile:
        u0 = parse_profile(args.profile)
        init = sample_configuration(u0, args.N, model.K, args.seed)
    else:
        rng = np.random.default_rng([args.seed, 0, 1])
        sites = rng.binomial(model.K, args.density / model.K, args.L).astype(np.int64)
        init = LatticeConfig.ring(sites) if args.ring else LatticeConfig.segment(sites)
    times = tuple(np.linspace(0, args.horizon, args.snapshots + 1)[1:]) if args.snapshots else ()
    results = []
    for r in range(args.replicas):
        res = simulate(SimulationRun(model, init, args.horizon, args.seed, r, args.max_events, times, True))
        results.append(res)
    currents = [bond_current(res) if res.final.is_ring else float(res.crossings.mean() / res.elapsed)
                if res.elapsed > 0 else 0.0 for res in results]
    final = results[0].final
    _write_series(out / "final.csv", ["site", "occupancy"], zip(final.origin + np.arange(final.L), final.sites))
    _plot(out, "final_occupancy", final.origin + np.arange(final.L), final.sites)
    if times:
        export_snapshots(out / "snapshots.csv", results)
    report = ExperimentReport(
        "simulate",
        {"model": model.to_dict(), "horizon": args.horizon, "seed": args.seed, "replicas": args.replicas,
         "L": final.L, "ring": final.is_ring},
        {"mean_current": currents, "events": [res.n_events for res in results],
         "mass": [res.final.mass() for res in results], "initial_mass": init.mass()},
        artifacts={"final": "final.csv"},
    )
    return _finish(args, report)


def cmd_flux_table(args) -> int:
    model = _model(args)
    grid = _floats(args.grid) if args.grid else list(np.linspace(0, model.K, args.points))
    table = build_flux_table(model, grid, args.L, args.burn_in, args.horizon, args.replicas, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "flux_table.csv")
    _plot(out, "flux", table.densities, table.estimates)
    checks = structural_checks(table, model)
    report = ExperimentReport(
        "flux-table",
        {"model": model.to_dict(), "L": args.L, "horizon": args.horizon, "replicas": args.replicas, "seed": args.seed},
        {"density": table.densities, "estimate": table.estimates, "stderr": table.stderrs,
         "structural": {c.name: {"passed": c.passed, "failures": list(c.failures)} for c in checks.checks},
         "structural_applicable": checks.applicable},
        [Verdict(f"structural_{c.name}", float(len(c.failures)), "==", 0.0) for c in checks.checks],
        {"table": "flux_table.csv", "metadata": "flux_table.json"},
    )
    return _finish(args, report)


def cmd_riemann(args) -> int:
    flux = _flux(args)
    sol = riemann_solution(flux, args.lam, args.rho)
    out = Path(args.out)
    x = np.linspace(args.xmin, args.xmax, args.points)
    u = sol(x, args.t)
    _write_series(out / "solution.csv", ["x", "u"], zip(x, u))
    _plot(out, "solution", x, u)
    if sol.env is not None:
        sol.env.to_csv(out / "envelope.csv")
        bu, bg = sol.env.breakpoints
        _plot(out, "envelope", bu, bg)
    report = ExperimentReport(
        "riemann",
        {"flux": flux.describe(), "lam": args.lam, "rho": args.rho, "t": args.t},
        {"speed_range": list(sol.speed_range), "shocks": [list(j) for j in sol.jumps()]},
        artifacts={"solution": "solution.csv"},
    )
    return _finish(args, report)


def cmd_glimm(args) -> int:
    flux = _flux(args)
    u0 = parse_profile(args.profile)
    ratio = args.ratio if args.ratio is not None else 1.0 / (2.0 * flux.V)
    cfg = GlimmConfig(args.dx, ratio, args.horizon, args.sampling, args.seed)
    sol = glimm_run(u0, flux, cfg)
    out = Path(args.out)
    prof = sol.at(cfg.n_steps * cfg.dt)
    out.mkdir(parents=True, exist_ok=True)
    prof.to_csv(out / "profile.csv")
    _write_series(out / "sampling.csv", ["k", "a"], enumerate(sol.a))
    x = np.linspace(args.xmin, args.xmax, args.points)
    _plot(out, "glimm", x, prof(x))
    report = ExperimentReport(
        "glimm",
        {"flux": flux.describe(), "u0": {"breakpoints": u0.breakpoints, "values": u0.values}, "dx": args.dx,
         "ratio": ratio, "horizon": args.horizon, "sampling": args.sampling, "seed": args.seed},
        {"steps": cfg.n_steps, "final_time": cfg.n_steps * cfg.dt, "mass_initial": u0.integral(),
         "mass_final": prof.integral()},
        artifacts={"profile": "profile.csv", "sampling": "sampling.csv"},
    )
    return _finish(args, report)


def _initial(args):
    if args.profile:
        return parse_profile(args.profile)
    return RiemannData(args.lam, args.rho)


def cmd_hydro(args) -> int:
    model = _model(args)
    rep = hydro_experiment(model, _initial(args), args.N, args.t, _flux(args), _seeds(args),
                           (args.xmin, args.xmax), args.bin_width, args.margin, args.tolerance, args.reference)
    out = Path(args.out)
    m = rep.measurements
    _write_series(out / "density.csv", ["bin_center", "particles", "reference"],
                  zip(m["bin_centers"], m["density_bins"], m["reference_bins"]))
    _plot(out, "density", m["bin_centers"], m["density_bins"])
    _plot(out, "reference", m["bin_centers"], m["reference_bins"])
    rep.artifacts["density"] = "density.csv"
    return _finish(args, rep)


def cmd_local_eq(args) -> int:
    model = _model(args)
    rays = _floats(args.rays)
    rep = riemann_local_equilibrium(model, args.lam, args.rho, _flux(args), args.N, args.t, rays, args.l,
                                    _seeds(args), args.tolerance)
    out = Path(args.out)
    m = rep.measurements
    _write_series(out / "blocks.csv", ["v", "median", "target"], zip(rays, m["median"], m["target"]))
    _plot(out, "blocks", rays, m["median"])
    rep.artifacts["blocks"] = "blocks.csv"
    return _finish(args, rep)


def cmd_stability(args) -> int:
    model = _model(args)
    rep = stability_experiment(model, parse_profile(args.u0), parse_profile(args.v0), args.N, args.t,
                               _seeds(args), args.slack, sampling=args.sampling)
    out = Path(args.out)
    _write_series(out / "excess.csv", ["seed", "excess"], zip(_seeds(args), rep.measurements["excess"]))
    rep.artifacts["excess"] = "excess.csv"
    return _finish(args, rep)


def cmd_propagation(args) -> int:
    model = _model(args)
    rng = np.random.default_rng([args.seed, 0, 1])
    sites = rng.binomial(model.K, args.density / model.K, args.L).astype(np.int64)
    eta = LatticeConfig.segment(sites)
    other = sites.copy()
    outside = np.ones(args.L, dtype=bool)
    outside[args.x:args.y + 1] = False
    other[outside] = rng.binomial(model.K, args.density / model.K, int(outside.sum()))
    zeta = LatticeConfig.segment(other)
    rep = propagation_experiment(model, eta, zeta, (args.x, args.y), args.t, _seeds(args), args.C)
    out = Path(args.out)
    _write_series(out / "agreement.csv", ["seed", "agree"], zip(_seeds(args), [int(a) for a in rep.measurements["agree"]]))
    rep.artifacts["agreement"] = "agreement.csv"
    return _finish(args, rep)


def _add_model(p):
    p.add_argument("--model", default="tasep", help="registry name (tasep, ssep, asep, k-exclusion, tasep-range2, ...)")
    p.add_argument("--model-file", help="JSON model with K, kernel and rates")
    p.add_argument("--K", type=int, help="occupancy cap for k-exclusion")


_COMMON = {"seed": 0, "replicas": 10, "out": "out", "config": None}


def _add_common(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda k: _COMMON[k]) if defaults else (lambda k: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d("seed"))
    p.add_argument("--replicas", type=int, default=d("replicas"), help="replicas or seeds per experiment")
    p.add_argument("--out", default=d("out"), help="output directory")
    p.add_argument("--config", default=d("config"), help="JSON file with option defaults")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="eulerhydro", description=__doc__.splitlines()[0])
    _add_common(parser, defaults=True)
    # Subcommands accept the same options but leave unset ones alone, so a
    # value given before the subcommand is not overwritten by a default.
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, defaults=False)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("validate", cmd_validate, "check a model's assumptions")
    _add_model(p)

    p = add("simulate", cmd_simulate, "run the particle system")
    _add_model(p)
    p.add_argument("--L", type=int, default=200)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--ring", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--profile", help="sample a segment from a step profile instead of a uniform ring")
    p.add_argument("--N", type=float, default=100.0)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--snapshots", type=int, default=0)
    p.add_argument("--max-events", type=int)

    p = add("flux-table", cmd_flux_table, "estimate the macroscopic flux on a density grid")
    _add_model(p)
    p.add_argument("--grid", help="comma-separated densities")
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--L", type=int, default=1000)
    p.add_argument("--burn-in", type=float)
    p.add_argument("--horizon", type=float)

    p = add("riemann", cmd_riemann, "solve a Riemann problem")
    p.add_argument("--flux", default="tasep", help="registry name or flux table CSV")
    p.add_argument("--lam", type=float, required=False, default=0.8)
    p.add_argument("--rho", type=float, required=False, default=0.2)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--xmin", type=float, default=-2.0)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--points", type=int, default=401)

    p = add("glimm", cmd_glimm, "run Glimm's scheme on a step profile")
    p.add_argument("--flux", default="tasep")
    p.add_argument("--profile", default="-1,0,1:0.8,0.2")
    p.add_argument("--dx", type=float, default=0.05)
    p.add_argument("--ratio", type=float)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--sampling", choices=["uniform", "vdc"], default="uniform")
    p.add_argument("--xmin", type=float, default=-2.0)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--points", type=int, default=401)

    p = add("hydro", cmd_hydro, "particle density against the entropy solution")
    _add_model(p)
    p.add_argument("--flux", default="tasep")
    p.add_argument("--lam", type=float, default=0.8)
    p.add_argument("--rho", type=float, default=0.2)
    p.add_argument("--profile", help="step profile instead of Riemann data")
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--xmin", type=float, default=-2.0)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--bin-width", type=float, default=0.5)
    p.add_argument("--margin", type=float)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--reference", choices=["auto", "godunov", "glimm"], default="auto")

    p = add("local-eq", cmd_local_eq, "block densities along rays of a Riemann fan")
    _add_model(p)
    p.add_argument("--flux", default="tasep")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--rays", default="-0.5,0,0.5")
    p.add_argument("--l", type=int, default=50)
    p.add_argument("--tolerance", type=float, default=0.03)

    p = add("stability", cmd_stability, "coupled Delta^N excess for two profiles")
    _add_model(p)
    p.add_argument("--u0", default="-0.5,0:0.5")
    p.add_argument("--v0", default="-0.25,0.25:0.5")
    p.add_argument("--N", type=int, default=500)
    p.add_argument("--t", type=float, default=0.2)
    p.add_argument("--slack", type=float)
    p.add_argument("--sampling", choices=["independent", "shared"], default="independent")

    p = add("propagation", cmd_propagation, "agreement of coupled runs inside a shrinking window")
    _add_model(p)
    p.add_argument("--L", type=int, default=400)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--x", type=int, default=100)
    p.add_argument("--y", type=int, default=300)
    p.add_argument("--t", type=float, default=20.0)
    p.add_argument("--C", type=float)
    return parser, subs


def _config_defaults(argv: Sequence[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config, encoding="utf-8") as fh:
        return {k.replace("-", "_"): v for k, v in json.load(fh).items()}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        defaults = _config_defaults(argv)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if defaults:
        parser.set_defaults(**{k: v for k, v in defaults.items() if k in _COMMON})
        rest = {k: v for k, v in defaults.items() if k not in _COMMON}
        for p in subs.values():
            p.set_defaults(**rest)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EulerHydroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
