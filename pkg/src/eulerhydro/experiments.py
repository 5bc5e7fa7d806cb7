"""End-to-end particle experiments compared against the macroscopic equation.

Every experiment samples initial configurations from a density profile on a
segment with frozen reservoirs, runs the dynamics up to time ``N t`` and
measures a macroscopic quantity per seed.  Verdicts use medians over seeds
and are stored with the numbers they were computed from.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .conservation_law import FluxSpec, godunov_reference, make_flux, riemann_solution
from .dynamics import CoupledSimulator, Simulator, map_replicas, replica_rng
from .errors import ConfigurationError, DomainError
from .glimm import GlimmConfig, glimm_run
from .lattice_core import LatticeConfig, RateModel
from .metrics import delta_config_profile, delta_configs, empirical_density_field
from .profiles import PiecewiseConstantProfile

__all__ = [
    "RiemannData",
    "Verdict",
    "ExperimentReport",
    "sample_configuration",
    "coupled_sample",
    "required_margin",
    "hydro_experiment",
    "riemann_local_equilibrium",
    "stability_experiment",
    "propagation_experiment",
]


@dataclass(frozen=True)
class RiemannData:
    """``lam`` left of the origin, ``rho`` from the origin on."""

    lam: float
    rho: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, self.lam, self.rho)
        return out if out.ndim else float(out)


_OPS = {"<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b, "<": lambda a, b: a < b, "==": lambda a, b: a == b}


@dataclass(frozen=True)
class Verdict:
    """``value op threshold``, recomputed on demand rather than stored as a bare flag."""

    name: str
    value: float
    op: str
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(_OPS[self.op](self.value, self.threshold))


@dataclass
class ExperimentReport:
    kind: str
    params: dict
    measurements: dict
    verdicts: list[Verdict] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "params": self.params,
            "measurements": self.measurements,
            "verdicts": [{**asdict(v), "passed": v.passed} for v in self.verdicts],
            "artifacts": self.artifacts,
            "notes": self.notes,
        }
        return _jsonable(d)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        verdicts = [Verdict(v["name"], v["value"], v["op"], v["threshold"]) for v in d.get("verdicts", [])]
        return cls(d["kind"], d["params"], d["measurements"], verdicts, d.get("artifacts", {}), d.get("notes", []))

    @classmethod
    def from_json(cls, text_or_path) -> "ExperimentReport":
        p = Path(text_or_path) if not str(text_or_path).lstrip().startswith("{") else None
        text = p.read_text(encoding="utf-8") if p is not None else str(text_or_path)
        return cls.from_dict(json.loads(text))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _describe_profile(u) -> dict:
    if isinstance(u, RiemannData):
        return {"riemann": [u.lam, u.rho]}
    if isinstance(u, PiecewiseConstantProfile):
        return {"breakpoints": u.breakpoints.tolist(), "values": u.values.tolist()}
    return {"callable": getattr(u, "__name__", type(u).__name__)}


def _site_range(u0, N: float, interval: tuple[float, float] | None) -> tuple[int, int]:
    if interval is None:
        if not isinstance(u0, PiecewiseConstantProfile):
            raise ConfigurationError("a sampling interval is needed for profiles without compact support")
        if u0.is_zero:
            return 0, 1
        interval = u0.support
    a, b = interval
    lo, hi = int(math.floor(a * N)), int(math.ceil(b * N))
    return lo, max(hi, lo + 1)


def _occupation_means(u0, N: float, lo: int, hi: int, K: int) -> np.ndarray:
    u = np.asarray(u0(np.arange(lo, hi) / N), dtype=float)
    if np.any(u < 0) or np.any(u > K):
        raise DomainError(f"profile leaves [0, {K}]")
    return u


def sample_configuration(
    u0: Callable, N: float, K: int, seed: int, interval: tuple[float, float] | None = None, replica: int = 0
) -> LatticeConfig:
    """Independent binomial occupancies with ``K`` trials and mean ``u0(y / N)`` at site ``y``.

    Sites cover ``interval`` (macroscopic units; the support for step
    profiles) and the result is a segment with empty frozen reservoirs.
    """
    lo, hi = _site_range(u0, N, interval)
    u = _occupation_means(u0, N, lo, hi, K)
    rng = replica_rng(seed, replica)
    return LatticeConfig.segment(rng.binomial(K, u / K).astype(np.int64), 0, 0, origin=lo)


def coupled_sample(
    u0: Callable, v0: Callable, N: float, K: int, seed: int, interval: tuple[float, float], replica: int = 0
) -> tuple[LatticeConfig, LatticeConfig]:
    """Samples of two profiles from shared uniforms, so ``u0 <= v0`` at a site gives ordered occupancies there."""
    lo, hi = _site_range(u0, N, interval)
    u = _occupation_means(u0, N, lo, hi, K)
    v = _occupation_means(v0, N, lo, hi, K)
    draws = replica_rng(seed, replica).random((hi - lo, K))
    eta = (draws < (u / K)[:, None]).sum(axis=1).astype(np.int64)
    xi = (draws < (v / K)[:, None]).sum(axis=1).astype(np.int64)
    return LatticeConfig.segment(eta, 0, 0, origin=lo), LatticeConfig.segment(xi, 0, 0, origin=lo)


def required_margin(model: RateModel, t: float) -> float:
    """Macroscopic distance boundary effects can travel by time ``N t``: ``V' t``."""
    return model.propagation_speed() * t


def _median(x) -> float:
    return float(np.median(np.asarray(x, dtype=float)))


def _reference(u0, flux: FluxSpec, t: float, window: tuple[float, float], method: str, seed: int):
    """Returns a function giving the exact (or reference) bin averages over given edges."""
    if isinstance(u0, RiemannData):
        sol = riemann_solution(flux, u0.lam, u0.rho)

        def averages(edges, sub=64):
            offs = (np.arange(sub) + 0.5) / sub
            pts = edges[:-1, None] + np.diff(edges)[:, None] * offs[None, :]
            return np.asarray(sol(pts, t), dtype=float).mean(axis=1)

        return averages, "riemann"
    if not isinstance(u0, PiecewiseConstantProfile):
        raise ConfigurationError("non-Riemann initial data must be a step profile")
    if method == "glimm":
        dx = 1e-2
        cfg = GlimmConfig(dx, 1.0 / (2.0 * max(flux.V, 1e-12)), t, seed=seed)
        prof = glimm_run(u0, flux, cfg).at(t)
        if not isinstance(prof, PiecewiseConstantProfile):
            raise ConfigurationError("glimm reference needs t on the sampling grid")
        return prof.cell_averages, "glimm"
    mesh = 1e-3
    a, b = window
    pad = flux.V * t + 10 * mesh
    lo = mesh * math.floor((a - pad) / mesh)
    hi = mesh * math.ceil((b + pad) / mesh)
    grid = godunov_reference(flux, u0, mesh, t, (lo, hi))
    return grid.profile().cell_averages, "godunov"


def hydro_experiment(
    model: RateModel,
    u0,
    N: int,
    t: float,
    flux=None,
    seeds: Sequence[int] = tuple(range(10)),
    interval: tuple[float, float] = (-2.0, 2.0),
    bin_width: float = 0.5,
    margin: float | None = None,
    tolerance: float = 0.05,
    reference: str = "auto",
    workers: int | None = None,
) -> ExperimentReport:
    """Particle density at time ``N t`` against the entropy solution at time ``t`` on ``interval``.

    Sites are sampled on ``interval`` widened by ``margin`` on both sides
    (default ``1.1 V' t + 2 bin_width``); a margin not exceeding ``V' t`` is
    rejected because reservoir effects could then reach the comparison zone.
    The L1 error compares bin averages of the particle density with bin
    averages of the reference solution; ``Delta^N`` is measured on the
    comparison interval against the reference averaged over lattice cells.
    """
    if flux is None:
        raise ConfigurationError("hydro_experiment needs a flux (name, table or FluxSpec)")
    flux = make_flux(flux)
    need = required_margin(model, t)
    if margin is None:
        margin = 1.1 * need + 2 * bin_width
    a, b = interval
    if margin <= need:
        raise ConfigurationError(
            f"margin {margin} must exceed V't = {need}: sample at least on "
            f"({a - need}, {b + need}) in macroscopic units, i.e. sites {math.floor((a - need) * N)}..{math.ceil((b + need) * N)}"
        )
    window = (a - margin, b + margin)
    nb = int(round((b - a) / bin_width))
    if nb < 1 or not math.isclose(nb * bin_width, b - a):
        raise ConfigurationError("comparison interval must be a whole number of bins")
    edges = a + bin_width * np.arange(nb + 1)
    averages, ref_kind = _reference(u0, flux, t, interval, "glimm" if reference == "glimm" else "godunov",
                                    seeds[0] if seeds else 0)
    exact_bins = averages(edges)
    lo_site, hi_site = int(math.floor(a * N)), int(math.ceil(b * N))
    cell_edges = np.arange(lo_site, hi_site + 1) / N
    exact_cells = PiecewiseConstantProfile(cell_edges, averages(cell_edges))

    def one(seed: int):
        cfg = sample_configuration(u0, N, model.K, seed, window)
        sim = Simulator(model, cfg, seed=seed, replica=1)
        sim.advance(N * t)
        final = sim.config
        field_ = empirical_density_field(final, N, bin_width, interval)
        l1 = float(np.sum(np.abs(field_.density - exact_bins)) * bin_width)
        i0 = lo_site - final.origin
        inner = final.sites[i0:i0 + (hi_site - lo_site)]
        dN = delta_config_profile(inner, exact_cells, N, origin=lo_site)
        return l1, dN, field_.density

    out = map_replicas(one, list(seeds), workers)
    l1s = [o[0] for o in out]
    deltas = [o[1] for o in out]
    med = _median(l1s)
    rep = ExperimentReport(
        "hydro",
        {
            "model": model.to_dict(), "u0": _describe_profile(u0), "flux": flux.describe(), "N": N, "t": t,
            "seeds": list(seeds), "interval": list(interval), "bin_width": bin_width, "margin": margin,
            "window": list(window), "propagation_speed": model.propagation_speed(), "reference": ref_kind,
            "tolerance": tolerance,
        },
        {
            "l1_error": l1s, "delta_N": deltas, "median_l1_error": med, "median_delta_N": _median(deltas),
            "bin_centers": 0.5 * (edges[:-1] + edges[1:]), "reference_bins": exact_bins,
            "density_bins": np.median(np.array([o[2] for o in out]), axis=0),
        },
        [Verdict("median_l1_error", med, "<=", tolerance)],
        notes=["initial configurations are product binomial with the given profile"],
    )
    return rep


def riemann_local_equilibrium(
    model: RateModel,
    lam: float,
    rho: float,
    flux,
    N: int,
    t: float,
    rays: Sequence[float],
    l: int,
    seeds: Sequence[int] = tuple(range(10)),
    tolerance: float = 0.03,
    sigma_tol: float = 1e-6,
    workers: int | None = None,
) -> ExperimentReport:
    """Block averages of radius ``l`` at sites ``floor(v N t)`` after time ``N t``, against ``h_c(v)``."""
    flux = make_flux(flux)
    sol = riemann_solution(flux, lam, rho)
    notes = ["only one-point block averages are measured, not the full local law"]
    targets = []
    for v in rays:
        if sol.env is not None and sol.env.in_sigma_low(v, sigma_tol):
            msg = f"ray v={v} sits on a shock velocity; the target uses the right limit"
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)
        targets.append(float(sol.profile(v)))
    reach = max(abs(v) for v in rays) * t if rays else 0.0
    margin = 1.1 * required_margin(model, t) + reach + (l + 1) / N
    window = (-margin, margin)
    sites = [int(math.floor(v * N * t)) for v in rays]

    def one(seed: int):
        cfg = sample_configuration(RiemannData(lam, rho), N, model.K, seed, window)
        sim = Simulator(model, cfg, seed=seed, replica=1)
        sim.advance(N * t)
        final = sim.config
        out = []
        for x in sites:
            i = x - final.origin
            out.append(float(final.sites[i - l:i + l + 1].mean()))
        return out

    per_seed = np.array(map_replicas(one, list(seeds), workers))
    med = np.median(per_seed, axis=0)
    verdicts = [Verdict(f"ray_{v:g}", float(abs(m - h)), "<=", tolerance) for v, m, h in zip(rays, med, targets)]
    return ExperimentReport(
        "local-eq",
        {"model": model.to_dict(), "lam": lam, "rho": rho, "flux": flux.describe(), "N": N, "t": t,
         "rays": list(rays), "l": l, "seeds": list(seeds), "tolerance": tolerance, "window": list(window)},
        {"block_averages": per_seed, "median": med, "target": targets, "sites": sites},
        verdicts,
        notes=notes,
    )


def stability_experiment(
    model: RateModel,
    u0,
    v0,
    N: int,
    t: float,
    seeds: Sequence[int] = tuple(range(10)),
    slack: float | None = None,
    interval: tuple[float, float] | None = None,
    sampling: str = "independent",
    workers: int | None = None,
) -> ExperimentReport:
    """``Delta^N(eta_{Nt}, xi_{Nt}) - Delta^N(eta_0, xi_0)`` under the basic coupling, per seed.

    Initial configurations are sampled independently, or from shared
    uniforms with ``sampling="shared"`` (ordered wherever the profiles are).
    The window is the union of supports widened by ``V' t`` plus two sites.
    ``slack`` defaults to ``N^{-1/2}``.
    """
    if sampling not in ("independent", "shared"):
        raise ConfigurationError("sampling must be 'independent' or 'shared'")
    if slack is None:
        slack = 1.0 / math.sqrt(N)
    if interval is None:
        sup = [p.support for p in (u0, v0) if isinstance(p, PiecewiseConstantProfile) and not p.is_zero]
        if not sup:
            raise ConfigurationError("need an interval or a nonzero step profile")
        lo, hi = min(s[0] for s in sup), max(s[1] for s in sup)
        pad = required_margin(model, t) + 2.0 / N
        interval = (lo - pad, hi + pad)

    def one(seed: int):
        if sampling == "shared":
            a, b = coupled_sample(u0, v0, N, model.K, seed, interval)
        else:
            a = sample_configuration(u0, N, model.K, seed, interval, replica=0)
            b = sample_configuration(v0, N, model.K, seed, interval, replica=2)
        d0 = delta_configs(a, b, N)
        sim = CoupledSimulator(model, a, b, seed=seed, replica=1)
        sim.advance(N * t)
        fa, fb = sim.configs
        return delta_configs(fa, fb, N) - d0, d0

    out = map_replicas(one, list(seeds), workers)
    excess = [o[0] for o in out]
    med = _median(excess)
    return ExperimentReport(
        "stability",
        {"model": model.to_dict(), "u0": _describe_profile(u0), "v0": _describe_profile(v0), "N": N, "t": t,
         "seeds": list(seeds), "slack": slack, "interval": list(interval), "sampling": sampling},
        {"excess": excess, "initial_delta": [o[1] for o in out], "median_excess": med, "max_excess": max(excess)},
        [Verdict("median_excess", med, "<=", slack)],
    )


def propagation_experiment(
    model: RateModel,
    eta0: LatticeConfig,
    zeta0: LatticeConfig,
    agreement: tuple[int, int],
    t: float,
    seeds: Sequence[int] = tuple(range(100)),
    C: float | None = None,
    workers: int | None = None,
) -> ExperimentReport:
    """Coupled runs from configurations equal on sites ``[x, y]``; checks agreement on ``[x + V't, y - V't]``.

    ``C`` is fitted from the disagreement fraction ``q`` as ``-log(q) / t``
    (infinite when every seed agrees).  The verdict compares the agreement
    fraction with ``1 - exp(-C t)`` for a given ``C``; without one it only
    requires agreement in every seed.
    """
    x, y = agreement
    speed = model.propagation_speed()
    if y <= x or (speed > 0 and not 0 <= t < (y - x) / (2 * speed)):
        raise DomainError(f"t={t} leaves the window (y-x)/(2V') for sites [{x}, {y}]")
    if eta0.origin != zeta0.origin or eta0.L != zeta0.L:
        raise ConfigurationError("configurations must share a window")
    i0, i1 = x - eta0.origin, y - eta0.origin
    if i0 < 0 or i1 >= eta0.L:
        raise ConfigurationError("agreement interval leaves the window")
    if not np.array_equal(eta0.sites[i0:i1 + 1], zeta0.sites[i0:i1 + 1]):
        raise ConfigurationError(f"initial configurations differ inside [{x}, {y}]")
    lo = int(math.ceil(x + speed * t))
    hi = int(math.floor(y - speed * t))

    def one(seed: int):
        sim = CoupledSimulator(model, eta0, zeta0, seed=seed)
        sim.advance(t)
        a, b = sim.configs
        return bool(np.array_equal(a.sites[lo - a.origin:hi - a.origin + 1], b.sites[lo - b.origin:hi - b.origin + 1]))

    agree = map_replicas(one, list(seeds), workers)
    frac = float(np.mean(agree)) if agree else 1.0
    fitted = math.inf if frac >= 1.0 else (-math.log(1.0 - frac) / t if t > 0 else 0.0)
    threshold = 1.0 if C is None else 1.0 - math.exp(-C * t)
    return ExperimentReport(
        "propagation",
        {"model": model.to_dict(), "agreement": [x, y], "t": t, "seeds": list(seeds), "propagation_speed": speed,
         "inner": [lo, hi]},
        {"agree": agree, "agreement_fraction": frac, "fitted_C": fitted if math.isfinite(fitted) else None},
        [Verdict("agreement_fraction", frac, ">=", threshold)],
        notes=["V' = M * max total per-site jump rate; C is fitted, not asserted"],
    )
