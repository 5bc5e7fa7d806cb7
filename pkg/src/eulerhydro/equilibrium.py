"""Stationary flux estimates from ring simulations, and the K-exclusion flux bounds.

The flux at density ``rho`` is the long-run current of a ring holding
``round(rho * L)`` particles: after a burn-in the total particle displacement
is divided by ``L`` and the measurement time, which averages the current over
every bond.  Replicas start from independent uniform placements and give the
standard error.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .conservation_law import FluxSpec, tabulated_flux
from .dynamics import Simulator, map_replicas
from .errors import ConfigurationError, DomainError
from .lattice_core import LatticeConfig, RateModel

__all__ = [
    "FluxSample",
    "FluxTable",
    "particle_count",
    "place_particles",
    "estimate_flux",
    "build_flux_table",
    "kexclusion_bounds",
    "CheckResult",
    "StructuralReport",
    "structural_checks",
    "is_totally_asymmetric_exclusion",
]

BURN_IN_FACTOR = 10
HORIZON_FACTOR = 100


@dataclass(frozen=True)
class FluxSample:
    density: float
    estimate: float
    stderr: float
    L: int
    burn_in: float
    horizon: float
    replicas: int
    seed: int
    n_particles: int
    replica_estimates: tuple[float, ...] = ()


def particle_count(rho: float, L: int, K: int) -> int:
    n = int(math.floor(rho * L + 0.5))
    if not 0 <= n <= K * L:
        raise ConfigurationError(f"{n} particles do not fit on {L} sites with cap {K}")
    return n


def place_particles(n: int, L: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Occupancies of ``n`` particles dropped uniformly into the ``K * L`` free slots of a ring."""
    if not 0 <= n <= K * L:
        raise ConfigurationError(f"{n} particles do not fit on {L} sites with cap {K}")
    slots = rng.choice(K * L, size=n, replace=False)
    return np.bincount(slots // K, minlength=L).astype(np.int64)


def _replica_current(model: RateModel, n: int, L: int, burn_in: float, horizon: float, seed: int, r: int) -> float:
    rng = np.random.default_rng([int(seed), int(r), 1])
    sim = Simulator(model, LatticeConfig.ring(place_particles(n, L, model.K, rng)), seed=seed, replica=r)
    sim.advance(burn_in)
    sim.reset_counters()
    sim.advance(burn_in + horizon)
    return float(sim.disp[0]) / (L * horizon)


def estimate_flux(
    model: RateModel,
    rho: float,
    L: int = 1000,
    burn_in: float | None = None,
    horizon: float | None = None,
    replicas: int = 10,
    seed: int = 0,
    workers: int | None = None,
) -> FluxSample:
    """Ring estimate of the stationary current at density ``rho``.

    Burn-in and horizon default to ``10 L`` and ``100 L`` time units.  With no
    particles, or every site full, nothing moves and the estimate is exactly 0.
    """
    if not 0 <= rho <= model.K:
        raise DomainError(f"density {rho} outside [0, {model.K}]")
    if L < 2 * max(model.M, 1) + 1:
        raise ConfigurationError(f"ring of {L} sites is too small for jump range {model.M}")
    if replicas < 1:
        raise ConfigurationError("need at least one replica")
    burn_in = BURN_IN_FACTOR * L if burn_in is None else float(burn_in)
    horizon = HORIZON_FACTOR * L if horizon is None else float(horizon)
    if burn_in < 0 or horizon <= 0:
        raise ConfigurationError("burn-in must be nonnegative and horizon positive")
    n = particle_count(rho, L, model.K)
    if n == 0 or n == model.K * L:
        vals = [0.0] * replicas
    else:
        vals = map_replicas(lambda r: _replica_current(model, n, L, burn_in, horizon, seed, r), range(replicas), workers)
    arr = np.asarray(vals, dtype=float)
    se = float(arr.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return FluxSample(float(rho), float(arr.mean()), se, int(L), burn_in, horizon, int(replicas), int(seed), n,
                      tuple(float(v) for v in arr))


def _pinned(rho: float, K: int, L: int, burn_in: float, horizon: float, replicas: int, seed: int) -> FluxSample:
    return FluxSample(float(rho), 0.0, 0.0, L, burn_in, horizon, replicas, seed, int(round(rho * L)), (0.0,) * replicas)


@dataclass(frozen=True, eq=False)
class FluxTable:
    """Flux samples on a strictly increasing grid from 0 to ``K``, linearly interpolated."""

    K: int
    samples: tuple[FluxSample, ...]
    model_name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.densities
        if d.size < 2 or d[0] != 0 or d[-1] != self.K or np.any(np.diff(d) <= 0):
            raise ConfigurationError(f"flux table grid must increase strictly from 0 to {self.K}")

    @classmethod
    def from_values(cls, K: int, densities, estimates, stderrs=None, model_name: str = "custom") -> "FluxTable":
        """Table from given numbers (e.g. an exact flux), without simulation metadata."""
        d = np.asarray(densities, dtype=float)
        e = np.asarray(estimates, dtype=float)
        s = np.zeros_like(d) if stderrs is None else np.asarray(stderrs, dtype=float)
        samples = tuple(FluxSample(float(a), float(b), float(c), 0, 0.0, 0.0, 0, 0, 0) for a, b, c in zip(d, e, s))
        return cls(int(K), samples, model_name)

    @property
    def densities(self) -> np.ndarray:
        return np.array([s.density for s in self.samples])

    @property
    def estimates(self) -> np.ndarray:
        return np.array([s.estimate for s in self.samples])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([s.stderr for s in self.samples])

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > self.K):
            raise DomainError(f"density outside [0, {self.K}]")
        out = np.interp(u, self.densities, self.estimates)
        return out if out.ndim else float(out)

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(np.diff(self.estimates) / np.diff(self.densities))))

    def to_flux(self) -> FluxSpec:
        return tabulated_flux(self.densities, self.estimates, name=f"table:{self.model_name}", K=self.K)

    def to_csv(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``density, estimate, stderr, L, horizon, seed`` rows plus a ``.json`` companion."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["density", "estimate", "stderr", "L", "horizon", "seed"])
            for s in self.samples:
                w.writerow([repr(s.density), repr(s.estimate), repr(s.stderr), s.L, repr(s.horizon), s.seed])
        meta = {
            "K": self.K,
            "model": self.model_name,
            "meta": self.meta,
            "samples": [
                {"burn_in": s.burn_in, "replicas": s.replicas, "n_particles": s.n_particles,
                 "replica_estimates": list(s.replica_estimates)}
                for s in self.samples
            ],
        }
        side = path.with_suffix(".json")
        side.write_text(json.dumps(meta, indent=2), encoding="utf-8")
        return path, side

    @classmethod
    def from_csv(cls, path: str | Path) -> "FluxTable":
        path = Path(path)
        side = path.with_suffix(".json")
        meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else {}
        extra = meta.get("samples", [])
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        samples = []
        for i, r in enumerate(rows):
            e = extra[i] if i < len(extra) else {}
            samples.append(FluxSample(
                float(r["density"]), float(r["estimate"]), float(r["stderr"]), int(r["L"]),
                float(e.get("burn_in", 0.0)), float(r["horizon"]), int(e.get("replicas", 0)), int(r["seed"]),
                int(e.get("n_particles", 0)), tuple(float(v) for v in e.get("replica_estimates", ())),
            ))
        K = meta.get("K")
        if K is None:
            K = int(round(samples[-1].density))
        return cls(int(K), tuple(samples), meta.get("model", "custom"), meta.get("meta", {}))


def build_flux_table(
    model: RateModel,
    grid: Sequence[float],
    L: int = 1000,
    burn_in: float | None = None,
    horizon: float | None = None,
    replicas: int = 10,
    seed: int = 0,
    workers: int | None = None,
) -> FluxTable:
    """Estimate the flux at every grid density; ``0`` and ``K`` are added if missing and pinned to 0."""
    K = model.K
    g = np.unique(np.concatenate([np.asarray(grid, dtype=float), [0.0, float(K)]]))
    if g[0] < 0 or g[-1] > K:
        raise DomainError(f"grid leaves [0, {K}]")
    b = BURN_IN_FACTOR * L if burn_in is None else float(burn_in)
    h = HORIZON_FACTOR * L if horizon is None else float(horizon)
    samples = []
    for rho in g:
        if rho == 0 or rho == K:
            samples.append(_pinned(rho, K, L, b, h, replicas, seed))
        else:
            samples.append(estimate_flux(model, float(rho), L, b, h, replicas, seed, workers))
    return FluxTable(K, tuple(samples), model.name, {"L": L, "burn_in": b, "horizon": h, "replicas": replicas})


def kexclusion_bounds(K: int, u):
    """Lower and upper bounds ``(F(u), H(u))`` on the totally asymmetric K-exclusion flux."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > K):
        raise DomainError(f"density outside [0, {K}]")
    r = K - u
    F = np.where(u <= 0.5, u * (1 - u), np.where(u <= K - 0.5, 0.25, r * (1 - r)))
    H = np.where(u <= K / 2, u / (1 + u), r / (1 + r))
    if u.ndim == 0:
        return float(F), float(H)
    return F, H


def is_totally_asymmetric_exclusion(model: RateModel) -> bool:
    """Nearest-neighbour jumps to the right at rate 1 whenever the donor is occupied and the receiver below K."""
    if model.offsets != (1,):
        return False
    n = np.arange(model.K + 1)
    expect = ((n[:, None] > 0) & (n[None, :] < model.K)).astype(float)
    return bool(np.array_equal(model.rate_table[0], expect))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    # (location, observed gap, allowance) for each failing grid point
    failures: tuple = ()


@dataclass(frozen=True)
class StructuralReport:
    applicable: bool
    checks: tuple[CheckResult, ...]
    sigmas: float

    @property
    def ok(self) -> bool:
        return self.applicable and all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


_EXACT = 1e-12


def structural_checks(table: FluxTable, model: RateModel | None = None, sigmas: float = 3.0) -> StructuralReport:
    """Symmetry about ``K/2``, concavity on consecutive grid triples and ``F <= G <= H``, each at ``sigmas`` standard errors.

    The properties are known only for totally asymmetric K-exclusion; for
    other models the report is marked not applicable and carries no checks.
    """
    if model is not None and (not is_totally_asymmetric_exclusion(model) or model.K != table.K):
        return StructuralReport(False, (), sigmas)
    K = table.K
    d, e, s = table.densities, table.estimates, table.stderrs

    sym = []
    for i, u in enumerate(d):
        j = np.flatnonzero(np.isclose(d, K - u, rtol=0, atol=1e-12))
        if j.size == 0 or j[0] < i:
            continue
        gap = abs(e[i] - e[j[0]])
        allow = sigmas * math.hypot(s[i], s[j[0]]) + _EXACT
        if gap > allow:
            sym.append((float(u), float(gap), float(allow)))

    conc = []
    for i in range(1, d.size - 1):
        w = (d[i] - d[i - 1]) / (d[i + 1] - d[i - 1])
        chord = (1 - w) * e[i - 1] + w * e[i + 1]
        deficit = chord - e[i]
        allow = sigmas * math.sqrt(((1 - w) * s[i - 1]) ** 2 + s[i] ** 2 + (w * s[i + 1]) ** 2) + _EXACT
        if deficit > allow:
            conc.append((float(d[i]), float(deficit), float(allow)))

    F, H = kexclusion_bounds(K, d)
    bnd = []
    for u, g, se, f, h in zip(d, e, s, F, H):
        allow = sigmas * se + _EXACT
        if g < f - allow or g > h + allow:
            bnd.append((float(u), float(g), float(allow)))

    checks = (
        CheckResult("symmetry", not sym, tuple(sym)),
        CheckResult("concavity", not conc, tuple(conc)),
        CheckResult("bounds", not bnd, tuple(bnd)),
    )
    return StructuralReport(True, checks, sigmas)
