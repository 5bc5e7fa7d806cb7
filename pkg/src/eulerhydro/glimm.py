"""Glimm's random-choice scheme and step-function approximations with admissible values.

One cycle samples the current profile on a staggered grid (turning it into
cells of length ``dx``) and then evolves the cells exactly for one time step
as a row of independent Riemann fans.  Fans are evaluated pointwise and never
discretized, so the only approximation is the sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conservation_law import FluxSpec, riemann_solution
from .errors import ConfigurationError, InfeasibilityError, NoninteractionError
from .metrics import l1_distance
from .profiles import PiecewiseConstantProfile

__all__ = [
    "GlimmConfig",
    "sampling_sequence",
    "van_der_corput",
    "sample_step",
    "FanCache",
    "FanComposite",
    "evolve_step",
    "GlimmSolution",
    "glimm_run",
    "ContractionEstimate",
    "expected_contraction",
    "modulus",
    "r_valued_approximation",
    "two_level_approximation",
]

FAN_RESOLUTION = 2001
_SLACK = 1e-12


def van_der_corput(n: int, base: int = 2) -> float:
    """``n``-th element (``n >= 1``) of the van der Corput sequence in ``(0, 1)``."""
    q, denom = 0.0, 1.0
    while n:
        n, r = divmod(n, base)
        denom *= base
        q += r / denom
    return q


@dataclass(frozen=True)
class GlimmConfig:
    """Mesh ``dx``, ratio ``R = dt/dx`` (at most ``1/(2V)``), horizon and sampling law."""

    dx: float
    ratio: float
    horizon: float
    sampling: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.dx <= 0 or self.ratio <= 0:
            raise ConfigurationError("dx and ratio must be positive")
        if self.horizon < 0:
            raise ConfigurationError("horizon must be nonnegative")
        if self.sampling not in ("uniform", "vdc"):
            raise ConfigurationError("sampling must be 'uniform' or 'vdc'")

    @property
    def dt(self) -> float:
        return self.ratio * self.dx

    @property
    def n_steps(self) -> int:
        """Index of the last sampling time ``t_k = k dt <= horizon``."""
        return int(math.floor(self.horizon / self.dt + 1e-9))

    def check_cfl(self, flux: FluxSpec) -> None:
        if flux.V > 0 and self.ratio > 1.0 / (2.0 * flux.V) * (1 + _SLACK):
            raise ConfigurationError(
                f"ratio {self.ratio} violates the CFL condition R <= 1/(2V) = {1.0 / (2.0 * flux.V)}"
            )


def sampling_sequence(config: GlimmConfig, n: int) -> np.ndarray:
    """``a_0, ..., a_{n-1}`` in ``(-1, 1)``: seeded uniform draws or van der Corput points."""
    if config.sampling == "vdc":
        return np.array([2.0 * van_der_corput(k + 1) - 1.0 for k in range(n)])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(config.seed)])))
    a = rng.uniform(-1.0, 1.0, n)
    # open interval: uniform() can return exactly -1
    return np.where(a <= -1.0, np.nextafter(-1.0, 0.0), a)


def _support(profile) -> tuple[float, float] | None:
    if isinstance(profile, PiecewiseConstantProfile):
        return None if profile.is_zero else profile.support
    return profile.support


def sample_step(profile, dx: float, a: float, k: int = 0) -> PiecewiseConstantProfile:
    """Sample ``profile`` at ``(j + a/2) dx`` for ``j in k/2 + Z`` and spread over ``((j - 1/2) dx, (j + 1/2) dx)``."""
    if not -1.0 < a < 1.0:
        raise ConfigurationError("sampling parameter must lie in (-1, 1)")
    supp = _support(profile)
    if supp is None:
        return PiecewiseConstantProfile.zero()
    lo, hi = supp
    shift = 0.5 * k + 0.5 * a
    m0 = math.floor(lo / dx - shift) - 1
    m1 = math.ceil(hi / dx - shift) + 1
    m = np.arange(m0, m1 + 1)
    # cell j = k/2 + m spans ((k + 2m - 1)/2, (k + 2m + 1)/2) * dx
    edges = 0.5 * (k + 2 * np.arange(m0, m1 + 2) - 1) * dx
    pts = (0.5 * k + m + 0.5 * a) * dx
    return PiecewiseConstantProfile(edges, np.asarray(profile(pts), dtype=float))


@dataclass
class FanCache:
    """Riemann fans keyed by ``(left, right)``, built once per distinct pair."""

    flux: FluxSpec
    resolution: int = FAN_RESOLUTION
    fans: dict = field(default_factory=dict)

    def values(self, left: float, right: float, xi: np.ndarray) -> np.ndarray:
        if left == right:
            return np.full(xi.shape, left)
        if self.flux.riemann is not None:
            return np.asarray(self.flux.riemann(left, right, xi), dtype=float)
        key = (left, right)
        sol = self.fans.get(key)
        if sol is None:
            sol = riemann_solution(self.flux, left, right, self.resolution)
            self.fans[key] = sol
        return np.asarray(sol.profile(xi), dtype=float)


@dataclass(frozen=True, eq=False)
class FanComposite:
    """Exact evolution of a step profile for time ``tau``: one Riemann fan per jump."""

    base: PiecewiseConstantProfile
    flux: FluxSpec
    tau: float
    cache: FanCache

    @property
    def support(self) -> tuple[float, float] | None:
        if self.base.is_zero:
            return None
        lo, hi = self.base.support
        return lo - self.flux.V * self.tau, hi + self.flux.V * self.tau

    @property
    def fans(self) -> list[tuple[float, float, float]]:
        """``(center, left state, right state)`` per jump."""
        _, vals = self.base.padded()
        return [(float(x), float(vals[i]), float(vals[i + 1])) for i, x in enumerate(self.base.breakpoints)]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.asarray(self.base(flat), dtype=float).copy()
        if self.tau > 0 and not self.base.is_zero:
            order = np.argsort(flat, kind="stable")
            xs = flat[order]
            reach = self.flux.V * self.tau
            _, vals = self.base.padded()
            for i, c in enumerate(self.base.breakpoints):
                lo = np.searchsorted(xs, c - reach, side="left")
                hi = np.searchsorted(xs, c + reach, side="right")
                if lo == hi:
                    continue
                idx = order[lo:hi]
                out[idx] = self.cache.values(float(vals[i]), float(vals[i + 1]), (flat[idx] - c) / self.tau)
        out = out.reshape(x.shape)
        return out if out.ndim else float(out)


def evolve_step(profile: PiecewiseConstantProfile, flux: FluxSpec, tau: float, cache: FanCache | None = None) -> FanComposite:
    """Exact entropy evolution over ``tau``, valid while neighbouring fans cannot meet."""
    if tau < 0:
        raise ConfigurationError("tau must be nonnegative")
    eps = profile.min_step()
    if flux.V > 0 and tau > eps / (2.0 * flux.V) * (1 + _SLACK):
        raise NoninteractionError(f"tau={tau} exceeds eps/(2V)={eps / (2.0 * flux.V)} for minimum step {eps}")
    return FanComposite(profile, flux, float(tau), cache or FanCache(flux))


@dataclass(frozen=True, eq=False)
class GlimmSolution:
    """Sampled profiles ``T^{a_k} u(t_k - 0)`` and the sampling sequence that produced them."""

    flux: FluxSpec
    config: GlimmConfig
    a: np.ndarray
    sampled: tuple[PiecewiseConstantProfile, ...]
    cache: FanCache

    @property
    def times(self) -> np.ndarray:
        return self.config.dt * np.arange(len(self.sampled))

    def at(self, t: float):
        """The approximation at time ``t`` as a callable profile."""
        if not 0 <= t <= self.config.horizon * (1 + _SLACK) + _SLACK:
            raise ConfigurationError(f"t={t} outside [0, {self.config.horizon}]")
        dt = self.config.dt
        k = min(int(math.floor(t / dt + 1e-9)), len(self.sampled) - 1)
        tau = t - k * dt
        if tau <= 1e-9 * dt:
            return self.sampled[k]
        return FanComposite(self.sampled[k], self.flux, tau, self.cache)

    def __call__(self, x, t: float):
        return self.at(t)(x)


def glimm_run(
    u0: PiecewiseConstantProfile,
    flux: FluxSpec,
    config: GlimmConfig,
    a: Sequence[float] | None = None,
    resolution: int = FAN_RESOLUTION,
) -> GlimmSolution:
    """Iterate sampling and exact fan evolution up to ``config.horizon``.

    ``a`` overrides the sampling sequence (it must have ``n_steps + 1``
    entries); otherwise it is drawn from ``config``.
    """
    config.check_cfl(flux)
    n = config.n_steps + 1
    seq = sampling_sequence(config, n) if a is None else np.asarray(a, dtype=float)
    if seq.size < n:
        raise ConfigurationError(f"sampling sequence needs {n} entries, got {seq.size}")
    seq = seq[:n]
    cache = FanCache(flux, resolution)
    current = u0
    sampled = []
    for k in range(n):
        plus = sample_step(current, config.dx, float(seq[k]), k)
        sampled.append(plus)
        if k + 1 < n:
            current = evolve_step(plus, flux, config.dt, cache)
    return GlimmSolution(flux, config, seq, tuple(sampled), cache)


@dataclass(frozen=True)
class ContractionEstimate:
    """Monte Carlo mean of ``int_{x+V''t}^{y-V''t} |u~_m - u~|`` over sampling sequences, against its bound."""

    samples: np.ndarray
    bound: float
    speed: float
    inner: tuple[float, float]

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def stderr(self) -> float:
        n = self.samples.size
        return float(self.samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def holds(self, sigmas: float = 3.0) -> bool:
        return self.mean <= self.bound + sigmas * self.stderr


def expected_contraction(
    u0: PiecewiseConstantProfile,
    v0: PiecewiseConstantProfile,
    flux: FluxSpec,
    config: GlimmConfig,
    x: float,
    y: float,
    t: float,
    n_sequences: int = 1000,
    seed: int = 0,
) -> ContractionEstimate:
    """Both Glimm approximations driven by shared uniform sampling sequences, compared on the shrunken window.

    The window shrinks at ``V'' = V + 1/R``; ``t`` must stay below
    ``(y - x) / (2 V'')``.
    """
    speed = flux.V + 1.0 / config.ratio
    if y <= x or not 0 <= t < (y - x) / (2 * speed) or t > config.horizon:
        raise ConfigurationError(f"t={t} outside the window for [{x}, {y}] at speed {speed}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed)])))
    n = config.n_steps + 1
    lo, hi = x + speed * t, y - speed * t
    out = np.empty(n_sequences)
    for i in range(n_sequences):
        a = rng.uniform(-1.0, 1.0, n)
        a = np.where(a <= -1.0, np.nextafter(-1.0, 0.0), a)
        pu = glimm_run(u0, flux, config, a).at(t)
        pv = glimm_run(v0, flux, config, a).at(t)
        out[i] = l1_distance(pu, pv, (lo, hi))
    return ContractionEstimate(out, l1_distance(u0, v0, (x, y)), speed, (lo, hi))


def _pieces_in(u: PiecewiseConstantProfile, a: float, b: float) -> list[tuple[float, float, float]]:
    """``(start, end, value)`` of the pieces of ``u`` (zero outside included) meeting ``(a, b)``."""
    bp, vals = u.padded()
    cuts = [a] + [float(x) for x in bp if a < x < b] + [b]
    out = []
    for s, e in zip(cuts[:-1], cuts[1:]):
        v = float(u(0.5 * (s + e)))
        if out and out[-1][2] == v:
            out[-1] = (out[-1][0], e, v)
        else:
            out.append((s, e, v))
    return out


def modulus(u: PiecewiseConstantProfile, a: float, b: float, eta: float | None = None) -> float:
    """``ess sup {|u(x) - u(y)| : x, y in (a, b), |x - y| <= eta}``; ``eta=None`` gives the largest interior jump."""
    pieces = _pieces_in(u, a, b)
    if eta is None:
        return max((abs(p[2] - q[2]) for p, q in zip(pieces[:-1], pieces[1:])), default=0.0)
    best = 0.0
    for i, (_, ei, vi) in enumerate(pieces):
        for sj, _, vj in pieces[i + 1:]:
            if sj - ei >= eta:
                break
            best = max(best, abs(vi - vj))
    return best


def _nearest(values: np.ndarray, x: float) -> float:
    """Closest admissible value, ties to the smaller one."""
    i = int(np.searchsorted(values, x))
    cands = [values[j] for j in (i - 1, i) if 0 <= j < values.size]
    return float(min(cands, key=lambda r: (abs(r - x), r)))


def r_valued_approximation(
    u: PiecewiseConstantProfile,
    eps: float,
    delta: float,
    value_set: Sequence[float],
) -> PiecewiseConstantProfile:
    """Step function with values in ``value_set``, steps at least ``eps`` and ``Delta(., u) <= eps * delta``.

    The largest jumps of ``u`` are kept as cell boundaries until the
    remaining jumps add up to at most ``delta/4``; every interval between
    kept jumps is cut into equal cells of length in ``[eps, 2 eps)`` and each
    cell gets the admissible value nearest to the mean of ``u`` on it.
    """
    if eps <= 0 or delta <= 0:
        raise ConfigurationError("eps and delta must be positive")
    values = np.unique(np.asarray(value_set, dtype=float))
    if values.size == 0:
        raise ConfigurationError("empty value set")
    if u.is_zero:
        return PiecewiseConstantProfile.zero()
    lo, hi = u.support
    jumps = np.abs(u.jumps())
    order = np.argsort(-jumps, kind="stable")
    remaining = float(jumps.sum())
    kept = []
    for i in order:
        if remaining <= delta / 4:
            break
        kept.append(float(u.breakpoints[i]))
        remaining -= float(jumps[i])
    cuts = sorted(set(kept) | {lo, hi})
    intervals = list(zip(cuts[:-1], cuts[1:]))
    for a, b in intervals:
        if b - a < eps:
            raise ConfigurationError(f"eps={eps} exceeds the interval ({a}, {b}) between retained jumps")
    worst = max(modulus(u, a, b, 2 * eps) for a, b in intervals)
    if delta / 4 + 2 * worst > delta:
        raise ConfigurationError(
            f"eps={eps} too coarse: oscillation {worst} over 2*eps breaks delta/4 + 2*omega <= delta"
        )
    bp: list[float] = [intervals[0][0]]
    vals: list[float] = []
    for a, b in intervals:
        m = int(math.floor((b - a) / eps))
        cell = [a + (b - a) * i / m for i in range(m)] + [b]
        for s, e in zip(cell[:-1], cell[1:]):
            pieces = _pieces_in(u, s, e)
            if len(pieces) == 1:
                mean = pieces[0][2]
            else:
                mean = sum((pe - ps) * v for ps, pe, v in pieces) / (e - s)
            r = _nearest(values, mean)
            allowed = 0.5 * modulus(u, s, e)
            if abs(mean - r) > allowed + _SLACK * max(1.0, abs(mean)):
                raise InfeasibilityError(
                    f"no admissible value within {allowed} of the cell mean {mean} on ({s}, {e})", (s, e)
                )
            vals.append(r)
            bp.append(e)
    return PiecewiseConstantProfile(np.array(bp), np.array(vals))


def two_level_approximation(u0: PiecewiseConstantProfile, a: float, n: int, K: float) -> PiecewiseConstantProfile:
    """``K sum_i 1[x_i, x_i + alpha_i delta]`` with ``delta = 2a/n``, ``x_i = -a + i delta`` and
    ``alpha_i`` the fraction of the cell mass of ``u0``; ``Delta`` to ``u0`` is at most ``2aK/n``."""
    if n < 1 or a <= 0:
        raise ConfigurationError("need n >= 1 and a > 0")
    if not u0.is_zero:
        lo, hi = u0.support
        if lo < -a or hi > a:
            raise ConfigurationError(f"profile support [{lo}, {hi}] exceeds [-{a}, {a}]")
    d = 2.0 * a / n
    bp, vals = [], []
    for i in range(n):
        x = -a + i * d
        alpha = u0.integral(x, x + d) / (K * d)
        alpha = min(max(alpha, 0.0), 1.0)
        if alpha > 0:
            nxt = -a + (i + 1) * d
            bp.extend([x, nxt if alpha == 1.0 else min(x + alpha * d, nxt)])
            vals.extend([K, 0.0])
    if not bp:
        return PiecewiseConstantProfile.zero()
    return PiecewiseConstantProfile(np.array(bp), np.array(vals[:-1]))
