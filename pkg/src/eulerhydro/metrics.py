"""Distances between density profiles and configurations, and empirical density fields.

``Delta(u, v) = sup_x |int_{-inf}^x (u - v)|`` is computed by exact scans over
breakpoints (the primitive of a step function is piecewise linear, so the
supremum sits at a breakpoint).  Arithmetic is generic: the scans only add and
multiply, so exactly representable inputs give exact answers.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .lattice_core import LatticeConfig
from .profiles import PiecewiseConstantProfile

__all__ = [
    "delta_steps",
    "delta_profiles",
    "delta_configs",
    "delta_config_profile",
    "config_embedding",
    "EmpiricalProfile",
    "empirical_profile",
    "DensityField",
    "empirical_density_field",
    "total_variation",
    "l1_distance",
    "block_average",
]


def _pieces(u) -> tuple[list, list]:
    if isinstance(u, PiecewiseConstantProfile):
        return list(u.breakpoints), list(u.values)
    if isinstance(u, tuple) and len(u) == 2:
        b, v = list(u[0]), list(u[1])
        if len(b) != len(v) + 1 and not (len(b) == 0 and len(v) == 0):
            raise ConfigurationError("step data needs one more breakpoint than values")
        return b, v
    if callable(u):
        raise DomainError("Delta needs a compactly supported step representation, not a callable")
    raise DomainError(f"unsupported profile type {type(u).__name__}")


def _piece_value(b: Sequence, v: Sequence, a):
    """Value of a step function on the open piece starting at ``a``."""
    i = bisect.bisect_right(b, a) - 1
    return v[i] if 0 <= i < len(v) else 0


def delta_steps(bu: Sequence, vu: Sequence, bv: Sequence, vv: Sequence):
    """Delta between two step functions given as (breakpoints, values), zero outside.

    Pure Python, so ``Fraction`` inputs give exact results.
    """
    pts = sorted(set(bu) | set(bv))
    best = acc = 0
    for a, c in zip(pts[:-1], pts[1:]):
        acc = acc + (_piece_value(bu, vu, a) - _piece_value(bv, vv, a)) * (c - a)
        best = max(best, abs(acc))
    return best


def delta_profiles(u, v) -> float:
    """``sup_x |int_{-inf}^x (u - v)|`` for compactly supported step profiles."""
    bu, vu = _pieces(u)
    bv, vv = _pieces(v)
    out = delta_steps(bu, vu, bv, vv)
    return float(out) if isinstance(out, (int, float, np.number)) else out


def _window_cumsum(diff: np.ndarray) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(diff, dtype=np.int64)])


def _sites(x) -> np.ndarray:
    return np.asarray(x.sites if isinstance(x, LatticeConfig) else x, dtype=np.int64)


def delta_configs(eta, xi, N: float) -> float:
    """``N^{-1} sup_x |sum_{y <= x} (eta - xi)(y)|`` over a shared window (plus the empty prefix)."""
    a, b = _sites(eta), _sites(xi)
    if a.shape != b.shape:
        raise ConfigurationError("configurations must share a window")
    if isinstance(eta, LatticeConfig) and isinstance(xi, LatticeConfig) and eta.origin != xi.origin:
        raise ConfigurationError("configurations must share an origin")
    return float(np.abs(_window_cumsum(a - b)).max()) / N


def config_embedding(config, N: float, origin: int | None = None) -> PiecewiseConstantProfile:
    """Step function equal to ``eta(y)`` on ``[y/N, (y+1)/N)``."""
    s = _sites(config)
    if origin is None:
        origin = config.origin if isinstance(config, LatticeConfig) else 0
    edges = (origin + np.arange(s.size + 1)) / N
    return PiecewiseConstantProfile(edges, s.astype(float))


def delta_config_profile(eta, u: PiecewiseConstantProfile, N: float, origin: int | None = None) -> float:
    """``N^{-1} sup_x |sum_{y <= x} eta(y) - N int_{-inf}^{x/N} u|`` over window sites and one sentinel each side."""
    s = _sites(eta)
    if origin is None:
        origin = eta.origin if isinstance(eta, LatticeConfig) else 0
    x = origin - 1 + np.arange(s.size + 2)
    partial = np.concatenate([[0], np.cumsum(s), [s.sum()]])
    macro = N * np.asarray(u.primitive(x / N), dtype=float)
    return float(np.abs(partial - macro).max()) / N


@dataclass(frozen=True)
class EmpiricalProfile:
    """Block averages ``(2l+1)^{-1} sum_{|y-x|<=l} eta(y)`` at sites whose block fits the window."""

    N: float
    l: int
    sites: np.ndarray
    values: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        return self.sites / self.N


def empirical_profile(config: LatticeConfig, N: float, l: int) -> EmpiricalProfile:
    if l < 0:
        raise ConfigurationError("block radius must be nonnegative")
    s = config.sites.astype(np.int64)
    w = 2 * l + 1
    if s.size < w:
        return EmpiricalProfile(N, l, np.zeros(0, dtype=np.int64), np.zeros(0))
    c = _window_cumsum(s)
    vals = (c[w:] - c[:-w]) / w
    sites = config.origin + l + np.arange(vals.size)
    return EmpiricalProfile(N, l, sites, vals)


def block_average(config: LatticeConfig, site: int, l: int) -> float:
    """Block average centred at the integer label ``site``."""
    i = site - config.origin
    if i - l < 0 or i + l >= config.L:
        raise ConfigurationError(f"block of radius {l} around site {site} leaves the window")
    return float(config.sites[i - l:i + l + 1].mean())


@dataclass(frozen=True)
class DensityField:
    """Particle counts binned by macroscopic position ``y/N``; density is ``counts / (N * width)``."""

    N: float
    edges: np.ndarray
    counts: np.ndarray

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def mass(self) -> np.ndarray:
        return self.counts / self.N

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.N * self.width)

    def profile(self) -> PiecewiseConstantProfile:
        return PiecewiseConstantProfile(self.edges, self.density)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_center", "density"])
            for c, d in zip(self.centers, self.density):
                w.writerow([repr(float(c)), repr(float(d))])
        return path


def empirical_density_field(
    config: LatticeConfig, N: float, bin_width: float, interval: tuple[float, float] | None = None
) -> DensityField:
    """Bin ``alpha^N = N^{-1} sum_y eta(y) delta_{y/N}`` into cells of width ``bin_width``.

    Bins are aligned to multiples of ``bin_width`` unless ``interval`` fixes
    the range; particles outside an explicit interval are dropped.
    """
    if bin_width <= 0:
        raise ConfigurationError("bin width must be positive")
    s = config.sites.astype(np.int64)
    pos = (config.origin + np.arange(s.size)) / N
    if interval is None:
        lo = np.floor(pos[0] / bin_width) * bin_width
        nb = int(np.floor((pos[-1] - lo) / bin_width)) + 1
    else:
        lo, hi = interval
        nb = int(round((hi - lo) / bin_width))
        if nb < 1 or not np.isclose(nb * bin_width, hi - lo):
            raise ConfigurationError("interval length must be a multiple of the bin width")
    edges = lo + bin_width * np.arange(nb + 1)
    idx = np.floor((pos - lo) / bin_width + 1e-12).astype(np.int64)
    keep = (idx >= 0) & (idx < nb)
    counts = np.bincount(idx[keep], weights=s[keep], minlength=nb).astype(np.int64)
    return DensityField(N, edges, counts)


def total_variation(u, interval: tuple[float, float] | None = None) -> float:
    """Sum of absolute jumps of a step profile (including those to and from zero) inside ``interval``."""
    if not isinstance(u, PiecewiseConstantProfile):
        b, v = _pieces(u)
        u = PiecewiseConstantProfile(np.asarray(b, dtype=float), np.asarray(v, dtype=float))
    j = u.jumps()
    if interval is None:
        return float(np.abs(j).sum())
    a, b = interval
    # a jump exactly at an interval end does not count: it is not a variation inside
    m = (u.breakpoints > a) & (u.breakpoints < b)
    return float(np.abs(j[m]).sum())


def l1_distance(u, v, interval: tuple[float, float], n: int = 200_000) -> float:
    """``int_interval |u - v|``: exact for step profiles, midpoint rule with ``n`` cells otherwise."""
    a, b = interval
    if b <= a:
        return 0.0
    steps = all(isinstance(f, PiecewiseConstantProfile) or np.isscalar(f) for f in (u, v))
    if steps:
        pts = [a, b]
        for f in (u, v):
            if isinstance(f, PiecewiseConstantProfile):
                pts.extend(f.breakpoints)
        pts = np.unique(np.asarray(pts, dtype=float))
        pts = pts[(pts >= a) & (pts <= b)]
        mids = 0.5 * (pts[:-1] + pts[1:])
        return float(np.sum(np.abs(_eval(u, mids) - _eval(v, mids)) * np.diff(pts)))
    h = (b - a) / n
    mids = a + h * (np.arange(n) + 0.5)
    return float(np.sum(np.abs(_eval(u, mids) - _eval(v, mids))) * h)


def _eval(f, x: np.ndarray) -> np.ndarray:
    if np.isscalar(f):
        return np.full_like(x, float(f))
    return np.asarray(f(x), dtype=float)
