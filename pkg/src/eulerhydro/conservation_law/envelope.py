"""Convex (concave) envelopes of a flux on a density interval and their inverse derivative.

For ``lam < rho`` the envelope is the lower convex hull of the flux on
``[lam, rho]``; for ``lam > rho`` it is the upper concave hull on ``[rho, lam]``.
Both cases are handled in working coordinates ``w = s u`` with flux
``s G(s w)`` and ``s = sign(rho - lam)``, where the envelope is always a lower
convex hull traversed left to right.  Slopes are unchanged by this map, so
velocities read off the working hull are velocities in the original problem.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from ..errors import ConfigurationError, DomainError
from .flux import FluxSpec

__all__ = ["EnvelopeData", "envelope", "h_c", "legendre_transform", "DEFAULT_RESOLUTION", "lower_hull"]

DEFAULT_RESOLUTION = 10_000


@njit(cache=True, nogil=True)
def lower_hull(x, y):
    """Indices of the lower convex hull of points sorted by ``x`` (monotone chain).

    Collinear points are dropped, so consecutive hull slopes strictly increase.
    """
    n = x.size
    hull = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(n):
        while k >= 2:
            a = hull[k - 2]
            b = hull[k - 1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0.0:
                k -= 1
            else:
                break
        hull[k] = i
        k += 1
    return hull[:k]


@dataclass(frozen=True, eq=False)
class EnvelopeData:
    """Envelope geometry in working coordinates plus derived quantities.

    ``w``/``g`` are hull vertices (increasing ``w``) and ``slopes[i]`` the slope
    between vertices ``i`` and ``i + 1``.  ``flat[i]`` marks segments on which
    the envelope is a genuine straight piece (a chord for sampled fluxes).
    """

    flux: FluxSpec
    lam: float
    rho: float
    s: int
    w: np.ndarray
    g: np.ndarray
    slopes: np.ndarray
    flat: np.ndarray
    resolution: int | None
    kink_tol: float
    samples: np.ndarray

    def grid(self, a: float, b: float) -> np.ndarray:
        """Sampled densities within ``[min(a, b), max(a, b)]``."""
        lo, hi = min(a, b), max(a, b)
        return self.samples[(self.samples >= lo) & (self.samples <= hi)]

    @property
    def convex(self) -> bool:
        return self.s > 0

    @property
    def v_lo(self) -> float:
        """``v_*``: the envelope derivative at ``lam``."""
        return float(self.slopes[0])

    @property
    def v_hi(self) -> float:
        """``v^*``: the envelope derivative at ``rho``."""
        return float(self.slopes[-1])

    @property
    def breakpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertices ``(u, G_c(u))`` in increasing density order."""
        u, gc = self.s * self.w, self.s * self.g
        return (u, gc) if self.s > 0 else (u[::-1].copy(), gc[::-1].copy())

    @property
    def contact_densities(self) -> np.ndarray:
        """Densities where the envelope touches the flux (the hull vertices)."""
        return self.breakpoints[0]

    def value(self, u):
        """``G_c(u)``."""
        u = np.asarray(u, dtype=float)
        out = self.s * np.interp(self.s * u, self.w, self.g)
        return out if out.ndim else float(out)

    def derivative(self, u, side: int = +1):
        """One-sided derivative ``H_c(u + 0)`` (``side=+1``) or ``H_c(u - 0)``.

        At the ends of the interval only the inward one-sided value exists.
        """
        u = np.asarray(u, dtype=float)
        wq = self.s * u
        ws = side * self.s
        n = self.slopes.size
        if ws > 0:
            i = np.searchsorted(self.w, wq, side="right") - 1
        else:
            i = np.searchsorted(self.w, wq, side="left") - 1
        out = self.slopes[np.clip(i, 0, n - 1)]
        return out if out.ndim else float(out)

    @property
    def theta(self) -> np.ndarray:
        """Interior densities where ``H_c`` jumps."""
        if self.slopes.size < 2:
            return np.zeros(0)
        jumps = np.diff(self.slopes)
        idx = np.flatnonzero(jumps > self.kink_tol) + 1
        return np.sort(self.s * self.w[idx])

    @property
    def sigma_low(self) -> list[tuple[float, tuple[float, float]]]:
        """Velocities ``v`` where ``H_c`` is flat, each with ``(h_c(v-0), h_c(v+0))``."""
        out = []
        for i in np.flatnonzero(self.flat):
            v = float(self.slopes[i])
            out.append((v, (float(self.s * self.w[i]), float(self.s * self.w[i + 1]))))
        return out

    def in_sigma_low(self, v: float, tol: float = 0.0) -> bool:
        return any(abs(v - sv) <= tol for sv, _ in self.sigma_low)

    def to_csv(self, path: str | Path) -> Path:
        """Rows ``density, envelope, slope_right`` at each vertex."""
        path = Path(path)
        u, gc = self.breakpoints
        with path.open("w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["density", "envelope", "slope_right"])
            for k in range(u.size):
                slope = self.derivative(u[k], +1) if k < u.size - 1 else ""
                wr.writerow([repr(float(u[k])), repr(float(gc[k])), repr(float(slope)) if slope != "" else ""])
        return path


def _samples(flux: FluxSpec, a: float, b: float, resolution: int | None) -> tuple[np.ndarray, np.ndarray, bool]:
    if flux.is_tabulated:
        inner = flux.nodes[(flux.nodes > a) & (flux.nodes < b)]
        u = np.concatenate([[a], inner, [b]])
        return u, flux(u), True
    n = DEFAULT_RESOLUTION if resolution is None else int(resolution)
    u = np.linspace(a, b, n)
    return u, flux(u), False


def envelope(flux: FluxSpec, lam: float, rho: float, resolution: int | None = None) -> EnvelopeData:
    """Lower convex envelope on ``[lam, rho]`` if ``lam < rho``, upper concave on ``[rho, lam]`` otherwise.

    Tabulated fluxes are hulled exactly on their nodes; analytic fluxes are
    sampled at ``resolution`` equally spaced densities first.
    """
    if resolution is not None and resolution < 2:
        raise ConfigurationError("envelope resolution must be at least 2 points")
    if lam == rho:
        raise DomainError("envelope needs lam != rho")
    flux.check_domain(lam, rho)
    s = 1 if rho > lam else -1
    a, b = min(lam, rho), max(lam, rho)
    u, G, exact = _samples(flux, a, b, resolution)
    if s < 0:
        u, G = u[::-1], G[::-1]
    w = np.ascontiguousarray(s * u)
    gw = np.ascontiguousarray(s * G)
    idx = lower_hull(w, gw)
    wv, gv = w[idx], gw[idx]
    slopes = np.diff(gv) / np.diff(wv)
    if exact:
        flat = np.ones(slopes.size, dtype=bool)
        kink_tol = 0.0
    else:
        flat = np.diff(idx) >= 2
        h = (b - a) / (u.size - 1)
        kink_tol = 2.0 * flux.curvature * h + 1e-12
    for arr in (wv, gv, slopes, flat):
        arr.setflags(write=False)
    samples = np.sort(u)
    samples.setflags(write=False)
    return EnvelopeData(flux, float(lam), float(rho), s, wv, gv, slopes, flat,
                        None if exact else u.size, kink_tol, samples)


def h_c(env: EnvelopeData, v):
    """``(h_c(v - 0), h_c(v + 0))``, the extreme minimizers of ``G_c - v u``.

    Below ``v_*`` both are ``lam``, above ``v^*`` both are ``rho``; inside a
    jump of ``H_c`` both equal the jump location.
    """
    v = np.asarray(v, dtype=float)
    lo = env.w[np.searchsorted(env.slopes, v, side="left")]
    hi = env.w[np.searchsorted(env.slopes, v, side="right")]
    left, right = env.s * lo, env.s * hi
    if v.ndim == 0:
        return float(left), float(right)
    return left, right


def legendre_transform(env: EnvelopeData, v):
    """Conjugate of the envelope; its derivative in ``v`` is ``h_c(v)``.

    Convex case: ``-min (G_c(u) - v u)``; concave case: ``-max (G_c(u) - v u)``.
    """
    v = np.asarray(v, dtype=float)
    vals = env.g[None, :] - v.reshape(-1, 1) * env.w[None, :]
    out = -env.s * vals.min(axis=1)
    return out.reshape(v.shape) if v.ndim else float(out[0])
