"""Entropy admissibility: chord condition on jumps, Kruzkov pairs, weak-form residuals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .envelope import DEFAULT_RESOLUTION
from .flux import FluxSpec

__all__ = ["oleinik_check", "kruzkov_pair", "BumpTestFunction", "weak_form_residual"]

SAMPLED_SLACK = 1e-12


def oleinik_check(
    flux: FluxSpec,
    u_minus: float,
    u_plus: float,
    grid: np.ndarray | None = None,
    tol: float | None = None,
) -> bool:
    """Whether the jump ``u_minus -> u_plus`` is an admissible entropy shock.

    Increasing jumps need the chord weakly below the flux graph, decreasing
    jumps weakly above.  The comparison runs over ``grid`` (by default the
    table nodes, or an equally spaced sample for analytic fluxes).
    """
    flux.check_domain(u_minus, u_plus)
    if u_minus == u_plus:
        return True
    lo, hi = min(u_minus, u_plus), max(u_minus, u_plus)
    if grid is None:
        grid = flux.special_points(lo, hi) if flux.is_tabulated else np.linspace(lo, hi, DEFAULT_RESOLUTION)
    grid = np.asarray(grid, dtype=float)
    # the chord meets the graph at both ends by construction
    grid = grid[(grid > lo) & (grid < hi)]
    g_lo, g_hi = flux(lo), flux(hi)
    if tol is None:
        # tables: only the rounding of the chord itself (collinear nodes must pass)
        scale = max(abs(g_lo), abs(g_hi), float(np.max(np.abs(flux(grid)), initial=0.0)))
        tol = 8 * np.finfo(float).eps * scale if flux.is_tabulated else SAMPLED_SLACK
    chord = g_lo + (g_hi - g_lo) * (grid - lo) / (hi - lo)
    gap = flux(grid) - chord
    if u_minus < u_plus:
        return bool(np.all(gap >= -tol))
    return bool(np.all(gap <= tol))


def kruzkov_pair(flux: FluxSpec, c: float, u):
    """``(|u - c|, sgn(u - c) (G(u) - G(c)))``."""
    flux.check_domain(c)
    u = np.asarray(u, dtype=float)
    phi = np.abs(u - c)
    psi = np.sign(u - c) * (flux(u) - flux(c))
    if u.ndim == 0:
        return float(phi), float(psi)
    return phi, psi


@dataclass(frozen=True)
class BumpTestFunction:
    """Smooth compactly supported ``phi(x, t) = b((x - x0)/rx) b((t - t0)/rt)``, ``b(s) = exp(-1/(1 - s^2))``.

    ``t0 - rt`` may be negative, so the bump can straddle ``t = 0``.
    """

    x0: float
    rx: float
    t0: float
    rt: float

    @staticmethod
    def _b(s):
        out = np.zeros_like(s)
        m = np.abs(s) < 1
        out[m] = np.exp(-1.0 / (1.0 - s[m] ** 2))
        return out

    @staticmethod
    def _db(s):
        out = np.zeros_like(s)
        m = np.abs(s) < 1
        sm = s[m]
        out[m] = np.exp(-1.0 / (1.0 - sm ** 2)) * (-2.0 * sm / (1.0 - sm ** 2) ** 2)
        return out

    def __call__(self, x, t):
        return self._b((x - self.x0) / self.rx) * self._b((t - self.t0) / self.rt)

    def dx(self, x, t):
        return self._db((x - self.x0) / self.rx) / self.rx * self._b((t - self.t0) / self.rt)

    def dt(self, x, t):
        return self._b((x - self.x0) / self.rx) * self._db((t - self.t0) / self.rt) / self.rt


def weak_form_residual(
    u: Callable[[np.ndarray, float], np.ndarray],
    flux: FluxSpec,
    u0: Callable[[np.ndarray], np.ndarray],
    phi: BumpTestFunction,
    n: int = 400,
) -> float:
    """``int int (u phi_t + G(u) phi_x) dx dt + int u0 phi(., 0) dx`` by the midpoint rule on ``n x n`` cells.

    Vanishes (as ``n`` grows) exactly when ``u`` is a weak solution against ``phi``.
    """
    xa, xb = phi.x0 - phi.rx, phi.x0 + phi.rx
    tb = phi.t0 + phi.rt
    hx = (xb - xa) / n
    ht = tb / n
    x = xa + hx * (np.arange(n) + 0.5)
    total = 0.0
    for k in range(n):
        t = ht * (k + 0.5)
        uv = np.asarray(u(x, t), dtype=float)
        total += np.sum(uv * phi.dt(x, np.full_like(x, t)) + flux(uv) * phi.dx(x, np.full_like(x, t))) * hx * ht
    total += np.sum(np.asarray(u0(x), dtype=float) * phi(x, np.zeros_like(x))) * hx
    return float(total)
