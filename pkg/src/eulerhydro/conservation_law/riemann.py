"""Self-similar entropy solutions of Riemann problems via the envelope inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .envelope import EnvelopeData, envelope, h_c
from .flux import FluxSpec

__all__ = ["RiemannSolution", "riemann_solution"]


@dataclass(frozen=True, eq=False)
class RiemannSolution:
    """``u(x, t) = h_c(x/t + 0)``; constant when ``lam == rho``."""

    flux: FluxSpec
    lam: float
    rho: float
    env: EnvelopeData | None

    def profile(self, xi):
        """Value at velocity ``xi = x / t`` (right limit at jumps)."""
        xi = np.asarray(xi, dtype=float)
        if self.env is None:
            out = np.full(xi.shape, self.lam)
        else:
            out = h_c(self.env, xi)[1]
            out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def __call__(self, x, t: float):
        if t <= 0:
            raise DomainError("Riemann solutions are evaluated at t > 0")
        return self.profile(np.asarray(x, dtype=float) / t)

    @property
    def speed_range(self) -> tuple[float, float]:
        """``(v_*, v^*)``; the solution equals the initial datum outside ``[v_* t, v^* t]``."""
        if self.env is None:
            return (0.0, 0.0)
        return self.env.v_lo, self.env.v_hi

    def jumps(self) -> list[tuple[float, float, float]]:
        """``(speed, left state, right state)`` for every discontinuity of the fan."""
        if self.env is None:
            return []
        return [(v, lo, hi) for v, (lo, hi) in self.env.sigma_low]

    def values(self) -> np.ndarray:
        """Densities the fan can take: the envelope contact set."""
        if self.env is None:
            return np.array([self.lam])
        return self.env.contact_densities


def riemann_solution(flux: FluxSpec, lam: float, rho: float, resolution: int | None = None) -> RiemannSolution:
    flux.check_domain(lam, rho)
    if lam == rho:
        return RiemannSolution(flux, float(lam), float(rho), None)
    return RiemannSolution(flux, float(lam), float(rho), envelope(flux, lam, rho, resolution))
