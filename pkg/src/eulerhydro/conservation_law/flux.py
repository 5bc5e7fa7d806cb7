"""Macroscopic flux functions: closed forms from a registry, or tabulated nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import ConfigurationError, DomainError

__all__ = ["FluxSpec", "make_flux", "FLUX_REGISTRY", "tabulated_flux"]


@dataclass(frozen=True, eq=False)
class FluxSpec:
    """An evaluable flux on ``[0, K]`` with Lipschitz constant ``V``.

    Analytic fluxes carry ``critical_points`` (interior extrema) so that
    min/max over an interval are exact, and ``curvature`` (a bound on
    ``|G''|``) which sizes the tolerance for telling kinks from sampling.
    Tabulated fluxes are piecewise linear between ``nodes``.
    """

    name: str
    K: float
    V: float
    func: Callable[[np.ndarray], np.ndarray] | None = None
    nodes: np.ndarray | None = None
    node_values: np.ndarray | None = None
    critical_points: tuple[float, ...] = ()
    curvature: float = 0.0
    params: Mapping[str, Any] = field(default_factory=dict)
    riemann: Callable | None = None

    @property
    def is_tabulated(self) -> bool:
        return self.nodes is not None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.is_tabulated:
            out = np.interp(u, self.nodes, self.node_values)
        else:
            out = np.asarray(self.func(u), dtype=float)
        return out if out.ndim else float(out)

    def check_domain(self, *us: float) -> None:
        for u in us:
            if not (0.0 <= u <= self.K):
                raise DomainError(f"density {u} outside [0, {self.K}]")

    def special_points(self, a: float, b: float) -> np.ndarray:
        """Points in ``[a, b]`` where the extrema over the interval can sit."""
        lo, hi = min(a, b), max(a, b)
        inner = self.nodes if self.is_tabulated else np.asarray(self.critical_points, dtype=float)
        inner = inner[(inner > lo) & (inner < hi)] if inner.size else inner
        return np.concatenate([[lo], inner, [hi]])

    def interval_min(self, a: float, b: float) -> float:
        return float(np.min(self(self.special_points(a, b))))

    def interval_max(self, a: float, b: float) -> float:
        return float(np.max(self(self.special_points(a, b))))

    def describe(self) -> dict:
        d = {"name": self.name, "K": self.K, "V": self.V, "params": dict(self.params)}
        if self.is_tabulated:
            d["nodes"] = self.nodes.tolist()
            d["values"] = self.node_values.tolist()
        return d


def _quadratic(gamma: float = 1.0, **_) -> FluxSpec:
    """``gamma u (1 - u)`` on ``[0, 1]``."""
    g = float(gamma)

    def riemann(lam: float, rho: float, xi):
        return _quadratic_riemann(g, lam, rho, xi)

    return FluxSpec(
        name="quadratic",
        K=1.0,
        V=abs(g),
        func=lambda u: g * u * (1.0 - u),
        critical_points=(0.5,),
        curvature=2.0 * abs(g),
        params={"gamma": g},
        riemann=riemann,
    )


def _quadratic_riemann(g: float, lam: float, rho: float, xi):
    """Entropy solution of the Riemann problem for ``g u(1-u)`` at ``x/t = xi``."""
    xi = np.asarray(xi, dtype=float)
    if lam == rho or g == 0.0:
        return np.where(xi < 0, lam, rho) if lam != rho else np.full_like(xi, lam)
    # with g > 0 the flux is concave: rarefaction iff lam > rho
    rarefaction = (lam > rho) if g > 0 else (lam < rho)
    if rarefaction:
        u = 0.5 * (1.0 - xi / g)
        return np.clip(u, min(lam, rho), max(lam, rho))
    s = g * (1.0 - lam - rho)
    return np.where(xi < s, lam, rho)


def _linear(gamma: float = 1.0, K: float = 1.0, **_) -> FluxSpec:
    g = float(gamma)
    return FluxSpec(
        name="linear",
        K=float(K),
        V=abs(g),
        func=lambda u: g * u,
        params={"gamma": g, "K": float(K)},
    )


def _cubic(**_) -> FluxSpec:
    """``u (1 - u) (1 - 2u)`` on ``[0, 1]``: one inflection point, both hull types occur."""
    c = 0.5 - math.sqrt(3.0) / 6.0
    return FluxSpec(
        name="cubic",
        K=1.0,
        V=1.0,
        func=lambda u: u * (1.0 - u) * (1.0 - 2.0 * u),
        critical_points=(c, 1.0 - c),
        curvature=6.0,
    )


def tabulated_flux(nodes, values, name: str = "table", K: float | None = None) -> FluxSpec:
    """Piecewise-linear flux through ``(nodes, values)``; ``V`` is the largest chord slope."""
    x = np.asarray(nodes, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ConfigurationError("empty flux table")
    if x.size != y.size:
        raise ConfigurationError("flux table nodes and values differ in length")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if np.any(np.diff(x) <= 0):
        raise ConfigurationError("flux table nodes must be distinct")
    if x.size == 1:
        raise ConfigurationError("flux table needs at least two nodes")
    K = float(x[-1]) if K is None else float(K)
    if x[0] != 0.0 or x[-1] != K:
        raise ConfigurationError(f"flux table must span [0, {K}]")
    V = float(np.max(np.abs(np.diff(y) / np.diff(x))))
    x.setflags(write=False)
    y.setflags(write=False)
    return FluxSpec(name=name, K=K, V=V, nodes=x, node_values=y)


FLUX_REGISTRY: dict[str, Callable[..., FluxSpec]] = {
    "quadratic": _quadratic,
    "tasep": _quadratic,
    "linear": _linear,
    "cubic": _cubic,
}


def make_flux(source, **params) -> FluxSpec:
    """Build a flux from a registry name, a ``{"name": ..., **params}`` mapping,
    a flux table (anything with ``densities`` and ``estimates``), or a pair
    ``(nodes, values)``."""
    if isinstance(source, FluxSpec):
        return source
    if isinstance(source, str):
        try:
            factory = FLUX_REGISTRY[source]
        except KeyError:
            raise ConfigurationError(f"unknown flux {source!r}; known: {sorted(FLUX_REGISTRY)}") from None
        return factory(**params)
    if isinstance(source, Mapping):
        d = dict(source)
        if "nodes" in d:
            return tabulated_flux(d["nodes"], d["values"], name=d.get("name", "table"))
        if "name" not in d:
            raise ConfigurationError("flux mapping needs a 'name' or 'nodes'")
        return make_flux(d["name"], **{**d.get("params", {}), **params})
    if hasattr(source, "densities") and hasattr(source, "estimates"):
        return tabulated_flux(source.densities, source.estimates, name="table", K=getattr(source, "K", None))
    if isinstance(source, tuple) and len(source) == 2:
        return tabulated_flux(*source)
    raise ConfigurationError(f"cannot build a flux from {type(source).__name__}")
