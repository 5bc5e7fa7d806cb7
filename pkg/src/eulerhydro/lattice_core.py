"""Particle-system models on a one-dimensional lattice.

A model is a finite-range conservative lattice gas: a particle at ``x`` jumps
to ``x + z`` at rate ``b(z, eta(x), eta(x + z))``, at most ``K`` particles per
site.  Decoupled (misanthrope-type) models ``p(z) * b(n, m)`` are stored in the
same general form, with the kernel kept alongside for the mean drift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, OutOfWindowError, RejectedJumpError

__all__ = [
    "RateModel",
    "Ring",
    "Segment",
    "LatticeConfig",
    "Violation",
    "ValidationReport",
    "validate_model",
    "mean_drift",
    "apply_jump",
    "microscopic_flux",
    "generator_apply",
    "get_model",
    "load_model",
    "MODEL_REGISTRY",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RateModel:
    """Jump rates ``b(z, n, m)`` on ``{0..K}`` for a finite set of offsets.

    ``rate_table[i, n, m]`` is the rate of a jump by ``offsets[i]`` from a
    site holding ``n`` particles to a site holding ``m``.
    """

    K: int
    offsets: tuple[int, ...]
    rate_table: np.ndarray
    name: str = "custom"
    kernel: Mapping[int, float] | None = None
    local_rates: np.ndarray | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K}")
        table = np.array(self.rate_table, dtype=float)
        if table.shape != (len(self.offsets), self.K + 1, self.K + 1):
            raise ConfigurationError(
                f"rate table shape {table.shape} does not match "
                f"{len(self.offsets)} offsets and K={self.K}"
            )
        if 0 in self.offsets:
            raise ConfigurationError("offset 0 is not a jump")
        if len(set(self.offsets)) != len(self.offsets):
            raise ConfigurationError("duplicate offsets")
        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise ConfigurationError("rates must be finite and nonnegative")
        object.__setattr__(self, "rate_table", _readonly(table))
        if self.local_rates is not None:
            object.__setattr__(self, "local_rates", _readonly(np.array(self.local_rates, dtype=float)))

    @classmethod
    def decoupled(
        cls,
        K: int,
        kernel: Mapping[int, float],
        b: np.ndarray | Callable[[int, int], float],
        name: str = "custom",
    ) -> "RateModel":
        """Build ``p(z) b(n, m)`` from a kernel and a rate table or function."""
        if callable(b):
            b = np.array([[b(n, m) for m in range(K + 1)] for n in range(K + 1)], dtype=float)
        b = np.asarray(b, dtype=float)
        if b.shape != (K + 1, K + 1):
            raise ConfigurationError(f"rate table must be {(K + 1, K + 1)}, got {b.shape}")
        kern = {int(z): float(p) for z, p in kernel.items() if p != 0}
        offsets = tuple(sorted(kern))
        table = np.stack([kern[z] * b for z in offsets]) if offsets else np.zeros((0, K + 1, K + 1))
        return cls(K=K, offsets=offsets, rate_table=table, name=name, kernel=kern, local_rates=b)

    @classmethod
    def general(cls, K: int, rates: Mapping[int, np.ndarray], name: str = "custom") -> "RateModel":
        offsets = tuple(sorted(int(z) for z in rates))
        table = np.stack([np.asarray(rates[z], dtype=float) for z in offsets])
        return cls(K=K, offsets=offsets, rate_table=table, name=name)

    @property
    def M(self) -> int:
        return max((abs(z) for z in self.offsets), default=0)

    @property
    def max_rate(self) -> float:
        return float(self.rate_table.max(initial=0.0))

    def rate(self, z: int, n: int, m: int) -> float:
        try:
            i = self.offsets.index(z)
        except ValueError:
            return 0.0
        return float(self.rate_table[i, n, m])

    def max_site_rate(self) -> float:
        """Largest total outgoing rate of a single site, over all neighbourhoods."""
        return float(self.rate_table.max(axis=(1, 2)).sum()) if self.offsets else 0.0

    def propagation_speed(self) -> float:
        """Coarse finite-propagation speed ``M * max total per-site jump rate``."""
        return self.M * self.max_site_rate()

    def to_dict(self) -> dict:
        out = {"name": self.name, "K": self.K}
        if self.kernel is not None and self.local_rates is not None:
            out["kernel"] = {str(z): p for z, p in self.kernel.items()}
            out["rates"] = self.local_rates.tolist()
        else:
            out["general_rates"] = {str(z): self.rate_table[i].tolist() for i, z in enumerate(self.offsets)}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "RateModel":
        K = int(d["K"])
        name = d.get("name", "misanthrope-custom")
        if "general_rates" in d:
            return cls.general(K, {int(z): np.asarray(r) for z, r in d["general_rates"].items()}, name=name)
        if "kernel" not in d or "rates" not in d:
            raise ConfigurationError("model config needs 'kernel' and 'rates', or 'general_rates'")
        kernel = {int(z): float(p) for z, p in d["kernel"].items()}
        return cls.decoupled(K, kernel, np.asarray(d["rates"], dtype=float), name=name)


@dataclass(frozen=True)
class Ring:
    pass


@dataclass(frozen=True)
class Segment:
    """Finite window with frozen reservoirs beyond each edge."""

    left: int = 0
    right: int = 0


@dataclass(frozen=True, eq=False)
class LatticeConfig:
    """Occupancies of ``L`` consecutive sites; ``origin`` is the integer label of index 0."""

    sites: np.ndarray
    topology: Ring | Segment = field(default_factory=Ring)
    origin: int = 0

    def __post_init__(self):
        s = np.array(self.sites, dtype=np.int64)
        if s.ndim != 1 or s.size == 0:
            raise ConfigurationError("configuration needs a nonempty 1-d occupancy array")
        if np.any(s < 0):
            raise ConfigurationError("negative occupancy")
        if isinstance(self.topology, Segment) and min(self.topology.left, self.topology.right) < 0:
            raise ConfigurationError("negative reservoir occupancy")
        object.__setattr__(self, "sites", _readonly(s))

    @classmethod
    def ring(cls, sites: Sequence[int]) -> "LatticeConfig":
        return cls(np.asarray(sites), Ring())

    @classmethod
    def segment(cls, sites: Sequence[int], left: int = 0, right: int = 0, origin: int = 0) -> "LatticeConfig":
        return cls(np.asarray(sites), Segment(left, right), origin)

    @property
    def L(self) -> int:
        return int(self.sites.size)

    @property
    def is_ring(self) -> bool:
        return isinstance(self.topology, Ring)

    def mass(self) -> int:
        return int(self.sites.sum())

    def with_sites(self, sites: np.ndarray) -> "LatticeConfig":
        return LatticeConfig(sites, self.topology, self.origin)

    def resolve(self, x: int) -> int | None:
        """Array index of site ``x`` (array coordinates), ``None`` for a reservoir site."""
        if self.is_ring:
            return x % self.L
        return x if 0 <= x < self.L else None

    def value(self, x: int) -> int:
        i = self.resolve(x)
        if i is not None:
            return int(self.sites[i])
        return self.topology.left if x < 0 else self.topology.right

    def check(self, model: RateModel) -> None:
        if int(self.sites.max()) > model.K or (
            not self.is_ring and max(self.topology.left, self.topology.right) > model.K
        ):
            raise ConfigurationError(f"occupancy exceeds K={model.K}")
        if self.is_ring and self.L < 2 * model.M + 1:
            raise ConfigurationError(f"ring of {self.L} sites is shorter than 2M+1={2 * model.M + 1}")

    def __eq__(self, other):
        if not isinstance(other, LatticeConfig):
            return NotImplemented
        return (
            self.topology == other.topology
            and self.origin == other.origin
            and np.array_equal(self.sites, other.sites)
        )

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    assumption: str
    message: str
    witness: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def failed(self) -> set[str]:
        return {v.assumption for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


def validate_model(model: RateModel) -> ValidationReport:
    """Check irreducibility, finite range, boundary conditions and monotonicity.

    Violations are returned as data with a witness, never raised.
    """
    K = model.K
    table = model.rate_table
    out: list[Violation] = []

    if model.kernel is not None:
        total = sum(model.kernel.values())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
            out.append(Violation("A2", f"kernel sums to {total!r}, not 1", (total,)))
        neg = [z for z, p in model.kernel.items() if p < 0]
        if neg:
            out.append(Violation("A2", "negative kernel weight", tuple(neg)))

    for i, z in enumerate(model.offsets):
        b = table[i]
        for m in range(K + 1):
            if b[0, m] != 0:
                out.append(Violation("A3", f"b(z={z}, 0, {m}) = {b[0, m]} but an empty site cannot emit", (z, 0, m)))
        for n in range(K + 1):
            if b[n, K] != 0:
                out.append(Violation("A3", f"b(z={z}, {n}, K) = {b[n, K]} but a full site cannot receive", (z, n, K)))
        for n in range(K):
            for m in range(K + 1):
                if b[n + 1, m] < b[n, m]:
                    out.append(Violation("A4", f"b(z={z}, ., {m}) decreases in the donor at n={n}", (z, n, m)))
        for n in range(K + 1):
            for m in range(K):
                if b[n, m + 1] > b[n, m]:
                    out.append(Violation("A4", f"b(z={z}, {n}, .) increases in the receiver at m={m}", (z, n, m)))

    if model.local_rates is not None:
        b = model.local_rates
        bad = [(n, m) for n in range(1, K + 1) for m in range(K) if not b[n, m] > 0]
        if bad:
            out.append(Violation("A3", "degenerate rate: b(n, m) must be positive for n > 0, m < K", bad[0]))

    effective = [
        z for i, z in enumerate(model.offsets) if table[i, 1:, :K].min() > 0
    ]
    g = reduce(math.gcd, (abs(z) for z in effective), 0)
    if g != 1:
        out.append(
            Violation("A1", f"effective jump offsets {effective} generate {g}Z, not Z", (g,))
        )
    return ValidationReport(tuple(out))


def mean_drift(model: RateModel) -> float:
    """``sum_z z p(z)`` for a decoupled model."""
    if model.kernel is None:
        raise ConfigurationError("mean drift is defined for decoupled models p(z) b(n, m) only")
    return float(sum(z * p for z, p in model.kernel.items()))


def apply_jump(config: LatticeConfig, x: int, y: int, K: int) -> LatticeConfig:
    """Move one particle from site ``x`` to site ``y`` (array coordinates).

    On a segment, reservoir sites never change: a jump out of the window
    removes a particle and a jump in from a reservoir adds one.
    """
    ix, iy = config.resolve(x), config.resolve(y)
    if ix is None and iy is None:
        raise RejectedJumpError(x, "both sites lie in the frozen reservoirs")
    if ix is not None and ix == iy:
        raise RejectedJumpError(x, "source and target coincide")
    if config.value(x) < 1:
        raise RejectedJumpError(x, "donor site is empty")
    if config.value(y) > K - 1:
        raise RejectedJumpError(y, f"receiver site already holds K={K} particles")
    s = config.sites.copy()
    if ix is not None:
        s[ix] -= 1
    if iy is not None:
        s[iy] += 1
    return config.with_sites(s)


def _window(config: LatticeConfig, lo: int, hi: int) -> None:
    if not config.is_ring and (lo < 0 or hi >= config.L):
        raise OutOfWindowError(f"sites [{lo}, {hi}] leave the segment [0, {config.L - 1}]")


def microscopic_flux(config: LatticeConfig, model: RateModel, x: int) -> float:
    """Net rate of jumps across the bond ``(x, x+1)``: rightward minus leftward."""
    M = model.M
    _window(config, x - M + 1, x + M)
    total = 0.0
    for i, z in enumerate(model.offsets):
        b = model.rate_table[i]
        if z > 0:
            for u in range(x - z + 1, x + 1):
                total += b[config.value(u), config.value(u + z)]
        else:
            for u in range(x + 1, x + 1 - z):
                total -= b[config.value(u), config.value(u + z)]
    return float(total)


def _admissible_jumps(config: LatticeConfig, model: RateModel):
    """Yield ``(x, y, rate)`` for every jump with positive rate (array coordinates)."""
    M = model.M
    donors = range(config.L) if config.is_ring else range(-M, config.L + M)
    for x in donors:
        n = config.value(x)
        if n == 0:
            continue
        for i, z in enumerate(model.offsets):
            y = x + z
            if not config.is_ring and config.resolve(x) is None and config.resolve(y) is None:
                continue
            r = model.rate_table[i, n, config.value(y)]
            if r > 0:
                yield x, y, float(r)


def generator_apply(
    f: Callable[[np.ndarray], float], config: LatticeConfig, model: RateModel
) -> float:
    """Exact ``Lf(eta)`` by enumerating every admissible jump.

    ``f`` receives the occupancy array of the configuration.  Intended for
    small systems.
    """
    config.check(model)
    f0 = f(config.sites)
    total = 0.0
    for x, y, r in _admissible_jumps(config, model):
        total += r * (f(apply_jump(config, x, y, model.K).sites) - f0)
    return float(total)


def _k_exclusion_rates(K: int) -> np.ndarray:
    n = np.arange(K + 1)
    return ((n[:, None] > 0) & (n[None, :] < K)).astype(float)


def _tasep(**_) -> RateModel:
    return RateModel.decoupled(1, {1: 1.0}, _k_exclusion_rates(1), name="tasep")


def _ssep(**_) -> RateModel:
    return RateModel.decoupled(1, {1: 0.5, -1: 0.5}, _k_exclusion_rates(1), name="ssep")


def _asep(p: float = 2 / 3, **_) -> RateModel:
    return RateModel.decoupled(1, {1: p, -1: 1 - p}, _k_exclusion_rates(1), name="asep")


def _k_exclusion(K: int = 2, kernel: Mapping[int, float] | None = None, **_) -> RateModel:
    return RateModel.decoupled(K, kernel or {1: 1.0}, _k_exclusion_rates(K), name="k-exclusion")


def _tasep_range2(**_) -> RateModel:
    return RateModel.decoupled(1, {1: 0.5, 2: 0.5}, _k_exclusion_rates(1), name="tasep-range2")


def _custom(path: str | None = None, **_) -> RateModel:
    if path is None:
        raise ConfigurationError("misanthrope-custom needs a config file path")
    return load_model(path)


MODEL_REGISTRY: dict[str, Callable[..., RateModel]] = {
    "tasep": _tasep,
    "ssep": _ssep,
    "asep": _asep,
    "k-exclusion": _k_exclusion,
    "tasep-range2": _tasep_range2,
    "misanthrope-custom": _custom,
}


def get_model(name: str, **params) -> RateModel:
    try:
        factory = MODEL_REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown model {name!r}; known: {sorted(MODEL_REGISTRY)}") from None
    return factory(**params)


def load_model(path: str | Path) -> RateModel:
    """Read a model from JSON: ``K``, ``kernel`` and ``rates`` (or ``general_rates``)."""
    with open(path, encoding="utf-8") as fh:
        return RateModel.from_dict(json.load(fh))
