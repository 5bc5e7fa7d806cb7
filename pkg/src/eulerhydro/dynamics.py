"""Continuous-time evolution of single and basic-coupled configurations."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import _kernels as K_
from .errors import ConfigurationError, EventBudgetExceeded, UndefinedRateError
from .lattice_core import LatticeConfig, RateModel

__all__ = [
    "replica_rng",
    "Simulator",
    "CoupledSimulator",
    "SimulationRun",
    "SimulationResult",
    "CoupledRun",
    "CoupledResult",
    "simulate",
    "simulate_coupled",
    "bond_current",
    "map_replicas",
    "export_snapshots",
    "read_snapshots",
]

_CHUNK = 1 << 17
_NO_LIMIT = np.iinfo(np.int64).max

T = TypeVar("T")


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Counter-based stream for replica ``replica`` of master seed ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica)])))


class _UniformStream:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf = rng.random(_CHUNK)
        self.pos = 0

    def refill(self) -> None:
        self.buf = np.concatenate([self.buf[self.pos:], self.rng.random(_CHUNK)])
        self.pos = 0


def _extend(config: LatticeConfig, M: int) -> np.ndarray:
    if config.is_ring:
        return config.sites.copy()
    top = config.topology
    return np.concatenate([
        np.full(M, top.left, dtype=np.int64),
        config.sites,
        np.full(M, top.right, dtype=np.int64),
    ])


def _inner(ext: np.ndarray, config: LatticeConfig, M: int) -> np.ndarray:
    return ext.copy() if config.is_ring else ext[M:M + config.L].copy()


def _snapshot_times(times: Sequence[float], t0: float, horizon: float) -> np.ndarray:
    st = np.asarray(list(times), dtype=float)
    if st.size and (np.any(np.diff(st) < 0) or st[0] < t0 or st[-1] > horizon):
        raise ConfigurationError("snapshot times must be sorted and lie within the run horizon")
    return st


class Simulator:
    """Stateful single-configuration engine; ``advance`` continues the same stream."""

    def __init__(self, model: RateModel, config: LatticeConfig, seed: int = 0, replica: int = 0):
        config.check(model)
        self.model = model
        self._template = config
        self.M = max(model.M, 1)
        self.ring = config.is_ring
        self.L = config.L
        self.eta = _extend(config, self.M)
        self.offsets = np.array(model.offsets, dtype=np.int64)
        self.rates = np.ascontiguousarray(model.rate_table)
        self.tree, self.P = K_.build_tree(self.eta.size)
        K_.init_tree(self.tree, self.P, self.eta, self.eta.size, self.ring, self.M, self.L, self.offsets, self.rates)
        self.stream = _UniformStream(replica_rng(seed, replica))
        self.t = 0.0
        self.n_events = 0
        n_bonds = self.L if self.ring else self.eta.size - 1
        self.cross = np.zeros(n_bonds, dtype=np.int64)
        self.disp = np.zeros(1, dtype=np.int64)
        self.counters_since = 0.0

    @property
    def config(self) -> LatticeConfig:
        return self._template.with_sites(_inner(self.eta, self._template, self.M))

    def total_rate(self) -> float:
        return float(self.tree[1])

    def reset_counters(self) -> None:
        self.cross[:] = 0
        self.disp[0] = 0
        self.counters_since = self.t

    def crossings(self) -> np.ndarray:
        """Net crossings per bond; on segments bond ``b`` joins sites ``b`` and ``b+1`` for ``b = -1..L-1``."""
        if self.ring:
            return self.cross.copy()
        return self.cross[self.M - 1:self.M + self.L].copy()

    def advance(self, until: float, snapshot_times: Sequence[float] = (), max_events: int | None = None):
        """Run to time ``until``; returns snapshots (rows) taken at ``snapshot_times``."""
        st = _snapshot_times(snapshot_times, self.t, until)
        snaps = np.zeros((st.size, self.L), dtype=np.int64)
        idx = 0
        budget = _NO_LIMIT if max_events is None else self.n_events + int(max_events)
        while True:
            s = self.stream
            t, s.pos, self.n_events, idx, status = K_.run_single(
                self.eta, self.ring, self.M, self.L, self.offsets, self.rates, self.tree, self.P,
                self.t, float(until), s.buf, s.pos, self.n_events, budget,
                self.cross, self.disp, st, idx, snaps,
            )
            self.t = t
            if status == K_.DONE:
                return snaps
            if status == K_.NEED_RANDOMS:
                s.refill()
                continue
            raise EventBudgetExceeded(self.t, (st[:idx], snaps[:idx]))


class CoupledSimulator:
    """Two configurations on one topology evolved under the basic coupling."""

    def __init__(self, model: RateModel, a: LatticeConfig, b: LatticeConfig, seed: int = 0, replica: int = 0):
        if a.topology != b.topology or a.L != b.L or a.origin != b.origin:
            raise ConfigurationError("coupled configurations must share topology, size and origin")
        a.check(model)
        b.check(model)
        self.model = model
        self._template = a
        self.M = max(model.M, 1)
        self.ring = a.is_ring
        self.L = a.L
        self.a = _extend(a, self.M)
        self.b = _extend(b, self.M)
        self.offsets = np.array(model.offsets, dtype=np.int64)
        self.rates = np.ascontiguousarray(model.rate_table)
        self.tree, self.P = K_.build_tree(self.a.size)
        K_.init_coupled_tree(self.tree, self.P, self.a, self.b, self.a.size, self.ring, self.M, self.L,
                             self.offsets, self.rates)
        self.stream = _UniformStream(replica_rng(seed, replica))
        self.t = 0.0
        self.n_events = 0
        self.moves = np.zeros(3, dtype=np.int64)

    @property
    def configs(self) -> tuple[LatticeConfig, LatticeConfig]:
        return (
            self._template.with_sites(_inner(self.a, self._template, self.M)),
            self._template.with_sites(_inner(self.b, self._template, self.M)),
        )

    def advance(self, until: float, snapshot_times: Sequence[float] = (), max_events: int | None = None):
        st = _snapshot_times(snapshot_times, self.t, until)
        sa = np.zeros((st.size, self.L), dtype=np.int64)
        sb = np.zeros_like(sa)
        idx = 0
        budget = _NO_LIMIT if max_events is None else self.n_events + int(max_events)
        while True:
            s = self.stream
            t, s.pos, self.n_events, idx, status = K_.run_coupled(
                self.a, self.b, self.ring, self.M, self.L, self.offsets, self.rates, self.tree, self.P,
                self.t, float(until), s.buf, s.pos, self.n_events, budget,
                st, idx, sa, sb, self.moves,
            )
            self.t = t
            if status == K_.DONE:
                return sa, sb
            if status == K_.NEED_RANDOMS:
                s.refill()
                continue
            raise EventBudgetExceeded(self.t, (st[:idx], sa[:idx], sb[:idx]))


@dataclass(frozen=True)
class SimulationRun:
    model: RateModel
    initial: LatticeConfig
    horizon: float
    seed: int = 0
    replica: int = 0
    max_events: int | None = None
    snapshot_times: tuple[float, ...] = ()
    record_crossings: bool = False

    def __post_init__(self):
        if self.horizon < 0:
            raise ConfigurationError("horizon must be nonnegative")
        st = tuple(float(t) for t in self.snapshot_times)
        if list(st) != sorted(st) or (st and (st[0] < 0 or st[-1] > self.horizon)):
            raise ConfigurationError("snapshot times must be sorted within [0, horizon]")
        object.__setattr__(self, "snapshot_times", st)


@dataclass
class SimulationResult:
    final: LatticeConfig
    elapsed: float
    n_events: int
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    crossings: np.ndarray | None = None
    displacement: int = 0
    seed: int = 0
    replica: int = 0


def simulate(run: SimulationRun) -> SimulationResult:
    """Evolve ``run.initial`` up to ``run.horizon``; deterministic in (inputs, seed, replica)."""
    sim = Simulator(run.model, run.initial, run.seed, run.replica)
    try:
        snaps = sim.advance(run.horizon, run.snapshot_times, run.max_events)
    except EventBudgetExceeded as exc:
        times, snaps = exc.partial
        exc.partial = _result(sim, run, times, snaps)
        raise
    return _result(sim, run, np.asarray(run.snapshot_times), snaps)


def _result(sim: Simulator, run: SimulationRun, times, snaps) -> SimulationResult:
    return SimulationResult(
        final=sim.config,
        elapsed=sim.t - sim.counters_since,
        n_events=sim.n_events,
        snapshot_times=np.asarray(times, dtype=float),
        snapshots=snaps,
        crossings=sim.crossings() if run.record_crossings else None,
        displacement=int(sim.disp[0]),
        seed=run.seed,
        replica=run.replica,
    )


@dataclass(frozen=True)
class CoupledRun:
    model: RateModel
    initial: tuple[LatticeConfig, LatticeConfig]
    horizon: float
    seed: int = 0
    replica: int = 0
    max_events: int | None = None
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        a, b = self.initial
        if a.topology != b.topology or a.L != b.L:
            raise ConfigurationError("coupled configurations must share topology and size")
        if self.horizon < 0:
            raise ConfigurationError("horizon must be nonnegative")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))


@dataclass
class CoupledResult:
    final: tuple[LatticeConfig, LatticeConfig]
    elapsed: float
    n_events: int
    snapshot_times: np.ndarray
    snapshots: tuple[np.ndarray, np.ndarray]
    moves: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))
    seed: int = 0
    replica: int = 0


def simulate_coupled(run: CoupledRun) -> CoupledResult:
    sim = CoupledSimulator(run.model, *run.initial, seed=run.seed, replica=run.replica)
    sa, sb = sim.advance(run.horizon, run.snapshot_times, run.max_events)
    return CoupledResult(
        final=sim.configs,
        elapsed=sim.t,
        n_events=sim.n_events,
        snapshot_times=np.asarray(run.snapshot_times, dtype=float),
        snapshots=(sa, sb),
        moves=sim.moves.copy(),
        seed=run.seed,
        replica=run.replica,
    )


def bond_current(result: SimulationResult, bond: int | None = None) -> float:
    """Net crossings per unit time across ``bond`` (joining ``bond`` and ``bond+1``).

    With ``bond=None`` the current is averaged over every bond of a ring,
    i.e. total particle displacement over ``L * elapsed``.
    """
    if result.crossings is None:
        raise ConfigurationError("run did not record bond crossings")
    if result.elapsed <= 0:
        raise UndefinedRateError("zero elapsed time")
    if bond is None:
        if not result.final.is_ring:
            raise ConfigurationError("bond-averaged current is defined on rings")
        return result.displacement / (result.final.L * result.elapsed)
    if result.final.is_ring:
        return result.crossings[bond % result.final.L] / result.elapsed
    if not -1 <= bond < result.final.L:
        raise ConfigurationError(f"bond {bond} is not recorded on this segment")
    return result.crossings[bond + 1] / result.elapsed


def _default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def map_replicas(fn: Callable[[int], T], replicas: Iterable[int], workers: int | None = None) -> list[T]:
    """Evaluate ``fn`` per replica index in a thread pool; results keep input order."""
    idx = list(replicas)
    workers = workers or _default_workers()
    if workers == 1 or len(idx) <= 1:
        return [fn(r) for r in idx]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, idx))


def export_snapshots(path: str | Path, results: Sequence[SimulationResult]) -> Path:
    """Write one CSV row per (time, replica): ``time, replica, occ_0, ..., occ_{L-1}``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for res in results:
            for t, row in zip(res.snapshot_times, res.snapshots):
                w.writerow([repr(float(t)), res.replica, *row.tolist()])
    return path


def read_snapshots(path: str | Path) -> dict[tuple[float, int], np.ndarray]:
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            out[(float(row[0]), int(row[1]))] = np.array([int(v) for v in row[2:]], dtype=np.int64)
    return out
