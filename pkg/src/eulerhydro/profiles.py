"""Compactly supported piecewise-constant density profiles."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = ["PiecewiseConstantProfile", "canonical_steps", "steps"]


def canonical_steps(breakpoints, values) -> tuple[np.ndarray, np.ndarray]:
    """Drop empty pieces, merge equal neighbours and trim zero pieces at both ends."""
    b = np.asarray(breakpoints, dtype=float)
    v = np.asarray(values, dtype=float)
    if b.size == 0 and v.size == 0:
        return b, v
    if b.size != v.size + 1:
        raise ConfigurationError(f"{b.size} breakpoints cannot bound {v.size} pieces")
    if np.any(np.diff(b) < 0) or not np.all(np.isfinite(b)):
        raise ConfigurationError("breakpoints must be finite and nondecreasing")
    keep = np.diff(b) > 0
    v = v[keep]
    b = np.concatenate([b[:1], b[1:][keep]])
    if v.size:
        change = np.concatenate([[True], v[1:] != v[:-1]])
        v = v[change]
        b = np.concatenate([b[:-1][change], b[-1:]])
    nz = np.flatnonzero(v != 0)
    if nz.size == 0:
        return np.zeros(0), np.zeros(0)
    lo, hi = nz[0], nz[-1]
    return b[lo:hi + 2].copy(), v[lo:hi + 1].copy()


@dataclass(frozen=True, eq=False)
class PiecewiseConstantProfile:
    """Value ``values[i]`` on ``(breakpoints[i], breakpoints[i+1])``, zero outside.

    Stored canonically, so two profiles are equal exactly when they agree
    almost everywhere.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b, v = canonical_steps(self.breakpoints, self.values)
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls) -> "PiecewiseConstantProfile":
        return cls(np.zeros(0), np.zeros(0))

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0) -> "PiecewiseConstantProfile":
        return cls(np.array([a, b], dtype=float), np.array([value], dtype=float))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int) -> "PiecewiseConstantProfile":
        """``n`` equal cells on ``[a, b]`` carrying ``f`` at the cell midpoints."""
        edges = np.linspace(a, b, n + 1)
        return cls(edges, np.asarray(f(0.5 * (edges[:-1] + edges[1:])), dtype=float))

    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    @property
    def support(self) -> tuple[float, float]:
        if self.is_zero:
            return (0.0, 0.0)
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def min_step(self) -> float:
        return float(self.lengths.min()) if self.values.size else np.inf

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Values including the zero states outside: ``len(values) + 2`` entries."""
        return self.breakpoints, np.concatenate([[0.0], self.values, [0.0]])

    def __call__(self, x):
        """Right-continuous evaluation."""
        x = np.asarray(x, dtype=float)
        _, vals = self.padded()
        out = vals[np.searchsorted(self.breakpoints, x, side="right")]
        return out if out.ndim else float(out)

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        _, vals = self.padded()
        out = vals[np.searchsorted(self.breakpoints, x, side="left")]
        return out if out.ndim else float(out)

    def jumps(self) -> np.ndarray:
        """Signed jump ``u(x+0) - u(x-0)`` at every breakpoint."""
        _, vals = self.padded()
        return np.diff(vals)

    def primitive(self, x):
        """``int_{-inf}^x u``."""
        x = np.asarray(x, dtype=float)
        b = self.breakpoints
        if self.is_zero:
            return np.zeros_like(x) if x.ndim else 0.0
        cum = np.concatenate([[0.0], np.cumsum(self.values * np.diff(b))])
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, b.size - 1)
        xc = np.clip(x, b[0], b[-1])
        vals = np.concatenate([self.values, [0.0]])
        out = cum[i] + vals[i] * (xc - b[i])
        return out if out.ndim else float(out)

    def integral(self, a: float = -np.inf, b: float = np.inf) -> float:
        return float(self.primitive(b) - self.primitive(a))

    def cell_averages(self, edges: np.ndarray) -> np.ndarray:
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.primitive(edges)) / np.diff(edges)

    def total_variation(self) -> float:
        return float(np.abs(self.jumps()).sum())

    def scaled(self, c: float) -> "PiecewiseConstantProfile":
        return PiecewiseConstantProfile(self.breakpoints, c * self.values)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseConstantProfile):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self) -> str:
        return f"PiecewiseConstantProfile({self.breakpoints.tolist()}, {self.values.tolist()})"

    def to_csv(self, path: str | Path) -> Path:
        """Rows ``breakpoint, value``; the value on the last row is the (zero) state to its right."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["breakpoint", "value"])
            vals = np.concatenate([self.values, [0.0]])
            for x, v in zip(self.breakpoints, vals):
                w.writerow([repr(float(x)), repr(float(v))])
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "PiecewiseConstantProfile":
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))[1:]
        b = [float(r[0]) for r in rows]
        v = [float(r[1]) for r in rows[:-1]]
        return cls(np.array(b), np.array(v))


def steps(breakpoints: Sequence[float], values: Sequence[float]) -> PiecewiseConstantProfile:
    return PiecewiseConstantProfile(np.asarray(breakpoints, dtype=float), np.asarray(values, dtype=float))
