"""Right-continuous step paths and the Skorokhod map on the half-line."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "StepPath",
    "skorokhod_map",
    "reflect_values",
    "shift",
    "merge_grids",
    "sup_distance",
]


@dataclass(frozen=True)
class StepPath:
    """Piecewise-constant càdlàg path.

    ``values[i]`` is attained on ``[breakpoints[i], breakpoints[i+1])`` and the
    last value holds forever.  ``initial_left_value`` is the value at 0-.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    initial_left_value: float = 0.0
    nondecreasing: bool = field(default=False, compare=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        if bp.size == 0:
            raise ValueError("a StepPath needs at least one breakpoint")
        if bp.shape != vals.shape:
            raise ValueError(f"{bp.size} breakpoints but {vals.size} values")
        if bp[0] != 0.0:
            raise ValueError(f"first breakpoint must be 0, got {bp[0]}")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.nondecreasing:
            if np.any(np.diff(vals) < 0) or np.any(vals < 0):
                raise ValueError("path flagged nondecreasing is not in D_up")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float, grid=(0.0,)) -> "StepPath":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], grid, **kw) -> "StepPath":
        """Sample ``f`` on ``grid`` (vectorised callable)."""
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(f(grid), dtype=float) * np.ones_like(grid), **kw)

    def __len__(self) -> int:
        return self.breakpoints.size

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, t):
        return eval_path(self, t)

    def resample(self, grid) -> "StepPath":
        grid = np.asarray(grid, dtype=float)
        return StepPath(grid, eval_path(self, grid), self.initial_left_value)

    def _combine(self, other, op) -> "StepPath":
        if isinstance(other, StepPath):
            grid = merge_grids(self.breakpoints, other.breakpoints)
            return StepPath(
                grid,
                op(eval_path(self, grid), eval_path(other, grid)),
                op(self.initial_left_value, other.initial_left_value),
            )
        c = float(other)
        return StepPath(self.breakpoints, op(self.values, c), op(self.initial_left_value, c))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: np.subtract(b, a))

    def __neg__(self):
        return StepPath(self.breakpoints, -self.values, -self.initial_left_value)

    def __mul__(self, c):
        c = float(c)
        return StepPath(self.breakpoints, self.values * c, self.initial_left_value * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def sup_norm(self, T: float | None = None) -> float:
        v = self.values if T is None else self.values[self.breakpoints <= T]
        return float(np.max(np.abs(v))) if v.size else 0.0

    def is_nondecreasing(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.values) >= -tol) and np.all(self.values >= -tol))

    def to_csv(self, path) -> None:
        write_path_csv(path, self.breakpoints, self.values)


def eval_path(path: StepPath, t):
    """Right-continuous evaluation; scalar in, scalar out."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("paths are defined on [0, inf); got negative time")
    idx = np.searchsorted(path.breakpoints, t_arr, side="right") - 1
    out = path.values[idx]
    return float(out) if out.ndim == 0 else out


def merge_grids(*grids: Iterable[float]) -> np.ndarray:
    """Union of breakpoint sets; duplicates removed by exact equality."""
    return np.unique(np.concatenate([np.asarray(g, dtype=float).ravel() for g in grids]))


def reflect_values(psi: np.ndarray, axis: int = 0):
    """Running-minimum Skorokhod map applied along ``axis`` of a value array.

    Returns ``(phi, eta)`` with ``phi = psi + eta``.  ``eta`` is exactly
    ``-min(running_min(psi), 0)`` so ``phi`` is exactly zero wherever ``eta``
    moves.
    """
    psi = np.asarray(psi, dtype=float)
    floor = np.minimum.accumulate(np.minimum(psi, 0.0), axis=axis)
    return psi - floor, -floor


def skorokhod_map(psi: StepPath) -> tuple[StepPath, StepPath]:
    """The pair (phi, eta) solving the Skorokhod problem for ``psi``."""
    phi, eta = reflect_values(psi.values)
    return (
        StepPath(psi.breakpoints, phi, 0.0),
        StepPath(psi.breakpoints, eta, 0.0, nondecreasing=True),
    )


def shift(path: StepPath, T: float) -> StepPath:
    """The shifted increment path ``t -> f(T + t) - f(T)``."""
    if T < 0:
        raise ValueError("shift time must be nonnegative")
    base = eval_path(path, T)
    later = path.breakpoints[path.breakpoints > T] - T
    grid = np.concatenate([[0.0], later])
    return StepPath(grid, eval_path(path, grid + T) - base)


def sup_distance(p1: StepPath, p2: StepPath, T: float | None = None) -> float:
    """``sup_{t <= T} |p1(t) - p2(t)|`` over the merged grid."""
    return (p1 - p2).sup_norm(T)


def write_path_csv(path, times, values, header=("t", "value")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, v in zip(np.asarray(times), np.asarray(values)):
            w.writerow([repr(float(t)), repr(float(v))])
