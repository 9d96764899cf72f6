"""Finite measures on [0, inf), measure-valued paths and the Lévy metric."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .step_paths import StepPath

__all__ = [
    "FiniteMeasure",
    "MeasurePath",
    "levy_distance",
    "sup_cdf_distance",
    "min_support",
    "stieltjes_integral",
    "is_monotone_path",
    "cdf_oscillation",
]


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Sorted atoms ``(locations, weights)`` with strictly positive weights.

    Zero weights and repeated locations are merged away on construction, so
    ``FiniteMeasure([1, 1, 2], [1, 0.5, 0])`` is ``1.5 * delta_1``.
    """

    locations: np.ndarray
    weights: np.ndarray
    atom_resolution: float | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.asarray(self.locations, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if x.shape != w.shape:
            raise ValueError("locations and weights differ in length")
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("atoms must lie in [0, inf)")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        keep = w > 0
        x, w = x[keep], w[keep]
        if x.size:
            ux, inv = np.unique(x, return_inverse=True)
            w = np.bincount(inv, weights=w, minlength=ux.size)
            x = ux
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteMeasure):
            return NotImplemented
        return (np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    @classmethod
    def zero(cls) -> "FiniteMeasure":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> "FiniteMeasure":
        return cls([x], [mass])

    @classmethod
    def from_cdf(cls, grid, cdf) -> "FiniteMeasure":
        """Atoms at grid points carrying the CDF increments."""
        grid = np.asarray(grid, dtype=float)
        cdf = np.asarray(cdf, dtype=float)
        inc = np.diff(cdf, prepend=0.0)
        inc[np.abs(inc) < 1e-15] = 0.0
        if np.any(inc < -1e-9):
            raise ValueError("CDF values decrease along the grid")
        return cls(grid, np.clip(inc, 0.0, None))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def atomless(self) -> bool:
        """Discretisation-level check: every atom at most the resolution."""
        if not self.weights.size:
            return True
        eps = self.atom_resolution
        if eps is None:
            eps = self.total_mass / self.weights.size
        return bool(self.weights.max() <= eps * (1 + 1e-12))

    def cdf(self, x):
        """``nu[0, x]``; zero for x < 0."""
        c = np.concatenate([[0.0], np.cumsum(self.weights)])
        idx = np.searchsorted(self.locations, np.asarray(x, dtype=float), side="right")
        out = c[idx]
        return float(out) if np.ndim(out) == 0 else out

    def cdf_left(self, x):
        """``nu[0, x)``."""
        c = np.concatenate([[0.0], np.cumsum(self.weights)])
        idx = np.searchsorted(self.locations, np.asarray(x, dtype=float), side="left")
        out = c[idx]
        return float(out) if np.ndim(out) == 0 else out

    def scale(self, c: float) -> "FiniteMeasure":
        return FiniteMeasure(self.locations, self.weights * c)

    def __add__(self, other: "FiniteMeasure") -> "FiniteMeasure":
        return FiniteMeasure(
            np.concatenate([self.locations, other.locations]),
            np.concatenate([self.weights, other.weights]),
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "weight"])
            for x, m in zip(self.locations, self.weights):
                w.writerow([repr(float(x)), repr(float(m))])


@dataclass(frozen=True)
class MeasurePath:
    """CDF samples ``cdf[k, j] = zeta_{t_k}[0, x_j]`` on a shared support grid.

    The support grid starts at 0 and its last column is taken to be the total
    mass, so every atom must sit at or below ``grid[-1]``.  ``initial`` is the
    0- row, when one is meaningful.
    """

    times: np.ndarray
    grid: np.ndarray
    cdf: np.ndarray
    initial: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        x = np.asarray(self.grid, dtype=float).ravel()
        F = np.asarray(self.cdf, dtype=float)
        if F.shape != (t.size, x.size):
            raise ValueError(f"cdf shape {F.shape} does not match grids ({t.size}, {x.size})")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if x.size == 0 or x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise ValueError("support grid must start at 0 and increase strictly")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "cdf", F)
        if self.initial is not None:
            init = np.asarray(self.initial, dtype=float).ravel()
            if init.size != x.size:
                raise ValueError("initial row has the wrong length")
            object.__setattr__(self, "initial", init)

    @classmethod
    def zeros(cls, times, grid) -> "MeasurePath":
        times = np.asarray(times, dtype=float)
        grid = np.asarray(grid, dtype=float)
        return cls(times, grid, np.zeros((times.size, grid.size)))

    @property
    def total(self) -> np.ndarray:
        return self.cdf[:, -1]

    def total_path(self) -> StepPath:
        return StepPath(self.times, self.total)

    def column(self, j: int) -> StepPath:
        return StepPath(self.times, self.cdf[:, j])

    def at(self, k: int) -> FiniteMeasure:
        return FiniteMeasure.from_cdf(self.grid, self.cdf[k])

    def row_index(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k < 0:
            raise ValueError(f"time {t} precedes the path")
        return k

    def measure_at(self, t: float) -> FiniteMeasure:
        return self.at(self.row_index(t))

    def _combine(self, other: "MeasurePath", sign: float) -> "MeasurePath":
        _check_same_grids(self, other)
        init = None
        if self.initial is not None and other.initial is not None:
            init = self.initial + sign * other.initial
        return MeasurePath(self.times, self.grid, self.cdf + sign * other.cdf, init)

    def __add__(self, other: "MeasurePath") -> "MeasurePath":
        return self._combine(other, 1.0)

    def __sub__(self, other: "MeasurePath") -> "MeasurePath":
        return self._combine(other, -1.0)

    def __mul__(self, c: float) -> "MeasurePath":
        init = None if self.initial is None else self.initial * c
        return MeasurePath(self.times, self.grid, self.cdf * c, init)

    __rmul__ = __mul__

    def resample_times(self, times) -> "MeasurePath":
        times = np.asarray(times, dtype=float)
        idx = np.searchsorted(self.times, times, side="right") - 1
        if np.any(idx < 0):
            raise ValueError("resample times precede the path")
        return MeasurePath(times, self.grid, self.cdf[idx], self.initial)

    def resample_grid(self, grid) -> "MeasurePath":
        """Evaluate the CDFs at new support points (right-continuous)."""
        grid = np.asarray(grid, dtype=float)
        idx = np.searchsorted(self.grid, grid, side="right") - 1
        F = np.where(idx[None, :] >= 0, self.cdf[:, np.maximum(idx, 0)], 0.0)
        init = None
        if self.initial is not None:
            init = np.where(idx >= 0, self.initial[np.maximum(idx, 0)], 0.0)
        return MeasurePath(self.times, grid, F, init)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "cdf"])
            for k, t in enumerate(self.times):
                for j, x in enumerate(self.grid):
                    w.writerow([repr(float(t)), repr(float(x)), repr(float(self.cdf[k, j]))])


def _check_same_grids(a: MeasurePath, b: MeasurePath) -> None:
    if not (np.array_equal(a.times, b.times) and np.array_equal(a.grid, b.grid)):
        raise ValueError("measure paths live on different grids")


def _violation(nu1: FiniteMeasure, nu2: FiniteMeasure, eps: float) -> float:
    """Largest violation of ``nu1(-inf, x-eps] - eps <= nu2(-inf, x]`` over real x.

    Both sides are step functions, so the supremum is attained at a
    breakpoint either as a value or as a left limit.
    """
    cand = np.concatenate([nu1.locations + eps, nu2.locations])
    if cand.size == 0:
        return -eps
    right = nu1.cdf(cand - eps) - nu2.cdf(cand)
    left = nu1.cdf_left(cand - eps) - nu2.cdf_left(cand)
    tail = nu1.total_mass - nu2.total_mass
    return float(max(right.max(), left.max(), tail, 0.0) - eps)


def _feasible(nu1, nu2, eps) -> bool:
    return _violation(nu1, nu2, eps) <= 0.0 and _violation(nu2, nu1, eps) <= 0.0


def levy_distance(nu1: FiniteMeasure, nu2: FiniteMeasure, tol: float = 1e-10) -> float:
    """Lévy distance with both CDFs extended by zero on the negative axis."""
    if nu1 == nu2:
        return 0.0
    hi = max(nu1.total_mass, nu2.total_mass)
    lo = 0.0
    if _feasible(nu1, nu2, lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _feasible(nu1, nu2, mid):
            hi = mid
        else:
            lo = mid
    return hi


def sup_cdf_distance(nu1: FiniteMeasure, nu2: FiniteMeasure) -> float:
    """``sup_x |nu1[0,x] - nu2[0,x]|`` (attained at merged atom locations)."""
    pts = np.concatenate([nu1.locations, nu2.locations])
    if pts.size == 0:
        return 0.0
    return float(np.max(np.abs(nu1.cdf(pts) - nu2.cdf(pts))))


def cdf_oscillation(nu: FiniteMeasure, h: float) -> float:
    """``sup_{|x-y| <= h} |nu[0,x] - nu[0,y]|`` = largest mass in a window of width h.

    Windows are closed on both ends, and the supremum runs over all real
    windows, so a window starting just left of an atom counts that atom.
    """
    if nu.locations.size == 0:
        return 0.0
    x = nu.locations
    c = np.concatenate([[0.0], np.cumsum(nu.weights)])
    # window [x_i, x_i + h] for each atom x_i as left end
    right = np.searchsorted(x, x + h, side="right")
    left = np.arange(x.size)
    return float(np.max(c[right] - c[left]))


def min_support(nu: FiniteMeasure, mass_tol: float = 0.0) -> float:
    """Smallest atom with weight above ``mass_tol``; +inf if there is none."""
    keep = nu.weights > mass_tol
    if not np.any(keep):
        return float("inf")
    return float(nu.locations[keep][0])


def stieltjes_integral(g, zeta: StepPath) -> float:
    """``g(0) zeta(0) + sum_t g(t) (zeta(t) - zeta(t-))`` over zeta's breakpoints.

    ``g`` may be a StepPath, a callable of time, or an array aligned with
    ``zeta.breakpoints``.
    """
    t = zeta.breakpoints
    if isinstance(g, StepPath):
        gv = g(t)
    elif callable(g):
        gv = np.asarray(g(t), dtype=float)
    else:
        gv = np.asarray(g, dtype=float)
    dz = np.diff(zeta.values, prepend=0.0)
    return float(np.sum(gv * dz))


def is_monotone_path(zeta: MeasurePath, tol: float = 0.0):
    """Check that ``zeta[0, x_j]`` and ``zeta(x_j, x_j']`` are nondecreasing in t.

    Returns ``(ok, violation)`` where ``violation`` is ``None`` or the first
    offending ``(k, j, j')``; ``j == -1`` flags the ``[0, x_j']`` family.
    Adjacent-cell increments suffice: every interval ``(x_j, x_j']`` is a sum
    of adjacent cells, and sums of nondecreasing paths are nondecreasing.
    """
    F = zeta.cdf
    rows = F if zeta.initial is None else np.vstack([zeta.initial, F])
    offset = 0 if zeta.initial is None else 1
    if rows.shape[0] < 2:
        return True, None
    cells = np.diff(rows, axis=1, prepend=0.0)
    dcells = np.diff(cells, axis=0)
    bad = np.argwhere(dcells < -tol)
    if bad.size:
        k, j = bad[0]
        k = int(k) + 1 - offset
        j = int(j)
        return False, (k, j - 1, j)
    return True, None
