"""Piecewise-constant rates and the mark/service laws used by configs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import FiniteMeasure

__all__ = ["PiecewiseConstant", "Distribution", "distribution_from_spec", "rate_from_spec"]


@dataclass(frozen=True)
class PiecewiseConstant:
    """``f(t) = values[i]`` on ``[breaks[i], breaks[i+1])``; the last value holds on.

    With ``period`` set, the pattern repeats with that period.
    """

    breaks: tuple
    values: tuple
    period: float | None = None

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        v = tuple(float(x) for x in self.values)
        if len(b) != len(v) or not b or b[0] != 0.0:
            raise ValueError("rate needs matching breaks/values with breaks[0] == 0")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("rate breaks must increase strictly")
        if any(x < 0 for x in v):
            raise ValueError("rates must be nonnegative")
        if self.period is not None and self.period <= b[-1]:
            raise ValueError("period must exceed the last break")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((0.0,), (float(value),))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.period is not None:
            t = np.mod(t, self.period)
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right") - 1
        out = np.asarray(self.values)[np.maximum(idx, 0)]
        return float(out) if out.ndim == 0 else out

    def _cum_one_period(self, t):
        b = np.asarray(self.breaks)
        v = np.asarray(self.values)
        seg_end = np.append(b[1:], np.inf)
        lengths = np.clip(np.minimum(t[..., None], seg_end) - b, 0.0, None)
        return np.sum(np.where(lengths > 0, lengths * v, 0.0), axis=-1)

    def integral(self, t):
        """Exact ``int_0^t f``."""
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, 0.0, None)
        if self.period is None:
            out = self._cum_one_period(tc)
        else:
            P = self.period
            full = np.floor(tc / P)
            per = self._cum_one_period(np.asarray(P))
            out = full * per + self._cum_one_period(tc - full * P)
        return float(out) if np.ndim(out) == 0 else out

    def sup(self) -> float:
        return max(self.values)

    def inf_on(self, T: float) -> float:
        if self.period is not None:
            T = min(T, self.period)
        return min(v for b, v in zip(self.breaks, self.values) if b <= T)

    def change_points(self, T: float) -> np.ndarray:
        """Breakpoints in (0, T]."""
        b = np.asarray(self.breaks[1:])
        if self.period is None:
            pts = b
        else:
            starts = np.arange(0.0, T + self.period, self.period)
            pts = (starts[:, None] + np.asarray(self.breaks)[None, :]).ravel()
        pts = pts[(pts > 0) & (pts <= T)]
        return np.unique(pts)


@dataclass(frozen=True)
class Distribution:
    """Tagged-union law on [0, inf).

    kinds: ``deterministic(value)``, ``uniform(low, high)``,
    ``exponential(rate)``, ``lognormal(sigma, mean)``,
    ``empirical(values, weights)``.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @property
    def p(self) -> dict:
        return dict(self.params)

    @property
    def is_atomic(self) -> bool:
        return self.kind in ("deterministic", "empirical")

    def mean(self) -> float:
        p = self.p
        if self.kind == "deterministic":
            return p["value"]
        if self.kind == "uniform":
            return 0.5 * (p["low"] + p["high"])
        if self.kind == "exponential":
            return 1.0 / p["rate"]
        if self.kind == "lognormal":
            return p.get("mean", 1.0)
        v, w = self._atoms()
        return float(np.dot(v, w))

    def _atoms(self):
        p = self.p
        if self.kind == "deterministic":
            return np.array([p["value"]]), np.array([1.0])
        v = np.asarray(p["values"], dtype=float)
        w = np.asarray(p.get("weights", np.ones(v.size)), dtype=float)
        return v, w / w.sum()

    def support(self) -> tuple[float, float]:
        p = self.p
        if self.is_atomic:
            v, _ = self._atoms()
            return float(v.min()), float(v.max())
        if self.kind == "uniform":
            return p["low"], p["high"]
        return 0.0, math.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p = self.p
        if self.is_atomic:
            v, w = self._atoms()
            order = np.argsort(v)
            c = np.concatenate([[0.0], np.cumsum(w[order])])
            out = c[np.searchsorted(v[order], x, side="right")]
        elif self.kind == "uniform":
            lo, hi = p["low"], p["high"]
            out = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        elif self.kind == "exponential":
            out = np.where(x >= 0, -np.expm1(-p["rate"] * np.clip(x, 0, None)), 0.0)
        else:
            from scipy.stats import lognorm
            s = p["sigma"]
            scale = p.get("mean", 1.0) * math.exp(-0.5 * s * s)
            out = lognorm.cdf(x, s, scale=scale)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.p
        if self.kind == "deterministic":
            return np.full(n, float(p["value"]))
        if self.kind == "uniform":
            return rng.uniform(p["low"], p["high"], n)
        if self.kind == "exponential":
            return rng.exponential(1.0 / p["rate"], n)
        if self.kind == "lognormal":
            s = p["sigma"]
            return rng.lognormal(math.log(p.get("mean", 1.0)) - 0.5 * s * s, s, n)
        v, w = self._atoms()
        return v[rng.choice(v.size, size=n, p=w)]

    def to_measure(self, grid, mass: float = 1.0) -> FiniteMeasure:
        """Atoms at ``grid`` points holding the CDF increments.

        Atomic laws keep their own atom locations, so the result is exact.
        Continuous laws put the mass of ``(x_{j-1}, x_j]`` at ``x_j``; mass
        beyond the grid is dropped.
        """
        if self.is_atomic:
            v, w = self._atoms()
            return FiniteMeasure(v, w * mass)
        grid = np.asarray(grid, dtype=float)
        lo, hi = self.support()
        inside = np.count_nonzero((grid > lo) & (grid <= hi))
        if inside < 2:
            raise ValueError(
                f"x-grid too coarse to resolve a {self.kind} law on [{lo}, {hi}]"
            )
        F = self.cdf(grid)
        return FiniteMeasure(grid, np.diff(F, prepend=0.0) * mass)


_KINDS = ("deterministic", "uniform", "exponential", "lognormal", "empirical")


def distribution_from_spec(spec) -> Distribution:
    """Build from a mapping such as ``{"kind": "uniform", "low": 0, "high": 1}``."""
    if isinstance(spec, Distribution):
        return spec
    if isinstance(spec, (int, float)):
        return Distribution("deterministic", (("value", float(spec)),))
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind is None:
        raise ValueError("distribution spec needs a 'kind' field")
    required = {
        "deterministic": ("value",),
        "uniform": ("low", "high"),
        "exponential": ("rate",),
        "lognormal": ("sigma",),
        "empirical": ("values",),
    }.get(kind)
    if required is None:
        raise ValueError(f"unknown distribution kind {kind!r}")
    for key in required:
        if key not in spec:
            raise ValueError(f"{kind} distribution needs field {key!r}")
    params = []
    for k, v in sorted(spec.items()):
        params.append((k, tuple(float(x) for x in v) if isinstance(v, (list, tuple)) else float(v)))
    if kind == "uniform" and not spec["high"] > spec["low"] >= 0:
        raise ValueError("uniform law needs 0 <= low < high")
    return Distribution(kind, tuple(params))


def rate_from_spec(spec) -> PiecewiseConstant:
    """A number, or ``{"breaks": [...], "values": [...], "period": P}``."""
    if isinstance(spec, PiecewiseConstant):
        return spec
    if isinstance(spec, (int, float)):
        return PiecewiseConstant.constant(float(spec))
    spec = dict(spec)
    try:
        return PiecewiseConstant(tuple(spec["breaks"]), tuple(spec["values"]), spec.get("period"))
    except KeyError as exc:
        raise ValueError(f"rate spec missing field {exc.args[0]!r}") from None
