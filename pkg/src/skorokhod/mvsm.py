"""The measure-valued Skorokhod map and a K-class priority oracle.

``theta`` follows the explicit construction: idleness from the total-mass
column, then one independent half-line reflection per support-grid column,
with the mass at x = 0 closed through the balance of departed mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import MeasurePath, is_monotone_path
from .step_paths import StepPath, merge_grids, reflect_values

__all__ = [
    "MvsmSolution",
    "theta",
    "theta_lifo",
    "verify_mvsp",
    "kclass_solve",
    "theta_vs_kclass",
]


@dataclass(frozen=True)
class MvsmSolution:
    xi: MeasurePath
    beta: MeasurePath
    iota: StepPath

    @property
    def beta_tail(self) -> np.ndarray:
        """``beta_t(x_j, inf)`` as a (time, grid) array."""
        return self.beta.total[:, None] - self.beta.cdf


def _mu_values(alpha: MeasurePath, mu: StepPath, resample: bool) -> np.ndarray:
    if mu.breakpoints.shape == alpha.times.shape and np.array_equal(mu.breakpoints, alpha.times):
        return mu.values
    if not resample:
        raise ValueError("alpha and mu live on different time grids; pass resample=True")
    return mu(alpha.times)


def _scale(alpha: MeasurePath, mu_vals: np.ndarray) -> float:
    a = float(np.max(np.abs(alpha.total))) if alpha.total.size else 0.0
    m = float(np.max(np.abs(mu_vals))) if mu_vals.size else 0.0
    return max(a, m, 1.0)


def theta(alpha: MeasurePath, mu: StepPath, resample: bool = False,
          check: bool = True) -> MvsmSolution:
    """Solve the measure-valued Skorokhod problem for ``(alpha, mu)``."""
    mu_vals = _mu_values(alpha, mu, resample)
    if check:
        ok, where = is_monotone_path(alpha, tol=1e-12 * _scale(alpha, mu_vals))
        if not ok:
            raise ValueError(f"arrival path is not monotone (first violation at {where})")
        if np.any(np.diff(mu_vals) < -1e-12 * _scale(alpha, mu_vals)):
            raise ValueError("service path is not nondecreasing")
    A = alpha.cdf
    _, iota = reflect_values(A[:, -1] - mu_vals)
    psi = A - mu_vals[:, None] + iota[:, None]
    xi, beta_tail = reflect_values(psi, axis=0)
    beta_total = beta_tail[:, 0] + A[:, 0] - xi[:, 0]
    beta = beta_total[:, None] - beta_tail
    times = alpha.times
    return MvsmSolution(
        xi=MeasurePath(times, alpha.grid, xi, alpha.initial),
        beta=MeasurePath(times, alpha.grid, beta),
        iota=StepPath(times, iota, 0.0),
    )


def _reflect_grid(path: MeasurePath) -> MeasurePath:
    """Push a measure path forward under ``x -> x_max - x``."""
    x = path.grid
    y = x[-1] - x[::-1]
    total = path.cdf[:, -1:]
    # mass of [x_{J-j}, x_max] = total - F(x_{J-j-1})
    shifted = np.hstack([np.zeros((path.cdf.shape[0], 1)), path.cdf[:, :-1]])
    F = total - shifted[:, ::-1]
    init = None
    if path.initial is not None:
        sh0 = np.concatenate([[0.0], path.initial[:-1]])
        init = path.initial[-1] - sh0[::-1]
    return MeasurePath(path.times, y, F, init)


def theta_lifo(alpha: MeasurePath, mu: StepPath, resample: bool = False) -> MvsmSolution:
    """Mirror-image map: the largest x has priority.

    Implemented by reflecting the (bounded) support grid, solving with
    ``theta`` and reflecting the measure components back.
    """
    sol = theta(_reflect_grid(alpha), mu, resample=resample)
    return MvsmSolution(
        xi=_reflect_grid(sol.xi),
        beta=_reflect_grid(sol.beta),
        iota=sol.iota,
    )


def verify_mvsp(alpha: MeasurePath, mu: StepPath, sol: MvsmSolution,
                tol: float = 1e-9, resample: bool = False) -> dict:
    """Residuals of the four defining properties, plus balance and sign checks.

    Every residual is an absolute number; ``passed`` compares each against
    ``tol * scale`` with ``scale = max(total mass, mu(T), 1)``.
    """
    mu_vals = _mu_values(alpha, mu, resample)
    A, X, Bc = alpha.cdf, sol.xi.cdf, sol.beta.cdf
    iota = sol.iota.values
    btail = sol.beta.total[:, None] - Bc
    scale = _scale(alpha, mu_vals)

    p1 = np.abs(X - (A - mu_vals[:, None] + btail + iota[:, None]))
    d_btail = np.diff(btail, axis=0, prepend=0.0)
    p2 = np.sum(np.abs(X * d_btail), axis=0)
    d_iota = np.diff(iota, prepend=0.0)
    p3 = np.sum(np.abs(X * d_iota[:, None]), axis=0)
    p4 = np.abs(sol.beta.total + iota - mu_vals)
    balance = np.abs(X - (A - Bc))

    beta_ok, _ = is_monotone_path(sol.beta, tol=tol * scale)
    report = {
        "property_1": float(p1.max(initial=0.0)),
        "property_2": float(p2.max(initial=0.0)),
        "property_3": float(p3.max(initial=0.0)),
        "property_4": float(p4.max(initial=0.0)),
        "balance": float(balance.max(initial=0.0)),
        "xi_negative_part": float(max(0.0, -X.min(initial=0.0))),
        "beta_monotone": bool(beta_ok),
        "iota_nondecreasing": bool(np.all(np.diff(iota) >= -tol * scale) and np.all(iota >= -tol * scale)),
        "scale": scale,
    }
    bound = tol * scale
    report["passed"] = bool(
        all(report[k] <= bound for k in ("property_1", "property_2", "property_3",
                                          "property_4", "balance", "xi_negative_part"))
        and report["beta_monotone"] and report["iota_nondecreasing"]
    )
    return report


def kclass_solve(A: list[StepPath], M: StepPath):
    """Fluid K-class priority queue, class 1 highest priority.

    Each partial sum ``X[1,i]`` is the reflection of ``A[1,i] - M`` with no
    idleness shift.  Returns ``(X, B_hat, I_hat)``: per-class contents,
    ``B_hat[i-1]`` the effort spent on classes after i, and cumulative idle
    effort.
    """
    if not A:
        raise ValueError("need at least one class")
    grid = merge_grids(M.breakpoints, *[a.breakpoints for a in A])
    m = M(grid)
    cum = np.cumsum(np.vstack([a(grid) for a in A]), axis=0)
    phi, eta = reflect_values(cum - m[None, :], axis=1)
    I_hat = eta[-1]
    X = np.diff(phi, axis=0, prepend=0.0)
    return (
        [StepPath(grid, x) for x in X],
        [StepPath(grid, e - I_hat) for e in eta],
        StepPath(grid, I_hat),
    )


def theta_vs_kclass(alpha: MeasurePath, mu: StepPath, resample: bool = False) -> float:
    """Max gap between ``xi_t[0, x_i]`` and the K-class partial sums ``X[1, i](t)``.

    Every support-grid column is treated as one class.
    """
    mu_vals = _mu_values(alpha, mu, resample)
    sol = theta(alpha, StepPath(alpha.times, mu_vals), check=False)
    cells = np.diff(alpha.cdf, axis=1, prepend=0.0)
    classes = [StepPath(alpha.times, cells[:, j]) for j in range(cells.shape[1])]
    X, _, _ = kclass_solve(classes, StepPath(alpha.times, mu_vals))
    partial = np.cumsum(np.vstack([x.values for x in X]), axis=0).T
    return float(np.max(np.abs(sol.xi.cdf - partial), initial=0.0))
