"""Fluid models driven by the measure-valued Skorokhod map.

The hard-EDF solver builds the minimal reneging path by a forward pass: at
each grid time, reneging is raised by exactly the mass that would otherwise
sit strictly below the diagonal.  The candidate is then re-solved through
``theta`` and certified against the fluid equations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, PiecewiseConstant
from .measures import FiniteMeasure, MeasurePath, is_monotone_path
from .mvsm import MvsmSolution, theta, verify_mvsp
from .step_paths import StepPath

__all__ = [
    "EdfPrimitives",
    "EdfFluidSolution",
    "FluidCertificationError",
    "build_alpha_edf",
    "build_alpha_fifo",
    "build_alpha_continuum",
    "build_alpha_work",
    "build_mu",
    "edf_fluid_solve",
    "minimal_rho",
    "minimality_probe",
    "certify_edf",
    "frontier",
    "rho_monotonicity_check",
    "edf_soft_solve",
    "deadline_shift_check",
    "sjf_srpt_fluid_solve",
    "count_transform",
    "uniform_grid",
]


class FluidCertificationError(RuntimeError):
    """The solver output failed the fluid-model residual checks."""


@dataclass(frozen=True)
class EdfPrimitives:
    lam: PiecewiseConstant
    nu: Distribution | FiniteMeasure
    m: PiecewiseConstant
    mu0: StepPath = field(default_factory=lambda: StepPath.constant(0.0))
    xi0minus: FiniteMeasure = field(default_factory=FiniteMeasure.zero)


@dataclass(frozen=True)
class EdfFluidSolution:
    mvsm: MvsmSolution
    rho: StepPath
    sigma: StepPath
    report: dict

    @property
    def xi(self) -> MeasurePath:
        return self.mvsm.xi

    @property
    def beta(self) -> MeasurePath:
        return self.mvsm.beta

    @property
    def iota(self) -> StepPath:
        return self.mvsm.iota


def uniform_grid(stop: float, step: float) -> np.ndarray:
    """``0, step, 2 step, ...`` up to and including ``stop`` (rounded to the step)."""
    n = int(round(stop / step))
    return np.arange(n + 1) * step


def _nu_measure(nu, x_grid) -> FiniteMeasure:
    if isinstance(nu, FiniteMeasure):
        return nu
    return nu.to_measure(x_grid)


def build_alpha_edf(p: EdfPrimitives, t_grid, x_grid) -> MeasurePath:
    """Cumulative arrivals by absolute deadline plus the initial profile.

    With relative-deadline atoms ``(d_i, w_i)`` the integral is exact:
    ``sum_i w_i * Lambda(min(t, x - d_i)^+)`` for ``Lambda = int lam``.
    """
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    nu = _nu_measure(p.nu, x)
    d, w = nu.locations, nu.weights
    if d.size and x[-1] < t[-1] + d.max():
        warnings.warn("x-grid stops before the latest deadline; tail mass is lumped at the last column")
    Lam_t = p.lam.integral(t)
    wcum = np.concatenate([[0.0], np.cumsum(w)])
    F = np.empty((t.size, x.size))
    for j, xj in enumerate(x):
        # d_i <= x_j - t contributes w_i Lambda(t); x_j - t < d_i <= x_j contributes w_i Lambda(x_j - d_i)
        contrib = w * p.lam.integral(np.clip(xj - d, 0.0, None))
        suffix = np.concatenate([np.cumsum(contrib[::-1])[::-1], [0.0]])
        cut = np.searchsorted(d, xj - t, side="right")
        F[:, j] = Lam_t * wcum[cut] + suffix[cut]
    # the last column carries all mass so totals are exact
    F[:, -1] = Lam_t * nu.total_mass
    x_last = x.copy()
    x_last[-1] = np.inf
    init = p.xi0minus.cdf(x_last)
    F += init[None, :]
    return MeasurePath(t, x, F, init)


def build_alpha_fifo(lam: PiecewiseConstant, t_grid, x_grid) -> MeasurePath:
    """FIFO arrivals indexed by arrival time: ``alpha_t[0,x] = int_0^{t ^ x} lam``."""
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    F = lam.integral(np.minimum(t[:, None], x[None, :]))
    F[:, -1] = lam.integral(t)
    return MeasurePath(t, x, F, np.zeros(x.size))


def build_alpha_continuum(t_breaks, x_breaks, rates, t_grid, x_grid) -> MeasurePath:
    """Arrivals with rate ``rates[a, b]`` on the cell ``[t_a, t_{a+1}) x [x_b, x_{b+1})``.

    The last break in each direction closes the rate table (``rates`` has
    shape ``(len(t_breaks)-1, len(x_breaks)-1)``); rates vanish outside it.
    """
    tb = np.asarray(t_breaks, dtype=float)
    xb = np.asarray(x_breaks, dtype=float)
    V = np.asarray(rates, dtype=float)
    if V.shape != (tb.size - 1, xb.size - 1):
        raise ValueError("rate table shape does not match the breaks")
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    Lt = np.clip(np.minimum(t[:, None], tb[None, 1:]) - tb[None, :-1], 0.0, None)
    Lx = np.clip(np.minimum(x[:, None], xb[None, 1:]) - xb[None, :-1], 0.0, None)
    F = Lt @ V @ Lx.T
    F[:, -1] = Lt @ V @ (xb[1:] - xb[:-1])
    return MeasurePath(t, x, F, np.zeros(x.size))


def build_alpha_work(lam: PiecewiseConstant, sizes: Distribution, t_grid, x_grid,
                     xi0minus: FiniteMeasure | None = None) -> MeasurePath:
    """Work arrivals by job size: ``alpha^w_t[0,x] = Lambda(t) E[W; W <= x]``.

    ``lam`` counts jobs per unit time; the work measure weights each size y
    by y.  The last column carries the full mean work.
    """
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    m = sizes.to_measure(x)
    work = FiniteMeasure(m.locations, m.weights * m.locations)
    x_last = x.copy()
    x_last[-1] = np.inf
    prof = work.cdf(x_last)
    F = np.asarray(lam.integral(t))[:, None] * prof[None, :]
    init = np.zeros(x.size)
    if xi0minus is not None and xi0minus.total_mass > 0:
        init = xi0minus.cdf(x_last)
        F = F + init[None, :]
    return MeasurePath(t, x, F, init)


def build_mu(p: EdfPrimitives, t_grid) -> StepPath:
    """``mu0(t) + int_0^t m`` sampled on the grid."""
    t = np.asarray(t_grid, dtype=float)
    vals = p.mu0(t) + p.m.integral(t)
    return StepPath(t, vals, 0.0, nondecreasing=True)


def _subdiagonal_counts(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Number of support columns strictly below each time (half-pitch guard)."""
    pitch = np.min(np.diff(x)) if x.size > 1 else 1.0
    return np.searchsorted(x, t - 0.5 * pitch, side="right")


def minimal_rho(alpha: MeasurePath, mu: StepPath) -> np.ndarray:
    """Smallest nondecreasing reneging path keeping mass off ``[0, t)``.

    Column j (``x_j < t_k``) must satisfy
    ``v_j(t_k) - rho_k <= min(0, min_{i<k} (v_j(t_i) - rho_i))`` with
    ``v_j = alpha[0, x_j] - mu``; the recursion takes the least such rho_k.
    """
    A = alpha.cdf
    v = A - mu(alpha.times)[:, None]
    n_sub = _subdiagonal_counts(alpha.times, alpha.grid)
    rho = np.zeros(alpha.times.size)
    floor = np.zeros(alpha.grid.size)  # running min of (v - rho) and 0
    prev = 0.0
    for k in range(alpha.times.size):
        r = prev
        n = n_sub[k]
        if n:
            r = max(prev, float((v[k, :n] - floor[:n]).max()))
        rho[k] = r
        np.minimum(floor, v[k] - r, out=floor)
        prev = r
    return rho


def frontier(xi: MeasurePath, mass_tol: float = 0.0) -> StepPath:
    """``min supp xi_t`` per grid time (cells with mass above ``mass_tol``); inf if empty."""
    cells = np.diff(xi.cdf, axis=1, prepend=0.0)
    has = cells > mass_tol
    first = np.argmax(has, axis=1)
    sig = np.where(has.any(axis=1), xi.grid[first], np.inf)
    return StepPath(xi.times, sig)


def certify_edf(alpha: MeasurePath, mu: StepPath, rho: np.ndarray, sol: MvsmSolution,
                tol: float = 1e-6, slack_cells: int = 2, mass_tol: float | None = None) -> dict:
    """Residuals of the hard-EDF fluid equations on the grid.

    ``diagonal``: worst ``xi_t[0, x_j]`` over columns strictly below t.
    ``frontier``: reneged mass added during steps that start and end with
    ``sigma(t) > t + slack``.
    """
    mu_r = StepPath(alpha.times, mu(alpha.times) + rho)
    mv = verify_mvsp(alpha, mu_r, sol, tol=tol)
    scale = mv["scale"]
    n_sub = _subdiagonal_counts(alpha.times, alpha.grid)
    X = sol.xi.cdf
    diag = np.array([X[k, n - 1] if n else 0.0 for k, n in enumerate(n_sub)])
    if mass_tol is None:
        mass_tol = tol * scale
    sig = frontier(sol.xi, mass_tol).values
    pitch = np.min(np.diff(alpha.grid)) if alpha.grid.size > 1 else 0.0
    d_rho = np.diff(rho, prepend=0.0)
    # mass reneged during step k sat in the queue just before it, so an atom
    # that leaves in one jump is judged by the pre-step frontier
    gap = sig > alpha.times + slack_cells * pitch + 0.5 * pitch
    off = gap & np.concatenate([[gap[0]], gap[:-1]])
    frontier_res = float(np.sum(d_rho[off]))
    report = {
        "mvsp": mv,
        "diagonal": float(max(diag.max(initial=0.0), 0.0)),
        "frontier": frontier_res,
        "rho_nondecreasing": bool(np.all(np.diff(rho) >= -tol * scale)),
        "scale": scale,
        "tol": tol,
    }
    report["passed"] = bool(
        mv["passed"] and report["diagonal"] <= tol * scale
        and report["frontier"] <= tol * scale and report["rho_nondecreasing"]
    )
    return report


def _check_assumptions(alpha: MeasurePath, mu: StepPath, p: EdfPrimitives | None) -> None:
    if p is None:
        return
    T = float(alpha.times[-1])
    if p.m.inf_on(T) <= 0:
        warnings.warn("service rate touches zero on the horizon; only the basic fluid equations are certified")
    nu = _nu_measure(p.nu, alpha.grid)
    if nu.cdf(0.0) > 0:
        warnings.warn("deadline law charges zero; uniqueness of the fluid solution is not guaranteed")


def edf_fluid_solve(alpha: MeasurePath, mu: StepPath, diag_tol: float = 1e-6,
                    primitives: EdfPrimitives | None = None, certify: bool = True) -> EdfFluidSolution:
    """Minimal hard-EDF fluid solution, certified on the grid."""
    ok, where = is_monotone_path(alpha, tol=1e-12 * max(1.0, float(alpha.total.max(initial=0.0))))
    if not ok:
        raise ValueError(f"arrival path is not monotone (first violation at {where})")
    _check_assumptions(alpha, mu, primitives)
    rho = minimal_rho(alpha, mu)
    mu_r = StepPath(alpha.times, mu(alpha.times) + rho)
    sol = theta(alpha, mu_r, check=False)
    report = certify_edf(alpha, mu, rho, sol, tol=diag_tol)
    if certify and not report["passed"]:
        worst = {k: report[k] for k in ("diagonal", "frontier")}
        worst.update({k: v for k, v in report["mvsp"].items() if k.startswith("property")})
        raise FluidCertificationError(f"EDF fluid solution failed certification: {worst}")
    sigma = frontier(sol.xi, diag_tol * report["scale"])
    return EdfFluidSolution(sol, StepPath(alpha.times, rho, nondecreasing=True), sigma, report)


def minimality_probe(alpha: MeasurePath, mu: StepPath, rho, n: int = 20, seed: int = 0,
                     tol: float = 1e-6) -> dict:
    """Perturb a reneging path both ways and re-certify.

    Upward: ``rho`` plus random nondecreasing steps or ramps; these must
    break the frontier condition.  Downward: past a random time s the
    increments of ``rho`` are damped by a factor ``1 - eps``, which keeps the
    path nondecreasing but strictly smaller; these must leave mass under the
    diagonal.  A certified candidate below ``rho`` anywhere would contradict
    minimality.
    """
    rho = np.asarray(rho.values if isinstance(rho, StepPath) else rho, dtype=float)
    t = alpha.times
    rng = np.random.default_rng(seed)
    mu_t = mu(t)

    def certify(cand):
        sol = theta(alpha, StepPath(t, mu_t + cand), check=False)
        return certify_edf(alpha, mu, cand, sol, tol=tol)

    up, down = [], []
    for _ in range(n):
        bump = np.zeros_like(t)
        for _ in range(rng.integers(1, 4)):
            s, c = rng.uniform(0.0, t[-1] * 0.9), rng.uniform(0.05, 0.5)
            if rng.random() < 0.5:
                bump += c * (t >= s)
            else:
                w = rng.uniform(0.05, 0.5)
                bump += c * np.clip((t - s) / w, 0.0, 1.0)
        rep = certify(rho + bump)
        up.append({"certified": rep["passed"], "frontier": rep["frontier"],
                   "diagonal": rep["diagonal"]})
    grow = np.flatnonzero(rho[-1] - rho > 1e-3 * max(1.0, rho[-1]))
    for _ in range(n if grow.size else 0):
        k = int(rng.choice(grow))
        eps = rng.uniform(0.01, 0.5)
        cand = rho.copy()
        cand[k:] = rho[k] + (1.0 - eps) * (rho[k:] - rho[k])
        rep = certify(cand)
        down.append({"certified": rep["passed"], "diagonal": rep["diagonal"],
                     "min_gap": float(np.min(cand - rho))})
    smaller_certified = sum(d["certified"] for d in down)
    return {
        "upward": up,
        "downward": down,
        "upward_certified": sum(u["certified"] for u in up),
        "smaller_certified": smaller_certified,
        "passed": smaller_certified == 0 and not any(u["certified"] for u in up),
    }


def rho_monotonicity_check(alpha1: MeasurePath, mu1: StepPath, alpha2: MeasurePath,
                           mu2: StepPath, tol: float = 1e-6) -> dict:
    """Solve both systems and compare reneging when data are ordered.

    The precondition is that ``(alpha1[0,x] - mu1) - (alpha2[0,x] - mu2)`` is
    nonnegative and nondecreasing in t for every grid x.
    """
    if not (np.array_equal(alpha1.times, alpha2.times) and np.array_equal(alpha1.grid, alpha2.grid)):
        raise ValueError("the two systems must share grids")
    D = (alpha1.cdf - mu1(alpha1.times)[:, None]) - (alpha2.cdf - mu2(alpha2.times)[:, None])
    pre_ok = bool(np.all(D >= -tol) and np.all(np.diff(D, axis=0) >= -tol))
    r1 = minimal_rho(alpha1, mu1)
    r2 = minimal_rho(alpha2, mu2)
    gap = float(np.min(r1 - r2))
    return {"precondition": pre_ok, "min_gap": gap, "ordered": gap >= -tol,
            "rho1": r1, "rho2": r2}


def edf_soft_solve(alpha: MeasurePath, mu: StepPath, cross_check: bool = True,
                   tol: float = 1e-9) -> MvsmSolution:
    """Soft EDF is the plain map; optionally cross-check the deadline-shift route."""
    sol = theta(alpha, mu, resample=True)
    if cross_check:
        rep = deadline_shift_check(alpha, mu, sol)
        bound = tol * max(1.0, float(alpha.total.max(initial=0.0)))
        if rep["rho_max"] > bound or rep["xi_gap"] > bound:
            raise FluidCertificationError(f"deadline-shift cross-check failed: {rep}")
    return sol


def _shift_deadlines(alpha: MeasurePath, T: float) -> tuple[MeasurePath, int]:
    """Move every deadline up by ``T``; returns the path and the column offset.

    Column ``j`` of ``alpha`` becomes column ``offset + j`` of the result;
    the columns below ``T`` carry no mass.
    """
    x = alpha.grid
    low = x[x < T]
    y = np.concatenate([low, x + T])
    F = np.hstack([np.zeros((alpha.times.size, low.size)), alpha.cdf])
    init = None
    if alpha.initial is not None:
        init = np.concatenate([np.zeros(low.size), alpha.initial])
    return MeasurePath(alpha.times, y, F, init), low.size


def deadline_shift_check(alpha: MeasurePath, mu: StepPath, soft: MvsmSolution | None = None) -> dict:
    """Add the horizon to every deadline and solve the hard model.

    Nothing can renege, so the hard solution must match the soft one.
    """
    if soft is None:
        soft = theta(alpha, mu, resample=True)
    T = float(alpha.times[-1])
    shifted, offset = _shift_deadlines(alpha, T + (alpha.grid[1] - alpha.grid[0] if alpha.grid.size > 1 else 1.0))
    hard = edf_fluid_solve(shifted, mu, certify=False)
    back = hard.xi.cdf[:, offset:]
    return {
        "rho_max": float(np.max(np.abs(hard.rho.values))),
        "xi_gap": float(np.max(np.abs(back - soft.xi.cdf))),
        "iota_gap": float(np.max(np.abs(hard.iota.values - soft.iota.values))),
    }


def sjf_srpt_fluid_solve(alpha_w: MeasurePath, mu: StepPath) -> MvsmSolution:
    """Shared fluid limit of SJF and SRPT in work units."""
    return theta(alpha_w, mu, resample=True)


def count_transform(work_path: MeasurePath, y_floor: float = 0.0,
                    leak_bound: float | None = None):
    """Turn a work-by-size path into a job-count path by dividing cell mass by size.

    Cells at or below ``y_floor`` are excluded; returns ``(counts, excluded)``
    where ``excluded[k]`` is the work mass dropped at time k.
    """
    x = work_path.grid
    cells = np.diff(work_path.cdf, axis=1, prepend=0.0)
    keep = x > y_floor
    inv = np.zeros_like(x)
    inv[keep] = 1.0 / x[keep]
    counts = np.cumsum(cells * inv[None, :], axis=1)
    excluded = np.sum(cells[:, ~keep], axis=1)
    if leak_bound is not None and np.any(excluded > leak_bound):
        warnings.warn(
            f"work below size {y_floor} reaches {excluded.max():.3g}, above the bound {leak_bound}"
        )
    return MeasurePath(work_path.times, x, counts), excluded
