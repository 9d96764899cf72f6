"""Experiment configs, fluid/stochastic sweeps and JSON/CSV reports.

Config files are TOML.  A minimal EDF experiment::

    [experiment]
    name = "edf_desk"
    policy = "edf_hard"
    horizon = 3.0
    N_list = [20, 80, 320]
    replications = 10
    seed = 0

    [grid]
    dt = 0.01
    dx = 0.01

    [model]
    m = 1.0
    service = {kind = "exponential", rate = 1.0}

    [[model.arrivals]]
    rate = 2.0
    mark = {kind = "deterministic", value = 1.0}

See the README for the full schema.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import (Distribution, PiecewiseConstant, distribution_from_spec,
                            rate_from_spec)
from .fluid import (EdfPrimitives, build_alpha_edf, build_alpha_work, edf_fluid_solve,
                    edf_soft_solve, sjf_srpt_fluid_solve, uniform_grid)
from .measures import FiniteMeasure, MeasurePath, levy_distance
from .simulator import (POLICIES, ArrivalStream, SimConfig, SimTrace, simulate,
                        verify_exact_identities)
from .step_paths import StepPath

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "OUT_ENV",
    "load_config",
    "config_from_dict",
    "output_dir",
    "solve_fluid",
    "run_convergence",
    "run_srpt_sjf_agreement",
    "run_figure1",
    "write_report",
    "derive_seed",
]

OUT_ENV = "SKOROKHOD_OUT"
REPORT_SCHEMA = "skorokhod-report/1"


class ConfigError(ValueError):
    """Malformed config; the message starts with the offending field path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    policy: str
    horizon: float
    arrivals: tuple = ()
    service: Distribution = field(default_factory=lambda: distribution_from_spec(1.0))
    m: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(1.0))
    mu0: StepPath = field(default_factory=lambda: StepPath.constant(0.0))
    initial: FiniteMeasure = field(default_factory=FiniteMeasure.zero)
    N_list: tuple = (20, 80, 320)
    replications: int = 10
    seed: int = 0
    dt: float = 0.01
    dx: float = 0.01
    x_max: float | None = None
    metric_dt: float | None = None
    tol_identity: float = 1e-9
    tol_certify: float = 1e-6
    slack: float = 1.25
    e_bound: float | None = None
    identity_columns: int = 256
    out: str | None = None

    @property
    def is_edf(self) -> bool:
        return self.policy.startswith("edf")

    def sim_config(self, N: int, seed: int, policy: str | None = None) -> SimConfig:
        return SimConfig(N=N, policy=policy or self.policy, horizon=self.horizon,
                         arrivals=self.arrivals, service=self.service, m=self.m,
                         mu0=self.mu0, initial=self.initial, seed=seed)

    def replace(self, **kw) -> "ExperimentConfig":
        from dataclasses import replace
        return replace(self, **kw)


def derive_seed(base: int, N: int, rep: int) -> int:
    """Independent 63-bit seed per (base, N, replication)."""
    ss = np.random.SeedSequence([int(base), int(N), int(rep)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# -- config parsing -----------------------------------------------------------

def _section(d: dict, key: str, path: str) -> dict:
    v = d.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(f"{path}{key}", "expected a table")
    return v


def _num(d: dict, key: str, path: str, default=None, positive=False, integer=False):
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}{key}", "required field is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{path}{key}", f"expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}{key}", f"must be positive, got {v!r}")
    return int(v) if integer else float(v)


def _wrap(path: str, fn, spec):
    try:
        return fn(spec)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from None


def config_from_dict(d: dict) -> ExperimentConfig:
    """Validate a parsed config mapping; errors name the offending field."""
    exp = _section(d, "experiment", "")
    grid = _section(d, "grid", "")
    model = _section(d, "model", "")
    tol = _section(d, "tolerances", "")

    policy = exp.get("policy")
    if policy not in POLICIES:
        raise ConfigError("experiment.policy", f"must be one of {list(POLICIES)}, got {policy!r}")
    name = str(exp.get("name", "experiment"))
    horizon = _num(exp, "horizon", "experiment.", positive=True)

    N_list = exp.get("N_list", [20, 80, 320])
    if (not isinstance(N_list, list) or not N_list
            or any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in N_list)):
        raise ConfigError("experiment.N_list", "expected a nonempty list of positive integers")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ConfigError("experiment.N_list", "must be strictly increasing")
    reps = _num(exp, "replications", "experiment.", default=10, positive=True, integer=True)
    seed = _num(exp, "seed", "experiment.", default=0, integer=True)

    dt = _num(grid, "dt", "grid.", default=0.01, positive=True)
    dx = _num(grid, "dx", "grid.", default=0.01, positive=True)
    x_max = _num(grid, "x_max", "grid.", positive=True) if "x_max" in grid else None
    metric_dt = _num(grid, "metric_dt", "grid.", positive=True) if "metric_dt" in grid else None
    if metric_dt is not None and metric_dt < dt:
        raise ConfigError("grid.metric_dt", "must be at least grid.dt")

    arrivals = []
    raw = model.get("arrivals", [])
    if not isinstance(raw, list):
        raise ConfigError("model.arrivals", "expected an array of tables")
    for i, a in enumerate(raw):
        p = f"model.arrivals[{i}]"
        if not isinstance(a, dict):
            raise ConfigError(p, "expected a table")
        if "rate" not in a:
            raise ConfigError(f"{p}.rate", "required field is missing")
        if "mark" not in a:
            raise ConfigError(f"{p}.mark", "required field is missing")
        rate = _wrap(f"{p}.rate", rate_from_spec, a["rate"])
        mark = _wrap(f"{p}.mark", distribution_from_spec, a["mark"])
        arrivals.append(ArrivalStream(rate, mark))

    service = _wrap("model.service", distribution_from_spec, model.get("service", 1.0))
    if service.kind not in ("deterministic", "exponential", "lognormal", "empirical"):
        raise ConfigError("model.service", f"service law kind {service.kind!r} is not supported")
    if abs(service.mean() - 1.0) > 1e-9:
        raise ConfigError("model.service", f"inter-renewal law must have mean 1, got {service.mean()}")
    m = _wrap("model.m", rate_from_spec, model.get("m", 1.0))

    mu0 = StepPath.constant(0.0)
    if "mu0" in model:
        spec = model["mu0"]
        def _mu0(s):
            return StepPath(np.asarray(s["times"], float), np.asarray(s["values"], float), 0.0,
                            nondecreasing=True)
        mu0 = _wrap("model.mu0", _mu0, spec)
        if np.any(np.diff(np.concatenate([[0.0], mu0.values])) < 0):
            raise ConfigError("model.mu0", "must be nonnegative and nondecreasing")

    initial = FiniteMeasure.zero()
    if "initial" in model:
        initial = _wrap("model.initial",
                        lambda s: FiniteMeasure(s["locations"], s["weights"]), model["initial"])

    e_bound = _num(tol, "e_bound", "tolerances.", positive=True) if "e_bound" in tol else None
    return ExperimentConfig(
        name=name, policy=policy, horizon=horizon, arrivals=tuple(arrivals),
        service=service, m=m, mu0=mu0, initial=initial, N_list=tuple(N_list),
        replications=reps, seed=seed, dt=dt, dx=dx, x_max=x_max, metric_dt=metric_dt,
        tol_identity=_num(tol, "identity", "tolerances.", default=1e-9, positive=True),
        tol_certify=_num(tol, "certify", "tolerances.", default=1e-6, positive=True),
        slack=_num(tol, "slack", "tolerances.", default=1.25, positive=True),
        e_bound=e_bound,
        identity_columns=_num(tol, "identity_columns", "tolerances.", default=256,
                              positive=True, integer=True),
        out=exp.get("out"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            d = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"not valid TOML ({exc})") from None
    return config_from_dict(d)


def output_dir(cfg: ExperimentConfig | None, override=None, name: str = "run") -> Path:
    """``--out`` first, then the config's ``out``, then ``$SKOROKHOD_OUT/<name>``, then ``out/<name>``."""
    if override:
        p = Path(override)
    elif cfg is not None and cfg.out:
        p = Path(cfg.out)
    else:
        base = os.environ.get(OUT_ENV, "out")
        p = Path(base) / (cfg.name if cfg is not None else name)
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- fluid side ---------------------------------------------------------------

def _x_max(cfg: ExperimentConfig) -> float:
    if cfg.x_max is not None:
        return cfg.x_max
    hi = float(cfg.initial.locations.max()) if cfg.initial.locations.size else 0.0
    for s in cfg.arrivals:
        top = s.mark.support()[1]
        if not math.isfinite(top):
            raise ConfigError("grid.x_max", "required when a mark law is unbounded")
        hi = max(hi, top + (cfg.horizon if cfg.is_edf else 0.0))
    return max(hi, cfg.dx)


def fluid_grids(cfg: ExperimentConfig):
    t = uniform_grid(cfg.horizon, cfg.dt)
    x_top = _x_max(cfg)
    x = uniform_grid(math.ceil(x_top / cfg.dx) * cfg.dx, cfg.dx)
    return t, x


def _mu_path(cfg: ExperimentConfig, t) -> StepPath:
    return StepPath(t, cfg.mu0(t) + cfg.m.integral(t), 0.0, nondecreasing=True)


def fluid_alpha(cfg: ExperimentConfig, t, x) -> MeasurePath:
    zero_rate = PiecewiseConstant.constant(0.0)
    if cfg.is_edf:
        alpha = build_alpha_edf(EdfPrimitives(zero_rate, FiniteMeasure.dirac(0.0), cfg.m,
                                              cfg.mu0, cfg.initial), t, x)
        for s in cfg.arrivals:
            alpha = alpha + build_alpha_edf(EdfPrimitives(s.rate, s.mark, cfg.m, cfg.mu0), t, x)
        return alpha
    alpha = build_alpha_work(zero_rate, distribution_from_spec(1.0), t, x, cfg.initial)
    for s in cfg.arrivals:
        alpha = alpha + build_alpha_work(s.rate, s.mark, t, x)
    return alpha


@dataclass(frozen=True)
class FluidResult:
    alpha: MeasurePath
    mu: StepPath
    xi: MeasurePath
    beta: MeasurePath
    iota: StepPath
    rho: StepPath
    report: dict


def solve_fluid(cfg: ExperimentConfig, tol: float | None = None) -> FluidResult:
    """Solve the fluid model of the config's policy on its grids.

    Hard EDF raises ``FluidCertificationError`` if certification fails.
    """
    t, x = fluid_grids(cfg)
    alpha = fluid_alpha(cfg, t, x)
    mu = _mu_path(cfg, t)
    tol = cfg.tol_certify if tol is None else tol
    zero = StepPath(t, np.zeros(t.size))
    if cfg.policy == "edf_hard":
        prim = None
        if len(cfg.arrivals) == 1:
            s = cfg.arrivals[0]
            prim = EdfPrimitives(s.rate, s.mark, cfg.m, cfg.mu0, cfg.initial)
        sol = edf_fluid_solve(alpha, mu, diag_tol=tol, primitives=prim)
        rep = sol.report
        report = {
            "passed": bool(rep["passed"]),
            "diagonal": float(rep["diagonal"]),
            "frontier": float(rep["frontier"]),
            "rho_nondecreasing": bool(rep["rho_nondecreasing"]),
            "mvsp": {k: float(v) if not isinstance(v, bool) else v
                     for k, v in rep["mvsp"].items()},
            "tol": tol,
        }
        return FluidResult(alpha, mu, sol.xi, sol.beta, sol.iota, sol.rho, report)
    sol = edf_soft_solve(alpha, mu) if cfg.policy == "edf_soft" else sjf_srpt_fluid_solve(alpha, mu)
    from .mvsm import verify_mvsp
    mv = verify_mvsp(alpha, mu, sol, tol=tol)
    report = {"passed": bool(mv["passed"]),
              "mvsp": {k: float(v) if not isinstance(v, bool) else v for k, v in mv.items()},
              "tol": tol}
    return FluidResult(alpha, mu, sol.xi, sol.beta, sol.iota, zero, report)


# -- metrics --------------------------------------------------------------------

def _metric_rows(cfg: ExperimentConfig, t_grid: np.ndarray) -> np.ndarray:
    stride = 1 if cfg.metric_dt is None else max(1, int(round(cfg.metric_dt / cfg.dt)))
    rows = np.arange(0, t_grid.size, stride)
    if rows[-1] != t_grid.size - 1:
        rows = np.append(rows, t_grid.size - 1)
    return rows


def _levy_sup_vs_fluid(trace: SimTrace, which: str, path: MeasurePath, rows) -> float:
    N = trace.config.N
    worst = 0.0
    for k in rows:
        sim = trace.state_at(which, float(path.times[k]), scale=1.0 / N)
        fl = FiniteMeasure.from_cdf(path.grid, path.cdf[k])
        worst = max(worst, levy_distance(sim, fl, tol=1e-7))
    return worst


def _levy_sup_pair(a: SimTrace, b: SimTrace, which: str, times) -> float:
    worst = 0.0
    for t in times:
        worst = max(worst, levy_distance(a.state_at(which, float(t), scale=1.0 / a.config.N),
                                         b.state_at(which, float(t), scale=1.0 / b.config.N),
                                         tol=1e-7))
    return worst


def run_metrics(trace: SimTrace, fluid: FluidResult, rows) -> dict:
    N = trace.config.N
    t = fluid.xi.times[rows]
    out = {
        "xi_levy": _levy_sup_vs_fluid(trace, "xi", fluid.xi, rows),
        "beta_levy": _levy_sup_vs_fluid(trace, "beta", fluid.beta, rows),
        "iota_sup": float(np.max(np.abs(trace.scalar_at_times("iota", t) / N - fluid.iota.values[rows]))),
    }
    if trace.config.is_edf:
        out["rho_sup"] = float(np.max(np.abs(trace.scalar_at_times("rho", t) / N - fluid.rho.values[rows])))
        # sup over the exact record sequence, not the metric grid
        out["e_sup"] = float(np.max(np.abs(trace.e))) / N
    return out


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {
        "median": float(np.median(v)),
        "q10": float(np.quantile(v, 0.1)),
        "q90": float(np.quantile(v, 0.9)),
        "values": [float(x) for x in v],
    }


def _nonincreasing_gate(medians: list, slack: float) -> dict:
    bad = [i for i in range(1, len(medians)) if medians[i] > slack * medians[i - 1]]
    return {"passed": not bad, "medians": medians, "slack": slack,
            "violations": [[i - 1, i] for i in bad]}


def _identity_summary(results: list) -> dict:
    worst = max((r["worst_over_bound"] for r in results), default=0.0)
    return {"all_passed": all(r["passed"] for r in results),
            "worst_residual_over_bound": worst,
            "runs": len(results)}


def _identity_entry(trace: SimTrace, cfg: ExperimentConfig) -> dict:
    rep = verify_exact_identities(trace, tol=cfg.tol_identity, max_columns=cfg.identity_columns)
    worst = max((rep[k] / rep["bound"] for k in rep["checked"]), default=0.0)
    return {"passed": rep["passed"], "worst_over_bound": float(worst),
            "residuals": {k: rep[k] for k in rep["checked"]}}


def run_convergence(cfg: ExperimentConfig, fluid: FluidResult | None = None,
                    progress=None) -> dict:
    """Fluid solve once, then simulate every (N, replication) and compare.

    Gates: the median of every metric is nonincreasing along ``N_list``
    within ``slack``; every run satisfies the exact identities; optionally
    the median ``sup|e|`` at the largest N is below ``e_bound``.
    """
    fluid = solve_fluid(cfg) if fluid is None else fluid
    rows = _metric_rows(cfg, fluid.xi.times)
    metrics: dict = {}
    identities = []
    seeds = {}
    for N in cfg.N_list:
        seeds[str(N)] = [derive_seed(cfg.seed, N, r) for r in range(cfg.replications)]
        per_run = []
        for s in seeds[str(N)]:
            trace = simulate(cfg.sim_config(N, s))
            per_run.append(run_metrics(trace, fluid, rows))
            identities.append(_identity_entry(trace, cfg))
            if progress:
                progress(N, s)
        for key in per_run[0]:
            metrics.setdefault(key, {})[str(N)] = _summary([r[key] for r in per_run])

    gates = {}
    for key, byN in metrics.items():
        gates[f"{key}_nonincreasing"] = _nonincreasing_gate(
            [byN[str(N)]["median"] for N in cfg.N_list], cfg.slack)
    ident = _identity_summary(identities)
    gates["exact_identities"] = {"passed": ident["all_passed"],
                                 "worst_residual_over_bound": ident["worst_residual_over_bound"]}
    gates["fluid_certified"] = {"passed": bool(fluid.report["passed"])}
    if cfg.e_bound is not None and "e_sup" in metrics:
        med = metrics["e_sup"][str(cfg.N_list[-1])]["median"]
        gates["e_sup_below_bound"] = {"passed": med < cfg.e_bound, "median": med,
                                      "bound": cfg.e_bound, "N": cfg.N_list[-1]}
    return {
        "schema": REPORT_SCHEMA,
        "kind": "convergence",
        "experiment": cfg.name,
        "policy": cfg.policy,
        "horizon": cfg.horizon,
        "N_list": list(cfg.N_list),
        "replications": cfg.replications,
        "seeds": seeds,
        "fluid": fluid.report,
        "metrics": metrics,
        "identities": ident,
        "gates": gates,
        "passed": all(g["passed"] for g in gates.values()),
    }


def run_srpt_sjf_agreement(cfg: ExperimentConfig, fluid: FluidResult | None = None,
                           progress=None) -> dict:
    """Paired SJF/SRPT runs on identical arrival streams.

    Gates: median of ``sup_t d_L`` between the two scaled workload measures
    nonincreasing in N, and each policy's distance to the shared fluid
    limit nonincreasing in N.
    """
    if cfg.is_edf:
        raise ConfigError("experiment.policy", "agreement runs need a size-based policy (sjf or srpt)")
    cfg_sjf = cfg.replace(policy="sjf")
    fluid = solve_fluid(cfg_sjf) if fluid is None else fluid
    rows = _metric_rows(cfg, fluid.xi.times)
    times = fluid.xi.times[rows]
    metrics: dict = {"gap_levy": {}, "sjf_xi_levy": {}, "srpt_xi_levy": {}}
    seeds = {}
    for N in cfg.N_list:
        seeds[str(N)] = [derive_seed(cfg.seed, N, r) for r in range(cfg.replications)]
        gap, d_sjf, d_srpt = [], [], []
        for s in seeds[str(N)]:
            a = simulate(cfg.sim_config(N, s, "sjf"))
            b = simulate(cfg.sim_config(N, s, "srpt"))
            gap.append(_levy_sup_pair(b, a, "xi", times))
            d_sjf.append(_levy_sup_vs_fluid(a, "xi", fluid.xi, rows))
            d_srpt.append(_levy_sup_vs_fluid(b, "xi", fluid.xi, rows))
            if progress:
                progress(N, s)
        metrics["gap_levy"][str(N)] = _summary(gap)
        metrics["sjf_xi_levy"][str(N)] = _summary(d_sjf)
        metrics["srpt_xi_levy"][str(N)] = _summary(d_srpt)
    gates = {f"{k}_nonincreasing": _nonincreasing_gate([v[str(N)]["median"] for N in cfg.N_list],
                                                       cfg.slack)
             for k, v in metrics.items()}
    return {
        "schema": REPORT_SCHEMA,
        "kind": "agreement",
        "experiment": cfg.name,
        "horizon": cfg.horizon,
        "N_list": list(cfg.N_list),
        "replications": cfg.replications,
        "seeds": seeds,
        "fluid": fluid.report,
        "metrics": metrics,
        "gates": gates,
        "passed": all(g["passed"] for g in gates.values()),
    }


# -- Figure 1 preset ----------------------------------------------------------

FIGURE1_PERIOD = 400.0


def figure1_config(seed: int = 0, horizon: float = 1200.0) -> SimConfig:
    """Hard EDF with the periodic two-regime arrival pattern.

    Regime A (first half of each period): rate 100, lead times U[50, 299].
    Regime B (second half): rate 50, lead times U[600, 849].
    Unit-effort jobs served at 60 per unit time.
    """
    half = FIGURE1_PERIOD / 2
    a = ArrivalStream(PiecewiseConstant((0.0, half), (100.0, 0.0), FIGURE1_PERIOD),
                      distribution_from_spec({"kind": "uniform", "low": 50.0, "high": 299.0}))
    b = ArrivalStream(PiecewiseConstant((0.0, half), (0.0, 50.0), FIGURE1_PERIOD),
                      distribution_from_spec({"kind": "uniform", "low": 600.0, "high": 849.0}))
    return SimConfig(N=1, policy="edf_hard", horizon=horizon, arrivals=(a, b),
                     service=distribution_from_spec(1.0), m=PiecewiseConstant.constant(60.0),
                     seed=seed)


FIGURE1_EPOCHS = (825.0, 950.0, 1100.0)


def figure1_histograms(trace: SimTrace, t: float, bin_width: float = 10.0, lead_max: float = 850.0):
    """Lead-time histograms of queued jobs and of jobs already sent to service.

    Queued: arrived, not admitted, not reneged at ``t``.  Sent: admitted by
    ``t`` with deadline still ahead (lead time > 0).
    """
    J = trace.jobs
    lead = J["mark"] - t
    queued = (J["arrival"] <= t) & (J["admit"] > t) & (J["renege"] > t)
    sent = (J["admit"] <= t) & (lead > 0)
    edges = np.arange(0.0, lead_max + bin_width, bin_width)
    hq, _ = np.histogram(lead[queued], bins=edges)
    hs, _ = np.histogram(lead[sent], bins=edges)
    lq, ls = lead[queued], lead[sent]
    overlap = 0.0
    if lq.size and ls.size:
        overlap = max(0.0, float(ls.max() - lq.min()))
    summary = {
        "t": t,
        "queued": int(queued.sum()),
        "sent_to_service": int(sent.sum()),
        "queued_total_matches_xi": int(queued.sum()) == int(trace.state_at("xi", t).total_mass),
        "queued_lead_range": [float(lq.min()), float(lq.max())] if lq.size else None,
        "sent_lead_range": [float(ls.min()), float(ls.max())] if ls.size else None,
        "overlap_band": overlap,
        "overlap_sent_jobs": int(np.sum(ls > lq.min())) if lq.size else 0,
    }
    return edges, hq, hs, summary


def run_figure1(out: Path, seed: int = 0, epochs=FIGURE1_EPOCHS, horizon: float = 1200.0,
                render: bool = True) -> dict:
    """Simulate the preset and write one histogram CSV per epoch (non-gating)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    trace = simulate(figure1_config(seed, horizon))
    files, summaries, hists = [], [], []
    for t in epochs:
        edges, hq, hs, summ = figure1_histograms(trace, t)
        path = out / f"figure1_t{t:g}.csv"
        with open(path, "w") as fh:
            fh.write("lead_lo,lead_hi,queued,sent_to_service\n")
            for lo, hi, q, s in zip(edges[:-1], edges[1:], hq, hs):
                fh.write(f"{lo:g},{hi:g},{int(q)},{int(s)}\n")
        files.append(path.name)
        summaries.append(summ)
        hists.append((edges, hq, hs, t))
    figures = []
    if render:
        from .plotting import plot_figure1
        figures.append(plot_figure1(hists, out / "figure1.svg").name)
    return {
        "schema": REPORT_SCHEMA,
        "kind": "figure1",
        "seed": seed,
        "horizon": horizon,
        "jobs": trace.n_jobs,
        "epochs": summaries,
        "csv": files,
        "figures": figures,
        "gates": {"bookkeeping": {"passed": all(s["queued_total_matches_xi"] for s in summaries)}},
        "passed": all(s["queued_total_matches_xi"] for s in summaries),
    }


def write_report(report: dict, path) -> Path:
    """JSON with sorted keys, so identical runs give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")
