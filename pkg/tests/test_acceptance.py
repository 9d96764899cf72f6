"""End-to-end acceptance checks, one test (or pair of tests) per criterion.

Every test records a PASS/FAIL line through the ``acceptance`` fixture; the
lines are printed in the terminal summary.  Wall-clock limits are asserted
alongside the numerical tolerances.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from skorokhod.distributions import Distribution, PiecewiseConstant
from skorokhod.fluid import (EdfPrimitives, build_alpha_edf, build_mu, edf_fluid_solve,
                             minimality_probe, rho_monotonicity_check, uniform_grid)
from skorokhod.harness import (load_config, run_convergence, run_figure1, run_srpt_sjf_agreement)
from skorokhod.measures import FiniteMeasure
from skorokhod.mvsm import theta, theta_vs_kclass, verify_mvsp
from skorokhod.simulator import simulate, verify_exact_identities
from skorokhod.step_paths import StepPath, merge_grids, skorokhod_map

from conftest import random_monotone_alpha, random_mu

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DET1 = Distribution("deterministic", (("value", 1.0),))


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _desk(dt, T=3.0):
    p = EdfPrimitives(PiecewiseConstant.constant(2.0), DET1, PiecewiseConstant.constant(1.0))
    t = uniform_grid(T, dt)
    x = uniform_grid(T + 1.5, dt)
    return build_alpha_edf(p, t, x), build_mu(p, t)


@pytest.fixture(scope="module")
def desk_fine():
    """Desk example at dt = 1e-3, solved once for criteria 4 and 5."""
    with Clock() as c:
        alpha, mu = _desk(1e-3)
        sol = edf_fluid_solve(alpha, mu)
    return alpha, mu, sol, c.elapsed


# -- 1 ------------------------------------------------------------------------------

def test_criterion_1_scalar_map(acceptance):
    rng = np.random.default_rng(1)
    worst_ratio, violations, comp = 0.0, 0, 0.0
    with Clock() as c:
        for _ in range(1000):
            paths = []
            for _ in range(2):
                n = int(rng.integers(1, 501))
                t = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 10.0, n - 1))])
                t = np.unique(t)
                paths.append(StepPath(t, rng.normal(0.0, rng.uniform(0.1, 5.0), t.size)))
            grid = merge_grids(paths[0].breakpoints, paths[1].breakpoints)
            p1, p2 = (p(grid) for p in paths)
            phi1, eta1 = skorokhod_map(StepPath(grid, p1))
            phi2, _ = skorokhod_map(StepPath(grid, p2))
            lhs = np.max(np.abs(phi2.values - phi1.values))
            rhs = 2.0 * np.max(np.abs(p2 - p1))
            if lhs > rhs + 1e-12:
                violations += 1
            if rhs > 0:
                worst_ratio = max(worst_ratio, lhs / rhs)
            comp = max(comp, abs(float(np.sum(phi1.values * np.diff(eta1.values, prepend=0.0)))))
    ok = violations == 0 and comp == 0.0 and c.elapsed < 5.0
    acceptance("1", ok, f"Lipschitz violations {violations}, worst ratio {worst_ratio:.3f}/2, "
                        f"complementarity {comp:g}, {c.elapsed:.2f}s")
    assert violations == 0 and comp == 0.0
    assert c.elapsed < 5.0


# -- 2 ------------------------------------------------------------------------------

def test_criterion_2_kclass_oracle(acceptance):
    rng = np.random.default_rng(2)
    worst = 0.0
    with Clock() as c:
        for i in range(200):
            K = 1 + i % 8
            alpha = random_monotone_alpha(rng, n_x=K)
            worst = max(worst, theta_vs_kclass(alpha, random_mu(rng, alpha.times)))
    ok = worst <= 1e-9 and c.elapsed < 10.0
    acceptance("2", ok, f"max |xi - X| = {worst:.2e}, {c.elapsed:.2f}s")
    assert worst <= 1e-9
    assert c.elapsed < 10.0


# -- 3 ------------------------------------------------------------------------------

def test_criterion_3_mvsp_certification(acceptance):
    rng = np.random.default_rng(3)
    worst, failures, atoms = 0.0, 0, 0
    keys = ("property_1", "property_2", "property_3", "property_4", "balance", "xi_negative_part")
    with Clock() as c:
        for _ in range(100):
            alpha = random_monotone_alpha(rng, zero_atom=True)
            atoms += bool(alpha.cdf[-1, 0] > 0)
            mu = random_mu(rng, alpha.times)
            rep = verify_mvsp(alpha, mu, theta(alpha, mu), tol=1e-9)
            failures += not rep["passed"]
            worst = max(worst, max(rep[k] for k in keys) / rep["scale"])
    ok = failures == 0 and c.elapsed < 30.0
    acceptance("3", ok, f"{failures} failures, worst residual/scale {worst:.2e}, "
                        f"{atoms} inputs with an x=0 atom, {c.elapsed:.2f}s")
    assert failures == 0 and atoms > 0
    assert c.elapsed < 30.0


# -- 4 ------------------------------------------------------------------------------

def _desk_errors(alpha, sol):
    t = alpha.times
    return (float(np.max(np.abs(sol.rho.values - np.maximum(t - 2.0, 0.0)))),
            float(np.max(np.abs(sol.xi.total - np.minimum(t, 2.0)))))


@pytest.mark.slow
def test_criterion_4_desk_example(acceptance, desk_fine):
    with Clock() as c:
        alpha, mu = _desk(1e-2)
        coarse = _desk_errors(alpha, edf_fluid_solve(alpha, mu))
    alpha_f, _, sol_f, t_fine = desk_fine
    fine = _desk_errors(alpha_f, sol_f)
    elapsed = c.elapsed + t_fine
    within = coarse[0] <= 5e-2 and coarse[1] <= 5e-2 and fine[0] <= 5e-3 and fine[1] <= 5e-3
    # at least linear: a tenfold finer grid at least tenfold smaller error
    linear = all(f <= 0.1 * g + 1e-12 for f, g in zip(fine, coarse))
    ok = within and linear and elapsed < 60.0
    acceptance("4", ok, f"rho err {coarse[0]:.2e} -> {fine[0]:.2e}, "
                        f"mass err {coarse[1]:.2e} -> {fine[1]:.2e}, {elapsed:.1f}s")
    assert within and linear
    assert elapsed < 60.0


# -- 5 ------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_5_certification_and_minimality(acceptance, desk_fine):
    alpha, mu, sol, t_solve = desk_fine
    rep = sol.report
    keys = ("property_1", "property_2", "property_3", "property_4", "balance")
    worst = max([rep["diagonal"], rep["frontier"]] + [rep["mvsp"][k] for k in keys])
    with Clock() as c:
        probe = minimality_probe(alpha, mu, sol.rho, n=20, seed=5)
    elapsed = t_solve + c.elapsed
    ok = rep["passed"] and worst <= 1e-6 and probe["passed"] and elapsed < 120.0
    acceptance("5", ok, f"worst residual {worst:.2e}, {len(probe['upward'])} upward / "
                        f"{len(probe['downward'])} downward candidates, "
                        f"{probe['upward_certified'] + probe['smaller_certified']} certified, "
                        f"{elapsed:.1f}s")
    assert rep["passed"] and worst <= 1e-6
    assert len(probe["upward"]) == 20 and probe["passed"]
    assert elapsed < 120.0


# -- 6 ------------------------------------------------------------------------------

def _ordered_pair(rng, dt=0.05, T=3.0):
    """Same deadlines and initial state; system 1 gets more arrivals and less service."""
    n = int(rng.integers(1, 4))
    nu = Distribution("empirical", (("values", tuple(np.round(rng.uniform(0.2, 2.0, n), 1))),
                                    ("weights", tuple(rng.uniform(0.2, 1.0, n)))))
    breaks = (0.0, float(np.round(rng.uniform(0.5, 2.5), 1)))
    lam2 = rng.uniform(0.0, 3.0, 2)
    lam1 = lam2 + rng.uniform(0.0, 2.0, 2) * (rng.random(2) < 0.8)
    m2 = rng.uniform(0.5, 3.0, 2)
    m1 = m2 * rng.uniform(0.5, 1.0, 2)
    init = FiniteMeasure(np.round(rng.uniform(0.3, 3.0, 2), 1), rng.uniform(0.0, 1.0, 2))
    t = uniform_grid(T, dt)
    x = uniform_grid(T + 2.5, dt)
    out = []
    for lam, m in ((lam1, m1), (lam2, m2)):
        p = EdfPrimitives(PiecewiseConstant(breaks, tuple(lam)), nu,
                          PiecewiseConstant(breaks, tuple(m)), xi0minus=init)
        out += [build_alpha_edf(p, t, x), build_mu(p, t)]
    return out


def test_criterion_6_rho_monotone_in_data(acceptance):
    rng = np.random.default_rng(6)
    violations, worst, pre = 0, np.inf, 0
    for _ in range(20):
        a1, m1, a2, m2 = _ordered_pair(rng)
        r = rho_monotonicity_check(a1, m1, a2, m2, tol=1e-6)
        pre += r["precondition"]
        violations += not r["ordered"]
        worst = min(worst, r["min_gap"])
    ok = violations == 0 and pre == 20
    acceptance("6", ok, f"{violations} violations over 20 pairs, min(rho1 - rho2) = {worst:.2e}")
    assert pre == 20
    assert violations == 0


# -- 7 ------------------------------------------------------------------------------

def test_criterion_7_exact_identities(acceptance):
    wanted = {"edf_desk": ("qmeasN", "eq69", "eq40", "stoch_IDSMrel"),
              "sjf_two_size": ("eq80", "eq81", "eq90")}
    failures, worst, runs = [], 0.0, 0
    with Clock() as c:
        for name, keys in wanted.items():
            cfg = load_config(CONFIGS / f"{name}.toml")
            for seed in range(10):
                rep = verify_exact_identities(simulate(cfg.sim_config(50, seed)), tol=1e-9)
                runs += 1
                assert set(keys) <= set(rep["checked"])
                if not rep["passed"]:
                    failures.append((name, seed))
                worst = max(worst, max(rep[k] for k in rep["checked"]) / 50)
    ok = not failures and c.elapsed < 120.0
    acceptance("7", ok, f"{runs} runs, {len(failures)} failures, worst residual/N {worst:.2e}, "
                        f"{c.elapsed:.1f}s")
    assert not failures
    assert c.elapsed < 120.0


# -- 8 ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def convergence_reports():
    reports, elapsed = {}, {}
    for name in ("edf_desk", "sjf_two_size", "srpt_two_size"):
        with Clock() as c:
            reports[name] = run_convergence(load_config(CONFIGS / f"{name}.toml"))
        elapsed[name] = c.elapsed
    return reports, elapsed


@pytest.mark.slow
def test_criterion_8_medians_nonincreasing(acceptance, convergence_reports):
    reports, elapsed = convergence_reports
    need = {"edf_desk": ("xi_levy", "rho_sup", "e_sup"),
            "sjf_two_size": ("xi_levy",), "srpt_two_size": ("xi_levy",)}
    bad = []
    parts = []
    for name, keys in need.items():
        rep = reports[name]
        assert rep["N_list"] == [20, 80, 320] and rep["replications"] == 10
        for k in keys:
            g = rep["gates"][f"{k}_nonincreasing"]
            if not g["passed"]:
                bad.append(f"{name}:{k}")
            parts.append(f"{name} {k} " + "/".join(f"{v:.3g}" for v in g["medians"]))
        if not rep["gates"]["exact_identities"]["passed"]:
            bad.append(f"{name}:identities")
    total = sum(elapsed.values())
    ok = not bad and total < 600.0
    acceptance("8", ok, "medians nonincreasing " + ("ok" if not bad else f"FAILED {bad}")
               + f" ({'; '.join(parts)}), {total:.0f}s")
    assert not bad
    assert total < 600.0


@pytest.mark.slow
def test_criterion_8_error_term_below_bound(acceptance, convergence_reports):
    reports, _ = convergence_reports
    e = reports["edf_desk"]["metrics"]["e_sup"]["320"]
    ok = e["median"] < 0.1
    acceptance("8", ok, f"median sup|e|/N at N=320 = {e['median']:.4f} "
                        f"(q10 {e['q10']:.4f}, q90 {e['q90']:.4f}), bound 0.1")
    assert e["median"] < 0.1


# -- 9 ------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_srpt_sjf_agreement(acceptance):
    cfg = load_config(CONFIGS / "sjf_two_size.toml")
    with Clock() as c:
        rep = run_srpt_sjf_agreement(cfg)
    g = rep["gates"]["gap_levy_nonincreasing"]
    ok = g["passed"] and c.elapsed < 600.0
    acceptance("9", ok, "gap medians " + "/".join(f"{v:.3g}" for v in g["medians"])
               + f" over N={rep['N_list']}, {c.elapsed:.0f}s")
    assert rep["N_list"] == [20, 80, 320]
    assert g["passed"]
    assert c.elapsed < 600.0


# -- 10 -----------------------------------------------------------------------------

def test_criterion_10_soft_hard_equivalence(acceptance):
    cfg = load_config(CONFIGS / "edf_desk.toml")
    mismatches = 0
    for seed in range(5):
        base = cfg.sim_config(50, seed)
        soft = simulate(base.replace(policy="edf_soft"))
        shift = base.horizon + 1.0
        hard = simulate(base.replace(policy="edf_hard", deadline_shift=shift))
        same = bool(np.all(hard.records["rho"] == 0))
        # unadmitted jobs carry NaN effort in both traces
        same &= all(np.array_equal(v, hard.jobs[k], equal_nan=True)
                    for k, v in soft.jobs.items() if k != "mark")
        same &= np.array_equal(soft.jobs["mark"] + shift, hard.jobs["mark"])
        same &= soft.records.keys() == hard.records.keys() and all(
            np.array_equal(v, hard.records[k]) for k, v in soft.records.items())
        mismatches += not same
    acceptance("10", mismatches == 0, f"{5 - mismatches}/5 seeds identical, rho == 0")
    assert mismatches == 0


# -- 11 -----------------------------------------------------------------------------

def test_criterion_11_figure1(acceptance, tmp_path):
    rep = run_figure1(tmp_path, seed=0)
    csvs = sorted(tmp_path.glob("figure1_t*.csv"))
    ok = len(csvs) == 3 and rep["passed"] and (tmp_path / "figure1.svg").exists()
    bands = ", ".join(f"t={s['t']:g}: {s['overlap_sent_jobs']} sent jobs in overlap"
                      for s in rep["epochs"])
    acceptance("11", ok, f"{len(csvs)} CSVs + SVG written (non-gating visual check; {bands})")
    assert len(csvs) == 3
    for p in csvs:
        assert p.read_text().startswith("lead_lo,lead_hi,queued,sent_to_service\n")
    assert rep["passed"]
