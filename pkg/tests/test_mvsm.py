import numpy as np
import pytest
from hypothesis import given, strategies as st

from skorokhod.measures import MeasurePath, is_monotone_path
from skorokhod.mvsm import (MvsmSolution, kclass_solve, theta, theta_lifo, theta_vs_kclass,
                            verify_mvsp)
from skorokhod.step_paths import StepPath

from conftest import random_monotone_alpha, random_mu

seeds = st.integers(0, 2**32 - 1)


def _greedy_oracle(alpha, mu_vals, lowest_first=True):
    """Step-by-step fluid priority queue: add arrivals, then spend the effort increment
    on the cells in priority order. Returns queue CDFs and cumulative idle effort."""
    cells_in = np.diff(alpha.cdf, axis=1, prepend=0.0)
    arr = np.diff(cells_in, axis=0, prepend=np.zeros((1, cells_in.shape[1])))
    dm = np.diff(mu_vals, prepend=0.0)
    q = np.zeros(cells_in.shape[1])
    order = range(q.size) if lowest_first else range(q.size - 1, -1, -1)
    out, idle, I = [], [], 0.0
    for k in range(arr.shape[0]):
        q = q + arr[k]
        left = dm[k]
        for j in order:
            take = min(q[j], left)
            q[j] -= take
            left -= take
        I += left
        out.append(np.cumsum(q))
        idle.append(I)
    return np.array(out), np.array(idle)


def _setup(seed, **kw):
    rng = np.random.default_rng(seed)
    alpha = random_monotone_alpha(rng, **kw)
    return alpha, random_mu(rng, alpha.times)


# -- examples ---------------------------------------------------------------------

def test_two_point_example():
    t = np.arange(5.0)
    grid = np.array([0.0, 1.0, 2.0])
    # unit arrivals at x=2 per step, one unit at x=1 at time 1; effort 1 per step
    cells = np.zeros((5, 3))
    cells[:, 2] = t + 1
    cells[1:, 1] = 1.0
    alpha = MeasurePath(t, grid, np.cumsum(cells, axis=1), np.zeros(3))
    mu = StepPath(t, t + 1, 0.0, nondecreasing=True)
    sol = theta(alpha, mu)
    # x=1 mass is served first at time 1, so one x=2 unit waits from then on
    np.testing.assert_allclose(sol.xi.total, [0, 1, 1, 1, 1], atol=1e-12)
    np.testing.assert_allclose(sol.xi.cdf[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(sol.iota.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(sol.beta.total, t + 1, atol=1e-12)


def test_idle_example():
    t = np.arange(4.0)
    alpha = MeasurePath(t, [0.0, 1.0], [[0.0, 1.0]] * 4, np.zeros(2))
    sol = theta(alpha, StepPath(t, 2 * t + 0.5, 0.0, nondecreasing=True))
    np.testing.assert_allclose(sol.iota.values, [0.0, 1.5, 3.5, 5.5])
    np.testing.assert_allclose(sol.xi.total, [0.5, 0, 0, 0])


def test_planted_defect_is_reported():
    alpha, mu = _setup(3, n_t=12, n_x=4)
    sol = theta(alpha, mu)
    assert verify_mvsp(alpha, mu, sol)["passed"]
    B = sol.beta.cdf.copy()
    B[7:, -1] += 1.0
    bad = MvsmSolution(sol.xi, MeasurePath(alpha.times, alpha.grid, B), sol.iota)
    rep = verify_mvsp(alpha, mu, bad)
    assert rep["property_1"] == pytest.approx(1.0)
    assert rep["property_4"] == pytest.approx(1.0)
    assert not rep["passed"]


def test_kclass_example():
    t = np.linspace(0, 4, 41)
    A = [StepPath(t, t), StepPath(t, t)]
    X, Bh, Ih = kclass_solve(A, StepPath(t, 1.5 * t))
    np.testing.assert_allclose(X[0].values, 0.0, atol=1e-12)
    np.testing.assert_allclose(X[1].values, 0.5 * t, atol=1e-12)
    np.testing.assert_allclose(Ih.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(Bh[0].values, 0.5 * t, atol=1e-12)
    with pytest.raises(ValueError):
        kclass_solve([], StepPath(t, t))


def test_input_errors():
    alpha, mu = _setup(1, n_t=6, n_x=3)
    F = alpha.cdf.copy()
    F[3, -1] -= 10.0
    with pytest.raises(ValueError, match="not monotone"):
        theta(MeasurePath(alpha.times, alpha.grid, F), mu)
    with pytest.raises(ValueError, match="nondecreasing"):
        theta(alpha, StepPath(alpha.times, -alpha.times))
    with pytest.raises(ValueError, match="resample"):
        theta(alpha, StepPath([0.0], [1.0]))
    theta(alpha, StepPath([0.0], [1.0]), resample=True)


# -- oracles and properties ---------------------------------------------------------

@given(seeds)
def test_theta_matches_greedy_oracle(seed):
    alpha, mu = _setup(seed)
    sol = theta(alpha, mu)
    xi, idle = _greedy_oracle(alpha, mu.values)
    np.testing.assert_allclose(sol.xi.cdf, xi, atol=1e-9)
    np.testing.assert_allclose(sol.iota.values, idle, atol=1e-9)


@given(seeds)
def test_lifo_matches_greedy_oracle(seed):
    alpha, mu = _setup(seed)
    sol = theta_lifo(alpha, mu)
    xi, idle = _greedy_oracle(alpha, mu.values, lowest_first=False)
    np.testing.assert_allclose(sol.xi.cdf, xi, atol=1e-9)
    np.testing.assert_allclose(sol.iota.values, idle, atol=1e-9)
    assert verify_mvsp(alpha, mu, sol)["property_4"] <= 1e-9


@given(seeds, st.booleans())
def test_theta_solves_the_problem(seed, zero_atom):
    alpha, mu = _setup(seed, zero_atom=zero_atom)
    rep = verify_mvsp(alpha, mu, theta(alpha, mu))
    assert rep["passed"], rep


@given(seeds)
def test_agrees_with_kclass(seed):
    alpha, mu = _setup(seed)
    assert theta_vs_kclass(alpha, mu) <= 1e-9 * max(1.0, alpha.total.max())


@given(seeds, st.floats(0.1, 10.0))
def test_scaling(seed, c):
    alpha, mu = _setup(seed)
    s1 = theta(alpha, mu)
    s2 = theta(c * alpha, StepPath(mu.breakpoints, c * mu.values))
    np.testing.assert_allclose(s2.xi.cdf, c * s1.xi.cdf, atol=1e-9 * c * max(1, alpha.total.max()))
    np.testing.assert_allclose(s2.iota.values, c * s1.iota.values, atol=1e-9 * c * max(1, mu.values.max()))


@given(seeds)
def test_effort_above_x_plus_idle_nondecreasing(seed):
    alpha, mu = _setup(seed)
    sol = theta(alpha, mu)
    g = sol.beta_tail + sol.iota.values[:, None]
    assert np.all(np.diff(g, axis=0) >= -1e-9)


@given(seeds)
def test_continuity_in_mu(seed):
    alpha, mu = _setup(seed)
    rng = np.random.default_rng(seed + 1)
    mu2 = StepPath(mu.breakpoints, mu.values + np.cumsum(rng.exponential(0.01, mu.values.size)))
    d = np.max(np.abs(mu2.values - mu.values))
    s1, s2 = theta(alpha, mu), theta(alpha, mu2)
    assert np.max(np.abs(s1.xi.cdf - s2.xi.cdf)) <= 6 * d + 1e-9
    assert np.max(np.abs(s1.iota.values - s2.iota.values)) <= 2 * d + 1e-9


@given(seeds)
def test_outputs_monotone_where_expected(seed):
    alpha, mu = _setup(seed)
    sol = theta(alpha, mu)
    assert is_monotone_path(sol.beta, tol=1e-9)[0]
    assert np.all(sol.xi.cdf >= -1e-12)
    assert np.all(np.diff(sol.xi.cdf, axis=1) >= -1e-9)
