import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skorokhod.step_paths import (StepPath, eval_path, merge_grids, reflect_values, shift,
                                  skorokhod_map, sup_distance)

from conftest import random_step_path


def test_eval_examples():
    p = StepPath([0.0, 1.0], [2.0, 5.0])
    assert eval_path(p, 0.5) == 2.0
    assert eval_path(p, 1.0) == 5.0
    assert eval_path(p, 7.0) == 5.0
    np.testing.assert_array_equal(p(np.array([0.0, 0.999, 1.0])), [2.0, 2.0, 5.0])


def test_eval_rejects_negative_time():
    with pytest.raises(ValueError):
        eval_path(StepPath([0.0], [1.0]), -0.1)


@pytest.mark.parametrize("bp, vals", [([1.0, 2.0], [0, 0]), ([0.0, 0.0], [1, 2]),
                                      ([0.0, 2.0, 1.0], [1, 2, 3]), ([0.0], [1, 2])])
def test_malformed_paths_rejected(bp, vals):
    with pytest.raises(ValueError):
        StepPath(bp, vals)


def test_nondecreasing_flag_is_checked():
    with pytest.raises(ValueError):
        StepPath([0.0, 1.0], [1.0, 0.5], nondecreasing=True)
    with pytest.raises(ValueError):
        StepPath([0.0], [-1.0], nondecreasing=True)


def test_sm_pure_reflection():
    t = np.linspace(0, 5, 51)
    phi, eta = skorokhod_map(StepPath(t, -t))
    np.testing.assert_allclose(phi.values, 0.0, atol=0)
    np.testing.assert_allclose(eta.values, t)


def test_sm_nonnegative_input_invariant():
    t = np.linspace(0, 5, 51)
    phi, eta = skorokhod_map(StepPath(t, t))
    np.testing.assert_array_equal(phi.values, t)
    np.testing.assert_array_equal(eta.values, 0.0)


def test_sm_hand_example():
    phi, eta = skorokhod_map(StepPath([0, 1, 2], [1, -1, 2]))
    np.testing.assert_array_equal(phi.values, [1, 0, 3])
    np.testing.assert_array_equal(eta.values, [0, 1, 1])


def test_shift_examples():
    t = np.arange(10.0)
    s = shift(StepPath(t, t), 3.0)
    np.testing.assert_array_equal(s.values, s.breakpoints)
    c = shift(StepPath([0.0, 2.0], [4.0, 4.0]), 1.5)
    assert c.sup_norm() == 0.0
    h = shift(StepPath([0, 1, 2], [1, -1, 2]), 1.0)
    np.testing.assert_array_equal(h.breakpoints, [0, 1])
    np.testing.assert_array_equal(h.values, [0, 3])


def test_shift_rejects_negative():
    with pytest.raises(ValueError):
        shift(StepPath([0.0], [0.0]), -1)


def test_arithmetic_on_merged_grids():
    a = StepPath([0.0, 1.0], [1.0, 2.0])
    b = StepPath([0.0, 0.5], [0.0, 10.0])
    c = a + b
    np.testing.assert_array_equal(c.breakpoints, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(c.values, [1.0, 11.0, 12.0])
    np.testing.assert_array_equal((b - a).values, [-1.0, 9.0, 8.0])
    assert sup_distance(a, b) == 9.0
    np.testing.assert_array_equal(merge_grids([0, 1], [1, 2]), [0, 1, 2])


def test_csv_export(tmp_path):
    p = StepPath([0.0, 1.5], [2.0, -1.0])
    p.to_csv(tmp_path / "p.csv")
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["t", "value"]
    assert [tuple(map(float, r)) for r in rows[1:]] == [(0.0, 2.0), (1.5, -1.0)]


def _running_min_oracle(psi):
    """Loop version of the reflection, written independently of the vectorised one."""
    out, m = [], 0.0
    for v in psi:
        m = min(m, v)
        out.append(v - m)
    return np.array(out)


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
def test_reflection_matches_loop_oracle(seed):
    p = random_step_path(np.random.default_rng(seed))
    phi, eta = skorokhod_map(p)
    np.testing.assert_allclose(phi.values, _running_min_oracle(p.values), rtol=0, atol=1e-12)
    np.testing.assert_allclose(phi.values - eta.values, p.values, atol=1e-12)


@given(seeds)
def test_lipschitz(seed):
    rng = np.random.default_rng(seed)
    p1 = random_step_path(rng)
    p2 = StepPath(p1.breakpoints, p1.values + rng.normal(0, 0.5, p1.values.size))
    d_in = sup_distance(p1, p2)
    d_out = sup_distance(skorokhod_map(p1)[0], skorokhod_map(p2)[0])
    assert d_out <= 2 * d_in + 1e-12


@given(seeds)
def test_monotonicity(seed):
    rng = np.random.default_rng(seed)
    p1 = random_step_path(rng)
    incr = np.cumsum(rng.exponential(0.3, p1.values.size) * (rng.random(p1.values.size) < 0.5))
    p2 = StepPath(p1.breakpoints, p1.values + incr)
    phi1, eta1 = skorokhod_map(p1)
    phi2, eta2 = skorokhod_map(p2)
    assert np.all(phi2.values >= phi1.values - 1e-12)
    assert np.all(np.diff(eta1.values - eta2.values) >= -1e-12)


@given(seeds, st.floats(0.0, 30.0), st.floats(0.0, 30.0))
def test_shift_consistency(seed, T, t):
    p = random_step_path(np.random.default_rng(seed))
    phi, _ = skorokhod_map(p)
    restart = shift(p, T) + phi(T)
    lhs = phi(T + t)
    rhs = skorokhod_map(restart)[0](t)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


@given(seeds)
def test_complementarity_exact(seed):
    p = random_step_path(np.random.default_rng(seed), scale=3.0)
    phi, eta = skorokhod_map(p)
    d_eta = np.diff(eta.values, prepend=0.0)
    assert np.sum(phi.values * d_eta) == 0.0
    assert np.all(phi.values >= 0) and np.all(np.diff(eta.values) >= 0)


@given(seeds)
def test_idempotence(seed):
    phi, _ = skorokhod_map(random_step_path(np.random.default_rng(seed)))
    again, eta = skorokhod_map(phi)
    np.testing.assert_array_equal(again.values, phi.values)
    assert np.all(eta.values == 0)


def test_reflect_values_along_axis():
    psi = np.array([[1.0, -1.0], [-2.0, 3.0], [0.5, -5.0]])
    phi, eta = reflect_values(psi, axis=0)
    np.testing.assert_array_equal(phi[:, 0], _running_min_oracle(psi[:, 0]))
    np.testing.assert_array_equal(phi[:, 1], _running_min_oracle(psi[:, 1]))
