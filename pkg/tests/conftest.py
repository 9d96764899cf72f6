import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from skorokhod.measures import MeasurePath
from skorokhod.step_paths import StepPath

settings.register_profile(
    "repo", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


def random_step_path(rng, n=None, scale=1.0, nondecreasing=False):
    n = int(rng.integers(1, 60)) if n is None else n
    t = np.concatenate([[0.0], np.cumsum(rng.exponential(1.0, n - 1))])
    if nondecreasing:
        v = np.cumsum(rng.exponential(scale, n) * (rng.random(n) < 0.7))
        return StepPath(t, v, 0.0, nondecreasing=True)
    return StepPath(t, rng.normal(0.0, scale, n))


def random_monotone_alpha(rng, n_t=None, n_x=None, zero_atom=True, initial=True):
    """Random monotone measure path: nonnegative cell increments in (t, x)."""
    n_t = int(rng.integers(2, 40)) if n_t is None else n_t
    n_x = int(rng.integers(2, 12)) if n_x is None else n_x
    times = np.concatenate([[0.0], np.cumsum(rng.exponential(1.0, n_t - 1))])
    grid = np.concatenate([[0.0], np.cumsum(rng.exponential(1.0, n_x - 1))])
    # dyadic masses keep cumulative sums and differences exact
    inc = np.round(64 * rng.exponential(1.0, (n_t, n_x))) / 64 * (rng.random((n_t, n_x)) < 0.4)
    if not zero_atom:
        inc[:, 0] = 0.0
    init = (np.round(64 * rng.exponential(1.0, n_x)) / 64 * (rng.random(n_x) < 0.3)
            if initial else np.zeros(n_x))
    cells = np.cumsum(inc, axis=0) + init[None, :]
    F = np.cumsum(cells, axis=1)
    return MeasurePath(times, grid, F, np.cumsum(init))


def random_mu(rng, times, rate=None):
    rate = rng.uniform(0.2, 3.0) if rate is None else rate
    inc = rng.exponential(rate, times.size) * (rng.random(times.size) < 0.8)
    return StepPath(times, np.cumsum(inc), 0.0, nondecreasing=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ---------------------------------------------------------

_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; lines are printed at session end."""
    def record(criterion: str, passed: bool, detail: str = "") -> None:
        prev = _ACCEPTANCE.get(criterion)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}" if detail else prev[1]
        _ACCEPTANCE[criterion] = (bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def key(c):
        head = c.split()[0]
        return (int("".join(ch for ch in head if ch.isdigit()) or 0), c)

    for crit in sorted(_ACCEPTANCE, key=key):
        ok, detail = _ACCEPTANCE[crit]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {crit}: {detail}")
