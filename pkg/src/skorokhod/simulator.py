"""Event-driven single-server simulation of the N-systems.

Policies: ``edf_hard`` (non-preemptive EDF, queued jobs leave at their
deadline), ``edf_soft`` (no reneging), ``sjf`` (non-preemptive smallest size
first) and ``srpt`` (preemptive smallest remaining size).

The run keeps two records per event time, the left limit and the value after
every event at that instant has been processed.  Between consecutive records
the scalar processes move linearly, which is what makes the pre-limit
Skorokhod identities exact on the record sequence.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import Distribution, PiecewiseConstant, distribution_from_spec
from .measures import FiniteMeasure, MeasurePath
from .mvsm import MvsmSolution, theta, verify_mvsp
from .step_paths import StepPath

__all__ = [
    "ArrivalStream",
    "SimConfig",
    "SimTrace",
    "POLICIES",
    "sample_arrivals",
    "simulate",
    "verify_exact_identities",
    "scale_trace",
    "ScaledTrace",
]

POLICIES = ("edf_hard", "edf_soft", "sjf", "srpt")

_ROLE_ARRIVAL = 1
_ROLE_MARK = 2
_ROLE_SERVICE = 3

_NEVER = np.iinfo(np.int64).max


@dataclass(frozen=True)
class ArrivalStream:
    """Poisson arrivals at intensity ``N * rate(t)`` with i.i.d. marks.

    The mark is the relative deadline under EDF and the job size otherwise.
    """

    rate: PiecewiseConstant
    mark: Distribution


@dataclass(frozen=True)
class SimConfig:
    """One replication.  ``scripted`` adds fixed ``(time, mark)`` arrivals on
    top of the sampled streams (marks are relative deadlines under EDF)."""

    N: int
    policy: str
    horizon: float
    arrivals: tuple = ()
    service: Distribution = field(default_factory=lambda: distribution_from_spec(1.0))
    m: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(1.0))
    mu0: StepPath = field(default_factory=lambda: StepPath.constant(0.0))
    initial: FiniteMeasure = field(default_factory=FiniteMeasure.zero)
    seed: int = 0
    deadline_shift: float = 0.0
    snapshot_times: tuple = ()
    scripted: tuple = ()

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "arrivals", tuple(self.arrivals))
        object.__setattr__(self, "snapshot_times", tuple(sorted(float(s) for s in self.snapshot_times)))
        scripted = tuple((float(t), float(m)) for t, m in self.scripted)
        if any(not 0.0 <= t <= self.horizon for t, _ in scripted):
            raise ValueError("scripted arrivals must fall inside [0, horizon]")
        object.__setattr__(self, "scripted", scripted)

    @property
    def is_edf(self) -> bool:
        return self.policy.startswith("edf")

    def replace(self, **kw) -> "SimConfig":
        from dataclasses import replace
        return replace(self, **kw)


def _rng(seed: int, role: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(role, index))
    return np.random.Generator(np.random.Philox(ss))


def sample_arrivals(config: SimConfig, seed: int | None = None):
    """Arrival times, marks and stream index (-1 for scripted), sorted by time.

    Each stream is thinned from a homogeneous process at the stream's peak
    rate.  Streams have their own generators, so adding a stream or
    changing the policy leaves the others untouched.
    """
    seed = config.seed if seed is None else seed
    T, N = config.horizon, config.N
    times, marks, which = [], [], []
    for i, s in enumerate(config.arrivals):
        peak = s.rate.sup()
        if peak <= 0:
            continue
        ra = _rng(seed, _ROLE_ARRIVAL, i)
        n = ra.poisson(N * peak * T)
        t = np.sort(ra.uniform(0.0, T, n))
        keep = ra.uniform(0.0, 1.0, n) * peak < s.rate(t)
        t = t[keep]
        times.append(t)
        marks.append(s.mark.sample(_rng(seed, _ROLE_MARK, i), t.size))
        which.append(np.full(t.size, i))
    if config.scripted:
        st = np.array([a for a, _ in config.scripted])
        times.append(st)
        marks.append(np.array([m for _, m in config.scripted]))
        which.append(np.full(st.size, -1))
    if not times:
        return np.empty(0), np.empty(0), np.empty(0, dtype=int)
    t = np.concatenate(times)
    order = np.argsort(t, kind="stable")
    return t[order], np.concatenate(marks)[order], np.concatenate(which)[order]


def _initial_jobs(config: SimConfig):
    """Discretise ``N * xi_{0-}``: deadlines for EDF, sizes for size-based policies.

    For size-based policies the initial measure is in work units, so an atom
    of work w at size y becomes ``round(N w / y)`` jobs.
    """
    marks = []
    for x, w in zip(config.initial.locations, config.initial.weights):
        if config.is_edf:
            n = int(round(config.N * w))
        else:
            if x <= 0:
                raise ValueError("initial jobs need positive sizes")
            n = int(round(config.N * w / x))
        marks.extend([float(x)] * n)
    return np.asarray(marks, dtype=float)


class _ServiceDraws:
    def __init__(self, law: Distribution, seed: int):
        self.law = law
        self.rng = _rng(seed, _ROLE_SERVICE)
        self.buf = np.empty(0)
        self.pos = 0

    def next(self) -> float:
        if self.pos >= self.buf.size:
            self.buf = self.law.sample(self.rng, 4096)
            self.pos = 0
        v = float(self.buf[self.pos])
        self.pos += 1
        return v


@dataclass
class SimTrace:
    """Job-level outcomes plus the scalar processes at every record.

    ``jobs`` arrays (one entry per job): ``arrival``, ``mark`` (absolute
    deadline or size), ``effort``, ``admit``, ``renege``, ``depart`` (times,
    inf if never) and ``*_rec`` (index of the first record showing the
    change).  ``records``: ``t``, ``post`` (0 for a left limit), ``mu``, ``T``,
    ``iota``, ``rho``, ``admitted``, ``B``, ``J``.
    """

    config: SimConfig
    jobs: dict
    records: dict
    snapshots: dict = field(default_factory=dict)

    @property
    def n_records(self) -> int:
        return self.records["t"].size

    @property
    def n_jobs(self) -> int:
        return self.jobs["arrival"].size

    @property
    def e(self) -> np.ndarray:
        """Admitted jobs minus effort spent (the error term)."""
        return self.records["admitted"] - self.records["T"]

    def mark_grid(self) -> np.ndarray:
        return np.unique(np.concatenate([[0.0], self.jobs["mark"]]))

    def _weights(self, work: bool) -> np.ndarray:
        return self.jobs["mark"] if work else np.ones(self.n_jobs)

    def measure_on_records(self, which: str, grid=None, work: bool | None = None) -> MeasurePath:
        """Measure path on the record sequence (times = record ordinals).

        ``which``: ``alpha``, ``xi``, ``beta_s``, ``beta_r``, ``beta``
        (everything that left the buffer), ``departed``.
        """
        grid = self.mark_grid() if grid is None else np.asarray(grid, dtype=float)
        rows = np.arange(self.n_records)
        return self._measure(which, rows, self._rec_events, grid, work)

    def measure_at_times(self, which: str, times, grid=None, work: bool | None = None) -> MeasurePath:
        """Measure path sampled at real times (right-continuous)."""
        grid = self.mark_grid() if grid is None else np.asarray(grid, dtype=float)
        times = np.asarray(times, dtype=float)
        return self._measure(which, times, self._time_events, grid, work)

    def _rec_events(self, key, rows):
        idx = self.jobs[key + "_rec"]
        return np.where(idx == _NEVER, rows.size, idx)

    def _time_events(self, key, rows):
        tt = self.jobs[key]
        return np.searchsorted(rows, tt, side="left")

    def _measure(self, which, rows, event_rows, grid, work):
        if work is None:
            work = not self.config.is_edf
        w = self._weights(work)
        single = {"alpha": "arrival", "beta_s": "admit", "beta_r": "renege", "departed": "depart"}
        if which == "xi":
            if self.config.policy == "srpt":
                F = self._cum("arrival", rows, event_rows, grid, w) - self._cum("depart", rows, event_rows, grid, w)
            else:
                F = (self._cum("arrival", rows, event_rows, grid, w)
                     - self._cum("admit", rows, event_rows, grid, w)
                     - self._cum("renege", rows, event_rows, grid, w))
        elif which == "beta":
            if self.config.policy == "srpt":
                F = self._cum("depart", rows, event_rows, grid, w)
            else:
                F = self._cum("admit", rows, event_rows, grid, w) + self._cum("renege", rows, event_rows, grid, w)
        elif which in single:
            F = self._cum(single[which], rows, event_rows, grid, w)
        else:
            raise ValueError(f"unknown measure {which!r}")
        return MeasurePath(rows.astype(float) if rows.dtype.kind == "i" else rows, grid, F)

    def _cum(self, key, rows, event_rows, grid, w):
        r = event_rows(key, rows)
        col = np.searchsorted(grid, self.jobs["mark"], side="left")
        col = np.minimum(col, grid.size - 1)
        ok = r < rows.size
        H = np.zeros((rows.size, grid.size))
        np.add.at(H, (r[ok], col[ok]), w[ok])
        return np.cumsum(np.cumsum(H, axis=0), axis=1)

    def state_at(self, which: str, t: float, work: bool | None = None,
                 scale: float = 1.0) -> FiniteMeasure:
        """Exact measure at time ``t`` (after the events at ``t``), weights times ``scale``."""
        if work is None:
            work = not self.config.is_edf
        J = self.jobs
        srpt = self.config.policy == "srpt"
        left = J["depart"] if srpt else np.minimum(J["admit"], J["renege"])
        arrived = J["arrival"] <= t
        if which == "xi":
            mask = arrived & (left > t)
        elif which == "beta":
            mask = left <= t
        elif which == "alpha":
            mask = arrived
        else:
            raise ValueError(f"unknown measure {which!r}")
        w = self._weights(work)[mask] * scale
        return FiniteMeasure(J["mark"][mask], w)

    def scalar_at_times(self, name: str, times) -> np.ndarray:
        """Value of a record column (or ``e``) at real times, right-continuous.

        Between the post record at one event time and the left-limit record
        at the next, every column is affine (jump columns are constant), so
        interpolation is exact.
        """
        vals = self.e if name == "e" else self.records[name]
        times = np.asarray(times, dtype=float)
        t = self.records["t"]
        # the last record at a time is its post record
        idx = np.maximum(np.searchsorted(t, times, side="right") - 1, 0)
        nxt = np.minimum(idx + 1, t.size - 1)
        span = t[nxt] - t[idx]
        w = np.where(span > 0, (times - t[idx]) / np.where(span > 0, span, 1.0), 0.0)
        return vals[idx] + np.clip(w, 0.0, 1.0) * (vals[nxt] - vals[idx])

    def events_rows(self):
        """Rows ``(t, event_type, job_id, mark, value)`` sorted by time."""
        rows = []
        J = self.jobs
        for i in range(self.n_jobs):
            rows.append((J["arrival"][i], "arrival", i, J["mark"][i], J["effort"][i]))
            for kind in ("admit", "renege", "depart"):
                if np.isfinite(J[kind][i]):
                    rows.append((J[kind][i], kind, i, J["mark"][i], J["effort"][i]))
        order = {"arrival": 0, "renege": 1, "depart": 2, "admit": 3}
        rows.sort(key=lambda r: (r[0], order[r[1]], r[2]))
        return rows

    def save(self, directory) -> list:
        """Write ``events.csv``, ``records.csv``, ``jobs.csv`` and ``trace.json``.

        ``events.csv`` is the human-facing log; ``jobs.csv`` and
        ``records.csv`` hold everything :meth:`load` needs to rebuild the
        trace exactly (floats are written with ``repr``).
        """
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        ev = d / "events.csv"
        with open(ev, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "event_type", "job_id", "mark", "value"])
            for t, kind, i, mark, val in self.events_rows():
                w.writerow([repr(float(t)), kind, int(i), repr(float(mark)), repr(float(val))])
        rec = d / "records.csv"
        with open(rec, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(_RECORD_COLUMNS) + ["e"])
            e = self.e
            for k in range(self.n_records):
                w.writerow([repr(float(self.records[c][k])) for c in _RECORD_COLUMNS] + [repr(float(e[k]))])
        jobs = d / "jobs.csv"
        with open(jobs, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["job_id"] + list(_JOB_COLUMNS))
            for i in range(self.n_jobs):
                w.writerow([i] + [repr(float(self.jobs[c][i])) if c in _JOB_FLOATS else int(self.jobs[c][i])
                                  for c in _JOB_COLUMNS])
        meta = d / "trace.json"
        c = self.config
        meta.write_text(json.dumps({
            "N": c.N, "policy": c.policy, "horizon": c.horizon, "seed": c.seed,
            "deadline_shift": c.deadline_shift, "n_jobs": self.n_jobs,
            "n_records": self.n_records,
        }, indent=2, sort_keys=True) + "\n")
        return [ev, rec, jobs, meta]

    @classmethod
    def load(cls, path) -> "SimTrace":
        """Rebuild a trace saved by :meth:`save` (directory or any file in it)."""
        d = Path(path)
        if d.is_file():
            d = d.parent
        meta = json.loads((d / "trace.json").read_text())
        config = SimConfig(N=meta["N"], policy=meta["policy"], horizon=meta["horizon"],
                           seed=meta["seed"], deadline_shift=meta["deadline_shift"])
        with open(d / "jobs.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        jobs = {}
        for c in _JOB_COLUMNS:
            if c in _JOB_FLOATS:
                jobs[c] = np.array([float(r[c]) for r in rows], dtype=float)
            else:
                jobs[c] = np.array([int(r[c]) for r in rows], dtype=np.int64)
        with open(d / "records.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        records = {c: np.array([float(r[c]) for r in rows], dtype=float) for c in _RECORD_COLUMNS}
        return cls(config, jobs, records)


_RECORD_COLUMNS = ("t", "post", "mu", "T", "iota", "rho", "admitted", "B", "J")
_JOB_FLOATS = ("arrival", "mark", "effort", "admit", "renege", "depart")
_JOB_COLUMNS = _JOB_FLOATS + ("arrival_rec", "admit_rec", "renege_rec", "depart_rec")


class _Engine:
    def __init__(self, config: SimConfig):
        self.c = config
        self.N = config.N
        self.t = 0.0
        self.mu = 0.0
        self.T = 0.0
        self.iota = 0.0
        self.rho = 0
        self.admitted = 0
        self.current = None  # job id in service
        self.resid = 0.0
        self.rec = {k: [] for k in _RECORD_COLUMNS}
        self.snapshots = {}

    # -- bookkeeping --------------------------------------------------------
    def record(self, post: int):
        r = self.rec
        r["t"].append(self.t)
        r["post"].append(post)
        r["mu"].append(self.mu)
        r["T"].append(self.T)
        r["iota"].append(self.iota)
        r["rho"].append(self.rho)
        r["admitted"].append(self.admitted)
        r["B"].append(0 if self.current is None else 1)
        r["J"].append(self.resid if self.current is not None else 0.0)

    def next_rec(self) -> int:
        return len(self.rec["t"])

    def advance(self, t_new: float, exact_effort: float | None = None):
        """Move the clock, spending effort at rate N m(t) (constant on the step)."""
        if t_new < self.t:
            raise RuntimeError("event queue corrupted: time went backwards")
        if t_new == self.t:
            return
        eff = self.N * self.c.m(self.t) * (t_new - self.t) if exact_effort is None else exact_effort
        self.mu += eff
        if self.current is None:
            self.iota += eff
        else:
            self.T += eff
            self.resid = max(self.resid - eff, 0.0)
        self.t = t_new


def simulate(config: SimConfig) -> SimTrace:
    """Run one replication; deterministic given the config (seed included)."""
    c = config
    policy = c.policy
    arr_t, arr_mark, _ = sample_arrivals(c)
    init_marks = _initial_jobs(c)
    n0 = init_marks.size
    n = n0 + arr_t.size

    arrival = np.concatenate([np.zeros(n0), arr_t])
    if c.is_edf:
        mark = np.concatenate([init_marks, arr_t + arr_mark]) + c.deadline_shift
    else:
        mark = np.concatenate([init_marks, arr_mark])
        if np.any(mark <= 0):
            raise ValueError("job sizes must be positive")
    effort = np.full(n, np.nan)
    if not c.is_edf:
        effort[:] = mark
    admit = np.full(n, np.inf)
    renege = np.full(n, np.inf)
    depart = np.full(n, np.inf)
    rec_idx = {k: np.full(n, _NEVER, dtype=np.int64) for k in ("arrival", "admit", "renege", "depart")}

    eng = _Engine(c)
    services = _ServiceDraws(c.service, c.seed) if c.is_edf else None
    T_end = c.horizon

    queue = []       # priority heap of waiting jobs
    deadlines = []   # EDF hard: (deadline, id) of waiting jobs
    waiting = np.zeros(n, dtype=bool)

    mu0 = c.mu0
    jump_t = mu0.breakpoints
    jump_size = np.diff(mu0.values, prepend=mu0.initial_left_value)
    jumps = [(float(t), float(s)) for t, s in zip(jump_t, jump_size) if s > 0 and t <= T_end]
    if any(s < 0 for s in jump_size):
        raise ValueError("mu0 must be nondecreasing")
    m_changes = list(c.m.change_points(T_end))
    snaps = list(c.snapshot_times)

    def enqueue(j):
        waiting[j] = True
        heapq.heappush(queue, (mark[j], arrival[j], j))
        if policy == "edf_hard":
            heapq.heappush(deadlines, (mark[j], j))

    def start(j, key_resid=None):
        eng.current = j
        if c.is_edf:
            effort[j] = services.next()
            eng.resid = effort[j]
        else:
            eng.resid = effort[j] if key_resid is None else key_resid

    def admit_job(j):
        waiting[j] = False
        admit[j] = eng.t
        rec_idx["admit"][j] = eng.next_rec()
        eng.admitted += 1
        start(j)

    # SRPT bookkeeping: residual per job, waiting heap keyed by residual
    resid_of = np.where(np.isnan(effort), 0.0, effort) if policy == "srpt" else None

    def finish_current():
        j = eng.current
        depart[j] = eng.t
        rec_idx["depart"][j] = eng.next_rec()
        eng.current = None
        eng.resid = 0.0
        if policy == "srpt":
            resid_of[j] = 0.0

    def dispatch():
        if policy == "srpt":
            # in-service job must hold the smallest (residual, arrival, id)
            while queue:
                r, a, j = queue[0]
                if not waiting[j]:
                    heapq.heappop(queue)
                    continue
                if eng.current is not None:
                    cur = eng.current
                    if (r, a, j) >= (eng.resid, arrival[cur], cur):
                        break
                    resid_of[cur] = eng.resid
                    waiting[cur] = True
                    heapq.heappush(queue, (eng.resid, arrival[cur], cur))
                    eng.current = None
                heapq.heappop(queue)
                waiting[j] = False
                if not np.isfinite(admit[j]):
                    admit[j] = eng.t
                    rec_idx["admit"][j] = eng.next_rec()
                    eng.admitted += 1
                start(j, key_resid=r)
            return
        if eng.current is not None:
            return
        while queue:
            _, _, j = heapq.heappop(queue)
            if waiting[j]:
                admit_job(j)
                return

    def spend_instant(amount):
        """Effort delivered at a single instant (a jump of mu0)."""
        eng.mu += amount
        while amount > 0:
            dispatch()
            if eng.current is None:
                eng.iota += amount
                return
            use = min(amount, eng.resid)
            eng.T += use
            eng.resid -= use
            amount -= use
            if eng.resid <= 0:
                finish_current()

    # initial state: record 0 is the 0- state with the initial jobs queued
    for j in range(n0):
        rec_idx["arrival"][j] = 0
        enqueue(j)
    eng.record(0)
    first = True
    ai = n0
    while True:
        # next event time
        cands = [T_end]
        if ai < n:
            cands.append(arrival[ai])
        if policy == "edf_hard":
            while deadlines and not waiting[deadlines[0][1]]:
                heapq.heappop(deadlines)
            if deadlines:
                cands.append(max(deadlines[0][0], eng.t))
        if jumps:
            cands.append(jumps[0][0])
        if m_changes:
            cands.append(m_changes[0])
        if snaps:
            cands.append(snaps[0])
        comp = math.inf
        if eng.current is not None:
            rate = c.N * c.m(eng.t)
            if rate > 0:
                comp = eng.t + eng.resid / rate
                cands.append(comp)
        t_next = min(cands)
        if first:
            t_next = 0.0
        if t_next > T_end:
            raise RuntimeError("horizon overrun")
        completes = eng.current is not None and t_next >= comp
        if not first:
            eng.advance(t_next, exact_effort=eng.resid if completes else None)
            if completes:
                eng.resid = 0.0
            eng.record(0)
        first = False
        t = eng.t

        # arrivals at t
        while ai < n and arrival[ai] <= t:
            rec_idx["arrival"][ai] = eng.next_rec()
            enqueue(ai)
            ai += 1
        # reneging before any admission at this instant
        if policy == "edf_hard":
            while deadlines and deadlines[0][0] <= t:
                d, j = heapq.heappop(deadlines)
                if waiting[j]:
                    waiting[j] = False
                    renege[j] = t
                    rec_idx["renege"][j] = eng.next_rec()
                    eng.rho += 1
        if eng.current is not None and eng.resid <= 0.0:
            finish_current()
        while jumps and jumps[0][0] <= t:
            spend_instant(c.N * jumps.pop(0)[1])
        while m_changes and m_changes[0] <= t:
            m_changes.pop(0)
        dispatch()
        while snaps and snaps[0] <= t:
            eng.snapshots[snaps.pop(0)] = _snapshot(eng, policy, mark, waiting, resid_of)
        eng.record(1)
        if t >= T_end:
            break

    jobs = {
        "arrival": arrival, "mark": mark, "effort": effort,
        "admit": admit, "renege": renege, "depart": depart,
        **{k + "_rec": v for k, v in rec_idx.items()},
    }
    records = {k: np.asarray(v, dtype=float) for k, v in eng.rec.items()}
    return SimTrace(c, jobs, records, eng.snapshots)


def _snapshot(eng, policy, mark, waiting, resid_of):
    """State of the buffer at a snapshot time.

    Always: marks of waiting jobs and the in-service residual (None when
    idle).  SRPT adds the residual sizes of waiting jobs and of all jobs in
    the system.
    """
    out = {"waiting_marks": mark[waiting].copy(),
           "in_service_residual": eng.resid if eng.current is not None else None}
    if policy == "srpt":
        res = resid_of[waiting].copy()
        out["waiting_residuals"] = res
        out["residuals"] = res if eng.current is None else np.append(res, eng.resid)
    return out


# -- identities ----------------------------------------------------------------

def _rho_at(trace: SimTrace, s: np.ndarray) -> np.ndarray:
    """Number of reneges at times <= s."""
    rt = np.sort(trace.jobs["renege"][np.isfinite(trace.jobs["renege"])])
    return np.searchsorted(rt, s, side="right").astype(float)


def verify_exact_identities(trace: SimTrace, tol: float = 1e-9,
                            max_columns: int | None = None) -> dict:
    """Check the pre-limit balance and Skorokhod identities on the record sequence.

    Residuals are absolute; ``passed`` compares them with ``tol * N``.  The
    identities hold column by column, so ``max_columns`` may thin the mark
    grid (keeping 0 and the largest mark) to bound memory on long runs.
    """
    c = trace.config
    R = trace.records
    grid = trace.mark_grid()
    if max_columns is not None and grid.size > max_columns:
        pick = np.unique(np.linspace(0, grid.size - 1, max_columns).round().astype(int))
        grid = grid[pick]
    n_rec = trace.n_records
    ordinal = np.arange(n_rec, dtype=float)
    bound = tol * c.N
    out = {"n_records": n_rec, "n_jobs": trace.n_jobs, "bound": bound}

    if c.is_edf:
        alpha = trace.measure_on_records("alpha", grid)
        xi = trace.measure_on_records("xi", grid)
        bs = trace.measure_on_records("beta_s", grid)
        br = trace.measure_on_records("beta_r", grid)
        beta = trace.measure_on_records("beta", grid)
        rho = R["rho"]
        e = trace.e
        t = R["t"]
        # rho(t ^ x): record value when x >= t, else reneges by time x
        rho_x = _rho_at(trace, grid)
        rho_tx = np.where(grid[None, :] >= t[:, None], rho[:, None], rho_x[None, :])
        out["qmeasN"] = float(np.max(np.abs(xi.cdf - (alpha.cdf - bs.cdf - rho_tx))))
        out["eq34"] = float(np.max(np.abs(br.cdf - rho_tx)))
        out["eq33"] = float(np.max(np.abs(br.total - rho)))
        if c.policy == "edf_hard":
            post = R["post"] == 1
            below = grid[None, :] <= t[:, None]
            out["eq69"] = float(np.max(np.where(below & post[:, None], xi.cdf, 0.0)))
        out["eq64"] = float(np.max(np.abs(bs.total - R["admitted"])))
        out["eq40"] = float(np.max(np.abs(beta.total + R["iota"] - (R["mu"] + rho + e))))
        out["eq65"] = float(np.max(np.abs(R["iota"] - (R["mu"] - R["T"]))))
        drive = StepPath(ordinal, R["mu"] + rho + e)
        recorded = MvsmSolution(xi, beta, StepPath(ordinal, R["iota"]))
        sol = theta(alpha, drive, check=True)
        out["stoch_IDSMrel"] = float(max(
            np.max(np.abs(sol.xi.cdf - xi.cdf)),
            np.max(np.abs(sol.beta.cdf - beta.cdf)),
            np.max(np.abs(sol.iota.values - R["iota"])),
        ))
        mv = verify_mvsp(alpha, drive, recorded, tol=tol)
        out["edf_complementarity"] = mv["property_2"]
        out["non_idling"] = mv["property_3"]
        keys = ["qmeasN", "eq33", "eq34", "eq40", "eq64", "eq65", "stoch_IDSMrel",
                "edf_complementarity", "non_idling"] + (["eq69"] if "eq69" in out else [])
    else:
        alpha = trace.measure_on_records("alpha", grid, work=True)
        xi = trace.measure_on_records("xi", grid, work=True)
        beta = trace.measure_on_records("beta", grid, work=True)
        out["eq80"] = float(np.max(np.abs(xi.cdf - (alpha.cdf - beta.cdf))))
        keys = ["eq80"]
        if c.policy == "sjf":
            J = R["J"]
            J0 = 0.0  # the server is empty just before time zero
            out["eq81"] = float(np.max(np.abs(beta.total - (R["T"] + J - J0))))
            drive = StepPath(ordinal, R["mu"] + J - J0)
            sol = theta(alpha, drive, check=True)
            out["eq90"] = float(max(
                np.max(np.abs(sol.xi.cdf - xi.cdf)),
                np.max(np.abs(sol.beta.cdf - beta.cdf)),
                np.max(np.abs(sol.iota.values - R["iota"])),
            ))
            recorded = MvsmSolution(xi, beta, StepPath(ordinal, R["iota"]))
            mv = verify_mvsp(alpha, drive, recorded, tol=tol)
            out["eq84"] = mv["property_2"]
            out["eq85"] = mv["property_3"]
            keys += ["eq81", "eq90", "eq84", "eq85"]
        out["mun"] = float(np.max(np.abs(R["mu"] - R["T"] - R["iota"])))
        keys.append("mun")
    out["checked"] = keys
    out["passed"] = bool(all(out[k] <= bound for k in keys))
    return out


# -- fluid scaling ------------------------------------------------------------

@dataclass(frozen=True)
class ScaledTrace:
    times: np.ndarray
    grid: np.ndarray
    xi: MeasurePath
    beta: MeasurePath
    alpha: MeasurePath
    scalars: dict


def scale_trace(trace: SimTrace, t_grid, x_grid) -> ScaledTrace:
    """Divide every count by N and sample on the experiment grids."""
    N = trace.config.N
    t_grid = np.asarray(t_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    xi = trace.measure_at_times("xi", t_grid, x_grid) * (1.0 / N)
    beta = trace.measure_at_times("beta", t_grid, x_grid) * (1.0 / N)
    alpha = trace.measure_at_times("alpha", t_grid, x_grid) * (1.0 / N)
    scalars = {name: trace.scalar_at_times(name, t_grid) / N
               for name in ("mu", "T", "iota", "rho", "J", "e")}
    return ScaledTrace(t_grid, x_grid, xi, beta, alpha, scalars)
