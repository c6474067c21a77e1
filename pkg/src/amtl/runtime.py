"""
Execution engines for the asynchronous (AMTL) and synchronous (SMTL)
protocols.

Both engines run either on a virtual clock, a discrete-event loop whose
time is an integer count of nanoseconds, or on a real clock with one
thread per task node plus a single-threaded server.

Virtual timing model, per activation of task ``t``::

    request -> prox at the server -> forward step at the task -> delay -> write

The prox costs ``kappa_svd * d * T * min(d, T)`` seconds, the forward step
``kappa * n_t * d * (1 + jitter * u)`` with ``u ~ U[0, 1)``, and the delay is
``offset + U[0, jitter_scale)``. A task re-activates as soon as its write
lands. Every activation takes at least one clock tick, and simultaneous
events are served in ``(time, task_id)`` order.

Each task owns independent random streams for its delays and compute
jitter, so task ``t``'s ``j``-th delay is the same in both engines and in
every sweep point that shares a delay seed.
"""

import heapq
import threading
import time
from concurrent.futures import ThreadPoolExecutor, wait, FIRST_EXCEPTION
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalFailure, StalenessViolation
from .kinds import Clock, Mode
from .model import objective
from .operators import check_step, forward_step, km_update, BlockCandidate, prox
from .scheduler import DelayHistory, StepPolicy, dynamic_multiplier, km_step_size, record_delay
from .trace import RunResult, UpdateEvent

NS = 1_000_000_000


@dataclass(frozen=True)
class DelayModel:
    """Per-message delay ``offset + U[0, jitter_scale)`` seconds.

    ``task_offsets`` overrides the offset of individual tasks, given as
    ``(task_id, offset)`` pairs; it is how a slow node is modelled.
    """

    offset: float = 0.0
    jitter_scale: float = 0.0
    seed: int = 0
    task_offsets: tuple = ()

    def __post_init__(self):
        if self.offset < 0 or self.jitter_scale < 0:
            raise ConfigurationError("delay offset and jitter_scale must be non-negative")
        pairs = tuple((int(t), float(o)) for t, o in dict(self.task_offsets).items())
        if any(o < 0 for _, o in pairs):
            raise ConfigurationError("per-task delay offsets must be non-negative")
        object.__setattr__(self, "task_offsets", pairs)

    def offset_for(self, task_id):
        return dict(self.task_offsets).get(task_id, self.offset)


@dataclass(frozen=True)
class ComputeModel:
    kappa: float = 1e-8
    kappa_svd: float = 1e-8
    jitter: float = 0.5

    def prox_seconds(self, d, t_count):
        return self.kappa_svd * d * t_count * min(d, t_count)

    def grad_seconds(self, n, d, u):
        return self.kappa * n * d * (1.0 + self.jitter * u)


@dataclass(frozen=True)
class RunConfig:
    mode: Mode
    step_policy: StepPolicy
    iterations_per_task: int = 10
    delay_model: DelayModel = field(default_factory=DelayModel)
    clock: Clock = Clock.VIRTUAL
    seed: int = 0
    compute: ComputeModel = field(default_factory=ComputeModel)
    sample_every: int = None
    time_scale: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "clock", Clock(self.clock))
        if self.iterations_per_task < 1:
            raise ConfigurationError(
                f"iterations_per_task must be >= 1, got {self.iterations_per_task}"
            )
        if self.sample_every is not None and self.sample_every < 1:
            raise ConfigurationError(f"sample_every must be >= 1, got {self.sample_every}")


class TaskStreams:
    """Independent per-task generators for delays and compute jitter."""

    def __init__(self, seed, t_count):
        children = np.random.SeedSequence(seed).spawn(t_count)
        self.delay = []
        self.compute = []
        for child in children:
            d_seq, c_seq = child.spawn(2)
            self.delay.append(np.random.Generator(np.random.PCG64(d_seq)))
            self.compute.append(np.random.Generator(np.random.PCG64(c_seq)))


def sample_delay(delay_model, rng, task_id=None):
    """One delay in seconds; advances ``rng`` by exactly one draw."""
    offset = delay_model.offset if task_id is None else delay_model.offset_for(task_id)
    return offset + delay_model.jitter_scale * rng.random()


def measure_staleness(events):
    return max((e.staleness for e in events), default=0)


def _to_ns(seconds):
    return int(round(seconds * NS))


class SharedModel:
    """
    The server's copy of ``V`` with per-column locks.

    Reads take one column lock at a time, so a full snapshot may mix
    columns from different moments; a single column is never torn.
    """

    def __init__(self, v0):
        self.v = np.array(v0, dtype=np.float64)
        self.versions = [0] * self.v.shape[1]
        self.accepted = 0
        self._locks = [threading.Lock() for _ in range(self.v.shape[1])]
        self._count_lock = threading.Lock()

    def read_column(self, t):
        with self._locks[t]:
            return self.v[:, t].copy()

    def snapshot(self):
        with self._count_lock:
            seen = self.accepted
        cols = [self.read_column(t) for t in range(self.v.shape[1])]
        return seen, np.column_stack(cols)

    def write_column(self, t, value):
        with self._locks[t]:
            self.v[:, t] = value
            self.versions[t] += 1
        with self._count_lock:
            self.accepted += 1
            return self.accepted

    def copy(self):
        return np.column_stack([self.read_column(t) for t in range(self.v.shape[1])])


class _Engine:
    """State and bookkeeping shared by all four engine variants."""

    def __init__(self, problem, config, mode):
        if config.mode is not mode:
            raise ConfigurationError(f"config.mode is {config.mode.value}, expected {mode.value}")
        self.problem = problem
        self.config = config
        policy = config.step_policy
        self.eta = check_step(problem, policy.eta)
        self.eta_k = km_step_size(policy, problem.t_count)
        self.tau_max = policy.tau_max
        self.t_count = problem.t_count
        self.sample_every = config.sample_every or problem.t_count
        self.streams = TaskStreams(config.delay_model.seed, problem.t_count)
        self.histories = [DelayHistory(t, policy.window) for t in range(problem.t_count)]
        self.events = []
        self.counts = [0] * problem.t_count
        self.v = np.zeros(problem.shape)
        self._prox_cache = (None, None)

    def prox_of(self, v, version):
        """Prox of ``v``; reuses the last result when ``version`` is unchanged."""
        cached_version, cached = self._prox_cache
        if version is not None and version == cached_version:
            return cached
        p = prox(self.problem, v, self.eta)
        self._prox_cache = (version, p)
        return p

    def candidate(self, p, t):
        return BlockCandidate(t, forward_step(self.problem, t, p[:, t], self.eta))

    def multiplier(self, t, delay):
        history = record_delay(self.histories[t], delay)
        return dynamic_multiplier(history) if self.config.step_policy.dynamic else 1.0

    def relax(self, v_t, cand, mult, k):
        try:
            new = km_update(v_t, cand, self.eta_k, mult)
        except NumericalFailure as exc:
            raise NumericalFailure(f"{exc} at update k={k}") from None
        if not np.all(np.isfinite(new)):
            raise NumericalFailure(f"non-finite iterate for task {cand.task_id} at update k={k}")
        return new

    def check_staleness(self, t, k, staleness):
        if staleness > self.tau_max:
            raise StalenessViolation(t, k, staleness, self.tau_max)

    def maybe_objective(self, k, v, version=None):
        if k % self.sample_every:
            return None
        return objective(self.problem, self.prox_of(v, version))

    def grad_ns(self, t, rng):
        task = self.problem.tasks[t]
        return _to_ns(self.config.compute.grad_seconds(task.n, task.d, rng.random()))

    def result(self, v, makespan):
        w = prox(self.problem, v, self.eta)
        tasks = self.problem.tasks
        return RunResult(
            final_v=v,
            final_w=w,
            events=self.events,
            makespan=makespan,
            per_task_update_counts=list(self.counts),
            final_objective=objective(self.problem, w),
            measured_tau=measure_staleness(self.events),
            config_echo=self.config,
            initial_objective=objective(self.problem, prox(self.problem, np.zeros(self.problem.shape), self.eta)),
            shape=(self.t_count, self.problem.d, max(t.n for t in tasks)),
        )


def _virtual_amtl(problem, config):
    eng = _Engine(problem, config, Mode.AMTL)
    dm, cm = config.delay_model, config.compute
    budget = config.iterations_per_task
    prox_ns = _to_ns(cm.prox_seconds(problem.d, problem.t_count))
    v = eng.v
    k = 0
    pending = {}
    heap = []

    def request(t, now):
        p = eng.prox_of(v, k)
        cand = eng.candidate(p, t)
        delay = sample_delay(dm, eng.streams.delay[t], t)
        cost = prox_ns + eng.grad_ns(t, eng.streams.compute[t]) + _to_ns(delay)
        write_at = now + max(cost, 1)
        pending[t] = (now, k, cand, delay)
        heapq.heappush(heap, (write_at, t))

    for t in range(problem.t_count):
        request(t, 0)

    makespan = 0
    while heap:
        now, t = heapq.heappop(heap)
        req_time, read_k, cand, delay = pending.pop(t)
        staleness = k - read_k
        eng.check_staleness(t, k + 1, staleness)
        mult = eng.multiplier(t, delay)
        v[:, t] = eng.relax(v[:, t], cand, mult, k + 1)
        k += 1
        eng.counts[t] += 1
        eng.events.append(
            UpdateEvent(t, k, req_time / NS, now / NS, staleness, eng.maybe_objective(k, v, k))
        )
        makespan = now
        if eng.counts[t] < budget:
            request(t, now)
    return eng.result(v, makespan / NS)


def _virtual_smtl(problem, config):
    eng = _Engine(problem, config, Mode.SMTL)
    dm, cm = config.delay_model, config.compute
    prox_ns = _to_ns(cm.prox_seconds(problem.d, problem.t_count))
    v = eng.v
    k = 0
    now = 0
    for _ in range(config.iterations_per_task):
        p = eng.prox_of(v, k)
        round_work = []
        for t in range(problem.t_count):
            cand = eng.candidate(p, t)
            delay = sample_delay(dm, eng.streams.delay[t], t)
            finish = prox_ns + eng.grad_ns(t, eng.streams.compute[t]) + _to_ns(delay)
            round_work.append((cand, delay, finish))
        end = now + max(max(f for _, _, f in round_work), 1)
        # the barrier releases all columns at once from the same snapshot
        new_cols = [
            eng.relax(v[:, t], cand, eng.multiplier(t, delay), k + t + 1)
            for t, (cand, delay, _) in enumerate(round_work)
        ]
        for t, col in enumerate(new_cols):
            v[:, t] = col
            k += 1
            eng.counts[t] += 1
            eng.events.append(UpdateEvent(t, k, now / NS, end / NS, 0, eng.maybe_objective(k, v, k)))
        now = end
    return eng.result(v, now / NS)


def _real_amtl(problem, config):
    eng = _Engine(problem, config, Mode.AMTL)
    dm = config.delay_model
    shared = SharedModel(eng.v)
    server = ThreadPoolExecutor(max_workers=1, thread_name_prefix="server")
    stop = threading.Event()
    start = time.perf_counter()

    def clock():
        return time.perf_counter() - start

    def serve_prox(t):
        seen, snap = shared.snapshot()
        return seen, eng.prox_of(snap, None)[:, t]

    def serve_write(t, cand, seen, mult, req_time):
        staleness = shared.accepted - seen
        k = shared.accepted + 1
        eng.check_staleness(t, k, staleness)
        new = eng.relax(shared.read_column(t), cand, mult, k)
        k = shared.write_column(t, new)
        eng.counts[t] += 1
        obj = None
        if k % eng.sample_every == 0:
            obj = objective(problem, prox(problem, shared.copy(), eng.eta))
        eng.events.append(UpdateEvent(t, k, req_time, clock(), staleness, obj))

    def node(t):
        rng = eng.streams.delay[t]
        for _ in range(config.iterations_per_task):
            if stop.is_set():
                return
            req_time = clock()
            seen, p_t = server.submit(serve_prox, t).result()
            cand = BlockCandidate(t, forward_step(problem, t, p_t, eng.eta))
            delay = sample_delay(dm, rng, t)
            time.sleep(delay * config.time_scale)
            mult = eng.multiplier(t, delay)
            server.submit(serve_write, t, cand, seen, mult, req_time).result()

    with ThreadPoolExecutor(max_workers=problem.t_count, thread_name_prefix="task") as pool:
        futures = [pool.submit(node, t) for t in range(problem.t_count)]
        done, _ = wait(futures, return_when=FIRST_EXCEPTION)
        errors = [f.exception() for f in done if f.exception() is not None]
        if errors:
            stop.set()
        wait(futures)
    server.shutdown()
    if errors:
        raise errors[0]
    return eng.result(shared.copy(), max((e.write_time for e in eng.events), default=0.0))


def _real_smtl(problem, config):
    eng = _Engine(problem, config, Mode.SMTL)
    dm = config.delay_model
    v = eng.v
    k = 0
    start = time.perf_counter()

    def node(t, p_t):
        cand = BlockCandidate(t, forward_step(problem, t, p_t, eng.eta))
        delay = sample_delay(dm, eng.streams.delay[t], t)
        time.sleep(delay * config.time_scale)
        return cand, delay

    with ThreadPoolExecutor(max_workers=problem.t_count, thread_name_prefix="task") as pool:
        for _ in range(config.iterations_per_task):
            req_time = time.perf_counter() - start
            p = eng.prox_of(v, k)
            work = list(pool.map(node, range(problem.t_count), [p[:, t] for t in range(problem.t_count)]))
            end = time.perf_counter() - start
            new_cols = [
                eng.relax(v[:, t], cand, eng.multiplier(t, delay), k + t + 1)
                for t, (cand, delay) in enumerate(work)
            ]
            for t, col in enumerate(new_cols):
                v[:, t] = col
                k += 1
                eng.counts[t] += 1
                eng.events.append(UpdateEvent(t, k, req_time, end, 0, eng.maybe_objective(k, v, k)))
    return eng.result(v, max((e.write_time for e in eng.events), default=0.0))


def run_amtl(problem, config):
    """Asynchronous block-coordinate backward-forward iteration."""
    if config.clock is Clock.REAL:
        return _real_amtl(problem, config)
    return _virtual_amtl(problem, config)


def run_smtl(problem, config):
    """Synchronous baseline: every round waits for all ``T`` forward steps."""
    if config.clock is Clock.REAL:
        return _real_smtl(problem, config)
    return _virtual_smtl(problem, config)


def run(problem, config):
    if config.mode is Mode.AMTL:
        return run_amtl(problem, config)
    return run_smtl(problem, config)
