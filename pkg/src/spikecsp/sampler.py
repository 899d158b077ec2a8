"""Discrete-time neural sampling over a compiled network.

Each pick chooses one neuron uniformly at random; an inactive neuron fires
with probability min(1, exp(u)/tau) where u is its membrane potential, and
then stays active for a window of tau sweeps (tau*N picks). Windows lapse
deterministically and are never extended; a lapsed neuron sits out the pick
at which its window ends before it may fire again. One sweep = N picks and
is the unit of simulated time in every reported metric.

`step` is the readable single-pick reference implementation; `run` drives
the numba kernel in `_kernel` (identical semantics and RNG stream, asserted
by tests) and harvests solutions through the readout every sweep.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .compiler import Network, energy as network_energy
from .csp import Assignment, Csp

_MASK64 = (1 << 64) - 1


def _splitmix_next(state: int) -> tuple[int, float]:
    """Pure-python twin of the kernel RNG; returns (state, double in [0,1))."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, (z >> 11) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class SamplerParams:
    tau: int = 20
    max_sweeps: int = 100_000
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


class SamplerState:
    """Mutable chain state: per-neuron activity windows plus the RNG."""

    def __init__(self, net: Network, params: SamplerParams):
        self.n = net.n_total
        self.tau = params.tau
        self.deadline = np.full(self.n, -1, dtype=np.int64)
        self.step_count = 0  # picks performed
        self.rng_state = params.seed & _MASK64

    @property
    def x(self) -> np.ndarray:
        """Binary activity vector at the current pick."""
        return (self.deadline > self.step_count).astype(np.uint8)

    @property
    def expiry(self) -> np.ndarray:
        """Remaining active time per neuron, in sweeps (0..tau)."""
        remaining = np.maximum(self.deadline - self.step_count, 0)
        return remaining / self.n

    @property
    def sweep(self) -> int:
        return self.step_count // self.n

    def __repr__(self) -> str:
        return f"SamplerState(step={self.step_count}, active={int(self.x.sum())})"


def fire_probability(u: float, tau: int) -> float:
    """min(1, exp(u)/tau); clamped because the exponential form is a proper
    probability only for u <= ln(tau)."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if u >= math.log(tau):
        return 1.0
    return math.exp(u) / tau


def membrane_potential(net: Network, s: SamplerState, i: int) -> float:
    """u_i = b_i + sum_j w_ij x_j under the state's current activity."""
    if not (0 <= i < net.n_total):
        raise ValueError(f"neuron id {i} out of range")
    indptr, indices, data = net.csr()
    t = s.step_count
    u = float(net.biases[i])
    for k in range(indptr[i], indptr[i + 1]):
        if s.deadline[indices[k]] > t:
            u += data[k]
    return u


def step(net: Network, s: SamplerState) -> SamplerState:
    """Advance the chain by one pick (reference implementation)."""
    t = s.step_count
    s.rng_state, r = _splitmix_next(s.rng_state)
    i = min(int(r * s.n), s.n - 1)
    if s.deadline[i] < t:  # inactive, and not expired at this very pick
        u = membrane_potential(net, s, i)
        p = fire_probability(u, s.tau)
        s.rng_state, r2 = _splitmix_next(s.rng_state)
        if r2 < p:
            s.deadline[i] = t + s.tau * s.n
    s.step_count = t + 1
    return s


@dataclass
class SolutionRecord:
    assignment: dict
    discovery_sweep: int
    canonical_class: str


@dataclass
class RunRecord:
    """Outcome of one sampler run on one instance."""

    instance_id: str
    variant: str
    seed: int
    tau: int
    max_sweeps: int
    solved: bool
    sweeps_first: int | None  # sweeps elapsed at first solution (1-based count)
    solutions: list[SolutionRecord]
    final_energy: float
    wall_ms: float
    truncated: bool  # an expansion hit the combination cap
    sweeps_run: int

    @property
    def n_solutions(self) -> int:
        return len(self.solutions)

    @property
    def sweeps_last(self) -> int | None:
        if not self.solutions:
            return None
        return max(rec.discovery_sweep for rec in self.solutions) + 1

    @property
    def time_per_solution(self) -> float | None:
        """Sweeps at last discovery divided by the number of solutions."""
        last = self.sweeps_last
        if last is None:
            return None
        return last / len(self.solutions)


class _KernelDriver:
    """Owns the flat arrays the numba kernel mutates between chunks."""

    def __init__(self, net: Network, params: SamplerParams, rec_cap: int = 8192):
        indptr, indices, data = net.csr()
        self.indptr = indptr
        self.indices = indices
        self.wdata = data
        self.biases = net.biases
        self.n_total = net.n_total
        self.n_principal = net.n_principal
        self.var_of = net.var_index_of_principal()
        n_vars = len(net.variables)
        clause_lits = net.clause_literal_ids()
        lit2clause: list[list[int]] = [[] for _ in range(net.n_principal)]
        for ci, lits in enumerate(clause_lits):
            for n in lits:
                lit2clause[n].append(ci)
        counts = np.array([0] + [len(l) for l in lit2clause], dtype=np.int64)
        self.lit_indptr = np.cumsum(counts)
        self.lit_clause = np.array(
            [c for l in lit2clause for c in l] or [0], dtype=np.int64
        )[: max(1, int(self.lit_indptr[-1]))]
        self.tau = params.tau
        self.deadline = np.full(self.n_total, -1, dtype=np.int64)
        self.q_dead = np.zeros(self.n_total, dtype=np.int64)
        self.q_neuron = np.zeros(self.n_total, dtype=np.int64)
        self.varcount = np.zeros(max(1, n_vars), dtype=np.int64)
        self.clausecount = np.zeros(max(1, len(clause_lits)), dtype=np.int64)
        self.n_words = (net.n_principal + 63) // 64
        self.words = np.zeros(self.n_words, dtype=np.uint64)
        self.last_words = np.full(self.n_words, np.uint64(_MASK64), dtype=np.uint64)
        self.scal = np.zeros(_kernel.SCAL_SLOTS, dtype=np.int64)
        self.scal[_kernel.NEMPTY] = n_vars
        self.scal[_kernel.NUNCOV] = len(clause_lits)
        self.fstate = np.zeros(1, dtype=np.float64)
        self.rng = np.array([params.seed & _MASK64], dtype=np.uint64)
        self.rec_sweeps = np.zeros(rec_cap, dtype=np.int64)
        self.rec_words = np.zeros((rec_cap, self.n_words), dtype=np.uint64)
        self.hist = np.zeros(1, dtype=np.int64)
        self.trace_rows = np.zeros((1, 3), dtype=np.float64)

    def run(self, max_sweeps: int, mode: int) -> int:
        self.scal[_kernel.NREC] = 0
        self.scal[_kernel.NTRACE] = 0
        return _kernel.run_chunk(
            self.indptr,
            self.indices,
            self.wdata,
            self.biases,
            self.n_principal,
            self.var_of,
            self.lit_indptr,
            self.lit_clause,
            self.tau,
            self.deadline,
            self.q_dead,
            self.q_neuron,
            self.varcount,
            self.clausecount,
            self.words,
            self.last_words,
            self.scal,
            self.fstate,
            self.rng,
            max_sweeps,
            mode,
            self.rec_sweeps,
            self.rec_words,
            self.hist,
            self.trace_rows,
        )

    def current_x(self) -> np.ndarray:
        return (self.deadline > self.scal[_kernel.T]).astype(np.uint8)


def sample_histogram(
    net: Network, params: SamplerParams, n_sweeps: int, burn_in: int = 0
) -> np.ndarray:
    """Per-sweep occupancy histogram over principal states (fidelity tests)."""
    if net.n_principal > 20:
        raise ValueError("histogram sampling limited to 20 principal neurons")
    driver = _KernelDriver(net, params)
    driver.hist = np.zeros(1 << net.n_principal, dtype=np.int64)
    if burn_in:
        driver.run(burn_in, 0)
    driver.hist[:] = 0
    driver.run(burn_in + n_sweeps, _kernel.MODE_HIST)
    return driver.hist.astype(np.float64) / driver.hist.sum()


def run(
    net: Network,
    csp: Csp,
    params: SamplerParams,
    on_solution=None,
    stop_when=None,
    instance_id: str = "",
    variant: str = "",
    expansion_cap: int = 4096,
    trace_path: str | None = None,
) -> RunRecord:
    """Run the sampler, harvesting verified solutions every sweep.

    After every sweep whose decoded state has all variables non-empty and all
    clauses covered, the multi-assignment is expanded into concrete verified
    solutions; each previously-unseen one is registered (and passed to
    `on_solution`). `stop_when(record)` is evaluated after each sweep that
    produced new solutions. Exhausting max_sweeps without a solution is not
    an error; the record comes back flagged unsolved.
    """
    from .readout import decode_bits, expand_solutions, solution_class

    t0 = time.perf_counter()
    driver = _KernelDriver(net, params)
    record = RunRecord(
        instance_id=instance_id,
        variant=variant,
        seed=params.seed,
        tau=params.tau,
        max_sweeps=params.max_sweeps,
        solved=False,
        sweeps_first=None,
        solutions=[],
        final_energy=0.0,
        wall_ms=0.0,
        truncated=False,
        sweeps_run=0,
    )
    seen_states: set[bytes] = set()
    seen_solutions: set[tuple] = set()
    mode = _kernel.MODE_RECORD
    trace_chunks: list[np.ndarray] = []
    if params.record_trace or trace_path:
        mode |= _kernel.MODE_TRACE
        driver.trace_rows = np.zeros((8192, 3), dtype=np.float64)

    stopped = False
    while not stopped:
        reason = driver.run(params.max_sweeps, mode)
        if mode & _kernel.MODE_TRACE:
            trace_chunks.append(driver.trace_rows[: driver.scal[_kernel.NTRACE]].copy())
        n_rec = int(driver.scal[_kernel.NREC])
        for r in range(n_rec):
            sweep = int(driver.rec_sweeps[r])
            key = driver.rec_words[r].tobytes()
            if key in seen_states:
                continue
            seen_states.add(key)
            multi = decode_bits(net, driver.rec_words[r])
            if any(not s for s in multi.sets):
                continue
            sols, truncated = expand_solutions(multi, csp, cap=expansion_cap)
            record.truncated = record.truncated or truncated
            new_any = False
            for a in sorted(sols, key=lambda a: str(a.as_tuple(csp))):
                tup = a.as_tuple(csp)
                if tup in seen_solutions:
                    continue
                seen_solutions.add(tup)
                record.solutions.append(
                    SolutionRecord(dict(a.values), sweep, solution_class(csp, a))
                )
                if record.sweeps_first is None:
                    record.sweeps_first = sweep + 1
                    record.solved = True
                new_any = True
                if on_solution is not None:
                    on_solution(a, sweep)
            if new_any and stop_when is not None and stop_when(record):
                record.sweeps_run = sweep + 1
                stopped = True
                break
        if not stopped and reason == _kernel.REASON_DONE:
            record.sweeps_run = params.max_sweeps
            break
    record.final_energy = network_energy(net, driver.current_x())
    record.wall_ms = (time.perf_counter() - t0) * 1000.0
    if trace_path:
        _write_trace(trace_path, trace_chunks, record)
    return record


def stop_after_first_solution(record: RunRecord) -> bool:
    return record.solved


def _write_trace(path: str, chunks: list[np.ndarray], record: RunRecord) -> None:
    """CSV trace: sweep, energy, n_active, solutions_found."""
    discoveries = sorted(s.discovery_sweep for s in record.solutions)
    with open(path, "w") as fh:
        fh.write("sweep,energy,n_active,solutions_found\n")
        found = 0
        di = 0
        for chunk in chunks:
            for row in chunk:
                sweep = int(row[0])
                while di < len(discoveries) and discoveries[di] <= sweep:
                    found += 1
                    di += 1
                fh.write(f"{sweep},{row[1]:.6g},{int(row[2])},{found}\n")
