"""Ground-truth machinery: exhaustive solving/counting, unique-instance
mining, and exact Boltzmann tables for sampler validation.

The solver is a correctness instrument, not a competitive solver: depth-first
enumeration over a deterministic variable order (descending constraint-graph
degree, ties by declaration order) with forward pruning on mutex pairs and
unit propagation on clauses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csp import Assignment, Clause, Csp, MutexPair, variable_degree


@dataclass
class SolveResult:
    solutions: list[Assignment]
    complete: bool  # True iff the whole space was exhausted


class _Enumerator:
    """Backtracking enumerator with a trail-based undo stack.

    Assigning a value forward-prunes mutex partners and updates per-clause
    open/satisfied counters; clauses reduced to one open literal force it.
    """

    def __init__(self, csp: Csp, restrict: dict | None):
        self.csp = csp
        n = csp.n_variables
        self.n = n
        self.values: list[list] = []
        for v in csp.variables:
            dom = csp.domains[v]
            if restrict and v in restrict:
                allowed = restrict[v]
                self.values.append([val for val in dom if val in allowed])
            else:
                self.values.append(list(dom))
        self.val_index: list[dict] = [
            {val: k for k, val in enumerate(vals)} for vals in self.values
        ]
        self.assigned: list = [None] * n
        self.is_assigned = [False] * n
        self.pruned: list[list[int]] = [[0] * len(vals) for vals in self.values]
        self.avail = [len(vals) for vals in self.values]

        self.mutex_of: dict[tuple[int, object], list[tuple[int, object]]] = {}
        clauses: list[tuple[tuple[int, object], ...]] = []
        for c in csp.constraints:
            if isinstance(c, MutexPair):
                ia, ib = csp.var_index[c.a[0]], csp.var_index[c.b[0]]
                self.mutex_of.setdefault((ia, c.a[1]), []).append((ib, c.b[1]))
                self.mutex_of.setdefault((ib, c.b[1]), []).append((ia, c.a[1]))
            else:
                clauses.append(
                    tuple((csp.var_index[var], val) for var, val in c.literals)
                )
        self.clauses = clauses
        self.clause_sat = [0] * len(clauses)
        self.clause_open = [len(lits) for lits in clauses]
        self.clause_of_var: dict[int, list[int]] = {}
        for ci, lits in enumerate(clauses):
            for vi, _ in lits:
                lst = self.clause_of_var.setdefault(vi, [])
                if not lst or lst[-1] != ci:
                    lst.append(ci)

        degs = {v: variable_degree(csp, v) for v in csp.variables}
        self.order = sorted(range(n), key=lambda i: (-degs[csp.variables[i]], i))
        self.trail: list[tuple] = []

    # -- trail ops -------------------------------------------------------
    def _prune(self, vi: int, val) -> bool:
        """Mark (vi, val) unavailable; returns False on domain wipe-out."""
        ki = self.val_index[vi].get(val)
        if ki is None:
            return True  # value not even a candidate
        self.pruned[vi][ki] += 1
        self.trail.append(("prune", vi, ki))
        if self.pruned[vi][ki] == 1:
            self.avail[vi] -= 1
            if self.avail[vi] == 0 and not self.is_assigned[vi]:
                return False
        return True

    def _assign(self, vi: int, val, queue: list) -> bool:
        if self.is_assigned[vi]:
            return self.assigned[vi] == val
        ki = self.val_index[vi].get(val)
        if ki is None or self.pruned[vi][ki]:
            return False
        self.assigned[vi] = val
        self.is_assigned[vi] = True
        self.trail.append(("assign", vi, None))
        for vj, vval in self.mutex_of.get((vi, val), ()):
            if self.is_assigned[vj]:
                if self.assigned[vj] == vval:
                    return False
            elif not self._prune(vj, vval):
                return False
        for ci in self.clause_of_var.get(vi, ()):
            hit = any(cvi == vi and cval == val for cvi, cval in self.clauses[ci])
            misses = sum(
                1 for cvi, cval in self.clauses[ci] if cvi == vi and cval != val
            )
            if hit:
                self.clause_sat[ci] += 1
                self.trail.append(("sat", ci, None))
            if misses:
                self.clause_open[ci] -= misses
                self.trail.append(("open", ci, misses))
            if self.clause_sat[ci]:
                continue
            if self.clause_open[ci] == 0:
                return False
            if self.clause_open[ci] == 1:
                unit = next(
                    (cvi, cval)
                    for cvi, cval in self.clauses[ci]
                    if not self.is_assigned[cvi]
                )
                queue.append(unit)
        return True

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            op, a, b = self.trail.pop()
            if op == "assign":
                self.is_assigned[a] = False
                self.assigned[a] = None
            elif op == "prune":
                self.pruned[a][b] -= 1
                if self.pruned[a][b] == 0:
                    self.avail[a] += 1
            elif op == "sat":
                self.clause_sat[a] -= 1
            else:  # open
                self.clause_open[a] += b

    def _propagate(self, vi: int, val) -> bool:
        queue: list[tuple[int, object]] = []
        if not self._assign(vi, val, queue):
            return False
        while queue:
            uvi, uval = queue.pop()
            if not self._assign(uvi, uval, queue):
                return False
        return True

    # -- search ----------------------------------------------------------
    def run(self, limit: int | None) -> SolveResult:
        solutions: list[Assignment] = []
        if any(a == 0 for a in self.avail):
            return SolveResult([], True)
        aborted = False
        vars_ = self.csp.variables

        def next_var(start: int) -> int:
            for pos in range(start, self.n):
                if not self.is_assigned[self.order[pos]]:
                    return pos
            return self.n

        def recurse(pos: int) -> bool:
            nonlocal aborted
            pos = next_var(pos)
            if pos == self.n:
                solutions.append(
                    Assignment({vars_[i]: self.assigned[i] for i in range(self.n)})
                )
                if limit is not None and len(solutions) >= limit:
                    aborted = True
                    return False
                return True
            vi = self.order[pos]
            for ki, val in enumerate(self.values[vi]):
                if self.pruned[vi][ki]:
                    continue
                mark = len(self.trail)
                ok = self._propagate(vi, val)
                if ok and not recurse(pos + 1):
                    return False
                self._undo_to(mark)
            return True

        recurse(0)
        return SolveResult(solutions, complete=not aborted)


def solve_exhaustive(
    csp: Csp, limit: int | None = None, restrict: dict | None = None
) -> SolveResult:
    """Enumerate solutions (up to `limit`); `restrict` narrows candidate values."""
    return _Enumerator(csp, restrict).run(limit)


def count_solutions(csp: Csp) -> int:
    return len(solve_exhaustive(csp).solutions)


@dataclass
class MinerResult:
    instances: list[Csp]
    attempts: int
    requested: int

    @property
    def shortfall(self) -> bool:
        return len(self.instances) < self.requested


def mine_unique_solution_instances(
    n_nodes: int,
    k_colors: int,
    seed: int,
    n_wanted: int,
    max_attempts: int = 4000,
) -> MinerResult:
    """Mine planar coloring instances with exactly one canonical solution class.

    Generates random planar colorings at high densities and keeps those whose
    full solution set collapses to a single color-permutation class.
    """
    from .problems import gen_planar_coloring
    from .readout import canonical_coloring

    if n_nodes > 12:
        raise ValueError("mining is restricted to n_nodes <= 12 (exhaustive counting)")
    densities = (1.0, 0.95, 0.9)
    found: list[Csp] = []
    attempts = 0
    while len(found) < n_wanted and attempts < max_attempts:
        density = densities[attempts % len(densities)]
        csp = gen_planar_coloring(n_nodes, density, k_colors, seed + attempts)
        attempts += 1
        sols = solve_exhaustive(csp).solutions
        if not sols:
            continue
        classes = {canonical_coloring(csp, a) for a in sols}
        if len(classes) == 1:
            found.append(csp)
    return MinerResult(found, attempts, n_wanted)


def exact_boltzmann(net) -> np.ndarray:
    """Exact stationary table p(x) = exp(-E(x)) / Z over all 2^n full states.

    State index encodes neuron i as bit i (principal neurons occupy the low
    bits). Includes auxiliary neurons; reduce with `principal_marginal`.
    """
    n = net.n_total
    if n > 20:
        raise ValueError(f"exact table infeasible for {n} neurons (max 20)")
    W = net.dense_weights()
    b = net.bias_vector()
    size = 1 << n
    log_p = np.empty(size, dtype=np.float64)
    chunk = 1 << 14
    for start in range(0, size, chunk):
        idx = np.arange(start, min(start + chunk, size), dtype=np.uint64)
        bits = ((idx[:, None] >> np.arange(n, dtype=np.uint64)) & np.uint64(1)).astype(
            np.float64
        )
        energy = -(bits @ b) - 0.5 * np.einsum("si,ij,sj->s", bits, W, bits)
        log_p[start : start + len(idx)] = -energy
    log_p -= log_p.max()
    probs = np.exp(log_p)
    probs /= probs.sum()
    return probs


def principal_marginal(net, full_table: np.ndarray) -> np.ndarray:
    """Sum the full-state table down to the principal-neuron state space."""
    n = net.n_total
    n_p = net.n_principal
    idx = np.arange(1 << n, dtype=np.int64)
    principal_idx = idx & ((1 << n_p) - 1)
    out = np.zeros(1 << n_p, dtype=np.float64)
    np.add.at(out, principal_idx, full_table)
    return out


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance 0.5 * sum |p - q|."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())
