"""Decoding network states into multi-valued assignments and concrete
solutions, plus color-permutation canonicalization for diversity analysis.

A variable may hold any subset of its domain (its active value neurons).
Expanding such a multi-assignment enumerates the consistent members of the
Cartesian product of the per-variable sets; every returned assignment is
re-verified against the CSP before it leaves this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import Network
from .csp import Assignment, Csp, CspError, check_assignment
from .oracle import solve_exhaustive


class NotExpandable(ValueError):
    """Raised when a multi-assignment has an empty variable set."""


@dataclass(frozen=True)
class MultiAssignment:
    """Per-variable value sets, aligned with the CSP's variable order.

    Each entry is a tuple of values in domain order; empty tuples mark
    variables with no active value neuron.
    """

    sets: tuple[tuple, ...]

    def product_size(self) -> int:
        size = 1
        for s in self.sets:
            size *= len(s)
        return size


def decode(net: Network, s) -> MultiAssignment:
    """Active (variable, value) neurons -> per-variable value sets.

    `s` may be a SamplerState or a raw binary vector; auxiliary neurons are
    ignored.
    """
    x = np.asarray(getattr(s, "x", s))
    if x.shape[0] not in (net.n_total, net.n_principal):
        raise ValueError(f"state length {x.shape[0]} does not fit network")
    active: dict[object, list] = {v: [] for v in net.variables}
    for n in range(net.n_principal):
        if x[n]:
            var, val = net.neuron_map[n]
            active[var].append(val)
    return MultiAssignment(
        tuple(
            tuple(val for val in net.domains[var] if val in active[var])
            for var in net.variables
        )
    )


def decode_bits(net: Network, words: np.ndarray) -> MultiAssignment:
    """Decode from the packed uint64 principal-state words the kernel records."""
    active: dict[object, list] = {v: [] for v in net.variables}
    for n in range(net.n_principal):
        if (int(words[n >> 6]) >> (n & 63)) & 1:
            var, val = net.neuron_map[n]
            active[var].append(val)
    return MultiAssignment(
        tuple(
            tuple(val for val in net.domains[var] if val in active[var])
            for var in net.variables
        )
    )


def expand_solutions(
    m: MultiAssignment, csp: Csp, cap: int = 4096
) -> tuple[list[Assignment], bool]:
    """All verified solutions in the product of the per-variable sets.

    Returns (solutions, truncated). A product larger than `cap` is not
    examined at all and comes back as ([], True): the expansion is a bounded
    product enumeration, never a search, so the sampler cannot outsource
    solving to it. Raises NotExpandable if some variable has an empty set.
    """
    if len(m.sets) != csp.n_variables:
        raise ValueError("multi-assignment does not match CSP variables")
    for var, vals in zip(csp.variables, m.sets):
        if not vals:
            raise NotExpandable(f"variable {var!r} has an empty value set")
    if m.product_size() > cap:
        return [], True
    restrict = {var: set(vals) for var, vals in zip(csp.variables, m.sets)}
    result = solve_exhaustive(csp, restrict=restrict)
    solutions = []
    for a in result.solutions:
        verdict = check_assignment(csp, a)
        if not verdict.satisfied:  # contract bug guard; must never trigger
            raise AssertionError("expansion produced an invalid assignment")
        solutions.append(a)
    return solutions, False


def canonical_coloring(csp: Csp, a: Assignment) -> tuple[int, ...]:
    """Relabel colors by first appearance over the variable order.

    Two colorings get equal canonical forms iff they differ only by a color
    permutation.
    """
    if csp.kind != "coloring":
        raise CspError(f"canonical_coloring requires a coloring CSP, got {csp.kind!r}")
    relabel: dict = {}
    out = []
    for var in csp.variables:
        val = a.values[var]
        if val not in relabel:
            relabel[val] = len(relabel) + 1
        out.append(relabel[val])
    return tuple(out)


def solution_class(csp: Csp, a: Assignment) -> str:
    """Stable class label: color-permutation class for colorings, the
    assignment itself otherwise."""
    if csp.kind == "coloring":
        return ",".join(map(str, canonical_coloring(csp, a)))
    return ",".join(str(a.values[v]) for v in csp.variables)


def diversity_report(solutions: list[Assignment], csp: Csp) -> dict:
    """{n_solutions, n_classes, duplicate_count} over a solution list."""
    tuples = [a.as_tuple(csp) for a in solutions]
    classes = {solution_class(csp, a) for a in solutions}
    return {
        "n_solutions": len(solutions),
        "n_classes": len(classes),
        "duplicate_count": len(tuples) - len(set(tuples)),
    }
