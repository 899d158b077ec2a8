"""CSP data model: variables, finite domains, mutex/clause constraints.

The model is deliberately small: a constraint is either a pairwise mutual
exclusion of two (variable, value) assignments, or a disjunctive clause over
(variable, value) literals ("at least one of these assignments holds").
All-different structure (e.g. Sudoku units) is decomposed into mutex pairs
by the problem builders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Hashable

Value = Hashable
VarId = Hashable
Literal = tuple[VarId, Value]  # "variable == value"


class CspError(ValueError):
    """Raised for structurally invalid CSPs, constraints or assignments."""


@dataclass(frozen=True)
class MutexPair:
    """The two assignments `a` and `b` may not hold simultaneously."""

    a: Literal
    b: Literal

    def variables(self) -> tuple[VarId, ...]:
        return (self.a[0], self.b[0])


@dataclass(frozen=True)
class Clause:
    """At least one of `literals` must hold."""

    literals: tuple[Literal, ...]

    def variables(self) -> tuple[VarId, ...]:
        return tuple(var for var, _ in self.literals)


Constraint = MutexPair | Clause


@dataclass(frozen=True)
class CheckResult:
    satisfied: bool
    violations: tuple[int, ...]  # indices into csp.constraints


class Csp:
    """Immutable constraint satisfaction problem instance.

    `variables` is an ordered list of variable ids, `domains` maps each
    variable to its ordered value list, `constraints` is a list of
    MutexPair/Clause. `kind` tags the problem family (sat | coloring |
    sudoku | ising | generic).
    """

    def __init__(
        self,
        variables: list[VarId],
        domains: dict[VarId, list[Value]],
        constraints: list[Constraint],
        kind: str = "generic",
    ):
        self.variables: tuple[VarId, ...] = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise CspError("duplicate variable ids")
        self.domains: dict[VarId, tuple[Value, ...]] = {}
        for v in self.variables:
            dom = tuple(domains[v])
            if not dom:
                raise CspError(f"empty domain for variable {v!r}")
            if len(set(dom)) != len(dom):
                raise CspError(f"duplicate values in domain of {v!r}")
            self.domains[v] = dom
        self.constraints: tuple[Constraint, ...] = tuple(constraints)
        self.kind = kind
        self.var_index: dict[VarId, int] = {v: i for i, v in enumerate(self.variables)}
        self._validate_constraints()
        self._adjacency: dict[VarId, tuple[VarId, ...]] | None = None

    def _check_literal(self, lit: Literal, what: str) -> None:
        var, val = lit
        if var not in self.var_index:
            raise CspError(f"{what} references undeclared variable {var!r}")
        if val not in self.domains[var]:
            raise CspError(f"{what} references out-of-domain value {val!r} for {var!r}")

    def _validate_constraints(self) -> None:
        for idx, c in enumerate(self.constraints):
            if isinstance(c, MutexPair):
                self._check_literal(c.a, f"mutex #{idx}")
                self._check_literal(c.b, f"mutex #{idx}")
                if c.a == c.b:
                    raise CspError(f"mutex #{idx} endpoints identical")
            elif isinstance(c, Clause):
                if not c.literals:
                    raise CspError(f"clause #{idx} is empty")
                if len(set(c.literals)) != len(c.literals):
                    raise CspError(f"clause #{idx} has duplicate literals")
                for lit in c.literals:
                    self._check_literal(lit, f"clause #{idx}")
            else:
                raise CspError(f"unknown constraint type {type(c).__name__}")

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def domain_size(self, var: VarId) -> int:
        return len(self.domains[var])

    def to_json(self) -> str:
        """Canonical JSON form; equal CSPs serialize byte-identically."""
        cons = []
        for c in self.constraints:
            if isinstance(c, MutexPair):
                cons.append(["mutex", list(c.a), list(c.b)])
            else:
                cons.append(["clause", [list(l) for l in c.literals]])
        payload = {
            "kind": self.kind,
            "variables": list(self.variables),
            "domains": [list(self.domains[v]) for v in self.variables],
            "constraints": cons,
        }
        return json.dumps(payload, separators=(",", ":"), default=str)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Csp) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash(self.to_json())

    def __repr__(self) -> str:
        return (
            f"Csp(kind={self.kind!r}, n_vars={self.n_variables}, "
            f"n_constraints={len(self.constraints)})"
        )


def constraint_graph(csp: Csp) -> dict[VarId, tuple[VarId, ...]]:
    """Undirected constraint graph: edge (u, v) iff some constraint couples them.

    A clause contributes pairwise edges between every pair of its variables;
    parallel constraints collapse to one edge; no self-loops.
    """
    if csp._adjacency is not None:
        return csp._adjacency
    neigh: dict[VarId, set[VarId]] = {v: set() for v in csp.variables}
    for c in csp.constraints:
        vars_ = c.variables()
        for i, u in enumerate(vars_):
            for v in vars_[i + 1 :]:
                if u != v:
                    neigh[u].add(v)
                    neigh[v].add(u)
    order = csp.var_index
    adjacency = {v: tuple(sorted(neigh[v], key=order.__getitem__)) for v in csp.variables}
    csp._adjacency = adjacency
    return adjacency


def variable_degree(csp: Csp, var: VarId) -> int:
    """Degree of `var` in the constraint graph."""
    if var not in csp.var_index:
        raise CspError(f"unknown variable {var!r}")
    return len(constraint_graph(csp)[var])


@dataclass(frozen=True)
class Assignment:
    """Complete or partial mapping variable -> value."""

    values: dict[VarId, Value] = field(default_factory=dict)

    def is_complete(self, csp: Csp) -> bool:
        return all(v in self.values for v in csp.variables)

    def as_tuple(self, csp: Csp) -> tuple[Value, ...]:
        return tuple(self.values[v] for v in csp.variables)


def check_assignment(csp: Csp, a: Assignment) -> CheckResult:
    """Evaluate a complete assignment; returns violated constraint indices."""
    for v in csp.variables:
        if v not in a.values:
            raise CspError(f"assignment incomplete: missing {v!r}")
        if a.values[v] not in csp.domains[v]:
            raise CspError(f"assignment value {a.values[v]!r} not in domain of {v!r}")
    violations = []
    for idx, c in enumerate(csp.constraints):
        if isinstance(c, MutexPair):
            if a.values[c.a[0]] == c.a[1] and a.values[c.b[0]] == c.b[1]:
                violations.append(idx)
        else:
            if not any(a.values[var] == val for var, val in c.literals):
                violations.append(idx)
    return CheckResult(satisfied=not violations, violations=tuple(violations))
