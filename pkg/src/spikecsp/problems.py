"""Parsers and generators for the benchmark problem families.

Formats:
  * DIMACS CNF (SATLIB conventions): `p cnf <nvars> <nclauses>`, clauses as
    signed ints terminated by 0, `c` comment lines, trailing `%`/`0` lines
    tolerated.
  * Coloring adjacency list: header `nodes <n> colors <k>`, one `u v` edge
    per line, `#` comments.
  * Sudoku: 81-character row-major string, `0` or `.` for blanks.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from .csp import Clause, Csp, CspError, MutexPair


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(message + suffix)


def parse_dimacs(text: str) -> Csp:
    """Parse DIMACS CNF into a Boolean Csp (domain (True, False) per variable)."""
    n_vars = None
    n_clauses = None
    clauses: list[Clause] = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if n_vars is not None:
                raise ParseError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed header {line!r}", lineno)
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed header {line!r}", lineno) from None
            continue
        if n_vars is None:
            raise ParseError("clause before header", lineno)
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"bad literal in {line!r}", lineno) from None
        for lit in lits:
            if lit == 0:
                if pending:
                    seen: list[tuple[int, bool]] = []
                    for k in pending:
                        pair = (abs(k), k > 0)
                        if pair not in seen:
                            seen.append(pair)
                    clauses.append(Clause(tuple(seen)))
                    pending = []
                continue
            if abs(lit) > n_vars:
                raise ParseError(f"literal {lit} out of range 1..{n_vars}", lineno)
            pending.append(lit)
    # SATLIB files frequently omit the final 0 on the last clause
    if pending:
        seen = []
        for k in pending:
            pair = (abs(k), k > 0)
            if pair not in seen:
                seen.append(pair)
        clauses.append(Clause(tuple(seen)))
    if n_vars is None:
        raise ParseError("missing `p cnf` header")
    if n_clauses is not None and len(clauses) != n_clauses:
        raise ParseError(f"header promises {n_clauses} clauses, found {len(clauses)}")
    variables = list(range(1, n_vars + 1))
    domains = {v: [True, False] for v in variables}
    return Csp(variables, domains, list(clauses), kind="sat")


def _delaunay_edges(points: np.ndarray) -> set[tuple[int, int]]:
    tri = Delaunay(points)
    edges: set[tuple[int, int]] = set()
    for simplex in tri.simplices:
        for i in range(3):
            u, v = int(simplex[i]), int(simplex[(i + 1) % 3])
            edges.add((min(u, v), max(u, v)))
    return edges


def planar_edges(n_nodes: int, density: float, seed: int) -> list[tuple[int, int]]:
    """Random planar edge list with floor(density * (3n - 6)) edges.

    Builds a Delaunay triangulation on seeded random points (planar by
    construction), then deletes uniformly random edges down to the target.
    """
    if n_nodes < 3:
        raise ValueError("need n_nodes >= 3")
    if not (0 < density <= 1):
        raise ValueError("density must be in (0, 1]")
    target = int(density * (3 * n_nodes - 6))
    if target < 1:
        raise ValueError(f"density {density} infeasible for n={n_nodes}")
    rng = np.random.default_rng(seed)
    edges: set[tuple[int, int]] = set()
    for _ in range(64):
        points = rng.random((n_nodes, 2))
        edges = _delaunay_edges(points)
        if len(edges) >= target:
            break
    else:
        raise ValueError(f"could not reach {target} planar edges for n={n_nodes}")
    ordered = sorted(edges)
    while len(ordered) > target:
        ordered.pop(int(rng.integers(len(ordered))))
    return ordered


def coloring_csp(n_nodes: int, edges: list[tuple[int, int]], k_colors: int) -> Csp:
    """k-coloring Csp over integer nodes: X_u != X_v as k same-color mutex pairs."""
    variables = list(range(n_nodes))
    domains = {v: list(range(k_colors)) for v in variables}
    constraints: list[MutexPair] = []
    for u, v in edges:
        for c in range(k_colors):
            constraints.append(MutexPair((u, c), (v, c)))
    return Csp(variables, domains, constraints, kind="coloring")


def gen_planar_coloring(n_nodes: int, density: float, k_colors: int, seed: int) -> Csp:
    """Random planar k-coloring instance; deterministic for a fixed seed."""
    edges = planar_edges(n_nodes, density, seed)
    return coloring_csp(n_nodes, edges, k_colors)


def parse_coloring(text: str) -> Csp:
    """Parse the adjacency-list coloring format (header `nodes <n> colors <k>`)."""
    n_nodes = None
    k_colors = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "nodes":
            if len(parts) != 4 or parts[2] != "colors":
                raise ParseError(f"malformed header {line!r}", lineno)
            n_nodes, k_colors = int(parts[1]), int(parts[3])
            continue
        if n_nodes is None:
            raise ParseError("edge before header", lineno)
        if len(parts) != 2:
            raise ParseError(f"expected `u v`, got {line!r}", lineno)
        u, v = int(parts[0]), int(parts[1])
        if not (0 <= u < n_nodes and 0 <= v < n_nodes) or u == v:
            raise ParseError(f"bad edge {u} {v}", lineno)
        edge = (min(u, v), max(u, v))
        if edge not in edges:
            edges.append(edge)
    if n_nodes is None or k_colors is None:
        raise ParseError("missing `nodes <n> colors <k>` header")
    return coloring_csp(n_nodes, edges, k_colors)


SUDOKU_UNITS: list[list[int]] = (
    [[r * 9 + c for c in range(9)] for r in range(9)]
    + [[r * 9 + c for r in range(9)] for c in range(9)]
    + [
        [(br + r) * 9 + (bc + c) for r in range(3) for c in range(3)]
        for br in (0, 3, 6)
        for bc in (0, 3, 6)
    ]
)


def parse_sudoku(text: str) -> list[int]:
    """81-char row-major grid string -> list of ints, 0 for blank."""
    cells = [ch for ch in text if not ch.isspace()]
    if len(cells) != 81:
        raise ParseError(f"expected 81 cells, got {len(cells)}")
    grid = []
    for ch in cells:
        if ch in "0.":
            grid.append(0)
        elif ch.isdigit():
            grid.append(int(ch))
        else:
            raise ParseError(f"bad cell {ch!r}")
    return grid


def sudoku_to_csp(grid: list[int] | str) -> Csp:
    """Sudoku as 81 variables with pairwise same-unit mutex constraints.

    Givens are encoded by restricting the cell's domain to a singleton.
    """
    if isinstance(grid, str):
        grid = parse_sudoku(grid)
    if len(grid) != 81:
        raise CspError("grid must have 81 cells")
    for unit in SUDOKU_UNITS:
        given = [grid[i] for i in unit if grid[i] != 0]
        if len(given) != len(set(given)):
            raise CspError("contradictory givens: duplicate in a unit")
    variables = list(range(81))
    domains = {
        i: ([grid[i]] if grid[i] != 0 else list(range(1, 10))) for i in variables
    }
    pairs: set[tuple[int, int]] = set()
    for unit in SUDOKU_UNITS:
        for i, u in enumerate(unit):
            for v in unit[i + 1 :]:
                pairs.add((min(u, v), max(u, v)))
    constraints: list[MutexPair] = []
    for u, v in sorted(pairs):
        for val in range(1, 10):
            if val in domains[u] and val in domains[v]:
                constraints.append(MutexPair((u, val), (v, val)))
    return Csp(variables, domains, constraints, kind="sudoku")


def ising_to_csp(topology: str, coupling: str, **size) -> Csp:
    """Spin system as a CSP over domain (+1, -1).

    topology: "ring" (size n) or "cube" (sizes nx, ny, nz); coupling:
    "ferro" (edges prefer equal spins) or "antiferro" (unequal). Ground
    states of the model are exactly the CSP solutions.
    """
    if coupling not in ("ferro", "antiferro"):
        raise ValueError(f"unknown coupling {coupling!r}")
    if topology == "ring":
        n = size["n"]
        if n < 2:
            raise ValueError("ring needs n >= 2")
        variables = list(range(n))
        edges = sorted({(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)})
    elif topology == "cube":
        nx, ny, nz = size["nx"], size["ny"], size["nz"]
        if min(nx, ny, nz) < 2:
            raise ValueError("cube needs every dimension >= 2")
        idx = lambda x, y, z: (x * ny + y) * nz + z
        variables = list(range(nx * ny * nz))
        edges = []
        for x in range(nx):
            for y in range(ny):
                for z in range(nz):
                    if x + 1 < nx:
                        edges.append((idx(x, y, z), idx(x + 1, y, z)))
                    if y + 1 < ny:
                        edges.append((idx(x, y, z), idx(x, y + 1, z)))
                    if z + 1 < nz:
                        edges.append((idx(x, y, z), idx(x, y, z + 1)))
    else:
        raise ValueError(f"unknown topology {topology!r}")
    domains = {v: [1, -1] for v in variables}
    constraints: list[MutexPair] = []
    for u, v in edges:
        if coupling == "antiferro":
            constraints.append(MutexPair((u, 1), (v, 1)))
            constraints.append(MutexPair((u, -1), (v, -1)))
        else:
            constraints.append(MutexPair((u, 1), (v, -1)))
            constraints.append(MutexPair((u, -1), (v, 1)))
    return Csp(variables, domains, constraints, kind="ising")


def _parse_kv(spec: str) -> dict[str, str]:
    out = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ParseError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_problem(source: str) -> Csp:
    """Resolve a problem from a file path or an inline spec string.

    Inline specs: `planar:n=9,density=0.8,k=4,seed=1`,
    `ising:ring,n=10,coupling=antiferro`,
    `ising:cube,nx=2,ny=2,nz=2,coupling=ferro`, `k3`, `k4`.
    File extensions: .cnf (DIMACS), .col (adjacency), .sdk (sudoku).
    """
    if source == "k3":
        return coloring_csp(3, [(0, 1), (0, 2), (1, 2)], 3)
    if source == "k4":
        return coloring_csp(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 4)
    if source.startswith("planar:"):
        kv = _parse_kv(source[len("planar:"):])
        return gen_planar_coloring(
            int(kv["n"]), float(kv.get("density", "0.8")), int(kv.get("k", "4")),
            int(kv.get("seed", "0")),
        )
    if source.startswith("ising:"):
        body = source[len("ising:"):]
        topo, _, rest = body.partition(",")
        kv = _parse_kv(rest)
        coupling = kv.pop("coupling", "antiferro")
        return ising_to_csp(topo, coupling, **{k: int(v) for k, v in kv.items()})
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"no such problem file: {source}")
    text = path.read_text()
    ext = path.suffix.lower()
    if ext == ".cnf":
        return parse_dimacs(text)
    if ext == ".col":
        return parse_coloring(text)
    if ext == ".sdk":
        return sudoku_to_csp(text)
    raise ParseError(f"cannot infer format of {source!r} (use .cnf/.col/.sdk)")


def problem_text_to_csp(fmt: str, text: str) -> Csp:
    """Build a Csp from raw text in a named format (service entry point)."""
    if fmt == "dimacs":
        return parse_dimacs(text)
    if fmt == "coloring":
        return parse_coloring(text)
    if fmt == "sudoku":
        return sudoku_to_csp(text)
    if fmt == "inline":
        spec = text.strip()
        if spec in ("k3", "k4") or spec.startswith(("planar:", "ising:")):
            return load_problem(spec)
        raise ParseError(f"inline spec must be k3/k4/planar:/ising:, got {spec!r}")
    raise ParseError(f"unknown problem format {fmt!r}")
