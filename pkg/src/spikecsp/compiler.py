"""CSP -> stochastic spiking network compiler.

Every (variable, value) pair becomes a principal neuron. Motifs add energy
penalties: per-variable WTA (pairwise inhibition among the variable's value
neurons, strength set by the degree heuristic), mutex WTA (inhibition across
the two neurons named by a mutex constraint), OR motifs (a push/veto
auxiliary pair per clause that raises energy when all literal neurons are
inactive), and a positive activity bias per principal neuron.

Energy of a binary state x is E(x) = -sum_i b_i x_i - 1/2 sum_ij w_ij x_i x_j
with symmetric weights and zero diagonal; all weights and biases are owned by
exactly one motif, so the per-motif breakdown sums exactly to the total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .csp import Clause, Csp, MutexPair, variable_degree


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class CompilerParams:
    w_max: float = 2.0
    bias_default: float = 1.0
    or_push_strength: float = 0.4
    heuristic_enabled: bool = True
    # singleton-domain variables get bias_default * singleton_bias_factor
    singleton_bias_factor: float = 4.0
    # bias of the OR push auxiliary; sets how quickly an unsatisfied clause
    # starts driving its literals. Shifts every state's clause term by the
    # same constant, so energy orderings are independent of it.
    or_push_bias: float | None = None
    # literal->veto coupling; must stay <= or_push_strength so the veto
    # branches never undercut the push branch of the clause energy envelope
    or_veto_strength: float | None = None
    # exact all-literals-false penalty, encoded over the complement-value
    # neurons of Boolean literals (flat elsewhere, so satisfied states are
    # not rewarded for extra active literals). 0 disables it.
    or_false_penalty: float = 2.0
    # substitution-penalty multiplier for the ancilla fold (m = margin*theta);
    # >= 1 keeps the folded penalty exact at energy minima, smaller values
    # soften the ancilla's grip on the neurons it senses
    or_penalty_margin: float = 1.5

    def __post_init__(self):
        if self.w_max <= 0:
            raise CompileError("w_max must be positive")
        if self.or_push_strength <= 0:
            raise CompileError("or_push_strength must be positive")
        if self.or_veto_strength is not None and not (
            0 < self.or_veto_strength <= self.or_push_strength
        ):
            raise CompileError("or_veto_strength must be in (0, or_push_strength]")
        if self.or_false_penalty < 0:
            raise CompileError("or_false_penalty must be >= 0")

    @property
    def push_bias(self) -> float:
        if self.or_push_bias is not None:
            return self.or_push_bias
        return max(self.or_push_strength, self.bias_default)

    @property
    def veto_strength(self) -> float:
        if self.or_veto_strength is not None:
            return self.or_veto_strength
        return self.or_push_strength / 2


def heuristic_weight(degree: int, domain_size: int, w_max: float) -> float:
    """Degree-scaled WTA weight: w_max once degree reaches domain_size - 1,
    proportional below."""
    if domain_size < 2:
        raise CompileError("WTA weight undefined for domain size < 2")
    if degree < 0:
        raise CompileError("degree must be non-negative")
    if degree >= domain_size - 1:
        return float(w_max)
    return degree / (domain_size - 1) * w_max


@dataclass(frozen=True)
class MotifInstance:
    kind: str  # variable_wta | mutex_wta | or_clause | bias
    members: tuple[int, ...]
    strength: float
    source: object  # variable id or constraint index
    couplings: tuple[tuple[int, int, float], ...] = ()
    aux_biases: tuple[tuple[int, float], ...] = ()


class Network:
    """Compiled spiking network; immutable after construction."""

    def __init__(
        self,
        n_principal: int,
        n_auxiliary: int,
        neuron_map: tuple[tuple[object, object], ...],
        biases: np.ndarray,
        motifs: tuple[MotifInstance, ...],
        variables: tuple,
        domains: dict,
    ):
        self.n_principal = n_principal
        self.n_auxiliary = n_auxiliary
        self.neuron_map = neuron_map  # principal id -> (variable, value)
        self.biases = biases
        self.motifs = motifs
        self.variables = variables
        self.domains = domains
        self.neuron_of: dict[tuple[object, object], int] = {
            pair: i for i, pair in enumerate(neuron_map)
        }
        weights: dict[tuple[int, int], float] = {}
        for m in motifs:
            for i, j, w in m.couplings:
                key = (min(i, j), max(i, j))
                weights[key] = weights.get(key, 0.0) + w
        self.weights = {k: w for k, w in sorted(weights.items()) if w != 0.0}
        self._csr = None
        self._clause_lits: tuple[tuple[int, ...], ...] | None = None

    @property
    def n_total(self) -> int:
        return self.n_principal + self.n_auxiliary

    def bias_vector(self) -> np.ndarray:
        return self.biases

    def dense_weights(self) -> np.ndarray:
        W = np.zeros((self.n_total, self.n_total), dtype=np.float64)
        for (i, j), w in self.weights.items():
            W[i, j] = w
            W[j, i] = w
        return W

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency in CSR form (both directions stored)."""
        if self._csr is None:
            n = self.n_total
            counts = np.zeros(n + 1, dtype=np.int64)
            for i, j in self.weights:
                counts[i + 1] += 1
                counts[j + 1] += 1
            indptr = np.cumsum(counts)
            indices = np.zeros(indptr[-1], dtype=np.int64)
            data = np.zeros(indptr[-1], dtype=np.float64)
            fill = indptr[:-1].copy()
            for (i, j), w in self.weights.items():
                indices[fill[i]] = j
                data[fill[i]] = w
                fill[i] += 1
                indices[fill[j]] = i
                data[fill[j]] = w
                fill[j] += 1
            self._csr = (indptr, indices, data)
        return self._csr

    def clause_literal_ids(self) -> tuple[tuple[int, ...], ...]:
        """Principal neuron ids per or_clause motif, in motif order."""
        if self._clause_lits is None:
            self._clause_lits = tuple(
                tuple(n for n in m.members if n < self.n_principal)
                for m in self.motifs
                if m.kind == "or_clause"
            )
        return self._clause_lits

    def var_index_of_principal(self) -> np.ndarray:
        var_pos = {v: i for i, v in enumerate(self.variables)}
        return np.array(
            [var_pos[var] for var, _ in self.neuron_map], dtype=np.int64
        )

    def to_dump(self) -> dict:
        """Deterministic JSON-friendly listing of the whole network."""
        return {
            "n_principal": self.n_principal,
            "n_auxiliary": self.n_auxiliary,
            "neurons": [
                {
                    "id": i,
                    "role": "principal" if i < self.n_principal else "auxiliary",
                    "variable": str(self.neuron_map[i][0]) if i < self.n_principal else None,
                    "value": str(self.neuron_map[i][1]) if i < self.n_principal else None,
                    "bias": self.biases[i],
                }
                for i in range(self.n_total)
            ],
            "weights": [[i, j, w] for (i, j), w in self.weights.items()],
            "motifs": [
                {
                    "kind": m.kind,
                    "members": list(m.members),
                    "strength": m.strength,
                    "source": str(m.source),
                }
                for m in self.motifs
            ],
        }


def compile(csp: Csp, params: CompilerParams | None = None) -> Network:  # noqa: A001
    """Compile a Csp into a Network of principal + auxiliary neurons."""
    params = params or CompilerParams()
    neuron_map: list[tuple[object, object]] = []
    neuron_of: dict[tuple[object, object], int] = {}
    for var in csp.variables:
        for val in csp.domains[var]:
            neuron_of[(var, val)] = len(neuron_map)
            neuron_map.append((var, val))
    n_principal = len(neuron_map)

    motifs: list[MotifInstance] = []

    # bias motif per variable (Bias_1..Bias_N grouping)
    for var in csp.variables:
        members = tuple(neuron_of[(var, val)] for val in csp.domains[var])
        if csp.domain_size(var) == 1:
            b = params.bias_default * params.singleton_bias_factor
        else:
            b = params.bias_default
        motifs.append(
            MotifInstance(
                "bias", members, b, var, aux_biases=tuple((n, b) for n in members)
            )
        )

    # per-variable WTA over the domain neurons
    for var in csp.variables:
        d_size = csp.domain_size(var)
        if d_size < 2:
            continue
        if params.heuristic_enabled:
            w = heuristic_weight(variable_degree(csp, var), d_size, params.w_max)
        else:
            w = params.w_max
        members = tuple(neuron_of[(var, val)] for val in csp.domains[var])
        couplings = tuple((i, j, -w) for i, j in combinations(members, 2)) if w else ()
        motifs.append(MotifInstance("variable_wta", members, w, var, couplings))

    n_aux = 0
    aux_base = n_principal
    for idx, c in enumerate(csp.constraints):
        if isinstance(c, MutexPair):
            na, nb = neuron_of[c.a], neuron_of[c.b]
            motifs.append(
                MotifInstance(
                    "mutex_wta",
                    (na, nb),
                    params.w_max,
                    idx,
                    ((na, nb, -params.w_max),),
                )
            )
        elif isinstance(c, Clause):
            lits = tuple(neuron_of[lit] for lit in c.literals)
            s = params.or_push_strength
            e = params.veto_strength
            beta = params.push_bias
            k = len(lits)
            push = aux_base + n_aux
            veto = aux_base + n_aux + 1
            n_aux += 2
            # veto-push inhibition dominates the push's drive at any literal
            # count, so an active veto silences the push
            gate = beta + s * (k + 1)
            couplings = list(
                tuple((lit, push, s) for lit in lits)
                + tuple((lit, veto, e) for lit in lits)
                + ((push, veto, -gate),)
            )
            aux_biases = [(push, beta), (veto, -e / 2)]
            members = list(lits) + [push, veto]
            # exact violation penalty theta * prod(complements): the product
            # over complement-value neurons is quadratized with one ancilla
            # per fold (Rosenberg substitution, penalty weight m > theta)
            theta = params.or_false_penalty
            complements = []
            for var, val in c.literals:
                dom = csp.domains[var]
                if len(dom) != 2:
                    complements = []
                    break
                other = dom[0] if dom[1] == val else dom[1]
                complements.append(neuron_of[(var, other)])
            if theta > 0 and complements:
                members.extend(n for n in complements if n not in members)
                m = 1.5 * theta
                if k == 1:
                    aux_biases.append((complements[0], -theta))
                elif k == 2:
                    couplings.append((complements[0], complements[1], -theta))
                else:
                    carrier = complements[0]
                    for fold in range(k - 2):
                        w_aux = aux_base + n_aux
                        n_aux += 1
                        other = complements[fold + 1]
                        couplings.append((carrier, other, -m))
                        couplings.append((carrier, w_aux, 2 * m))
                        couplings.append((other, w_aux, 2 * m))
                        aux_biases.append((w_aux, -3 * m))
                        members.append(w_aux)
                        carrier = w_aux
                    couplings.append((carrier, complements[-1], -theta))
            motifs.append(
                MotifInstance(
                    "or_clause",
                    tuple(members),
                    s,
                    idx,
                    tuple(couplings),
                    aux_biases=tuple(aux_biases),
                )
            )

    biases = np.zeros(n_principal + n_aux, dtype=np.float64)
    for m in motifs:
        for n, b in m.aux_biases:
            biases[n] += b  # every bias term is owned by exactly one motif

    return Network(
        n_principal,
        n_aux,
        tuple(neuron_map),
        biases,
        tuple(motifs),
        csp.variables,
        dict(csp.domains),
    )


def energy(net: Network, x: np.ndarray) -> float:
    """E(x) = -sum b_i x_i - 1/2 sum_ij w_ij x_i x_j over the full state."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_total,):
        raise ValueError(f"state must have length {net.n_total}, got {x.shape}")
    e = -float(net.biases @ x)
    for (i, j), w in net.weights.items():
        e -= w * x[i] * x[j]
    return e


def energy_breakdown(net: Network, x: np.ndarray) -> dict[str, float]:
    """Per-motif-kind energy components {bias, wta, or}; sums to energy()."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_total,):
        raise ValueError(f"state must have length {net.n_total}, got {x.shape}")
    out = {"bias": 0.0, "wta": 0.0, "or": 0.0}
    for m in net.motifs:
        part = 0.0
        for n, b in m.aux_biases:
            part -= b * x[n]
        for i, j, w in m.couplings:
            part -= w * x[i] * x[j]
        if m.kind == "bias":
            out["bias"] += part
        elif m.kind == "or_clause":
            out["or"] += part
        else:
            out["wta"] += part
    return out
