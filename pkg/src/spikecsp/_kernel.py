"""Numba inner loop for the neural sampler.

Time is measured in picks; one sweep is N picks (N = total neuron count).
Activity is kept as an absolute deadline per neuron: x_i at pick t is
deadline[i] > t. A firing neuron at pick t gets deadline t + tau*N, so it is
observed active for exactly tau consecutive sweep-end observations, and it
may not re-fire at the very pick its window lapses (eligibility requires
deadline[i] < t). Those two details keep the single-neuron stationary
occupation at exactly tau*q / (tau*q + 1) for per-pick firing probability q.

Expiries are processed through a FIFO ring buffer (windows have a fixed
length, so deadlines are handled in fire order). The RNG is an inlined
SplitMix64; the pure-Python twin in sampler.py consumes the identical stream.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# scal[] slots
T = 0  # current pick index
QHEAD = 1
QLEN = 2
NEMPTY = 3  # variables with no active value neuron
NUNCOV = 4  # clauses with no active literal neuron
NACTIVE = 5
NREC = 6  # records written this call
NTRACE = 7  # trace rows written this call
SCAL_SLOTS = 8

REASON_DONE = 0
REASON_RECORDS_FULL = 1
REASON_TRACE_FULL = 2

MODE_RECORD = 1
MODE_HIST = 2
MODE_TRACE = 4

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _next_double(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, (z >> np.uint64(11)) * _INV53


@njit(cache=True)
def rng_stream(seed, count):
    """Expose the raw double stream (testing aid)."""
    out = np.empty(count, dtype=np.float64)
    state = np.uint64(seed)
    for k in range(count):
        state, r = _next_double(state)
        out[k] = r
    return out


@njit(cache=True)
def run_chunk(
    indptr,
    indices,
    wdata,
    biases,
    n_principal,
    var_of,
    lit_indptr,
    lit_clause,
    tau,
    deadline,
    q_dead,
    q_neuron,
    varcount,
    clausecount,
    words,
    last_words,
    scal,
    fstate,
    rng,
    max_sweeps,
    mode,
    rec_sweeps,
    rec_words,
    hist,
    trace_rows,
):
    n_total = deadline.shape[0]
    tau_picks = np.int64(tau) * np.int64(n_total)
    inv_tau = 1.0 / tau
    log_tau = np.log(np.float64(tau))
    n_words = words.shape[0]
    rec_cap = rec_sweeps.shape[0]
    trace_cap = trace_rows.shape[0]

    t = scal[T]
    qhead = scal[QHEAD]
    qlen = scal[QLEN]
    state = rng[0]
    energy = fstate[0]
    trace = (mode & MODE_TRACE) != 0
    record = (mode & MODE_RECORD) != 0
    use_hist = (mode & MODE_HIST) != 0
    reason = REASON_DONE

    while True:
        # expire lapsed windows (x becomes 0 at the pick where deadline == t)
        while qlen > 0 and q_dead[qhead] <= t:
            j = q_neuron[qhead]
            qhead = (qhead + 1) % n_total
            qlen -= 1
            scal[NACTIVE] -= 1
            if trace:
                u = biases[j]
                for k in range(indptr[j], indptr[j + 1]):
                    if deadline[indices[k]] > t:
                        u += wdata[k]
                energy += u
            if j < n_principal:
                words[j >> 6] &= ~(np.uint64(1) << np.uint64(j & 63))
                v = var_of[j]
                varcount[v] -= 1
                if varcount[v] == 0:
                    scal[NEMPTY] += 1
                for k in range(lit_indptr[j], lit_indptr[j + 1]):
                    c = lit_clause[k]
                    clausecount[c] -= 1
                    if clausecount[c] == 0:
                        scal[NUNCOV] += 1

        state, r = _next_double(state)
        i = np.int64(r * n_total)
        if i >= n_total:
            i = n_total - 1
        if deadline[i] < t:  # inactive and not expired this very pick
            u = biases[i]
            for k in range(indptr[i], indptr[i + 1]):
                if deadline[indices[k]] > t:
                    u += wdata[k]
            if u >= log_tau:
                p = 1.0
            else:
                p = np.exp(u) * inv_tau
            state, r2 = _next_double(state)
            if r2 < p:
                deadline[i] = t + tau_picks
                tail = (qhead + qlen) % n_total
                q_dead[tail] = t + tau_picks
                q_neuron[tail] = i
                qlen += 1
                scal[NACTIVE] += 1
                if trace:
                    energy -= u
                if i < n_principal:
                    words[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
                    v = var_of[i]
                    varcount[v] += 1
                    if varcount[v] == 1:
                        scal[NEMPTY] -= 1
                    for k in range(lit_indptr[i], lit_indptr[i + 1]):
                        c = lit_clause[k]
                        clausecount[c] += 1
                        if clausecount[c] == 1:
                            scal[NUNCOV] -= 1

        t += 1
        if t % n_total == 0:
            sweep = t // n_total - 1  # 0-based index of the sweep just ended
            if record and scal[NEMPTY] == 0 and scal[NUNCOV] == 0:
                changed = False
                for w in range(n_words):
                    if words[w] != last_words[w]:
                        changed = True
                        break
                if changed:
                    nrec = scal[NREC]
                    rec_sweeps[nrec] = sweep
                    for w in range(n_words):
                        rec_words[nrec, w] = words[w]
                        last_words[w] = words[w]
                    scal[NREC] = nrec + 1
                    if nrec + 1 == rec_cap:
                        reason = REASON_RECORDS_FULL
            if use_hist:
                hist[words[0]] += 1
            if trace:
                nt = scal[NTRACE]
                trace_rows[nt, 0] = sweep
                trace_rows[nt, 1] = energy
                trace_rows[nt, 2] = scal[NACTIVE]
                scal[NTRACE] = nt + 1
                if nt + 1 == trace_cap and sweep + 1 < max_sweeps:
                    reason = REASON_TRACE_FULL
            if sweep + 1 >= max_sweeps:
                reason = REASON_DONE
                break
            if reason != REASON_DONE:
                break

    scal[T] = t
    scal[QHEAD] = qhead
    scal[QLEN] = qlen
    rng[0] = state
    fstate[0] = energy
    return reason
