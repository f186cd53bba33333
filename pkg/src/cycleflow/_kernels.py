"""Hot loops.

Deterministic kernels (orbit walks) come in two interchangeable forms: a
scalar walk that numba compiles, and a vectorised numpy sweep used when
the interpreter has to run them.  Both accumulate in step-major order so
float results agree bit for bit.

Random-number kernels exist in a single scalar form; the numpy backend
runs the same source interpreted, on the same ``numpy.random.Generator``
stream, so simulations are reproducible across backends.

Status codes returned by kernels: 0 ok, 1 step budget exhausted,
2 record buffer too small (caller grows it and reruns the chunk).
"""

import numpy as np

from ._backend import USING_NUMBA, compile_kernel


# ---------------------------------------------------------------------------
# deterministic orbit kernels


def _hitting_walk(mapping, in_set):
    # times[i] = least n >= 1 with map^n(i) in the set, -1 if none within m
    # steps; entry[i] = the point first entered (i itself when never).
    m = mapping.shape[0]
    times = np.full(m, -1, dtype=np.int64)
    entry = np.arange(m)
    for i in range(m):
        x = mapping[i]
        n = 1
        while n <= m and not in_set[x]:
            x = mapping[x]
            n += 1
        if n <= m:
            times[i] = n
            entry[i] = x
    return times, entry


def _hitting_sweep(mapping, in_set):
    m = mapping.shape[0]
    times = np.full(m, -1, dtype=np.int64)
    entry = np.arange(m)
    cur = mapping.copy()
    for n in range(1, m + 1):
        hit = (times == -1) & in_set[cur]
        times[hit] = n
        entry[hit] = cur[hit]
        if n < m:
            cur = mapping[cur]
    return times, entry


def _excursion_walk(mapping, in_set, start_idx, start_wt):
    # Spread each start weight over its orbit until the orbit re-enters the
    # set; the entry point itself is not counted.  Start points must carry
    # positive weight; a walker that fails to return within m steps means
    # the caller's model contradicts itself (status 1).
    m = mapping.shape[0]
    values = np.zeros(m)
    k = start_idx.shape[0]
    cur = start_idx.copy()
    alive = np.ones(k, dtype=np.bool_)
    n_alive = k
    steps = 0
    while n_alive > 0:
        if steps > m:
            return values, 1
        for j in range(k):
            if alive[j]:
                values[cur[j]] += start_wt[j]
        for j in range(k):
            if alive[j]:
                nxt = mapping[cur[j]]
                if in_set[nxt]:
                    alive[j] = False
                    n_alive -= 1
                else:
                    cur[j] = nxt
        steps += 1
    return values, 0


def _excursion_sweep(mapping, in_set, start_idx, start_wt):
    m = mapping.shape[0]
    values = np.zeros(m)
    cur = start_idx.copy()
    wt = start_wt.copy()
    steps = 0
    while cur.size > 0:
        if steps > m:
            return values, 1
        np.add.at(values, cur, wt)
        nxt = mapping[cur]
        keep = ~in_set[nxt]
        cur = nxt[keep]
        wt = wt[keep]
        steps += 1
    return values, 0


def _backward_hits_walk(inv_mapping, in_set):
    # Does the strict backward orbit {inv(i), inv^2(i), ...} meet the set?
    m = inv_mapping.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        x = i
        for _ in range(m):
            x = inv_mapping[x]
            if in_set[x]:
                out[i] = True
                break
    return out


def _backward_hits_sweep(inv_mapping, in_set):
    m = inv_mapping.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    cur = inv_mapping.copy()
    for _ in range(m):
        out |= in_set[cur]
        cur = inv_mapping[cur]
    return out


# ---------------------------------------------------------------------------
# random-number kernels (single source for both backends)


def _draw_index(gen, cum):
    # cum is a cumulative row ending at ~1; clamp guards the float tail.
    idx = np.searchsorted(cum, gen.random(), side="right")
    if idx >= cum.shape[0]:
        idx = cum.shape[0] - 1
    return idx


def _markov_cycle_batch(gen, row_cum, base, occ, lengths, budget):
    # Generate len(lengths) independent return cycles from `base`.
    # occ[c, x] counts visits to x during cycle c, the start included and
    # the closing return excluded; lengths[c] is the return time.
    c_total = lengths.shape[0]
    steps = 0
    for c in range(c_total):
        occ[c, base] += 1
        x = base
        t = 0
        while True:
            x = _draw_index(gen, row_cum[x])
            t += 1
            steps += 1
            if x == base:
                lengths[c] = t
                break
            occ[c, x] += 1
            if steps >= budget:
                return steps, 1
    return steps, 0


def _bridge_step(gen, k_raw, kpow, prev, target, steps_left):
    # One interior state of a pinned block: with steps_left transitions
    # remaining from prev to target, the next state s has law
    # K(prev, s) * K^(steps_left-1)(s, target) / K^steps_left(prev, target).
    total = kpow[steps_left, prev, target]
    u = gen.random() * total
    acc = 0.0
    last = 0
    n = k_raw.shape[0]
    for s in range(n):
        w = k_raw[prev, s] * kpow[steps_left - 1, s, target]
        if w > 0.0:
            acc += w
            last = s
            if u < acc:
                return s
    return last


def _block_states(gen, branch, x0, k_raw, k_cum, lam_cum, res_row_cum, kpow, ell, out):
    # branch 0: ell plain one-step draws from x0.
    # branch 1: endpoint from lam, interior pinned by the bridge law.
    # branch 2: endpoint from the residual row of x0, interior bridged.
    if branch == 0:
        prev = x0
        for j in range(ell):
            prev = _draw_index(gen, k_cum[prev])
            out[j] = prev
    else:
        if branch == 1:
            xl = _draw_index(gen, lam_cum)
        else:
            xl = _draw_index(gen, res_row_cum)
        prev = x0
        for j in range(1, ell):
            s = _bridge_step(gen, k_raw, kpow, prev, xl, ell - j + 1)
            out[j - 1] = s
            prev = s
        out[ell - 1] = xl


def _split_chain_batch(gen, k_raw, k_cum, lam_cum, res_cum, kpow, in_regen,
                       eps, ell, occ, lengths, regen_states, record, traj,
                       marks, budget):
    # Run the split chain until len(lengths) regenerations occur.  Blocks
    # start at multiples of ell; a coin with success probability eps is
    # tossed whenever a block starts inside the small set, and success
    # makes the block end a regeneration with endpoint drawn from lam.
    # Cycle c covers the half-open time window between regenerations;
    # regen_states[c] is the endpoint that closed it.
    c_total = lengths.shape[0]
    block = np.empty(ell, dtype=np.int64)
    x = _draw_index(gen, lam_cum)
    pos = 0
    c = 0
    start = 0
    blocks = 0
    occ[0, x] += 1
    if record:
        if traj.shape[0] < 1:
            return 0, 0, 0, 2
        traj[0] = x
    while True:
        if record and (pos + ell >= traj.shape[0] or blocks >= marks.shape[0]):
            return c, pos, blocks, 2
        regen = False
        if in_regen[x]:
            zeta = 1 if gen.random() < eps else 0
            if record:
                marks[blocks] = zeta
            if zeta == 1:
                _block_states(gen, 1, x, k_raw, k_cum, lam_cum, res_cum[x],
                              kpow, ell, block)
                regen = True
            else:
                _block_states(gen, 2, x, k_raw, k_cum, lam_cum, res_cum[x],
                              kpow, ell, block)
        else:
            if record:
                marks[blocks] = -1
            _block_states(gen, 0, x, k_raw, k_cum, lam_cum, res_cum[x],
                          kpow, ell, block)
        for j in range(ell):
            s = block[j]
            pos += 1
            if record:
                traj[pos] = s
            if regen and j == ell - 1:
                lengths[c] = pos - start
                regen_states[c] = s
                c += 1
                if c == c_total:
                    return c, pos, blocks + 1, 0
                start = pos
                occ[c, s] += 1
            else:
                occ[c, s] += 1
        x = block[ell - 1]
        blocks += 1
        if pos >= budget:
            return c, pos, blocks, 1


# ---------------------------------------------------------------------------
# dispatch

if USING_NUMBA:
    hitting_times = compile_kernel(_hitting_walk)
    excursion_mass = compile_kernel(_excursion_walk)
    backward_hits = compile_kernel(_backward_hits_walk)
else:
    hitting_times = _hitting_sweep
    excursion_mass = _excursion_sweep
    backward_hits = _backward_hits_sweep

# rebind in dependency order so compiled callers see compiled callees
_draw_index = compile_kernel(_draw_index)
_bridge_step = compile_kernel(_bridge_step)
_block_states = compile_kernel(_block_states)
markov_cycle_batch = compile_kernel(_markov_cycle_batch)
split_chain_batch = compile_kernel(_split_chain_batch)


def warmup():
    """Trigger jit compilation of every kernel on toy inputs."""
    mapping = np.array([1, 0], dtype=np.int64)
    in_set = np.array([True, False])
    hitting_times(mapping, in_set)
    excursion_mass(mapping, in_set, np.array([0], dtype=np.int64), np.ones(1))
    backward_hits(mapping, in_set)
    gen = np.random.default_rng(0)
    k = np.array([[0.5, 0.5], [0.5, 0.5]])
    k_cum = np.cumsum(k, axis=1)
    occ = np.zeros((1, 2), dtype=np.int64)
    lengths = np.zeros(1, dtype=np.int64)
    markov_cycle_batch(gen, k_cum, 0, occ, lengths, 10 ** 6)
    kpow = np.stack([np.eye(2), k, k @ k])
    occ[:] = 0
    lengths[:] = 0
    regen = np.zeros(1, dtype=np.int64)
    traj = np.zeros(1, dtype=np.int64)
    marks = np.zeros(1, dtype=np.int8)
    split_chain_batch(gen, k, k_cum, k_cum[0], np.zeros_like(k_cum), kpow,
                      np.array([True, True]), 1.0, 2, occ, lengths, regen,
                      False, traj, marks, 10 ** 6)
