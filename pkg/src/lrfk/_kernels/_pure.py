"""Pure-Python kernel lane.

Mirrors the compiled lane in ``_speed.pyx`` operation for operation: both
lanes consume the same uniform pool in the same order and run the same
branch logic, so a chain produces bit-identical output on either lane.
Slower by two to three orders of magnitude; used when the extension is not
built and as the reference side of the kernel benchmark.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"

# es_chunk / hb_chunk status codes
DONE = 0
NEED_POOL = 1
STORED_EVENT = 2
GROW_BONDS = 3


# -- union-find --------------------------------------------------------------


def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        parent[v], v = root, parent[v]
    return root


def label_clusters(n, bonds_u, bonds_v):
    """Connected-component labels; labels[v] = smallest vertex in component.

    Returns (labels int32[n], k).
    """
    parent = list(range(n))
    size = [1] * n
    k = n
    for a, b in zip(bonds_u, bonds_v):
        ra, rb = _find(parent, int(a)), _find(parent, int(b))
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        k -= 1
    labels = np.empty(n, dtype=np.int32)
    comp_min = {}
    for v in range(n):
        r = _find(parent, v)
        if r not in comp_min:
            comp_min[r] = v  # v ascending: first hit is the minimum
        labels[v] = comp_min[r]
    return labels, k


def _unrank(e, n):
    m = n * (n - 1) // 2
    t = m - e
    s = (1 + math.isqrt(8 * t - 7)) // 2
    while s * (s - 1) // 2 < t:
        s += 1
    while (s - 1) * (s - 2) // 2 >= t:
        s -= 1
    i = n - s
    j = i + 1 + (e - (i * (2 * n - i - 1) // 2))
    return i, j


def _dist(coords, norm_code, a, b):
    if norm_code == 0:
        return math.sqrt(float(((coords[a] - coords[b]) ** 2).sum()))
    if norm_code == 1:
        return float(np.abs(coords[a] - coords[b]).max())
    return float(np.abs(coords[a] - coords[b]).sum())


# -- exact enumeration shard -------------------------------------------------


def enum_shard(start, end, n, eu, ev, logw, logq, origin):
    """Per-configuration log-mass, pair-connectivity bits and |C(origin)|.

    Configurations are the integers [start, end); bit e of the integer is
    the state of edge e.  Pair connectivity is packed into bit rank_pair(i,j)
    of a uint32, so n <= 8.
    """
    m = len(eu)
    count = end - start
    logmass = np.empty(count, dtype=np.float64)
    connbits = np.zeros(count, dtype=np.uint32)
    csize = np.empty(count, dtype=np.int32)
    for idx in range(count):
        cfg = start + idx
        parent = list(range(n))
        k = n
        lw = 0.0
        for e in range(m):
            if (cfg >> e) & 1:
                lw += logw[e]
                ra, rb = _find(parent, int(eu[e])), _find(parent, int(ev[e]))
                if ra != rb:
                    parent[rb] = ra
                    k -= 1
        logmass[idx] = k * logq + lw
        roots = [_find(parent, v) for v in range(n)]
        bits = 0
        p = 0
        for i in range(n):
            for j in range(i + 1, n):
                if roots[i] == roots[j]:
                    bits |= 1 << p
                p += 1
        connbits[idx] = bits
        csize[idx] = roots.count(roots[origin])
    return logmass, connbits, csize


# -- heat-bath sweeps ---------------------------------------------------------


def hb_chunk(n, eu, ev, w, q, state, pool, pos, sweeps, origin, targets,
             conn_out, csize_out, cfg_out):
    """Deterministic-scan heat-bath sweeps.

    ``state`` is the uint8 edge vector, updated in place.  Consumes exactly
    m uniforms per sweep; the caller guarantees the pool is large enough.
    Records per-sweep connectivity to targets, |C(origin)| and, when
    ``cfg_out`` is not None, the configuration bitmask (m <= 63).
    """
    m = len(eu)
    for s in range(sweeps):
        for e in range(m):
            # connectivity of e's endpoints with e forced closed
            parent = list(range(n))
            for f in range(m):
                if f != e and state[f]:
                    ra, rb = _find(parent, int(eu[f])), _find(parent, int(ev[f]))
                    if ra != rb:
                        parent[rb] = ra
            joined = _find(parent, int(eu[e])) == _find(parent, int(ev[e]))
            p = w[e] / (1.0 + w[e]) if joined else w[e] / (q + w[e])
            state[e] = 1 if pool[pos] < p else 0
            pos += 1
        open_ids = np.nonzero(state)[0]
        labels, _ = label_clusters(n, eu[open_ids], ev[open_ids])
        csize_out[s] = int((labels == labels[origin]).sum())
        for t in range(len(targets)):
            conn_out[s, t] = 1 if labels[origin] == labels[targets[t]] else 0
        if cfg_out is not None:
            bits = 0
            for e in open_ids:
                bits |= 1 << int(e)
            cfg_out[s] = bits
    return pos


# -- Edwards-Sokal sweeps ------------------------------------------------------


def skip_candidates(order, cumlog, pool, pos):
    """Candidate open edges of one product-Bernoulli draw via skip sampling.

    Walks the descending-p sorted order; each uniform advances past a
    geometric-like skip found by binary search in the cumulative log(1-p)
    table.  Returns (status, pos, candidate edge ids).
    """
    m = len(order)
    out = []
    i = -1
    while True:
        if pos >= len(pool):
            return NEED_POOL, pos, out
        u = pool[pos]
        pos += 1
        target = cumlog[i + 1] + math.log(u) if u > 0.0 else -math.inf
        j = _search_next(cumlog, i, target, m)
        if j < 0:
            return DONE, pos, out
        out.append(int(order[j]))
        i = j
        if i == m - 1:
            return DONE, pos, out


def _search_next(cumlog, i, target, m):
    """Smallest j >= i+1 with cumlog[j+1] < target, or -1."""
    lo, hi = i + 1, m  # search over j in [lo, hi)
    if not cumlog[m] < target:
        return -1
    while lo < hi:
        mid = (lo + hi) // 2
        if cumlog[mid + 1] < target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def es_chunk(n, coords, norm_code, q, order, cumlog,
             bonds_u, bonds_v, nb,
             pool, pos, sweeps, done,
             origin, targets, f_thresh, ph_minlen,
             pairs_a, pairs_b, pair_off,
             conn_out, csize_out, cmatch_out,
             tconn_out, dcount_out, schi_out,
             ph_qual, ph_fail, store_want, cfg_out):
    """Edwards-Sokal sweeps: color clusters uniformly, resample same-color bonds.

    State is the bond list (bonds_u/bonds_v[:nb]), updated in place; the
    arrays double as a fixed-capacity buffer.  Returns
    (status, done, pos, nb); on NEED_POOL / GROW_BONDS the current sweep is
    not committed, on STORED_EVENT sweep done-1 is committed and the caller
    snapshots the bond list.

    Besides the origin-based indicators, each sweep records
    translation-averaged statistics over the pair lists (pairs_a/pairs_b
    with per-target slices pair_off): the number of connected pairs, the
    number of vertices in clusters of size >= f_thresh[t], and the mean
    cluster size over all vertices (per-sweep susceptibility).  The
    pigeonhole check runs on every connected pair whose cluster is smaller
    than f_thresh[t].
    """
    m = len(order)
    t_count = len(targets)
    maxb = len(bonds_u)
    labels, k = label_clusters(n, bonds_u[:nb], bonds_v[:nb])
    while done < sweeps:
        sweep_pos = pos
        # color step: one uniform per cluster, dense order = ascending label
        if pos + k > len(pool):
            return NEED_POOL, done, len(pool), nb
        colors = np.empty(n, dtype=np.int64)
        dense = {}
        for v in range(n):
            lbl = int(labels[v])
            if lbl == v:
                dense[lbl] = int(pool[pos] * q)
                pos += 1
            colors[v] = dense[lbl]
        for t in range(t_count):
            cmatch_out[done, t] = 1 if colors[origin] == colors[targets[t]] else 0
        # bond step
        status, pos, cand = skip_candidates(order, cumlog, pool, pos)
        if status == NEED_POOL:
            return NEED_POOL, done, len(pool), nb
        new_u, new_v = [], []
        for e in cand:
            a, b = _unrank(e, n)
            if colors[a] == colors[b]:
                new_u.append(a)
                new_v.append(b)
        if len(new_u) > maxb:
            return GROW_BONDS, done, sweep_pos, nb
        nb = len(new_u)
        bonds_u[:nb] = new_u
        bonds_v[:nb] = new_v
        labels, k = label_clusters(n, bonds_u[:nb], bonds_v[:nb])
        # observables on the committed state
        sizes = np.bincount(labels, minlength=n)
        vcs = sizes[labels]  # per-vertex cluster size
        schi_out[done] = float(vcs.sum()) / n
        csize_out[done] = int(vcs[origin])
        store_hit = False
        for t in range(t_count):
            c = 1 if labels[origin] == labels[targets[t]] else 0
            conn_out[done, t] = c
        if cfg_out is not None:
            bits = 0
            for idx in range(nb):
                bits |= 1 << _rank(int(bonds_u[idx]), int(bonds_v[idx]), n)
            cfg_out[done] = bits
        if t_count:
            # longest open edge per cluster, keyed by cluster label
            clmax = np.zeros(n, dtype=np.float64)
            for idx in range(nb):
                a, b = int(bonds_u[idx]), int(bonds_v[idx])
                lbl = int(labels[a])
                dl = _dist(coords, norm_code, a, b)
                if dl > clmax[lbl]:
                    clmax[lbl] = dl
            for t in range(t_count):
                f = f_thresh[t]
                dcount_out[done, t] = (int((vcs >= f).sum())
                                       if f != math.inf else 0)
                lo, hi = int(pair_off[t]), int(pair_off[t + 1])
                cnt = 0
                for idx in range(lo, hi):
                    a, b = int(pairs_a[idx]), int(pairs_b[idx])
                    if labels[a] == labels[b]:
                        cnt += 1
                        if vcs[a] < f:
                            ph_qual[t] += 1
                            if clmax[labels[a]] < ph_minlen[t]:
                                ph_fail[t] += 1
                tconn_out[done, t] = cnt
                if cnt > 0 and store_want[t] > 0:
                    store_want[t] -= cnt
                    store_hit = True
        done += 1
        if store_hit:
            return STORED_EVENT, done, pos, nb
    return DONE, done, pos, nb


def _rank(i, j, n):
    if i > j:
        i, j = j, i
    return i * (2 * n - i - 1) // 2 + (j - i - 1)
