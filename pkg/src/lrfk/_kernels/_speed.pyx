# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel lane.

Semantics must match ``_pure.py`` exactly, including uniform-pool
consumption order, so that chains are bit-identical across lanes.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, log, sqrt

cnp.import_array()

BACKEND = "compiled"

DEF _DONE = 0
DEF _NEED_POOL = 1
DEF _STORED_EVENT = 2
DEF _GROW_BONDS = 3

DONE = _DONE
NEED_POOL = _NEED_POOL
STORED_EVENT = _STORED_EVENT
GROW_BONDS = _GROW_BONDS


cdef inline int _find(int* parent, int v) nogil:
    cdef int root = v, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


cdef int _label(int n, const int* bu, const int* bv, long nb,
                int* labels, int* parent, int* size, int* seen) nogil:
    """labels[v] = smallest vertex in component; returns component count."""
    cdef int v, k = n, ra, rb
    cdef long t
    for v in range(n):
        parent[v] = v
        size[v] = 1
        seen[v] = -1
    for t in range(nb):
        ra = _find(parent, bu[t])
        rb = _find(parent, bv[t])
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        k -= 1
    for v in range(n):
        ra = _find(parent, v)
        if seen[ra] < 0:
            seen[ra] = v
        labels[v] = seen[ra]
    return k


def label_clusters(int n, cnp.ndarray[cnp.int32_t, ndim=1] bonds_u,
                   cnp.ndarray[cnp.int32_t, ndim=1] bonds_v):
    cdef cnp.ndarray[cnp.int32_t, ndim=1] labels = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] parent = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] size = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] seen = np.empty(n, dtype=np.int32)
    cdef long nb = bonds_u.shape[0]
    cdef int k
    cdef int* bu = NULL
    cdef int* bv = NULL
    if nb > 0:
        bu = <int*> cnp.PyArray_DATA(bonds_u)
        bv = <int*> cnp.PyArray_DATA(bonds_v)
    k = _label(n, bu, bv, nb,
               <int*> cnp.PyArray_DATA(labels), <int*> cnp.PyArray_DATA(parent),
               <int*> cnp.PyArray_DATA(size), <int*> cnp.PyArray_DATA(seen))
    return labels, k


cdef inline void _unrank(long e, int n, int* a, int* b) nogil:
    cdef long m = (<long> n) * (n - 1) / 2
    cdef long t = m - e
    cdef long s = <long> ((1.0 + sqrt(8.0 * t - 7.0)) / 2.0)
    while s * (s - 1) / 2 < t:
        s += 1
    while (s - 1) * (s - 2) / 2 >= t:
        s -= 1
    a[0] = <int> (n - s)
    b[0] = <int> (a[0] + 1 + (e - ((<long> a[0]) * (2 * n - a[0] - 1) / 2)))


cdef inline double _dist(const double* coords, int d, int norm_code,
                         int a, int b) nogil:
    cdef double acc = 0.0, c
    cdef int i
    if norm_code == 0:
        for i in range(d):
            c = coords[a * d + i] - coords[b * d + i]
            acc += c * c
        return sqrt(acc)
    if norm_code == 1:
        for i in range(d):
            c = fabs(coords[a * d + i] - coords[b * d + i])
            if c > acc:
                acc = c
        return acc
    for i in range(d):
        acc += fabs(coords[a * d + i] - coords[b * d + i])
    return acc


# -- exact enumeration shard ---------------------------------------------------


def enum_shard(long start, long end, int n,
               cnp.ndarray[cnp.int32_t, ndim=1] eu,
               cnp.ndarray[cnp.int32_t, ndim=1] ev,
               cnp.ndarray[cnp.float64_t, ndim=1] logw,
               double logq, int origin):
    cdef int m = eu.shape[0]
    cdef long count = end - start
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logmass = np.empty(count, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint32_t, ndim=1] connbits = np.zeros(count, dtype=np.uint32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] csize = np.empty(count, dtype=np.int32)
    cdef int parent[32]
    cdef int roots[32]
    cdef long idx
    cdef unsigned long long cfg
    cdef int e, k, ra, rb, i, j, p, cnt
    cdef double lw
    cdef int* peu = <int*> cnp.PyArray_DATA(eu)
    cdef int* pev = <int*> cnp.PyArray_DATA(ev)
    cdef double* plw = <double*> cnp.PyArray_DATA(logw)
    if n > 8:
        raise ValueError("enumeration shard supports at most 8 vertices")
    for idx in range(count):
        cfg = <unsigned long long> (start + idx)
        for i in range(n):
            parent[i] = i
        k = n
        lw = 0.0
        for e in range(m):
            if (cfg >> e) & 1:
                lw += plw[e]
                ra = _find(parent, peu[e])
                rb = _find(parent, pev[e])
                if ra != rb:
                    parent[rb] = ra
                    k -= 1
        logmass[idx] = k * logq + lw
        for i in range(n):
            roots[i] = _find(parent, i)
        p = 0
        for i in range(n):
            for j in range(i + 1, n):
                if roots[i] == roots[j]:
                    connbits[idx] |= (<unsigned int> 1) << p
                p += 1
        cnt = 0
        for i in range(n):
            if roots[i] == roots[origin]:
                cnt += 1
        csize[idx] = cnt
    return logmass, connbits, csize


# -- heat-bath sweeps -----------------------------------------------------------


def hb_chunk(int n,
             cnp.ndarray[cnp.int32_t, ndim=1] eu,
             cnp.ndarray[cnp.int32_t, ndim=1] ev,
             cnp.ndarray[cnp.float64_t, ndim=1] w,
             double q,
             cnp.ndarray[cnp.uint8_t, ndim=1] state,
             cnp.ndarray[cnp.float64_t, ndim=1] pool,
             long pos, long sweeps, int origin,
             cnp.ndarray[cnp.int64_t, ndim=1] targets,
             cnp.ndarray[cnp.uint8_t, ndim=2] conn_out,
             cnp.ndarray[cnp.int32_t, ndim=1] csize_out,
             cfg_out):
    cdef int m = eu.shape[0]
    cdef int t_count = targets.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] parent = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] size = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] seen = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] labels = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] obu = np.empty(m, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] obv = np.empty(m, dtype=np.int32)
    cdef int* pparent = <int*> cnp.PyArray_DATA(parent)
    cdef int* psize = <int*> cnp.PyArray_DATA(size)
    cdef int* pseen = <int*> cnp.PyArray_DATA(seen)
    cdef int* plabels = <int*> cnp.PyArray_DATA(labels)
    cdef int* pobu = <int*> cnp.PyArray_DATA(obu)
    cdef int* pobv = <int*> cnp.PyArray_DATA(obv)
    cdef int* peu = <int*> cnp.PyArray_DATA(eu)
    cdef int* pev = <int*> cnp.PyArray_DATA(ev)
    cdef double* pw = <double*> cnp.PyArray_DATA(w)
    cdef double* ppool = <double*> cnp.PyArray_DATA(pool)
    cdef unsigned char* pstate = <unsigned char*> cnp.PyArray_DATA(state)
    cdef cnp.uint64_t[:] cfg_view
    cdef bint want_cfg = cfg_out is not None
    if want_cfg:
        cfg_view = cfg_out
    cdef long s
    cdef int e, f, v, t, cnt, nb
    cdef double p
    cdef unsigned long long bits
    for s in range(sweeps):
        for e in range(m):
            for v in range(n):
                pparent[v] = v
            for f in range(m):
                if f != e and pstate[f]:
                    pparent[_find(pparent, pev[f])] = _find(pparent, peu[f])
            if _find(pparent, peu[e]) == _find(pparent, pev[e]):
                p = pw[e] / (1.0 + pw[e])
            else:
                p = pw[e] / (q + pw[e])
            pstate[e] = 1 if ppool[pos] < p else 0
            pos += 1
        nb = 0
        for e in range(m):
            if pstate[e]:
                pobu[nb] = peu[e]
                pobv[nb] = pev[e]
                nb += 1
        _label(n, pobu, pobv, nb, plabels, pparent, psize, pseen)
        cnt = 0
        for v in range(n):
            if plabels[v] == plabels[origin]:
                cnt += 1
        csize_out[s] = cnt
        for t in range(t_count):
            conn_out[s, t] = 1 if plabels[origin] == plabels[targets[t]] else 0
        if want_cfg:
            bits = 0
            for e in range(m):
                if pstate[e]:
                    bits |= (<unsigned long long> 1) << e
            cfg_view[s] = bits
    return pos


# -- Edwards-Sokal sweeps --------------------------------------------------------


cdef inline long _search_next(const double* cumlog, long i, double target,
                              long m) nogil:
    cdef long lo = i + 1, hi = m, mid
    if not cumlog[m] < target:
        return -1
    while lo < hi:
        mid = (lo + hi) / 2
        if cumlog[mid + 1] < target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def skip_candidates(cnp.ndarray[cnp.int64_t, ndim=1] order,
                    cnp.ndarray[cnp.float64_t, ndim=1] cumlog,
                    cnp.ndarray[cnp.float64_t, ndim=1] pool,
                    long pos):
    cdef long m = order.shape[0]
    cdef long plen = pool.shape[0]
    cdef double* pcum = <double*> cnp.PyArray_DATA(cumlog)
    cdef double* ppool = <double*> cnp.PyArray_DATA(pool)
    cdef long* porder = <long*> cnp.PyArray_DATA(order)
    cdef list out = []
    cdef long i = -1, j
    cdef double u, target
    while True:
        if pos >= plen:
            return _NEED_POOL, pos, out
        u = ppool[pos]
        pos += 1
        if u > 0.0:
            target = pcum[i + 1] + log(u)
        else:
            target = -INFINITY
        j = _search_next(pcum, i, target, m)
        if j < 0:
            return _DONE, pos, out
        out.append(porder[j])
        i = j
        if i == m - 1:
            return _DONE, pos, out


def es_chunk(int n,
             cnp.ndarray[cnp.float64_t, ndim=2] coords,
             int norm_code, int q,
             cnp.ndarray[cnp.int64_t, ndim=1] order,
             cnp.ndarray[cnp.float64_t, ndim=1] cumlog,
             cnp.ndarray[cnp.int32_t, ndim=1] bonds_u,
             cnp.ndarray[cnp.int32_t, ndim=1] bonds_v,
             long nb,
             cnp.ndarray[cnp.float64_t, ndim=1] pool,
             long pos, long sweeps, long done,
             int origin,
             cnp.ndarray[cnp.int64_t, ndim=1] targets,
             cnp.ndarray[cnp.float64_t, ndim=1] f_thresh,
             cnp.ndarray[cnp.float64_t, ndim=1] ph_minlen,
             cnp.ndarray[cnp.int32_t, ndim=1] pairs_a,
             cnp.ndarray[cnp.int32_t, ndim=1] pairs_b,
             cnp.ndarray[cnp.int64_t, ndim=1] pair_off,
             cnp.ndarray[cnp.uint8_t, ndim=2] conn_out,
             cnp.ndarray[cnp.int32_t, ndim=1] csize_out,
             cnp.ndarray[cnp.uint8_t, ndim=2] cmatch_out,
             cnp.ndarray[cnp.int32_t, ndim=2] tconn_out,
             cnp.ndarray[cnp.int32_t, ndim=2] dcount_out,
             cnp.ndarray[cnp.float64_t, ndim=1] schi_out,
             cnp.ndarray[cnp.int64_t, ndim=1] ph_qual,
             cnp.ndarray[cnp.int64_t, ndim=1] ph_fail,
             cnp.ndarray[cnp.int64_t, ndim=1] store_want,
             cfg_out):
    cdef long m = order.shape[0]
    cdef int t_count = targets.shape[0]
    cdef long maxb = bonds_u.shape[0]
    cdef long plen = pool.shape[0]
    cdef int d = coords.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] parent = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] size = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] seen = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] labels = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] colors = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] lblcolor = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] vcs = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] clmax = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] newu = np.empty(max(maxb, 1), dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] newv = np.empty(max(maxb, 1), dtype=np.int32)
    cdef int* pparent = <int*> cnp.PyArray_DATA(parent)
    cdef int* psize = <int*> cnp.PyArray_DATA(size)
    cdef int* pseen = <int*> cnp.PyArray_DATA(seen)
    cdef int* plabels = <int*> cnp.PyArray_DATA(labels)
    cdef int* pcolors = <int*> cnp.PyArray_DATA(colors)
    cdef int* plblcolor = <int*> cnp.PyArray_DATA(lblcolor)
    cdef int* pvcs = <int*> cnp.PyArray_DATA(vcs)
    cdef double* pclmax = <double*> cnp.PyArray_DATA(clmax)
    cdef int* pnewu = <int*> cnp.PyArray_DATA(newu)
    cdef int* pnewv = <int*> cnp.PyArray_DATA(newv)
    cdef int* pbu = <int*> cnp.PyArray_DATA(bonds_u)
    cdef int* pbv = <int*> cnp.PyArray_DATA(bonds_v)
    cdef double* pcum = <double*> cnp.PyArray_DATA(cumlog)
    cdef double* ppool = <double*> cnp.PyArray_DATA(pool)
    cdef long* porder = <long*> cnp.PyArray_DATA(order)
    cdef long* ptargets = <long*> cnp.PyArray_DATA(targets)
    cdef double* pf = <double*> cnp.PyArray_DATA(f_thresh)
    cdef double* pph = <double*> cnp.PyArray_DATA(ph_minlen)
    cdef double* pcoords = <double*> cnp.PyArray_DATA(coords)
    cdef int* ppa = <int*> cnp.PyArray_DATA(pairs_a)
    cdef int* ppb = <int*> cnp.PyArray_DATA(pairs_b)
    cdef long* poff = <long*> cnp.PyArray_DATA(pair_off)
    cdef cnp.uint64_t[:] cfg_view
    cdef bint want_cfg = cfg_out is not None
    if want_cfg:
        cfg_view = cfg_out
    cdef long sweep_pos, i, j, e, t, idx, newnb, lo, hi
    cdef int k, v, a, b, c, lbl, r, cnt, dc
    cdef long long sum2
    cdef double u, target, dl, f
    cdef bint store_hit, overflow
    cdef unsigned long long bits

    k = _label(n, pbu, pbv, nb, plabels, pparent, psize, pseen)
    while done < sweeps:
        sweep_pos = pos
        # color step
        if pos + k > plen:
            return _NEED_POOL, done, plen, nb
        for v in range(n):
            lbl = plabels[v]
            if lbl == v:
                plblcolor[v] = <int> (ppool[pos] * q)
                pos += 1
            pcolors[v] = plblcolor[lbl]
        for t in range(t_count):
            cmatch_out[done, t] = 1 if pcolors[origin] == pcolors[ptargets[t]] else 0
        # bond step
        newnb = 0
        overflow = False
        i = -1
        while True:
            if pos >= plen:
                return _NEED_POOL, done, plen, nb
            u = ppool[pos]
            pos += 1
            if u > 0.0:
                target = pcum[i + 1] + log(u)
            else:
                target = -INFINITY
            j = _search_next(pcum, i, target, m)
            if j < 0:
                break
            e = porder[j]
            _unrank(e, n, &a, &b)
            if pcolors[a] == pcolors[b]:
                if newnb >= maxb:
                    overflow = True
                else:
                    pnewu[newnb] = a
                    pnewv[newnb] = b
                newnb += 1
            i = j
            if i == m - 1:
                break
        if overflow:
            return _GROW_BONDS, done, sweep_pos, nb
        nb = newnb
        for idx in range(nb):
            pbu[idx] = pnewu[idx]
            pbv[idx] = pnewv[idx]
        k = _label(n, pbu, pbv, nb, plabels, pparent, psize, pseen)
        # observables on the committed state
        sum2 = 0
        for v in range(n):
            r = _find(pparent, v)
            pvcs[v] = psize[r]
            sum2 += psize[r]
        schi_out[done] = (<double> sum2) / n
        csize_out[done] = pvcs[origin]
        store_hit = False
        for t in range(t_count):
            c = 1 if plabels[origin] == plabels[ptargets[t]] else 0
            conn_out[done, t] = c
        if want_cfg:
            bits = 0
            for idx in range(nb):
                a = pbu[idx]
                b = pbv[idx]
                bits |= (<unsigned long long> 1) << (
                    (<long> a) * (2 * n - a - 1) / 2 + (b - a - 1))
            cfg_view[done] = bits
        if t_count > 0:
            # longest open edge per cluster, keyed by cluster label
            for v in range(n):
                pclmax[v] = 0.0
            for idx in range(nb):
                a = pbu[idx]
                b = pbv[idx]
                lbl = plabels[a]
                dl = _dist(pcoords, d, norm_code, a, b)
                if dl > pclmax[lbl]:
                    pclmax[lbl] = dl
            for t in range(t_count):
                f = pf[t]
                dc = 0
                if f != INFINITY:
                    for v in range(n):
                        if pvcs[v] >= f:
                            dc += 1
                dcount_out[done, t] = dc
                lo = poff[t]
                hi = poff[t + 1]
                cnt = 0
                for idx in range(lo, hi):
                    a = ppa[idx]
                    b = ppb[idx]
                    if plabels[a] == plabels[b]:
                        cnt += 1
                        if pvcs[a] < f:
                            ph_qual[t] += 1
                            if pclmax[plabels[a]] < pph[t]:
                                ph_fail[t] += 1
                tconn_out[done, t] = cnt
                if cnt > 0 and store_want[t] > 0:
                    store_want[t] -= cnt
                    store_hit = True
        done += 1
        if store_hit:
            return _STORED_EVENT, done, pos, nb
    return _DONE, done, pos, nb
