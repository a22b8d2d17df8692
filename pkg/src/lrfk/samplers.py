"""Markov chain samplers for the finite-volume random-cluster measure.

Two dynamics: a deterministic-scan single-edge heat-bath (valid for any
q >= 1 and either weight convention) and an Edwards-Sokal cluster sweep
(integer q >= 2, es convention only, since that is the joint measure whose
marginal is known).  The ES bond step uses skip sampling over the
descending-p_e sorted bond table, costing O(K log m) per sweep for K
candidate opens instead of a full pass over all m pairs.

All randomness is drawn from one numpy Generator per chain as flat uniform
pools consumed by the kernels, so runs are reproducible from the seed alone
and identical on the compiled and pure kernel lanes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .core import Configuration, FkModel, cluster_labels
from .core import NORM_CODES
from .lattice import unrank_pairs


class BondTable:
    """Per-edge bond probabilities sorted descending, with log-survival sums."""

    def __init__(self, model: FkModel):
        w = model.edge_weights()
        p = w / (1.0 + w)
        m = len(p)
        order = np.lexsort((np.arange(m), -p)).astype(np.int64)
        self.p = p
        self.order = order
        self.cumlog = np.concatenate(
            [[0.0], np.cumsum(np.log1p(-p[order]))])
        self.expected_candidates = float(p.sum())


class _Pool:
    """A flat buffer of uniforms refilled from the chain's generator."""

    def __init__(self, rng: np.random.Generator, size: int):
        self.rng = rng
        self.size = int(size)
        self.buf = rng.random(self.size)

    def refresh(self, min_size: int = 0):
        if min_size > self.size:
            self.size = 1 << max(self.size.bit_length(), min_size.bit_length())
        self.buf = self.rng.random(self.size)


@dataclass
class EsResult:
    conn: np.ndarray        # sweeps x T, connectivity of origin to targets
    csize: np.ndarray       # sweeps, |C(origin)|
    cmatch: np.ndarray      # sweeps x T, spin agreement after the color step
    tconn: np.ndarray       # sweeps x T, connected translated pairs (v, v+x)
    dcount: np.ndarray      # sweeps x T, vertices in clusters of size >= f
    schi: np.ndarray        # sweeps, sum_v |C(v)| / n
    npairs: np.ndarray      # T, translated pairs per target inside the box
    configs: Optional[np.ndarray]          # uint64 bitmasks when recorded
    ph_qual: np.ndarray     # per-target pigeonhole premise counts
    ph_fail: np.ndarray     # per-target pigeonhole violations (must stay 0)
    events: List[List[Tuple[int, int, np.ndarray, np.ndarray]]]
    final_bonds: Tuple[np.ndarray, np.ndarray]
    manifest: Dict[str, object] = field(default_factory=dict)


def pair_lists(box, origin, targets: Sequence
               ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Translation pair lists for connectivity averaging.

    For each target x the list holds every pair (v, v + (x - origin)) with
    both endpoints in the box, in vertex order.  Returns the concatenated
    endpoint index arrays and the per-target offset vector (length T+1).
    """
    origin = tuple(int(c) for c in origin)
    pa: List[int] = []
    pb: List[int] = []
    off = [0]
    for tgt in targets:
        shift = tuple(int(a) - b for a, b in zip(tgt, origin))
        for i, v in enumerate(box.vertices):
            w = tuple(c + s for c, s in zip(v, shift))
            if w in box:
                pa.append(i)
                pb.append(box.index_of(w))
        off.append(len(pa))
    return (np.array(pa, dtype=np.int32), np.array(pb, dtype=np.int32),
            np.array(off, dtype=np.int64))


def _req_es(model: FkModel):
    if model.convention != "es":
        raise ValueError(
            "the ES sampler is only available for convention='es'")
    if model.q != int(model.q) or model.q < 2:
        raise ValueError("the ES sampler requires integer q >= 2")


def run_es(
    model: FkModel,
    sweeps: int,
    seed: int,
    origin=None,
    targets: Sequence = (),
    f_thresh: Optional[Sequence[float]] = None,
    ph_minlen: Optional[Sequence[float]] = None,
    store_caps: int = 0,
    record_configs: bool = False,
    table: Optional[BondTable] = None,
    initial_bonds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> EsResult:
    """Run ``sweeps`` Edwards-Sokal sweeps from the empty configuration."""
    _req_es(model)
    box = model.box
    n, m = box.n, box.n_edges
    if table is None:
        table = BondTable(model)
    origin_i = box.index_of(origin) if origin is not None else box.index_of(box.center)
    t_idx = np.array([box.index_of(t) for t in targets], dtype=np.int64)
    t_count = len(t_idx)
    f_arr = np.array(f_thresh if f_thresh is not None else [np.inf] * t_count,
                     dtype=np.float64)
    ph_arr = np.array(ph_minlen if ph_minlen is not None else [0.0] * t_count,
                      dtype=np.float64)
    coords = box.coords().astype(np.float64)
    norm_code = NORM_CODES[box.norm]

    origin_coord = (tuple(int(c) for c in origin) if origin is not None
                    else box.center)
    pairs_a, pairs_b, pair_off = pair_lists(box, origin_coord, targets)
    npairs = np.diff(pair_off)

    conn = np.zeros((sweeps, t_count), dtype=np.uint8)
    csize = np.zeros(sweeps, dtype=np.int32)
    cmatch = np.zeros((sweeps, t_count), dtype=np.uint8)
    tconn = np.zeros((sweeps, t_count), dtype=np.int32)
    dcount = np.zeros((sweeps, t_count), dtype=np.int32)
    schi = np.zeros(sweeps, dtype=np.float64)
    cfg = None
    if record_configs:
        if m > 63:
            raise ValueError("config recording needs m <= 63")
        cfg = np.zeros(sweeps, dtype=np.uint64)
    ph_qual = np.zeros(t_count, dtype=np.int64)
    ph_fail = np.zeros(t_count, dtype=np.int64)
    store_want = np.full(t_count, store_caps, dtype=np.int64)
    events: List[List[Tuple[int, int, np.ndarray, np.ndarray]]] = [
        [] for _ in range(t_count)]

    maxb = max(1024, n)
    bonds_u = np.zeros(maxb, dtype=np.int32)
    bonds_v = np.zeros(maxb, dtype=np.int32)
    nb = 0
    if initial_bonds is not None:
        nb = len(initial_bonds[0])
        while nb > maxb:
            maxb *= 2
            bonds_u = np.zeros(maxb, dtype=np.int32)
            bonds_v = np.zeros(maxb, dtype=np.int32)
        bonds_u[:nb] = initial_bonds[0]
        bonds_v[:nb] = initial_bonds[1]

    rng = np.random.default_rng(seed)
    per_sweep = n + 8 * (table.expected_candidates + 16)
    pool = _Pool(rng, max(1 << 16, int(4 * per_sweep)))
    pos = 0
    done = 0
    stalled = 0
    while done < sweeps:
        before = done
        want_before = store_want.copy()
        status, done, pos, nb = _kernels.es_chunk(
            n, coords, norm_code, int(model.q), table.order, table.cumlog,
            bonds_u, bonds_v, nb, pool.buf, pos, sweeps, done,
            origin_i, t_idx, f_arr, ph_arr, pairs_a, pairs_b, pair_off,
            conn, csize, cmatch, tconn, dcount, schi,
            ph_qual, ph_fail, store_want, cfg)
        if status == _kernels.NEED_POOL:
            stalled = stalled + 1 if done == before else 0
            pool.refresh(min_size=pool.size * 2 if stalled > 1 else 0)
            pos = 0
        elif status == _kernels.GROW_BONDS:
            grown_u = np.zeros(maxb * 2, dtype=np.int32)
            grown_v = np.zeros(maxb * 2, dtype=np.int32)
            grown_u[:nb] = bonds_u[:nb]
            grown_v[:nb] = bonds_v[:nb]
            bonds_u, bonds_v, maxb = grown_u, grown_v, maxb * 2
        elif status == _kernels.STORED_EVENT:
            snap_u = bonds_u[:nb].copy()
            snap_v = bonds_v[:nb].copy()
            labels, _ = _kernels.label_clusters(n, snap_u, snap_v)
            for t in np.nonzero(want_before > store_want)[0]:
                take = int(min(want_before[t], want_before[t] - store_want[t]))
                lo, hi = int(pair_off[t]), int(pair_off[t + 1])
                for idx in range(lo, hi):
                    if take == 0:
                        break
                    a, b = int(pairs_a[idx]), int(pairs_b[idx])
                    if labels[a] == labels[b]:
                        events[int(t)].append((a, b, snap_u, snap_v))
                        take -= 1
            np.maximum(store_want, 0, out=store_want)
    return EsResult(
        conn, csize, cmatch, tconn, dcount, schi, npairs,
        cfg, ph_qual, ph_fail, events,
        (bonds_u[:nb].copy(), bonds_v[:nb].copy()),
        manifest={"algorithm": "es", "seed": seed, "sweeps": sweeps,
                  "backend": _kernels.BACKEND, **model.describe()},
    )


@dataclass
class HbResult:
    conn: np.ndarray
    csize: np.ndarray
    configs: Optional[np.ndarray]
    final_state: np.ndarray
    manifest: Dict[str, object] = field(default_factory=dict)


def run_heat_bath(
    model: FkModel,
    sweeps: int,
    seed: int,
    origin=None,
    targets: Sequence = (),
    record_configs: bool = False,
    initial_state: Optional[np.ndarray] = None,
) -> HbResult:
    """Deterministic-scan heat-bath sweeps from the empty configuration.

    Each edge is resampled from its exact conditional in edge-id order.
    Cost is O(m^2) per sweep (full off-edge relabel per edge: correctness
    over cleverness), so this sampler is for desk-scale boxes.
    """
    box = model.box
    n, m = box.n, box.n_edges
    eu, ev = unrank_pairs(np.arange(m, dtype=np.int64), n)
    w = model.edge_weights()
    origin_i = box.index_of(origin) if origin is not None else box.index_of(box.center)
    t_idx = np.array([box.index_of(t) for t in targets], dtype=np.int64)
    state = (initial_state.astype(np.uint8).copy() if initial_state is not None
             else np.zeros(m, dtype=np.uint8))

    conn = np.zeros((sweeps, len(t_idx)), dtype=np.uint8)
    csize = np.zeros(sweeps, dtype=np.int32)
    cfg = None
    if record_configs:
        if m > 63:
            raise ValueError("config recording needs m <= 63")
        cfg = np.zeros(sweeps, dtype=np.uint64)

    rng = np.random.default_rng(seed)
    chunk = max(1, (1 << 20) // max(m, 1))
    done = 0
    while done < sweeps:
        todo = min(chunk, sweeps - done)
        pool = rng.random(todo * m)
        _kernels.hb_chunk(
            n, eu, ev, w, model.q, state, pool, 0, todo, origin_i, t_idx,
            conn[done:done + todo], csize[done:done + todo],
            None if cfg is None else cfg[done:done + todo])
        done += todo
    return HbResult(
        conn, csize, cfg, state,
        manifest={"algorithm": "heat_bath", "seed": seed, "sweeps": sweeps,
                  "backend": _kernels.BACKEND, **model.describe()},
    )


def sample_bonds_fast(colors: np.ndarray, table: BondTable, rng, n: int,
                      pool_size: int = 1 << 16) -> np.ndarray:
    """One product-Bernoulli bond draw via skip sampling, filtered to
    same-color pairs.  Equal in law to the naive per-edge loop."""
    cand: List[int] = []
    pos = 0
    pool = rng.random(pool_size)
    while True:
        status, pos, got = _kernels.skip_candidates(table.order, table.cumlog,
                                                    pool, pos)
        cand.extend(got)
        if status == _kernels.DONE:
            break
        pool = rng.random(pool_size)
        pos = 0
    if not cand:
        return np.empty(0, dtype=np.int64)
    ids = np.array(sorted(cand), dtype=np.int64)
    bu, bv = unrank_pairs(ids, n)
    colors = np.asarray(colors)
    return ids[colors[bu] == colors[bv]]


def sample_bonds_naive(colors: np.ndarray, table: BondTable, rng,
                       n: int) -> np.ndarray:
    """Reference Theta(m) bond draw."""
    u = rng.random(len(table.p))
    ids = np.nonzero(u < table.p)[0].astype(np.int64)
    if len(ids) == 0:
        return ids
    bu, bv = unrank_pairs(ids, n)
    colors = np.asarray(colors)
    return ids[colors[bu] == colors[bv]]


@dataclass
class RunResult:
    observables: Dict[str, np.ndarray]
    manifest: Dict[str, object]
    configs_hex: Optional[List[str]] = None


def _tau_int(x: np.ndarray) -> float:
    """Integrated autocorrelation time with a self-consistent window."""
    x = np.asarray(x, dtype=np.float64)
    nx = len(x)
    if nx < 8 or x.std() == 0:
        return 0.5
    xc = x - x.mean()
    f = np.fft.rfft(xc, 2 * nx)
    acov = np.fft.irfft(f * np.conj(f))[:nx] / np.arange(nx, 0, -1)
    rho = acov / acov[0]
    tau = 0.5
    for t in range(1, nx):
        tau += rho[t]
        if t >= 6 * tau:
            break
    return max(tau, 0.5)


def run_chain(
    model: FkModel,
    algorithm: str,
    sweeps: int,
    burn_in: Optional[int] = None,
    thinning: int = 1,
    seed: int = 0,
    targets: Sequence = (),
    f_thresh: Optional[Sequence[float]] = None,
    record_configs: bool = False,
) -> RunResult:
    """Run a chain and emit thinned observables plus a run manifest.

    ``algorithm`` is one of heat_bath, es, alternating.  With burn_in=None
    it defaults to 10x the integrated autocorrelation time of |C(origin)|
    estimated from the run itself.  Thinning keeps every t-th post-burn-in
    sweep.
    """
    if sweeps <= (burn_in or 0) or (burn_in or 0) < 0 or thinning < 1:
        raise ValueError("need sweeps > burn_in >= 0 and thinning >= 1")
    if algorithm == "heat_bath":
        res = run_heat_bath(model, sweeps, seed, targets=targets,
                            record_configs=record_configs)
        obs = {"conn": res.conn, "csize": res.csize}
        cfg = res.configs
    elif algorithm == "es":
        res = run_es(model, sweeps, seed, targets=targets, f_thresh=f_thresh,
                     record_configs=record_configs)
        obs = {"conn": res.conn, "csize": res.csize, "cmatch": res.cmatch,
               "tconn": res.tconn, "dcount": res.dcount, "schi": res.schi}
        cfg = res.configs
    elif algorithm == "alternating":
        res = _run_alternating(model, sweeps, seed, targets, record_configs)
        obs = {"conn": res["conn"], "csize": res["csize"]}
        cfg = res["configs"]
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    if burn_in is None:
        pilot = min(sweeps, max(1000, sweeps // 10))
        burn_in = min(int(10 * _tau_int(obs["csize"][:pilot])), sweeps // 2)
    kept = slice(burn_in + thinning - 1, sweeps, thinning)
    out = {k: v[kept] for k, v in obs.items()}
    manifest = {"algorithm": algorithm, "seed": seed, "sweeps": sweeps,
                "burn_in": burn_in, "thinning": thinning,
                "kept": len(out["csize"]), "backend": _kernels.BACKEND,
                **model.describe()}
    hexes = None
    if record_configs and cfg is not None:
        width = (model.box.n_edges + 3) // 4
        hexes = [format(int(c), f"0{width}x") for c in cfg[kept]]
    return RunResult(out, manifest, hexes)


def _run_alternating(model, sweeps, seed, targets, record_configs):
    """One heat-bath sweep then one ES sweep per step (small boxes only)."""
    _req_es(model)
    box = model.box
    n, m = box.n, box.n_edges
    eu, ev = unrank_pairs(np.arange(m, dtype=np.int64), n)
    w = model.edge_weights()
    table = BondTable(model)
    origin_i = box.index_of(box.center)
    t_idx = np.array([box.index_of(t) for t in targets], dtype=np.int64)
    rng = np.random.default_rng(seed)
    state = np.zeros(m, dtype=np.uint8)
    conn = np.zeros((sweeps, len(t_idx)), dtype=np.uint8)
    csize = np.zeros(sweeps, dtype=np.int32)
    cfg = np.zeros(sweeps, dtype=np.uint64) if (record_configs and m <= 63) else None
    coords = box.coords().astype(np.float64)
    norm_code = NORM_CODES[box.norm]
    zero_t = np.zeros(0, dtype=np.int64)
    maxb = max(64, m)
    bonds_u = np.zeros(maxb, dtype=np.int32)
    bonds_v = np.zeros(maxb, dtype=np.int32)
    c1 = np.zeros((1, len(t_idx)), dtype=np.uint8)
    s1 = np.zeros(1, dtype=np.int32)
    c0 = np.zeros((1, 0), dtype=np.uint8)
    for s in range(sweeps):
        pool = rng.random(m)
        _kernels.hb_chunk(n, eu, ev, w, model.q, state, pool, 0, 1, origin_i,
                          zero_t, c0, s1, None)
        ids = np.nonzero(state)[0].astype(np.int64)
        bu, bv = (unrank_pairs(ids, n) if len(ids)
                  else (np.empty(0, np.int32),) * 2)
        nb = len(bu)
        bonds_u[:nb] = bu
        bonds_v[:nb] = bv
        done = 0
        pos = 0
        pool = rng.random(1 << 14)
        while done < 1:
            status, done, pos, nb = _kernels.es_chunk(
                n, coords, norm_code, int(model.q), table.order, table.cumlog,
                bonds_u, bonds_v, nb, pool, pos, 1, 0,
                origin_i, t_idx, np.full(len(t_idx), np.inf),
                np.zeros(len(t_idx)),
                np.zeros(0, dtype=np.int32), np.zeros(0, dtype=np.int32),
                np.zeros(len(t_idx) + 1, dtype=np.int64),
                c1, s1, np.zeros((1, len(t_idx)), dtype=np.uint8),
                np.zeros((1, len(t_idx)), dtype=np.int32),
                np.zeros((1, len(t_idx)), dtype=np.int32),
                np.zeros(1, dtype=np.float64),
                np.zeros(len(t_idx), dtype=np.int64),
                np.zeros(len(t_idx), dtype=np.int64),
                np.zeros(len(t_idx), dtype=np.int64), None)
            if status == _kernels.NEED_POOL:
                pool = rng.random(1 << 14)
                pos = 0
        conn[s] = c1[0]
        csize[s] = s1[0]
        state[:] = 0
        for idx in range(nb):
            a, b = int(bonds_u[idx]), int(bonds_v[idx])
            e = a * (2 * n - a - 1) // 2 + (b - a - 1)
            state[e] = 1
        if cfg is not None:
            bits = 0
            for e in np.nonzero(state)[0]:
                bits |= 1 << int(e)
            cfg[s] = bits
    return {"conn": conn, "csize": csize, "configs": cfg}
