"""Lane-equivalence tests: the compiled kernels must be bit-identical to the
pure-Python lane on the same inputs (including the same uniform pool)."""
import math

import numpy as np
import pytest

from lrfk import _kernels
from lrfk._kernels import _pure
from lrfk.core import NORM_CODES
from lrfk.lattice import unrank_pairs
from lrfk.samplers import BondTable, pair_lists

from conftest import small_model

speed = pytest.importorskip("lrfk._kernels._speed")


def test_backends_are_distinct():
    assert _pure.BACKEND == "pure"
    assert speed.BACKEND == "compiled"


def test_label_clusters_equivalent():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        nb = int(rng.integers(0, 3 * n))
        bu = rng.integers(0, n, size=nb).astype(np.int32)
        bv = rng.integers(0, n, size=nb).astype(np.int32)
        lp, kp = _pure.label_clusters(n, bu, bv)
        ls, ks = speed.label_clusters(n, bu, bv)
        assert kp == ks
        assert np.array_equal(lp, ls)


def test_enum_shard_equivalent():
    model = small_model(radius=2, beta=0.7, q=2.5, convention="paper")
    box = model.box
    eu, ev = unrank_pairs(np.arange(box.n_edges, dtype=np.int64), box.n)
    logw = np.log(model.edge_weights())
    o = box.index_of(box.center)
    total = 1 << box.n_edges
    for start, end in ((0, total // 3), (total // 3, total)):
        outs_p = _pure.enum_shard(start, end, box.n, eu, ev, logw,
                                  math.log(2.5), o)
        outs_s = speed.enum_shard(start, end, box.n, eu, ev, logw,
                                  math.log(2.5), o)
        for a, b in zip(outs_p, outs_s):
            assert np.array_equal(a, b)


def test_hb_chunk_equivalent():
    model = small_model(radius=3, beta=0.5, q=2.0, convention="paper")
    box = model.box
    eu, ev = unrank_pairs(np.arange(box.n_edges, dtype=np.int64), box.n)
    w = model.edge_weights()
    m = box.n_edges
    sweeps = 40
    pool = np.random.default_rng(1).random(sweeps * m)
    o = box.index_of(box.center)
    tg = np.array([box.index_of((1,)), box.index_of((-2,))], dtype=np.int64)

    def run(mod):
        state = np.zeros(m, dtype=np.uint8)
        conn = np.zeros((sweeps, 2), dtype=np.uint8)
        csz = np.zeros(sweeps, dtype=np.int32)
        cfg = np.zeros(sweeps, dtype=np.uint64)
        pos = mod.hb_chunk(box.n, eu, ev, w, 2.0, state, pool, 0, sweeps,
                           o, tg, conn, csz, cfg)
        return pos, state.copy(), conn, csz, cfg

    rp = run(_pure)
    rs = run(speed)
    assert rp[0] == rs[0]
    for a, b in zip(rp[1:], rs[1:]):
        assert np.array_equal(a, b)


def test_skip_candidates_equivalent():
    model = small_model(radius=4, beta=0.3, q=2.0)
    table = BondTable(model)
    rng = np.random.default_rng(2)
    for trial in range(30):
        pool = rng.random(int(rng.integers(1, 40)))
        sp, pp, cp = _pure.skip_candidates(table.order, table.cumlog, pool, 0)
        ss, ps, cs = speed.skip_candidates(table.order, table.cumlog, pool, 0)
        assert (sp, pp, list(cp)) == (ss, ps, list(cs))


def _es_drive(mod, model, sweeps, pool, targets, f_vals, caps):
    """Run es_chunk to completion under one lane, handling the resumable
    statuses the same way the sampler driver does."""
    box = model.box
    table = BondTable(model)
    coords = box.coords().astype(np.float64)
    tg = np.array([box.index_of(t) for t in targets], dtype=np.int64)
    tn = len(targets)
    o = box.index_of(box.center)
    pa, pb, off = pair_lists(box, box.center, targets)
    f = np.array(f_vals, dtype=np.float64)
    phl = np.array([abs(targets[t][0]) / max(f_vals[t], 1.0)
                    if math.isfinite(f_vals[t]) else 0.0
                    for t in range(tn)])
    cap = 4 * box.n
    bu = np.zeros(cap, dtype=np.int32)
    bv = np.zeros(cap, dtype=np.int32)
    conn = np.zeros((sweeps, tn), dtype=np.uint8)
    csz = np.zeros(sweeps, dtype=np.int32)
    cm = np.zeros((sweeps, tn), dtype=np.uint8)
    tc = np.zeros((sweeps, tn), dtype=np.int32)
    dc = np.zeros((sweeps, tn), dtype=np.int32)
    schi = np.zeros(sweeps, dtype=np.float64)
    phq = np.zeros(tn, dtype=np.int64)
    phf = np.zeros(tn, dtype=np.int64)
    want = np.full(tn, caps, dtype=np.int64)
    cfg = np.zeros(sweeps, dtype=np.uint64)
    done, pos, nb = 0, 0, 0
    snaps = []
    guard = 0
    while done < sweeps:
        guard += 1
        assert guard < 10000
        status, done, pos, nb = mod.es_chunk(
            box.n, coords, NORM_CODES[box.norm], int(model.q),
            table.order, table.cumlog,
            bu, bv, nb, pool, pos, sweeps, done, o, tg, f, phl,
            pa, pb, off, conn, csz, cm, tc, dc, schi, phq, phf, want, cfg)
        if status == _kernels.STORED_EVENT:
            snaps.append((done, bu[:nb].copy(), bv[:nb].copy(),
                          want.copy()))
            np.maximum(want, 0, out=want)
        elif status == _kernels.NEED_POOL:
            raise AssertionError("pool exhausted in test")
        elif status == _kernels.GROW_BONDS:
            raise AssertionError("bond buffer too small in test")
    return (conn, csz, cm, tc, dc, schi, phq, phf, cfg, pos, nb,
            bu[:nb].copy(), bv[:nb].copy(), snaps)


def test_es_chunk_equivalent():
    model = small_model(radius=4, beta=0.6, q=2.0)
    sweeps = 120
    pool = np.random.default_rng(3).random(200000)
    targets = [(2,), (-3,)]
    f_vals = [3.0, math.inf]
    rp = _es_drive(_pure, model, sweeps, pool, targets, f_vals, caps=5)
    rs = _es_drive(speed, model, sweeps, pool, targets, f_vals, caps=5)
    for a, b in zip(rp[:13], rs[:13]):
        if isinstance(a, np.ndarray):
            assert np.array_equal(a, b)
        else:
            assert a == b
    assert len(rp[13]) == len(rs[13])
    for (d1, u1, v1, w1), (d2, u2, v2, w2) in zip(rp[13], rs[13]):
        assert d1 == d2
        assert np.array_equal(u1, u2)
        assert np.array_equal(v1, v2)
        assert np.array_equal(w1, w2)


def test_selected_backend_matches_env(monkeypatch):
    # the package-level functions come from one lane; both lanes stay
    # importable side by side
    assert _kernels.BACKEND in ("pure", "compiled")
    assert _kernels.pure.BACKEND == "pure"
