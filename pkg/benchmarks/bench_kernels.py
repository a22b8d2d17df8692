"""Compiled vs pure-Python kernel lane benchmark.

Runs the same chains through both lanes, checks the outputs are
bit-identical, and reports per-sweep timings.

Usage: python3 benchmarks/bench_kernels.py [--radius N] [--sweeps N]
"""
import argparse
import time

import numpy as np

from lrfk._kernels import _pure
from lrfk.core import FkModel, NORM_CODES
from lrfk.couplings import CouplingSpec
from lrfk.lattice import make_box, unrank_pairs
from lrfk.samplers import BondTable, pair_lists

try:
    from lrfk._kernels import _speed
except ImportError:
    _speed = None


def bench_es(mod, model, sweeps, pool, targets):
    box = model.box
    table = BondTable(model)
    coords = box.coords().astype(np.float64)
    tg = np.array([box.index_of(t) for t in targets], dtype=np.int64)
    tn = len(targets)
    o = box.index_of(box.center)
    pa, pb, off = pair_lists(box, box.center, targets)
    f = np.full(tn, np.inf)
    phl = np.zeros(tn)
    cap = max(1024, 4 * box.n)
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
    want = np.zeros(tn, dtype=np.int64)
    done, pos, nb = 0, 0, 0
    t0 = time.perf_counter()
    while done < sweeps:
        status, done, pos, nb = mod.es_chunk(
            box.n, coords, NORM_CODES[box.norm], int(model.q),
            table.order, table.cumlog, bu, bv, nb, pool, pos, sweeps, done,
            o, tg, f, phl, pa, pb, off, conn, csz, cm, tc, dc, schi,
            phq, phf, want, None)
        if status not in (0,):
            raise RuntimeError(f"unexpected kernel status {status}")
    dt = time.perf_counter() - t0
    return dt, (conn, csz, cm, tc, dc, schi, pos, nb, bu[:nb].copy(),
                bv[:nb].copy())


def bench_hb(mod, model, sweeps, pool):
    box = model.box
    eu, ev = unrank_pairs(np.arange(box.n_edges, dtype=np.int64), box.n)
    w = model.edge_weights()
    state = np.zeros(box.n_edges, dtype=np.uint8)
    conn = np.zeros((sweeps, 0), dtype=np.uint8)
    csz = np.zeros(sweeps, dtype=np.int32)
    o = box.index_of(box.center)
    t0 = time.perf_counter()
    mod.hb_chunk(box.n, eu, ev, w, model.q, state, pool, 0, sweeps, o,
                 np.zeros(0, dtype=np.int64), conn, csz, None)
    dt = time.perf_counter() - t0
    return dt, (state.copy(), csz)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--radius", type=float, default=256.0)
    ap.add_argument("--sweeps", type=int, default=200)
    args = ap.parse_args()

    if _speed is None:
        print("compiled lane not built; run "
              "`python3 setup.py build_ext --inplace` first")
        return

    box = make_box(1, (0,), args.radius)
    model = FkModel(box, CouplingSpec.power_law(2.0, 1), 0.2, 2.0, "es")
    targets = [(int(args.radius) // 4,)]
    pool = np.random.default_rng(0).random(
        args.sweeps * max(64, box.n // 4) + 10_000_000)

    print(f"box: radius {args.radius:g}, {box.n} vertices; "
          f"{args.sweeps} sweeps\n")

    dt_c, out_c = bench_es(_speed, model, args.sweeps, pool, targets)
    dt_p, out_p = bench_es(_pure, model, args.sweeps, pool, targets)
    identical = all(np.array_equal(a, b) if isinstance(a, np.ndarray)
                    else a == b for a, b in zip(out_c, out_p))
    print(f"es_chunk    compiled {1e6 * dt_c / args.sweeps:9.1f} us/sweep   "
          f"pure {1e6 * dt_p / args.sweeps:9.1f} us/sweep   "
          f"speedup {dt_p / dt_c:6.1f}x   bit-identical: {identical}")
    if not identical:
        raise SystemExit("LANE MISMATCH in es_chunk")

    hb_box = make_box(1, (0,), 16.0)
    hb_model = FkModel(hb_box, CouplingSpec.power_law(2.0, 1), 0.2, 2.0, "es")
    hb_sweeps = max(20, args.sweeps // 10)
    hb_pool = np.random.default_rng(1).random(hb_sweeps * hb_box.n_edges)
    dt_c, out_c = bench_hb(_speed, hb_model, hb_sweeps, hb_pool)
    dt_p, out_p = bench_hb(_pure, hb_model, hb_sweeps, hb_pool)
    identical = all(np.array_equal(a, b) for a, b in zip(out_c, out_p))
    print(f"hb_chunk    compiled {1e6 * dt_c / hb_sweeps:9.1f} us/sweep   "
          f"pure {1e6 * dt_p / hb_sweeps:9.1f} us/sweep   "
          f"speedup {dt_p / dt_c:6.1f}x   bit-identical: {identical} "
          f"(radius 16, {hb_sweeps} sweeps)")
    if not identical:
        raise SystemExit("LANE MISMATCH in hb_chunk")


if __name__ == "__main__":
    main()
