"""Exact finite-volume computations by enumeration; ground truth for samplers.

All sums are accumulated in the log domain.  Enumeration is sharded by
configuration-index range and shards are combined by a fixed binary
reduction tree, so results are bit-identical regardless of how the shards
are produced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .core import Configuration, FkModel, cluster_labels, log_weight
from .couplings import CouplingSpec
from .lattice import Box, rank_pair, unrank_pairs

ENUM_CAP = 24        # hard cap on edge count: 2^24 configurations
POTTS_CAP = 2 ** 24  # hard cap on q^|Lambda|
SHARD = 1 << 14

Predicate = Callable[[np.ndarray], np.ndarray]  # uint64 masks -> bool


@dataclass
class ExactSummary:
    log_z: float
    conn: np.ndarray                      # mu(x <-> y), n x n
    csize_dist: np.ndarray                # P(|C(origin)| = s), index s in [0, n]
    predicate_probs: Dict[str, float] = field(default_factory=dict)
    origin: int = 0

    def to_text(self) -> str:
        """Key-ordered table-format dump, used as golden data."""
        lines = []
        n = self.conn.shape[0]
        for i in range(n):
            for j in range(n):
                lines.append(f"conn[{i},{j}]\t{self.conn[i, j]:.15g}")
        for s in range(len(self.csize_dist)):
            lines.append(f"csize[{s}]\t{self.csize_dist[s]:.15g}")
        lines.append(f"log_z\t{self.log_z:.15g}")
        for name in sorted(self.predicate_probs):
            lines.append(f"pred[{name}]\t{self.predicate_probs[name]:.15g}")
        return "\n".join(lines) + "\n"


def _logsumexp(a: np.ndarray) -> float:
    hi = a.max()
    if not np.isfinite(hi):
        return float(hi)
    return float(hi + np.log(np.exp(a - hi).sum()))


def _combine(a, b):
    """Deterministic merge of (log_z, normalized sum vector) pairs."""
    lz_a, s_a = a
    lz_b, s_b = b
    lz = np.logaddexp(lz_a, lz_b)
    return lz, math.exp(lz_a - lz) * s_a + math.exp(lz_b - lz) * s_b


def _tree_reduce(parts):
    parts = list(parts)
    while len(parts) > 1:
        nxt = []
        for i in range(0, len(parts) - 1, 2):
            nxt.append(_combine(parts[i], parts[i + 1]))
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def enumerate_measure(
    model: FkModel,
    predicates: Optional[Mapping[str, Predicate]] = None,
    origin: int = 0,
) -> ExactSummary:
    """Exact mu over {0,1}^P2(Lambda): log Z, connection matrix, cluster law."""
    box = model.box
    n, m = box.n, box.n_edges
    if m > ENUM_CAP:
        raise ValueError(
            f"box has {m} edges; exact enumeration is capped at {ENUM_CAP}")
    predicates = dict(predicates or {})
    eu, ev = unrank_pairs(np.arange(m, dtype=np.int64), n)
    logw = np.log(model.edge_weights())
    logq = math.log(model.q)
    names = sorted(predicates)

    parts = []
    total = 1 << m
    for start in range(0, total, SHARD):
        end = min(start + SHARD, total)
        logmass, connbits, csize = _kernels.enum_shard(
            start, end, n, eu, ev, logw, logq, origin)
        lz = _logsumexp(logmass)
        wts = np.exp(logmass - lz)
        vec = []
        for p in range(n * (n - 1) // 2):
            vec.append(float(wts[(connbits >> np.uint32(p)) & 1 == 1].sum()))
        for s in range(n + 1):
            vec.append(float(wts[csize == s].sum()))
        if names:
            masks = np.arange(start, end, dtype=np.uint64)
            for name in names:
                sel = np.asarray(predicates[name](masks), dtype=bool)
                vec.append(float(wts[sel].sum()))
        parts.append((lz, np.array(vec)))
    log_z, sums = _tree_reduce(parts)

    conn = np.eye(n)
    p = 0
    for i in range(n):
        for j in range(i + 1, n):
            conn[i, j] = conn[j, i] = sums[p]
            p += 1
    csize_dist = sums[p: p + n + 1].copy()
    pred_probs = {name: float(sums[p + n + 1 + k]) for k, name in enumerate(names)}
    return ExactSummary(float(log_z), conn, csize_dist, pred_probs, origin)


def conditional_edge_probability(model: FkModel, e: int,
                                 rest: np.ndarray) -> float:
    """mu(omega_e = 1 | all other edges fixed to ``rest``).

    Evaluated both from the heat-bath formula and as the two-configuration
    mass ratio; the two must agree to 1e-12.
    """
    m = model.box.n_edges
    rest = np.asarray(rest, dtype=bool)
    if rest.shape != (m,):
        raise ValueError("rest must assign every edge")
    closed = Configuration(model.box, rest.copy())
    closed.bits[e] = False
    opened = Configuration(model.box, rest.copy())
    opened.bits[e] = True

    w = model.edge_weight(e)
    labs = cluster_labels(closed)
    i, j = unrank_pairs(np.array([e], dtype=np.int64), model.box.n)
    joined = labs.labels[int(i[0])] == labs.labels[int(j[0])]
    formula = w / (1.0 + w) if joined else w / (model.q + w)

    lw1 = log_weight(model, opened)
    lw0 = log_weight(model, closed)
    ratio = math.exp(lw1 - np.logaddexp(lw1, lw0))
    if abs(ratio - formula) > 1e-12:
        raise AssertionError(
            f"conditional mismatch: formula {formula} vs enumerated {ratio}")
    return formula


def audit_increasing(event: Predicate, m: int) -> bool:
    """Exhaustive single-flip check that the event is increasing."""
    masks = np.arange(1 << m, dtype=np.uint64)
    vals = np.asarray(event(masks), dtype=bool)
    for b in range(m):
        closed = (masks >> np.uint64(b)) & np.uint64(1) == 0
        idx = masks[closed]
        if np.any(vals[idx] & ~vals[idx | np.uint64(1 << b)]):
            return False
    return True


def restrict_event(event: Predicate, box_small: Box, box_big: Box) -> Predicate:
    """Lift an event on the small box's edges to configurations of the big box."""
    n_s = box_small.n
    positions = []
    for e in range(box_small.n_edges):
        i, j = unrank_pairs(np.array([e], dtype=np.int64), n_s)
        x = box_small.vertices[int(i[0])]
        y = box_small.vertices[int(j[0])]
        positions.append(rank_pair(box_big.index_of(x), box_big.index_of(y),
                                   box_big.n))
    positions = np.array(positions, dtype=np.uint64)

    def lifted(masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.uint64)
        res = np.zeros_like(masks)
        for k, pos in enumerate(positions):
            res |= ((masks >> pos) & np.uint64(1)) << np.uint64(k)
        return event(res)

    return lifted


def monotonicity_check(model1: FkModel, model2: FkModel,
                       event: Predicate, audit: bool = True):
    """(p1, p2, p1 <= p2) for an increasing event on the smaller box's edges."""
    b1, b2 = model1.box, model2.box
    if not set(b1.vertices) <= set(b2.vertices):
        raise ValueError("the first box must be contained in the second")
    if audit and not audit_increasing(event, b1.n_edges):
        raise ValueError("event failed the exhaustive increasing audit")
    p1 = enumerate_measure(model1, {"A": event}).predicate_probs["A"]
    p2 = enumerate_measure(
        model2, {"A": restrict_event(event, b1, b2)}).predicate_probs["A"]
    return p1, p2, p1 <= p2 + 1e-12


def potts_enumerate(box: Box, coupling: CouplingSpec, beta: float,
                    q: int) -> Tuple[np.ndarray, float]:
    """Exact q-state Potts spin-agreement matrix P(sigma_x = sigma_y) and log Z.

    The Hamiltonian is the sum of J_{x,y} over disagreeing pairs; sums run
    over all q^|Lambda| spin assignments in the log domain.
    """
    if int(q) != q or q < 2:
        raise ValueError("Potts q must be an integer >= 2")
    q = int(q)
    n = box.n
    total = q ** n
    if total > POTTS_CAP:
        raise ValueError(
            f"state space q^n = {total} exceeds the cap {POTTS_CAP}")
    m = n * (n - 1) // 2
    eu, ev = unrank_pairs(np.arange(m, dtype=np.int64), n)
    from .couplings import evaluate_many
    coords = box.coords()
    j_e = evaluate_many(coupling, coords[ev.astype(np.int64)]
                        - coords[eu.astype(np.int64)])

    radix = q ** np.arange(n, dtype=np.int64)
    parts = []
    for start in range(0, total, SHARD):
        end = min(start + SHARD, total)
        idx = np.arange(start, end, dtype=np.int64)
        spins = (idx[:, None] // radix[None, :]) % q
        agree = spins[:, eu.astype(np.int64)] == spins[:, ev.astype(np.int64)]
        h = ((~agree) * j_e[None, :]).sum(axis=1)
        logmass = -beta * h
        lz = _logsumexp(logmass)
        wts = np.exp(logmass - lz)
        vec = np.array([float(wts[agree[:, p]].sum()) for p in range(m)])
        parts.append((lz, vec))
    log_z, sums = _tree_reduce(parts)
    mat = np.eye(n)
    for p in range(m):
        i, j = int(eu[p]), int(ev[p])
        mat[i, j] = mat[j, i] = sums[p]
    return mat, float(log_z)


def es_identity_check(box: Box, coupling: CouplingSpec, beta: float, q: int,
                      convention: str = "es") -> float:
    """Max |P(sigma_x = sigma_y) - 1/q - (q-1)/q mu(x <-> y)| over pairs."""
    potts, _ = potts_enumerate(box, coupling, beta, q)
    model = FkModel(box, coupling, beta, q, convention)
    fk = enumerate_measure(model).conn
    n = box.n
    dev = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            lhs = potts[i, j] - 1.0 / q
            rhs = (q - 1.0) / q * fk[i, j]
            dev = max(dev, abs(lhs - rhs))
    return dev
