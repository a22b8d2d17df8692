"""Configurations, edge weights, cluster labeling and geometric diagnostics.

The finite-volume measure is mu(omega) proportional to q^k(omega) times the
product of per-edge weights over open edges.  Two weight conventions are
supported: ``paper`` uses w = 1 - exp(-beta J) and ``es`` uses
w = exp(beta J) - 1; the latter is the parametrization induced by the
Edwards-Sokal joint measure and is the one whose spin/bond identity holds
exactly.  Both share the small-coupling limit w ~ beta J.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Set, Tuple

import numpy as np

from . import _kernels
from .couplings import CouplingSpec, evaluate_many
from .lattice import Box, norm_value, rank_pair, unrank_pair, unrank_pairs

CONVENTIONS = ("paper", "es")
NORM_CODES = {"euclidean": 0, "sup": 1, "l1": 2}


class FkModel:
    """A finite-volume random-cluster model with free boundary conditions."""

    def __init__(self, box: Box, coupling: CouplingSpec, beta: float, q: float,
                 convention: str = "paper"):
        if beta <= 0:
            raise ValueError("beta must be positive")
        if q < 1:
            raise ValueError("q must be >= 1")
        if convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {convention!r}")
        if box.dimension != coupling.dimension:
            raise ValueError("box and coupling dimensions differ")
        if box.norm != coupling.norm:
            raise ValueError("box and coupling must use the same norm")
        self.box = box
        self.coupling = coupling
        self.beta = float(beta)
        self.q = float(q)
        self.convention = convention
        self._couplings: Optional[np.ndarray] = None
        self._weights: Optional[np.ndarray] = None

    def edge_couplings(self) -> np.ndarray:
        """J_e for every edge id, computed in row blocks."""
        if self._couplings is None:
            coords = self.box.coords()
            n = self.box.n
            parts = []
            for i in range(n - 1):
                parts.append(evaluate_many(self.coupling, coords[i + 1:] - coords[i]))
            self._couplings = (np.concatenate(parts) if parts
                               else np.empty(0, dtype=np.float64))
        return self._couplings

    def edge_weights(self) -> np.ndarray:
        """w_e per the convention; w <= beta J holds for ``paper``."""
        if self._weights is None:
            bj = self.beta * self.edge_couplings()
            if self.convention == "paper":
                self._weights = -np.expm1(-bj)
            else:
                self._weights = np.expm1(bj)
        return self._weights

    def edge_weight(self, e: int) -> float:
        return float(self.edge_weights()[e])

    def describe(self) -> dict:
        return {
            "box_n": self.box.n,
            "box_radius": self.box.radius,
            "dimension": self.box.dimension,
            "norm": self.box.norm,
            "family": self.coupling.family,
            "beta": self.beta,
            "q": self.q,
            "convention": self.convention,
        }


class Configuration:
    """An edge-indexed boolean vector over the box's pair set."""

    def __init__(self, box: Box, bits: Optional[np.ndarray] = None):
        self.box = box
        if bits is None:
            bits = np.zeros(box.n_edges, dtype=bool)
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (box.n_edges,):
            raise ValueError("bit vector length does not match the box")
        self.bits = bits

    def copy(self) -> "Configuration":
        return Configuration(self.box, self.bits.copy())

    def open_edges(self) -> np.ndarray:
        return np.nonzero(self.bits)[0]

    def set_edge(self, x, y, value: bool):
        self.bits[rank_pair(self.box.index_of(x), self.box.index_of(y),
                            self.box.n)] = value

    def is_open(self, x, y) -> bool:
        return bool(self.bits[rank_pair(self.box.index_of(x),
                                        self.box.index_of(y), self.box.n)])

    # reproducibility dumps: compact hex bit-string plus box descriptor
    def to_hex(self) -> str:
        return np.packbits(self.bits.astype(np.uint8)).tobytes().hex()

    @classmethod
    def from_hex(cls, box: Box, hexstr: str) -> "Configuration":
        raw = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
        bits = np.unpackbits(raw)[: box.n_edges].astype(bool)
        return cls(box, bits)

    def __eq__(self, other):
        return (isinstance(other, Configuration) and self.box == other.box
                and np.array_equal(self.bits, other.bits))


@dataclass
class ClusterLabels:
    labels: np.ndarray  # per-vertex component id (smallest member index)
    sizes: np.ndarray   # component size indexed by component id
    k: int              # number of connected components

    def size_of(self, vertex_index: int) -> int:
        return int(self.sizes[self.labels[vertex_index]])


def _bond_endpoints(config: Configuration) -> Tuple[np.ndarray, np.ndarray]:
    ids = config.open_edges()
    if len(ids) == 0:
        z = np.empty(0, dtype=np.int32)
        return z, z
    return unrank_pairs(ids, config.box.n)


def cluster_labels(config: Configuration) -> ClusterLabels:
    bu, bv = _bond_endpoints(config)
    labels, k = _kernels.label_clusters(config.box.n, bu, bv)
    sizes = np.bincount(labels, minlength=config.box.n)
    return ClusterLabels(labels, sizes, int(k))


def connected(config: Configuration, x, y) -> bool:
    lab = cluster_labels(config).labels
    return bool(lab[config.box.index_of(x)] == lab[config.box.index_of(y)])


def cluster_of(config: Configuration, x) -> Set[Tuple[int, ...]]:
    lab = cluster_labels(config).labels
    target = lab[config.box.index_of(x)]
    return {config.box.vertices[i] for i in np.nonzero(lab == target)[0]}


def log_weight(model: FkModel, config: Configuration) -> float:
    """Unnormalized log-mass k log q + sum over open edges of log w."""
    if config.box is not model.box and config.box != model.box:
        raise ValueError("configuration is not over the model's box")
    k = cluster_labels(config).k
    ids = config.open_edges()
    return float(k * math.log(model.q)
                 + np.log(model.edge_weights()[ids]).sum())


@dataclass
class BridgeDiagnostics:
    """Geometric diagnostics of the bridging structure between two vertices."""

    L: Optional[float]                 # longest bridging open edge; None if absent
    maximal_edge: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]]
    R0: float
    Rx: float
    pigeonhole_premise: bool
    pigeonhole_ok: bool


def _labels_without(box: Box, bu, bv, skip: int) -> np.ndarray:
    keep = np.arange(len(bu)) != skip
    labels, _ = _kernels.label_clusters(box.n, bu[keep], bv[keep])
    return labels


def bridge_diagnostics(config: Configuration, origin, target,
                       f_value: float) -> BridgeDiagnostics:
    """L, the maximal edge, R_0 / R_x, and the pigeonhole verdict.

    L is the longest open edge {y1, y2} with origin connected to y1 and
    target to y2 without using {y1, y2} (in-box truncation of the paper's
    supremum).  The maximal edge maximizes the removed-edge cluster radius
    among edges of length L, ties broken lexicographically on the sorted
    endpoint pair.  The pigeonhole implication: a connected pair in a
    cluster smaller than f must leave an open edge of length >= |x|/f.
    """
    box = config.box
    norm = box.norm
    o, x = box.index_of(origin), box.index_of(target)
    if o == x:
        raise ValueError("origin and target must differ")
    labs = cluster_labels(config)
    coords = box.coords()
    conn = labs.labels[o] == labs.labels[x]
    csize = labs.size_of(o)
    dist_ox = norm_value(coords[x] - coords[o], norm)

    bu, bv = _bond_endpoints(config)
    best_len = -1.0
    qualifying = []  # (length, i, j, labels-without-edge) with o<->i, x<->j
    if conn:
        in_cluster = labs.labels[bu] == labs.labels[o]
        for t in np.nonzero(in_cluster)[0]:
            a, b = int(bu[t]), int(bv[t])
            lab_wo = _labels_without(box, bu, bv, t)
            for y1, y2 in ((a, b), (b, a)):
                if lab_wo[o] == lab_wo[y1] and lab_wo[x] == lab_wo[y2]:
                    length = norm_value(coords[a] - coords[b], norm)
                    qualifying.append((length, a, b, lab_wo))
                    best_len = max(best_len, length)
                    break

    max_open_len = 0.0
    if conn and len(bu):
        sel = labs.labels[bu] == labs.labels[o]
        if sel.any():
            diffs = coords[bu[sel]] - coords[bv[sel]]
            from .lattice import norm_values
            max_open_len = float(norm_values(diffs, norm).max())
    premise = bool(conn and csize < f_value)
    ph_ok = (not premise) or (max_open_len >= dist_ox / f_value)

    if best_len < 0:
        # no bridging edge: report full-cluster radii
        r0 = _cluster_radius(labs.labels, coords, o, norm)
        rx = _cluster_radius(labs.labels, coords, x, norm)
        return BridgeDiagnostics(None, None, r0, rx, premise, ph_ok)

    # maximal edge: among length-L edges maximize R^0 with the edge removed,
    # then take the lexicographically smallest sorted endpoint pair
    best = None
    for length, a, b, lab_wo in qualifying:
        if length < best_len - 1e-12:
            continue
        r0 = _cluster_radius(lab_wo, coords, o, norm)
        key = (-r0, min(a, b), max(a, b))
        if best is None or key < best[0]:
            best = (key, a, b, lab_wo, r0)
    _, a, b, lab_wo, r0 = best
    rx = _cluster_radius(lab_wo, coords, x, norm)
    edge = (box.vertices[min(a, b)], box.vertices[max(a, b)])
    return BridgeDiagnostics(best_len, edge, r0, rx, premise, ph_ok)


def _cluster_radius(labels: np.ndarray, coords: np.ndarray, y: int,
                    norm: str) -> float:
    from .lattice import norm_values
    members = np.nonzero(labels == labels[y])[0]
    return float(norm_values(coords[members] - coords[y], norm).max())
