"""Finite boxes of Z^d, vertex indexing and the complete pair set.

A box collects every lattice point strictly closer than ``radius`` to its
center in the chosen norm.  Vertices are kept in lexicographic order so that
vertex and edge indices are reproducible across runs.  Unordered vertex
pairs {x, y} are ranked row-major over the upper triangle, giving a stable
bijection onto [0, m) with m = n(n-1)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

NORMS = ("euclidean", "sup", "l1")

Vec = Tuple[int, ...]


def norm_value(v: Sequence[int], norm: str) -> float:
    """Norm of an integer vector."""
    if norm == "euclidean":
        return math.sqrt(sum(c * c for c in v))
    if norm == "sup":
        return float(max(abs(c) for c in v))
    if norm == "l1":
        return float(sum(abs(c) for c in v))
    raise ValueError(f"unknown norm {norm!r}")


def norm_values(arr: np.ndarray, norm: str) -> np.ndarray:
    """Vectorized norm of an (N, d) integer array."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if norm == "euclidean":
        return np.sqrt((a * a).sum(axis=1))
    if norm == "sup":
        return np.abs(a).max(axis=1)
    if norm == "l1":
        return np.abs(a).sum(axis=1)
    raise ValueError(f"unknown norm {norm!r}")


@dataclass(frozen=True)
class Box:
    """A finite vertex set of Z^d with deterministic indexing.

    ``vertices`` is lexicographically sorted; ``radius``/``center`` are kept
    for provenance (unions carry the covering radius of their parts).
    """

    dimension: int
    center: Vec
    radius: float
    norm: str
    vertices: Tuple[Vec, ...]
    _index: dict = field(repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {v: i for i, v in enumerate(self.vertices)}
        )

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return self.n * (self.n - 1) // 2

    def index_of(self, v: Sequence[int]) -> int:
        try:
            return self._index[tuple(v)]
        except KeyError:
            raise ValueError(f"vertex {tuple(v)} not in box") from None

    def __contains__(self, v) -> bool:
        return tuple(v) in self._index

    def coords(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.int64)


def make_box(d: int, center: Sequence[int], radius: float, norm: str = "euclidean") -> Box:
    """All x with |x - center| < radius (strict), lexicographically ordered."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}")
    center = tuple(int(c) for c in center)
    if len(center) != d:
        raise ValueError("center has wrong dimension")
    half = int(math.ceil(radius))
    axes = [range(c - half, c + half + 1) for c in center]
    verts = []
    for v in _product(axes):
        if norm_value([a - b for a, b in zip(v, center)], norm) < radius:
            verts.append(v)
    verts.sort()
    return Box(d, center, float(radius), norm, tuple(verts))


def box_union(a: Box, b: Box) -> Box:
    """Union of two boxes (e.g. the two-armed region around 0 and x)."""
    if a.dimension != b.dimension or a.norm != b.norm:
        raise ValueError("boxes must share dimension and norm")
    verts = sorted(set(a.vertices) | set(b.vertices))
    radius = max(
        a.radius + norm_value([x - y for x, y in zip(a.center, b.center)], a.norm),
        b.radius,
    )
    return Box(a.dimension, a.center, radius, a.norm, tuple(verts))


def _product(axes):
    if len(axes) == 1:
        for x in axes[0]:
            yield (x,)
        return
    for x in axes[0]:
        for rest in _product(axes[1:]):
            yield (x,) + rest


# -- unordered-pair ranking ------------------------------------------------
# id(i, j) for i < j is row-major over the strict upper triangle.


def rank_pair(i: int, j: int, n: int) -> int:
    if i == j:
        raise ValueError("self-pairs do not exist")
    if i > j:
        i, j = j, i
    if not (0 <= i < j < n):
        raise ValueError("vertex index out of range")
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def unrank_pair(e: int, n: int) -> Tuple[int, int]:
    m = n * (n - 1) // 2
    if not (0 <= e < m):
        raise ValueError("edge id out of range")
    # count pairs from the tail: first index i leaves (n-i)(n-i-1)/2 pairs
    t = m - e
    s = (1 + math.isqrt(8 * t - 7)) // 2
    while s * (s - 1) // 2 < t:
        s += 1
    while (s - 1) * (s - 2) // 2 >= t:
        s -= 1
    i = n - s
    j = i + 1 + (e - (i * (2 * n - i - 1) // 2))
    return i, j


def unrank_pairs(e: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized inverse ranking; exact for n(n-1)/2 < 2**52."""
    e = np.asarray(e, dtype=np.int64)
    m = n * (n - 1) // 2
    t = (m - e).astype(np.float64)
    s = np.floor((1.0 + np.sqrt(8.0 * t - 7.0)) / 2.0).astype(np.int64)
    # fix rounding at the boundaries
    for _ in range(2):
        s = np.where(s * (s - 1) // 2 < (m - e), s + 1, s)
        s = np.where((s - 1) * (s - 2) // 2 >= (m - e), s - 1, s)
    i = n - s
    j = i + 1 + (e - (i * (2 * n - i - 1) // 2))
    return i.astype(np.int32), j.astype(np.int32)


def pair_index(box: Box, x: Sequence[int], y: Sequence[int]) -> int:
    """Edge id of the unordered pair {x, y}."""
    i, j = box.index_of(x), box.index_of(y)
    return rank_pair(i, j, box.n)


def pair_of(box: Box, e: int) -> Tuple[Vec, Vec]:
    """Inverse of pair_index."""
    i, j = unrank_pair(e, box.n)
    return box.vertices[i], box.vertices[j]
