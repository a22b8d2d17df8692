"""Coupling-constant families J_{0,x} and finite-range hypothesis audits.

The built-in families are radial (J depends on x only through |x|), so
translation invariance holds by construction via J(x, y) = J_{0, y-x}.
The audits are finite scans: a ``pass`` verdict means "no violation found
up to the scan radius with a stable constant", never a proof.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .lattice import norm_value, norm_values, _product

FAMILIES = ("power_law", "log_power", "exp_log_poly", "table")


@dataclass(frozen=True)
class CouplingSpec:
    """A translation-invariant coupling family with a chosen norm on Z^d."""

    family: str
    dimension: int
    norm: str = "euclidean"
    c: Optional[float] = None
    coeffs: Tuple[float, ...] = ()  # exp_log_poly: p(r) = sum coeffs[k] r^k
    big_c: float = 1.0
    gamma: float = 1.0
    table: Optional[Tuple[Tuple[Tuple[int, ...], float], ...]] = None
    _table_map: dict = field(repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.family == "power_law":
            if self.c is None or self.c <= self.dimension:
                raise ValueError("power_law requires c > d for summability")
        if self.family == "exp_log_poly":
            if not self.coeffs or len(self.coeffs) < 2:
                raise ValueError("exp_log_poly needs a polynomial of degree >= 1")
            if self.big_c <= 0 or self.gamma <= 0:
                raise ValueError("exp_log_poly requires C > 0 and gamma > 0")
        if self.family == "table":
            if not self.table:
                raise ValueError("table family needs entries")
            for vec, val in self.table:
                if len(vec) != self.dimension:
                    raise ValueError(f"table vector {vec} has wrong dimension")
                if not val > 0:
                    raise ValueError(f"non-positive table entry at {vec}")
            object.__setattr__(self, "_table_map", dict(self.table))

    # -- constructors -------------------------------------------------------

    @classmethod
    def power_law(cls, c: float, d: int, norm: str = "euclidean") -> "CouplingSpec":
        return cls("power_law", d, norm, c=float(c))

    @classmethod
    def log_power(cls, d: int, norm: str = "euclidean") -> "CouplingSpec":
        return cls("log_power", d, norm)

    @classmethod
    def exp_log_poly(
        cls, coeffs: Sequence[float], big_c: float, gamma: float, d: int,
        norm: str = "euclidean",
    ) -> "CouplingSpec":
        return cls("exp_log_poly", d, norm, coeffs=tuple(float(a) for a in coeffs),
                   big_c=float(big_c), gamma=float(gamma))

    @classmethod
    def from_table(
        cls, entries: Mapping[Sequence[int], float], d: int, norm: str = "euclidean"
    ) -> "CouplingSpec":
        tab = tuple(sorted((tuple(int(c) for c in k), float(v))
                           for k, v in entries.items()))
        return cls("table", d, norm, table=tab)

    @classmethod
    def from_function(
        cls, fn: Callable[[float], float], radius: int, d: int,
        norm: str = "euclidean",
    ) -> "CouplingSpec":
        """Tabulate a radial function over all lattice points within radius."""
        entries = {}
        for x in lattice_points(d, radius):
            entries[x] = fn(norm_value(x, norm))
        return cls.from_table(entries, d, norm)

    @property
    def radial(self) -> bool:
        return self.family != "table"

    def __hash__(self):
        return hash((self.family, self.dimension, self.norm, self.c,
                     self.coeffs, self.big_c, self.gamma, self.table))


def lattice_points(d: int, radius: float, norm: str = "euclidean") -> List[Tuple[int, ...]]:
    """Nonzero lattice points with |x| <= radius, lexicographic order."""
    half = int(math.floor(radius))
    pts = []
    for v in _product([range(-half, half + 1)] * d):
        if any(v) and norm_value(v, norm) <= radius:
            pts.append(v)
    return pts


def _poly(coeffs: Sequence[float], r: float) -> float:
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * r + a
    return acc


def evaluate_norm(spec: CouplingSpec, r) -> float:
    """J at radial distance r, for the built-in (radial) families."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0):
        raise ValueError("radial distance must be positive")
    if spec.family == "power_law":
        out = r ** (-spec.c)
    elif spec.family == "log_power":
        out = np.exp(-np.log(r) ** 2)
    elif spec.family == "exp_log_poly":
        p = np.zeros_like(r)
        for a in reversed(spec.coeffs):
            p = p * r + a
        if np.any(p < 1.0):
            raise ValueError("exp_log_poly polynomial must satisfy p(|x|) >= 1")
        out = np.exp(-spec.big_c * np.log(p) ** spec.gamma)
    else:
        raise ValueError("table families are not radial")
    return float(out) if out.ndim == 0 else out


def evaluate(spec: CouplingSpec, x: Sequence[int]) -> float:
    """J_{0,x}; J(x, y) is exposed as evaluate(spec, y - x)."""
    x = tuple(int(c) for c in x)
    if not any(x):
        raise ValueError("J_{0,0} is undefined (self-edges do not exist)")
    if spec.family == "table":
        try:
            return spec._table_map[x]
        except KeyError:
            raise ValueError(f"table family has no entry for {x}") from None
    return evaluate_norm(spec, norm_value(x, spec.norm))


def evaluate_many(spec: CouplingSpec, vectors: np.ndarray) -> np.ndarray:
    """Vectorized evaluate over an (N, d) array of nonzero vectors."""
    vectors = np.asarray(vectors, dtype=np.int64)
    if spec.radial:
        return np.asarray(evaluate_norm(spec, norm_values(vectors, spec.norm)))
    return np.array([evaluate(spec, v) for v in vectors])


# -- hypothesis audits -------------------------------------------------------


@dataclass(frozen=True)
class HypothesisReport:
    hypothesis: str  # H1, H3, H4 or H5
    verdict: str     # pass, fail or inconclusive
    witness: dict
    scan_radius: float


def _scan(spec: CouplingSpec, radius: float):
    """(points, norms, J values) for 0 < |x| <= radius, sorted by norm."""
    pts = lattice_points(spec.dimension, radius, spec.norm)
    arr = np.array(pts, dtype=np.int64)
    norms = norm_values(arr, spec.norm)
    vals = evaluate_many(spec, arr)
    order = np.argsort(norms, kind="stable")
    return arr[order], norms[order], vals[order]


def check_h1(spec: CouplingSpec, radius: float) -> HypothesisReport:
    """Minimal c with J_{0,x} <= c J_{0,y} whenever |x| >= |y|, over the scan."""
    if radius < 2:
        raise ValueError("radius must be >= 2")
    pts, norms, vals = _scan(spec, radius)
    # suffix maximum of J over norms >= |y|, ties included
    suffix = np.maximum.accumulate(vals[::-1])[::-1]
    starts = np.searchsorted(norms, norms, side="left")
    c_req = suffix[starts] / vals
    k = int(np.argmax(c_req))
    c = float(c_req[k])
    witness = {"c": c, "worst_y": tuple(int(v) for v in pts[k])}
    return HypothesisReport("H1", "pass", witness, radius)


def _tail_bound(spec: CouplingSpec, radius: float, alpha: float = 1.0):
    """Integral-comparison bound on sum_{|y| > radius} J^alpha.

    Valid when -log J is convex in log r (true for power_law, log_power and
    exp_log_poly with gamma >= 1): beyond R the decay exponent is at least
    the secant slope on [R/2, R], so shells are dominated by a power law.
    """
    d = spec.dimension
    if not spec.radial:
        return None
    if spec.family == "exp_log_poly" and spec.gamma < 1.0:
        return None  # not log-convex in log r; no analytic bound
    r_hi, r_lo = float(radius), float(radius) / 2.0
    j_hi = evaluate_norm(spec, r_hi) ** alpha
    j_lo = evaluate_norm(spec, r_lo) ** alpha
    slope = math.log(j_lo / j_hi) / math.log(r_hi / r_lo)
    if slope <= d:
        return math.inf
    shells = 2 * d * 3 ** (d - 1)
    return shells * j_hi * r_hi ** d / (slope - d)


def check_h3(spec: CouplingSpec, radius: float) -> HypothesisReport:
    """Partial sum of J over the scan plus an analytic tail bound."""
    if radius < 2:
        raise ValueError("radius must be >= 2")
    _, _, vals = _scan(spec, radius)
    partial = float(vals.sum())
    tail = _tail_bound(spec, radius)
    witness = {"partial_sum": partial, "tail_bound": tail}
    if tail is None:
        return HypothesisReport("H3", "inconclusive", witness, radius)
    verdict = "pass" if math.isfinite(tail) else "fail"
    return HypothesisReport("H3", verdict, witness, radius)


def check_h4(
    spec: CouplingSpec,
    probe_points: Sequence[Sequence[int]],
    epsilons: Sequence[float],
) -> HypothesisReport:
    """Largest grid delta per (x, eps) with |J_{0,x} - J_{0,y}| <= eps J_{0,x}
    for every y with |x - y| <= delta |x|.

    The grid descends from 1/2 by halving.  A delta whose window contains no
    lattice point besides x counts as satisfied only when every window on the
    grid is empty (pure vacuity); if some nonvacuous delta exists, at least
    one of them must pass.
    """
    if not probe_points:
        raise ValueError("empty probe list")
    for eps in epsilons:
        if not 0 < eps < 1:
            raise ValueError("epsilons must lie in (0, 1)")
    pairs = {}
    worst = None
    for x in probe_points:
        x = tuple(int(c) for c in x)
        jx = evaluate(spec, x)
        nx = norm_value(x, spec.norm)
        for eps in epsilons:
            best = None
            last_violation = None
            saw_nonvacuous = False
            delta = 0.5
            while delta * nx >= 1.0:
                ys = _window(x, delta * nx, spec)
                if ys:
                    saw_nonvacuous = True
                    bad = next(
                        (y for y in ys
                         if abs(jx - evaluate(spec, y)) > eps * jx),
                        None,
                    )
                    if bad is None:
                        best = delta
                        break
                    last_violation = (x, bad)
                delta /= 2.0
            if not saw_nonvacuous:
                best = 0.5  # every window on the grid is empty
            pairs[(x, eps)] = best
            if best is None and worst is None:
                worst = last_violation
    ok = all(v is not None for v in pairs.values())
    witness = {
        "deltas": {f"x={x} eps={e}": v for (x, e), v in pairs.items()},
    }
    if not ok:
        witness["violation"] = worst
    return HypothesisReport(
        "H4", "pass" if ok else "fail", witness,
        max(norm_value(x, spec.norm) for x in probe_points),
    )


def _window(x: Tuple[int, ...], dist: float, spec: CouplingSpec):
    """Lattice points y != x, y != 0 with |x - y| <= dist."""
    if dist < 1.0:
        return []
    half = int(math.floor(dist))
    out = []
    for off in _product([range(-half, half + 1)] * len(x)):
        if not any(off):
            continue
        if norm_value(off, spec.norm) > dist:
            continue
        y = tuple(a + b for a, b in zip(x, off))
        if any(y):
            out.append(y)
    return out


def log_j_radial(spec: CouplingSpec, logr: float) -> float:
    """log J at radial distance e^logr, stable for arbitrarily large logr.

    Lets the hypothesis checks probe the radial profile far beyond any
    representable lattice radius.
    """
    if spec.family == "power_law":
        return -spec.c * logr
    if spec.family == "log_power":
        return -logr * logr
    if spec.family == "exp_log_poly":
        # log p(e^logr) via a shifted exponential sum over the coefficients
        terms = [(math.log(abs(a)) + i * logr, math.copysign(1.0, a))
                 for i, a in enumerate(spec.coeffs) if a != 0.0]
        m = max(t for t, _ in terms)
        s = sum(sg * math.exp(t - m) for t, sg in terms)
        if s <= 0:
            raise ValueError("exp_log_poly polynomial non-positive at probe")
        logp = m + math.log(s)
        if logp < 0:
            raise ValueError("exp_log_poly polynomial must stay >= 1")
        return -spec.big_c * logp ** spec.gamma
    raise ValueError("table families have no radial form")


def _h5_log_profile(spec: CouplingSpec, gamma: float, alpha: float,
                    logr_max: float = 600.0, points: int = 400):
    """(logr grid, log of the required H5 constant) along the radial profile.

    The worst admissible u, v at radius r sit at max(1, r/(log J)^2) and
    max(1, r^gamma/(log J)^2); everything is evaluated in the log domain so
    the probe can extend to radii far beyond float range of J itself.
    """
    grid, prof = [], []
    for logr in np.linspace(math.log(4.0), logr_max, points):
        lj = log_j_radial(spec, logr)
        if lj >= -1e-9:
            continue
        l2 = 2.0 * math.log(-lj)   # log of (log J)^2
        lj_u = log_j_radial(spec, max(logr - l2, 0.0))
        lj_v = log_j_radial(spec, max(gamma * logr - l2, 0.0))
        grid.append(logr)
        prof.append(l2 + lj_u + (1.0 - alpha) * lj_v - lj)
    return np.array(grid), np.array(prof)


def check_h5(
    spec: CouplingSpec,
    gamma: float,
    alpha: float,
    radius: float,
    cap: float = 1e8,
) -> HypothesisReport:
    """Minimal C1 over the scan for the worst admissible (u, v) per x.

    The left side log(J_{0,x})^2 J_{0,u} J_{0,v} is maximized, up to the H1
    constant, at the smallest admissible |u| and |v|; the reported constant
    is multiplied by c_H1^2 to stay conservative.

    Verdict: for the built-in radial families the finiteness of
    sup_x C1(x) is decided on the analytic radial profile probed in the
    log domain out to e^600 (the lattice-scan constant can be huge yet
    finite, e.g. for the log-power family); the profile must peak and then
    decay.  Table families have no radial form, so they fail when the
    scanned constant exceeds ``cap`` while still growing.
    """
    if not 0 < gamma < 1 or not 0 < alpha < 1:
        raise ValueError("gamma and alpha must lie in (0, 1)")
    if radius < 2:
        raise ValueError("radius must be >= 2")
    pts, norms, vals = _scan(spec, radius)
    c_h1 = check_h1(spec, radius).witness["c"]

    # summability of J^alpha, as in check_h3
    partial_alpha = float((vals ** alpha).sum())
    tail_alpha = _tail_bound(spec, radius, alpha=alpha)

    uniq_norms = np.unique(norms)
    per_x: List[Tuple[float, float]] = []
    worst = None
    worst_c1 = 0.0
    for k in range(len(pts)):
        jx = vals[k]
        lx = math.log(jx) ** 2
        if lx < 1e-9:
            continue  # J ~ 1 near the origin; admissible bounds degenerate
        nu = _smallest_norm_at_least(uniq_norms, norms[k] / lx, spec)
        nv = _smallest_norm_at_least(uniq_norms, norms[k] ** gamma / lx, spec)
        if nu is None or nv is None:
            continue
        ju = _radial_value(spec, nu, pts, norms, vals)
        jv = _radial_value(spec, nv, pts, norms, vals)
        c1_req = c_h1 ** 2 * lx * ju * jv / (jx * jv ** alpha)
        per_x.append((float(norms[k]), float(c1_req)))
        if c1_req > worst_c1:
            worst_c1 = c1_req
            worst = (tuple(int(v) for v in pts[k]), float(nu), float(nv))
    sum_ok = tail_alpha is None or math.isfinite(tail_alpha)
    witness = {
        "C1": worst_c1,
        "worst": worst,
        "per_x": per_x,
        "alpha_partial_sum": partial_alpha,
        "alpha_tail_bound": tail_alpha,
        "gamma": gamma,
        "alpha": alpha,
        "cap": cap,
    }
    if spec.radial:
        grid, prof = _h5_log_profile(spec, gamma, alpha)
        peak = int(np.argmax(prof))
        decays = peak < len(prof) - 1 and prof[-1] < prof[peak] - 1.0
        witness["log_c1_peak"] = {"logr": float(grid[peak]),
                                  "log_c1": float(prof[peak]),
                                  "log_c1_at_probe_end": float(prof[-1])}
        verdict = "pass" if (decays and sum_ok) else "fail"
    else:
        growing = (len(per_x) >= 2 and per_x[-1][1] > per_x[0][1])
        verdict = "fail" if (not sum_ok or
                             (worst_c1 > cap and growing)) else "pass"
    return HypothesisReport("H5", verdict, witness, radius)


def _smallest_norm_at_least(uniq_norms: np.ndarray, bound: float, spec: CouplingSpec):
    """Smallest achievable lattice norm >= bound; axis point beyond the scan."""
    i = np.searchsorted(uniq_norms, bound - 1e-12, side="left")
    if i < len(uniq_norms):
        return float(uniq_norms[i])
    if spec.radial:
        return float(math.ceil(bound))  # axis vector ceil(bound)*e1
    return None


def _radial_value(spec, r, pts, norms, vals):
    if spec.radial:
        return evaluate_norm(spec, r)
    k = np.searchsorted(norms, r - 1e-12, side="left")
    # table families: any scanned point at this norm (worst case under H1)
    sel = np.abs(norms - r) < 1e-9
    return float(vals[sel].max()) if sel.any() else float(vals[k])
