"""Estimators with batch-means error bars and the proof diagnostics.

Everything here consumes per-sweep observable series produced by the
samplers (connectivity indicators, |C(0)|, spin-agreement indicators) or
stored bond snapshots, and turns them into the quantities of the two-point
asymptotic, the susceptibility, the cluster-volume tail and the bridging
diagnostics, each with a standard error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Configuration, FkModel, bridge_diagnostics, cluster_of
from .lattice import Box, norm_value, rank_pair
from .samplers import _tau_int


@dataclass
class Estimate:
    mean: float
    stderr: float
    batches: int
    samples: int

    def __iter__(self):
        yield from (self.mean, self.stderr, self.batches, self.samples)


def choose_batch_length(x: np.ndarray, min_batches: int = 20) -> int:
    """Batch length from the integrated autocorrelation time (>= 10 tau),
    clipped so at least ``min_batches`` batches remain."""
    nx = len(x)
    if nx < min_batches:
        raise ValueError(f"need at least {min_batches} samples")
    tau = _tau_int(x)
    blen = max(1, int(math.ceil(10.0 * tau)))
    return min(blen, nx // min_batches)


def _batches(x: np.ndarray, blen: int) -> np.ndarray:
    nb = len(x) // blen
    return x[: nb * blen].reshape(nb, blen).mean(axis=1)


def batch_means(x: np.ndarray, batch_length: Optional[int] = None,
                min_batches: int = 20) -> Estimate:
    """Point estimate with batch-means standard error."""
    x = np.asarray(x, dtype=np.float64)
    blen = batch_length or choose_batch_length(x, min_batches)
    b = _batches(x, blen)
    nb = len(b)
    if nb < min_batches:
        raise ValueError(f"only {nb} batches available, need {min_batches}")
    se = float(b.std(ddof=1) / math.sqrt(nb)) if nb > 1 else math.inf
    return Estimate(float(b.mean()), se, nb, len(x))


def two_point(conn: np.ndarray, batch_length: Optional[int] = None
              ) -> List[Estimate]:
    """Connectivity estimates, one per target column of the indicator array."""
    conn = np.atleast_2d(np.asarray(conn, dtype=np.float64).T).T
    return [batch_means(conn[:, t], batch_length) for t in range(conn.shape[1])]


def susceptibility(csize: np.ndarray, batch_length: Optional[int] = None
                   ) -> Estimate:
    """chi_Lambda = E|C(origin)|, the in-box sum of connection probabilities."""
    return batch_means(np.asarray(csize, dtype=np.float64), batch_length)


# -- cluster-volume tail -------------------------------------------------------


@dataclass
class TailFit:
    thresholds: np.ndarray
    estimates: List[Estimate]
    slope: float            # fitted d log P / dn, negative under exponential decay
    slope_stderr: float
    intercept: float
    convex_residuals: bool  # True when the sign test flags convex curvature
    used: np.ndarray        # thresholds entering the fit


def cluster_tail(csize: np.ndarray, thresholds: Sequence[int],
                 batch_length: Optional[int] = None) -> TailFit:
    """Tail frequencies P(|C(0)| >= n) and a weighted log-linear fit.

    Thresholds whose frequency falls below 10/samples are excluded from the
    fit.  Residual curvature is probed by adding a quadratic term to the
    weighted fit; the convex flag requires the coefficient to be both
    significant (6 sigma -- the residuals share samples, so their errors
    are correlated and a nominal-level test would over-trigger) and
    material (the quadratic bow across the fit range exceeds 10% of the
    total linear drop; exponential tails with polynomial prefactors show
    significant but tiny curvature once the data is precise enough).
    """
    thresholds = np.asarray(sorted(thresholds), dtype=np.int64)
    if np.any(np.diff(thresholds) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    csize = np.asarray(csize, dtype=np.float64)
    ests = [batch_means((csize >= n).astype(np.float64), batch_length)
            for n in thresholds]
    samples = len(csize)
    keep = np.array([e.mean >= 10.0 / samples and e.mean > 0 for e in ests])
    if keep.sum() < 3:
        raise ValueError("tail empty at (almost) all thresholds")
    ns = thresholds[keep].astype(np.float64)
    ps = np.array([e.mean for e in ests])[keep]
    ses = np.array([e.stderr for e in ests])[keep]
    logp = np.log(ps)
    wts = 1.0 / np.maximum(ses / ps, 1e-12) ** 2  # Var(log p) ~ (se/p)^2

    slope, intercept, slope_se = _wls_line(ns, logp, wts)
    resid = logp - (intercept + slope * ns)
    convex = _convexity_test(ns, resid, wts, abs(slope) * np.ptp(ns))
    return TailFit(thresholds, ests, slope, slope_se, intercept, convex,
                   thresholds[keep])


def _wls_line(x, y, w):
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    slope_se = math.sqrt(1.0 / sxx)
    return float(slope), float(intercept), float(slope_se)


def _convexity_test(x, resid, w, drop, z_level: float = 6.0,
                    rel_level: float = 0.1) -> bool:
    """Weighted quadratic fit to the residuals of the line; returns True
    (convex trend) when the quadratic coefficient is z_level significant
    and its bow across the fit range exceeds rel_level of ``drop`` (the
    total decay of the linear fit)."""
    if len(x) < 4 or drop <= 0:
        return False
    basis = np.stack([np.ones_like(x), x, x * x], axis=1)
    gram = basis.T @ (w[:, None] * basis)
    # pinv: an exactly-known threshold (stderr 0) gets a huge weight and can
    # make the Gram matrix numerically singular
    cov = np.linalg.pinv(gram)
    coef = cov @ (basis.T @ (w * resid))
    se = math.sqrt(max(cov[2, 2], 0.0))
    bend = coef[2] * (np.ptp(x) / 2.0) ** 2
    return bool(se > 0 and coef[2] > z_level * se and bend > rel_level * drop)


# -- two-point ratio scan --------------------------------------------------------


@dataclass
class RatioPoint:
    x: Tuple[int, ...]
    abs_x: float
    j0x: float
    mu: Estimate
    r_hat: float
    r_stderr: float
    d_comp_freq: float       # empirical frequency of D_0^c = {|C(0)| >= f(x)}
    d_comp_over_j: float
    d_sensitivity: Dict[str, float] = field(default_factory=dict)


@dataclass
class RatioScan:
    points: List[RatioPoint]
    chi: Estimate
    beta: float
    q: float
    c1_hint: float


def ratio_scan(
    conn: np.ndarray,
    csize: np.ndarray,
    targets: Sequence[Tuple[int, ...]],
    j_values: Sequence[float],
    beta: float,
    q: float,
    c1_hint: float,
    norm: str = "euclidean",
    batch_length: Optional[int] = None,
    chi_series: Optional[np.ndarray] = None,
    d_series: Optional[np.ndarray] = None,
) -> RatioScan:
    """r_hat(x) = q mu(0<->x) / (beta chi^2 J_{0,x}) per target, with the
    delta-method error treating mu and chi from the same chain as correlated,
    plus the small-cluster event report driven by c1_hint.

    ``conn`` may be the origin indicator stream or the translation-averaged
    connected-pair fraction; ``chi_series`` (default: ``csize``) feeds the
    susceptibility, e.g. the per-sweep mean cluster size when averaging over
    translates.  ``d_series`` (sweeps x T), when given, supplies the
    translation-averaged frequency of clusters of size >= f(x) at the base
    c1; the half/double sensitivities always come from the origin ``csize``.
    """
    if c1_hint <= 0:
        raise ValueError("c1_hint must be positive")
    conn = np.asarray(conn, dtype=np.float64)
    csize = np.asarray(csize, dtype=np.float64)
    chi_src = (np.asarray(chi_series, dtype=np.float64)
               if chi_series is not None else csize)
    blen = batch_length or choose_batch_length(chi_src)
    chi_b = _batches(chi_src, blen)
    chi = Estimate(float(chi_b.mean()),
                   float(chi_b.std(ddof=1) / math.sqrt(len(chi_b))),
                   len(chi_b), len(chi_src))
    samples = conn.shape[0]
    points = []
    for t, x in enumerate(targets):
        jx = float(j_values[t])
        ax = norm_value(x, norm)
        mu_b = _batches(conn[:, t], blen)
        nb = len(mu_b)
        mu = Estimate(float(mu_b.mean()), float(mu_b.std(ddof=1) / math.sqrt(nb)),
                      nb, samples)
        r = q * mu.mean / (beta * chi.mean ** 2 * jx) if mu.mean > 0 else 0.0
        if mu.mean > 0:
            cov = float(np.cov(mu_b, chi_b, ddof=1)[0, 1]) / nb
            var_rel = ((mu.stderr / mu.mean) ** 2
                       + 4.0 * (chi.stderr / chi.mean) ** 2
                       - 4.0 * cov / (mu.mean * chi.mean))
            r_se = r * math.sqrt(max(var_rel, 0.0))
        else:
            r_se = math.inf
        sens = {}
        for tag, c1 in (("half", c1_hint / 2), ("base", c1_hint),
                        ("double", c1_hint * 2)):
            f = -2.0 * math.log(jx) / c1
            sens[tag] = float((csize >= f).mean())
        base = (float(d_series[:, t].mean()) if d_series is not None
                else sens["base"])
        sens["base"] = base
        points.append(RatioPoint(tuple(x), ax, jx, mu, r, r_se,
                                 base, base / jx, sens))
    return RatioScan(points, chi, beta, q, c1_hint)


def merge_series(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Deterministic concatenation of per-seed series (ordered by caller)."""
    return np.concatenate(list(parts), axis=0)


# -- bridging diagnostics ---------------------------------------------------------


@dataclass
class BridgeSummary:
    target: Tuple[int, ...]
    events_seen: int               # connection events examined (capped store)
    samples: int                   # total sweeps in the stream
    mu_hat: float                  # connection frequency over the full stream
    l_values: List[float]
    r0_values: List[float]
    rx_values: List[float]
    lemma_event_rate: float        # mu(0<->x, D_0, R_0 >= |x|^gamma) estimate
    lemma_ratio: float             # ... divided by J_{0,x}
    pigeonhole_checked: int
    pigeonhole_failures: int
    gamma: float
    f_value: float


def bridge_scan(
    box: Box,
    events: Sequence[Tuple[int, int, np.ndarray, np.ndarray]],
    origin,
    target,
    j0x: float,
    c1_hint: float,
    mu_hat: float,
    samples: int,
    ph_qual: int = 0,
    ph_fail: int = 0,
    gamma: float = 0.5,
) -> BridgeSummary:
    """Bridging diagnostics over stored connection events.

    Each event is (a, b, bonds_u, bonds_v): a bond snapshot from a sweep
    where the vertex pair (a, b), a translate of (origin, target), was
    connected (a capped, deterministic prefix of all such pairs).
    Conditional frequencies from the snapshots are rescaled by mu_hat to
    estimate unconditional event probabilities.
    """
    if c1_hint <= 0:
        raise ValueError("c1_hint must be positive")
    ax = norm_value(np.array(target) - np.array(origin), box.norm)
    f_value = -2.0 * math.log(j0x) / c1_hint
    l_vals: List[float] = []
    r0_vals: List[float] = []
    rx_vals: List[float] = []
    lemma_hits = 0
    checked = 0
    failures = 0
    n = box.n
    for a, b, bu, bv in events:
        cfg = Configuration(box)
        for u, v in zip(bu, bv):
            cfg.bits[rank_pair(int(u), int(v), n)] = True
        va, vb = box.vertices[int(a)], box.vertices[int(b)]
        diag = bridge_diagnostics(cfg, va, vb, f_value)
        checked += 1
        if diag.pigeonhole_premise and not diag.pigeonhole_ok:
            failures += 1
        if diag.L is not None:
            l_vals.append(diag.L)
        r0_vals.append(diag.R0)
        rx_vals.append(diag.Rx)
        # Lemma event: {0 <-> x} cap D_0 cap {R_0 >= |x|^gamma}
        csize = len(cluster_of(cfg, va))
        if csize < f_value and diag.R0 >= ax ** gamma:
            lemma_hits += 1
    cond = lemma_hits / checked if checked else 0.0
    rate = cond * mu_hat
    return BridgeSummary(tuple(target), checked, samples, mu_hat,
                         l_vals, r0_vals, rx_vals, rate, rate / j0x,
                         ph_qual + checked, ph_fail + failures, gamma, f_value)


# -- Potts correlation via the ES coupling -----------------------------------------


@dataclass
class PottsCorrelation:
    spin_agree: Estimate
    connection: Estimate
    residual: Estimate  # (P(sigma=sigma) - 1/q) - (q-1)/q mu(x<->y)


def potts_correlation(cmatch: np.ndarray, conn: np.ndarray, q: float,
                      batch_length: Optional[int] = None
                      ) -> List[PottsCorrelation]:
    """Spin-agreement and connectivity estimates from the same ES chain,
    plus the coupling-identity residual with propagated error."""
    cmatch = np.asarray(cmatch, dtype=np.float64)
    conn = np.asarray(conn, dtype=np.float64)
    if cmatch.shape != conn.shape:
        raise ValueError("color and bond streams must align")
    out = []
    for t in range(cmatch.shape[1]):
        resid_series = (cmatch[:, t] - 1.0 / q) - (q - 1.0) / q * conn[:, t]
        out.append(PottsCorrelation(
            batch_means(cmatch[:, t], batch_length),
            batch_means(conn[:, t], batch_length),
            batch_means(resid_series, batch_length),
        ))
    return out
