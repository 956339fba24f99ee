"""Split-scan statistic and binary segmentation.

Conventions used throughout the package:

* a segment is a half-open column range ``[s, e)`` of the ``p x n`` series;
* a change-point ``tau`` is a split offset: the left part is ``X[:, s:tau]``
  and the right part is ``X[:, tau:e]``, so ``tau`` equals the number of
  points at or before the break when time is counted from 1.

The scan statistic of a candidate split is the sum of the two sides'
regularised factorisation losses (fit plus ``lam`` times the nuclear norm).
A minimising split is kept only if it beats the unsplit segment's plain fit
loss by more than the penalty ``mu * log(n)``, where ``n`` is the length of
the full series; accepted splits recurse on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CandidateRangeError, DimensionError
from .factorization import SegmentLoss, SolverOptions, factorize, segment_loss

__all__ = [
    "DetectionConfig",
    "ScanProfile",
    "SegmentationResult",
    "FixedKResult",
    "scan_statistic",
    "best_split",
    "refine",
    "accept_change",
    "detect",
    "detect_fixed_k",
]


@dataclass(frozen=True)
class DetectionConfig:
    """Parameters shared by every detection operation.

    Parameters
    ----------
    d : int
        Subspace dimension used for every segment factorisation.
    lam : float
        Nuclear-norm weight in the scan statistic.
    mu : float
        Scale of the acceptance penalty ``mu * log(n)``.
    msl : int
        Minimum segment length; both sides of any split must contain at
        least this many points.
    grid_mode : bool
        Evaluate the scan on ``ceil(log(segment length))`` equally spaced
        candidates and refine around the coarse minimiser, instead of every
        admissible split.
    refine_window : int
        Half-width of the refinement neighbourhood in grid mode.
    solver : SolverOptions
        Stopping rule and seed for the per-segment solver.
    """

    d: int
    lam: float
    mu: float = 0.0
    msl: int = 30
    grid_mode: bool = False
    refine_window: int = 10
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.msl < self.d:
            raise ValueError(
                f"msl={self.msl} must be >= d={self.d} so each side admits a rank-d fit"
            )
        if self.refine_window < 1:
            raise ValueError("refine_window must be >= 1")


@dataclass
class ScanProfile:
    """Candidate splits of one segment and their scan statistics."""

    segment: tuple[int, int]
    candidates: list[int]
    statistics: list[float]


@dataclass
class SegmentationResult:
    """Detected change-points with per-segment summaries.

    ``changepoints`` is sorted; consecutive entries (and the distances to the
    series ends) are at least ``msl`` apart.  ``segment_bases`` holds one
    orthonormal ``p x d`` basis per final segment.  ``total_penalized_loss``
    is the sum of segment fit losses plus ``mu * K * log(n)``.
    ``detection_order`` lists the change-points in the order they were found,
    and ``scan_profiles`` records every segment scan that was run (including
    scans whose best split was rejected).
    """

    changepoints: list[int]
    segment_bases: list[np.ndarray] = field(repr=False, default_factory=list)
    segment_losses: list[SegmentLoss] = field(default_factory=list)
    total_penalized_loss: float = 0.0
    detection_order: list[int] = field(default_factory=list)
    scan_profiles: list[ScanProfile] = field(repr=False, default_factory=list)


@dataclass
class FixedKResult:
    """Greedy segmentation with a fixed change budget.

    ``fit_curve[j]`` is the total unregularised fit loss after ``j`` splits.
    ``reached_k`` is False when admissible splits ran out before the budget.
    """

    segmentation: SegmentationResult
    fit_curve: list[float]
    reached_k: bool


def _as_series(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"series must be a 2-d array, got ndim={X.ndim}")
    if not np.isfinite(X).all():
        raise ValueError("series contains non-finite entries")
    return X


class _Scanner:
    """Caches segment losses and segment scans for one (X, config) pair.

    The cache dict may be shared between calls that use the same series,
    dimension, lam, and solver seed (e.g. a fixed-budget run followed by a
    penalised run); entries are keyed by segment bounds only.
    """

    def __init__(self, X: np.ndarray, cfg: DetectionConfig, cache: dict | None = None):
        self.X = X
        self.cfg = cfg
        self.cache = {} if cache is None else cache

    def seg_loss(self, s: int, e: int) -> SegmentLoss:
        key = ("loss", s, e)
        hit = self.cache.get(key)
        if hit is None:
            hit = segment_loss(self.X[:, s:e], self.cfg.d, self.cfg.lam, self.cfg.solver)
            self.cache[key] = hit
        return hit

    def statistic(self, s: int, e: int, tau: int) -> float:
        return (
            self.seg_loss(s, tau).regularized_total
            + self.seg_loss(tau, e).regularized_total
        )

    def admissible(self, s: int, e: int) -> tuple[int, int] | None:
        lo, hi = s + self.cfg.msl, e - self.cfg.msl
        return (lo, hi) if lo <= hi else None

    def scan(self, s: int, e: int):
        """Best split of ``[s, e)``: ``(tau, T(tau), profile)`` or None."""
        key = ("scan", s, e)
        if key in self.cache:
            return self.cache[key]
        rng = self.admissible(s, e)
        if rng is None:
            self.cache[key] = None
            return None
        lo, hi = rng
        stats: dict[int, float] = {}
        if self.cfg.grid_mode and hi - lo + 1 > 3:
            m = max(3, math.ceil(math.log(e - s)))
            coarse = np.unique(np.linspace(lo, hi, num=min(m, hi - lo + 1)).round().astype(int))
            for tau in coarse:
                stats[int(tau)] = self.statistic(s, e, int(tau))
            # From every coarse candidate, walk the refinement window downhill
            # until its local minimiser stops moving.  Multi-start matters: the
            # statistic is multimodal when a segment holds several changes, and
            # a single walk can settle between them.  Evaluations are cached,
            # so overlapping walks cost nothing extra.
            w = self.cfg.refine_window
            for start in coarse:
                centre = int(start)
                while True:
                    window = range(max(lo, centre - w), min(hi, centre + w) + 1)
                    for tau in window:
                        if tau not in stats:
                            stats[tau] = self.statistic(s, e, tau)
                    nxt = min(window, key=lambda t: (stats[t], t))
                    if nxt == centre:
                        break
                    centre = nxt
        else:
            for tau in range(lo, hi + 1):
                stats[tau] = self.statistic(s, e, tau)
        candidates = sorted(stats)
        values = [stats[t] for t in candidates]
        best = min(range(len(candidates)), key=lambda i: (values[i], candidates[i]))
        result = (
            candidates[best],
            values[best],
            ScanProfile(segment=(s, e), candidates=candidates, statistics=values),
        )
        self.cache[key] = result
        return result

    def finish(
        self, changepoints: list[int], order: list[int], profiles: list[ScanProfile], mu: float
    ) -> SegmentationResult:
        n = self.X.shape[1]
        bounds = (0, *sorted(changepoints), n)
        bases, losses = [], []
        for a, b in zip(bounds, bounds[1:]):
            res = factorize(self.X[:, a:b], self.cfg.d, self.cfg.lam, self.cfg.solver)
            Q, _ = np.linalg.qr(res.Z_hat)
            bases.append(Q)
            losses.append(
                SegmentLoss(res.fit_loss, res.nuclear_norm, res.objective)
            )
        total = sum(l.fit for l in losses) + mu * len(changepoints) * math.log(n)
        return SegmentationResult(
            changepoints=sorted(changepoints),
            segment_bases=bases,
            segment_losses=losses,
            total_penalized_loss=total,
            detection_order=order,
            scan_profiles=profiles,
        )


def _check_candidate(n: int, s: int, e: int, tau: int, msl: int) -> None:
    if not 0 <= s < e <= n:
        raise CandidateRangeError(f"segment [{s}, {e}) is not a valid range of 0..{n}")
    if not (s < tau < e):
        raise CandidateRangeError(f"split {tau} is not interior to [{s}, {e})")
    if tau - s < msl or e - tau < msl:
        raise CandidateRangeError(
            f"split {tau} leaves a side shorter than msl={msl} in [{s}, {e})"
        )


def scan_statistic(X, s: int, e: int, tau: int, cfg: DetectionConfig) -> float:
    """Combined regularised loss of the two sides of a candidate split.

    Raises :class:`CandidateRangeError` unless both ``X[:, s:tau]`` and
    ``X[:, tau:e]`` are at least ``msl`` long.
    """
    X = _as_series(X)
    _check_candidate(X.shape[1], s, e, tau, cfg.msl)
    return _Scanner(X, cfg).statistic(s, e, tau)


def best_split(
    X, s: int, e: int, cfg: DetectionConfig, cache: dict | None = None
) -> tuple[int, float] | None:
    """Minimising split of ``[s, e)``, or None when no candidate is admissible.

    Ties are broken toward the smallest split offset.  In grid mode the scan
    evaluates ``ceil(log(segment length))`` equally spaced candidates and
    refines around the coarse minimiser.
    """
    X = _as_series(X)
    scanned = _Scanner(X, cfg, cache).scan(s, e)
    if scanned is None:
        return None
    tau, value, _ = scanned
    return tau, value


def refine(
    X,
    coarse_tau: int,
    window: int,
    s: int,
    e: int,
    cfg: DetectionConfig,
    cache: dict | None = None,
) -> int:
    """Re-minimise the scan statistic in a window around a coarse split.

    The window is clipped to the admissible candidate range of ``[s, e)``.
    """
    X = _as_series(X)
    if window < 1:
        raise ValueError("window must be >= 1")
    scanner = _Scanner(X, cfg, cache)
    rng = scanner.admissible(s, e)
    if rng is None:
        raise CandidateRangeError(f"segment [{s}, {e}) admits no candidate")
    lo, hi = rng
    if not lo <= coarse_tau <= hi:
        raise CandidateRangeError(f"coarse split {coarse_tau} is not admissible in [{s}, {e})")
    taus = range(max(lo, coarse_tau - window), min(hi, coarse_tau + window) + 1)
    return min(taus, key=lambda t: (scanner.statistic(s, e, t), t))


def accept_change(
    fit_left: float, fit_right: float, fit_full: float, n_total: int, mu: float
) -> bool:
    """Model-selection test for one split.

    True iff ``fit_left + fit_right + mu * log(n_total) < fit_full``, all
    fits being unregularised.  ``n_total`` is the length of the full series,
    not of the current segment.
    """
    if min(fit_left, fit_right, fit_full) < 0:
        raise ValueError("fit losses must be nonnegative")
    return fit_left + fit_right + mu * math.log(n_total) < fit_full


def detect(X, cfg: DetectionConfig, cache: dict | None = None) -> SegmentationResult:
    """Recursive binary segmentation with the penalised acceptance rule.

    Each segment is scanned for its best split; the split is kept when it
    passes :func:`accept_change`, and both sides are then searched
    recursively.  An empty change-point list is a valid outcome.
    """
    X = _as_series(X)
    if cfg.d > X.shape[0]:
        raise DimensionError(f"d={cfg.d} exceeds the number of variables p={X.shape[0]}")
    n = X.shape[1]
    scanner = _Scanner(X, cfg, cache)
    changepoints: list[int] = []
    profiles: list[ScanProfile] = []

    def recurse(s: int, e: int) -> None:
        scanned = scanner.scan(s, e)
        if scanned is None:
            return
        tau, _, profile = scanned
        profiles.append(profile)
        fit_full = scanner.seg_loss(s, e).fit
        fit_left = scanner.seg_loss(s, tau).fit
        fit_right = scanner.seg_loss(tau, e).fit
        if accept_change(fit_left, fit_right, fit_full, n, cfg.mu):
            changepoints.append(tau)
            recurse(s, tau)
            recurse(tau, e)

    recurse(0, n)
    return scanner.finish(sorted(changepoints), list(changepoints), profiles, cfg.mu)


def detect_fixed_k(
    X, cfg: DetectionConfig, K: int, cache: dict | None = None
) -> FixedKResult:
    """Greedy segmentation into at most ``K`` changes with no acceptance test.

    At each round every active segment contributes its best split; the split
    that most reduces the total fit loss is applied (ties toward the earliest
    segment, then the smallest offset).  The returned curve lists the total
    fit loss after 0..K changes; it stops early, with ``reached_k`` False,
    when no admissible split remains.
    """
    X = _as_series(X)
    if K < 1:
        raise ValueError("K must be >= 1")
    if cfg.d > X.shape[0]:
        raise DimensionError(f"d={cfg.d} exceeds the number of variables p={X.shape[0]}")
    n = X.shape[1]
    scanner = _Scanner(X, cfg, cache)
    segments: list[tuple[int, int]] = [(0, n)]
    order: list[int] = []
    profiles: list[ScanProfile] = []
    seen: set[tuple[int, int]] = set()
    curve = [scanner.seg_loss(0, n).fit]

    for _ in range(K):
        best = None
        for s, e in segments:
            scanned = scanner.scan(s, e)
            if scanned is None:
                continue
            if (s, e) not in seen:
                profiles.append(scanned[2])
                seen.add((s, e))
            tau = scanned[0]
            gain = (
                scanner.seg_loss(s, e).fit
                - scanner.seg_loss(s, tau).fit
                - scanner.seg_loss(tau, e).fit
            )
            if best is None or (-gain, s, tau) < best[0]:
                best = ((-gain, s, tau), (s, e))
        if best is None:
            break
        (_, s, tau), (s0, e0) = best
        segments.remove((s0, e0))
        segments.extend([(s0, tau), (tau, e0)])
        segments.sort()
        order.append(tau)
        curve.append(sum(scanner.seg_loss(a, b).fit for a, b in segments))

    segmentation = scanner.finish(sorted(order), order, profiles, mu=0.0)
    return FixedKResult(
        segmentation=segmentation,
        fit_curve=curve,
        reached_k=len(order) == K,
    )
