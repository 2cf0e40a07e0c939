"""Two-cluster K-medians land/water segmentation of (amplitude, coherence)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .raster import BinaryMask, ScalarImage

log = logging.getLogger(__name__)

FEATURE_MODES = ("fused", "amplitude_only", "coherence_only")
CLIP_PERCENTILE = 99.0
GRID_LEVELS = 16
SCORE_SAMPLE = 2048


@dataclass(frozen=True)
class FeatureField:
    a_norm: np.ndarray
    g_norm: np.ndarray

    def points(self, mode: str = "fused") -> np.ndarray:
        """(n, 2) feature matrix; single-feature modes duplicate the feature."""
        a, g = self.a_norm.ravel(), self.g_norm.ravel()
        if mode == "fused":
            return np.column_stack([a, g])
        if mode == "amplitude_only":
            return np.column_stack([a, a])
        if mode == "coherence_only":
            return np.column_stack([g, g])
        raise ValueError(f"unknown feature mode {mode!r}")


@dataclass
class KMediansResult:
    centroids: np.ndarray        # (2, 2); row 1 has the larger component sum
    labels: np.ndarray           # (n,) cluster index per point
    cost: float
    history: list = field(default_factory=list)   # cost before the first and after each update
    n_iter: int = 0


def amplitude_range(amplitude: np.ndarray) -> tuple[float, float]:
    return float(amplitude.min()), float(np.percentile(amplitude, CLIP_PERCENTILE))


def normalize_features(amplitude: ScalarImage, coherence: ScalarImage,
                       amp_range: tuple[float, float] | None = None) -> FeatureField:
    """Amplitude clipped at its 99th percentile and min-max scaled; coherence passed through.

    ``amp_range`` overrides the (min, clip) pair, e.g. to share one
    normalisation across scales.
    """
    if amplitude.shape != coherence.shape:
        raise ValueError("amplitude and coherence shapes differ")
    a = amplitude.data
    lo, hi = amp_range if amp_range is not None else amplitude_range(a)
    if hi <= lo:
        log.warning("amplitude is constant; normalised amplitude set to 0")
        a_norm = np.zeros_like(a)
    else:
        a_norm = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
    return FeatureField(a_norm, np.clip(coherence.data, 0.0, 1.0))


def lower_median(values: np.ndarray) -> np.ndarray:
    """Per-column element at index (n-1)//2 of the sorted column."""
    k = (len(values) - 1) // 2
    return np.partition(values, k, axis=0)[k]


def _l1(points: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.abs(points - c).sum(axis=1)


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ties go to cluster 0
    return (_l1(points, centroids[1]) < _l1(points, centroids[0])).astype(np.uint8)


def kmedians_cost(points: np.ndarray, centroids: np.ndarray) -> float:
    return float(np.minimum(_l1(points, centroids[0]), _l1(points, centroids[1])).sum())


def percentile_init(points: np.ndarray) -> np.ndarray:
    return np.array([np.percentile(points, 10, axis=0, method="lower"),
                     np.percentile(points, 90, axis=0, method="lower")])


def grid_init(points: np.ndarray, levels: int = GRID_LEVELS, sample: int = SCORE_SAMPLE) -> np.ndarray:
    """Best centroid pair on a grid of per-coordinate quantiles.

    Optimal 2-medians centroids sit on data coordinates. When a coordinate
    has at most ``levels`` distinct values the grid holds all of them, and
    when there are at most ``sample`` points the pair is scored on the full
    objective, so the search is exhaustive for small inputs.
    """
    axes = []
    q = (np.arange(levels) + 0.5) / levels
    for j in range(points.shape[1]):
        u = np.unique(points[:, j])
        axes.append(u if len(u) <= levels else np.unique(np.quantile(points[:, j], q, method="lower")))
    cand = np.array(np.meshgrid(*axes, indexing="ij")).reshape(points.shape[1], -1).T
    step = -(-len(points) // sample)
    sub = points[::step]
    dist = np.abs(cand[:, None, :] - sub[None, :, :]).sum(axis=2)
    best, best_pair = np.inf, (0, min(1, len(cand) - 1))
    for a in range(len(cand) - 1):
        costs = np.minimum(dist[a][None, :], dist[a + 1:]).sum(axis=1)
        b = int(np.argmin(costs))
        if costs[b] < best:
            best, best_pair = costs[b], (a, a + 1 + b)
    return cand[list(best_pair)].astype(np.float64)


def kmedians_2(points: np.ndarray, init: np.ndarray | str | None = None,
               max_iter: int = 100, tol: float = 1e-6) -> KMediansResult:
    """Two-cluster K-medians (L1 assignment, per-coordinate lower-median update).

    ``init`` is a (2, d) centroid array, ``"percentile"`` (10th / 90th
    percentile points) or ``"grid"`` / None (see :func:`grid_init`).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) < 1:
        raise ValueError("points must be a non-empty (n, d) array")
    if init is None or (isinstance(init, str) and init == "grid"):
        c = grid_init(points)
    elif isinstance(init, str) and init == "percentile":
        c = percentile_init(points)
    else:
        c = np.array(init, dtype=np.float64)
    if c.shape != (2, points.shape[1]):
        raise ValueError(f"init must have shape (2, {points.shape[1]})")

    history = [kmedians_cost(points, c)]
    it = 0
    for it in range(1, max_iter + 1):
        labels = _assign(points, c)
        new = c.copy()
        empty = []
        for k in (0, 1):
            members = points[labels == k]
            if len(members):
                new[k] = lower_median(members)
            else:
                empty.append(k)
        for k in empty:
            # reseed at the point farthest from the updated other centroid
            new[k] = points[int(np.argmax(_l1(points, new[1 - k])))]
        moved = float(np.abs(new - c).max())
        c = new
        history.append(kmedians_cost(points, c))
        if moved < tol:
            break
    labels = _assign(points, c)
    if c[0].sum() > c[1].sum() or (c[0].sum() == c[1].sum() and c[0][0] > c[1][0]):
        c = c[::-1].copy()
        labels = 1 - labels
    return KMediansResult(c, labels.astype(np.uint8), kmedians_cost(points, c), history, it)


def segment_scale(a_layer: ScalarImage, g_layer: ScalarImage, mode: str = "fused",
                  amp_range: tuple[float, float] | None = None,
                  init=None) -> BinaryMask:
    """Cluster one scale; the cluster brighter in (amplitude + coherence) is land."""
    feats = normalize_features(a_layer, g_layer, amp_range)
    pts = feats.points(mode)
    if np.all(pts == pts[0]):
        log.warning("constant features at this scale; labelling everything water")
        return BinaryMask(np.zeros(a_layer.shape, np.uint8))
    res = kmedians_2(pts, init=init)
    if np.array_equal(res.centroids[0], res.centroids[1]):
        log.warning("K-medians centroids coincide; labelling everything water")
        return BinaryMask(np.zeros(a_layer.shape, np.uint8))
    return BinaryMask(res.labels.reshape(a_layer.shape))
