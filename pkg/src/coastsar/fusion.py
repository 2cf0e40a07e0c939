"""Decision fusion of per-scale land/water masks by fractional vote."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .raster import BinaryMask, ScalarImage


@dataclass(frozen=True)
class VoteMap:
    sums: np.ndarray
    n_scales: int

    def __post_init__(self):
        if self.sums.min() < 0 or self.sums.max() > self.n_scales:
            raise ValueError("vote sums outside [0, n_scales]")

    def as_image(self) -> ScalarImage:
        return ScalarImage(self.sums.astype(np.float64))


def vote_sum(masks) -> VoteMap:
    masks = list(masks)
    if not masks:
        raise ValueError("need at least one mask")
    shape = masks[0].shape
    sums = np.zeros(shape, np.int32)
    for m in masks:
        if m.shape != shape:
            raise ValueError(f"mask shape {m.shape} differs from {shape}")
        sums += m.data
    return VoteMap(sums, len(masks))


def decide(votes: VoteMap, threshold_frac: float = 0.75) -> BinaryMask:
    """Land where ``sums >= threshold_frac * N``.

    The comparison is done on integers (``sums * den >= num * N`` with the
    threshold as an exact fraction), so 6 of 8 votes at 0.75 is land.
    """
    if not 0 < threshold_frac <= 1:
        raise ValueError(f"threshold_frac must be in (0, 1], got {threshold_frac}")
    frac = Fraction(threshold_frac)
    lhs = votes.sums.astype(object) * frac.denominator if frac.denominator > 2**30 else \
        votes.sums.astype(np.int64) * frac.denominator
    land = lhs >= frac.numerator * votes.n_scales
    return BinaryMask(np.asarray(land, dtype=np.uint8))
