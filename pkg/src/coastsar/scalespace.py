"""Gaussian scale space at constant resolution.

Every layer is the original image convolved with a sampled, truncated and
renormalised Gaussian of variance sigma^2, applied separably with
half-sample mirror borders (``c b a | a b c | c b a``), which conserve the
image mean exactly. Layers are not cascaded from one another.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .raster import ScalarImage

DEFAULT_SCALES = (0, 1, 4, 16, 64, 256, 1024, 4096)


@dataclass(frozen=True)
class ScaleSpace:
    scales: tuple[float, ...]
    layers: tuple[ScalarImage, ...]

    def __post_init__(self):
        if len(self.scales) != len(self.layers):
            raise ValueError("one layer per scale required")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scales must be strictly increasing")

    def __len__(self):
        return len(self.scales)


def gaussian_kernel(sigma2: float, truncation: float = 3.0) -> np.ndarray:
    """1-D sampled Gaussian of variance ``sigma2``, radius ceil(truncation*sigma)."""
    if sigma2 < 0:
        raise ValueError(f"variance must be >= 0, got {sigma2}")
    if sigma2 == 0:
        return np.ones(1)
    radius = int(math.ceil(truncation * math.sqrt(sigma2)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-x * x / (2.0 * sigma2))
    return k / k.sum()


def smooth(data: np.ndarray, sigma2: float, truncation: float = 3.0) -> np.ndarray:
    if sigma2 == 0:
        return np.array(data, dtype=np.float64)
    k = gaussian_kernel(sigma2, truncation)
    out = correlate1d(np.asarray(data, np.float64), k, axis=0, mode="reflect")
    return correlate1d(out, k, axis=1, mode="reflect")


def build_scale_space(img: ScalarImage, scales=DEFAULT_SCALES, truncation: float = 3.0) -> ScaleSpace:
    scales = tuple(float(s) for s in scales)
    if not scales:
        raise ValueError("at least one scale required")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError(f"scales must be sorted ascending without repeats: {scales}")
    if scales[0] < 0:
        raise ValueError("variances must be >= 0")
    # sigma^2 = 0 is the input itself, not a 1-tap convolution
    layers = tuple(img if s == 0 else ScalarImage(smooth(img.data, s, truncation)) for s in scales)
    return ScaleSpace(scales, layers)
