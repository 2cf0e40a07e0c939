"""Coastline accuracy from a reference distance image."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .morpho import Coastline
from .raster import BinaryMask, RasterMeta, ScalarImage

_INF = math.inf


def _envelope_1d(f: list) -> list:
    """Squared distance transform of one line: min_q (p - q)^2 + f[q].

    Lower envelope of parabolas rooted at the finite entries of ``f``.
    Integer inputs give integer outputs.
    """
    n = len(f)
    sites = [q for q in range(n) if f[q] != _INF]
    if not sites:
        return [_INF] * n
    v = [sites[0]]
    z = [-_INF, _INF]
    for q in sites[1:]:
        # z[0] = -inf, so the stack never empties
        while True:
            p = v[-1]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2 * (q - p))
            if s > z[-2]:
                break
            v.pop()
            z.pop()
        z[-1] = s
        v.append(q)
        z.append(_INF)
    out = [0] * n
    k = 0
    for x in range(n):
        while z[k + 1] < x:
            k += 1
        p = v[k]
        out[x] = (x - p) * (x - p) + f[p]
    return out


def squared_edt(sites: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest True pixel (inf if none)."""
    rows, cols = sites.shape
    grid = [[0 if s else _INF for s in row] for row in sites.tolist()]
    grid = [_envelope_1d(row) for row in grid]
    cols_out = [_envelope_1d([grid[r][c] for r in range(rows)]) for c in range(cols)]
    return np.array(cols_out, dtype=np.float64).T


def coastline_sites(coast: Coastline, rows: int, cols: int) -> np.ndarray:
    pts = coast.pixels()
    if len(pts) == 0:
        raise ValueError("coastline has no pixels")
    if pts.min() < 0 or pts[:, 0].max() >= rows or pts[:, 1].max() >= cols:
        raise ValueError("coastline pixels outside the raster")
    sites = np.zeros((rows, cols), bool)
    sites[pts[:, 0], pts[:, 1]] = True
    return sites


def distance_image(reference: Coastline, rows: int, cols: int) -> ScalarImage:
    """Euclidean distance in pixels from every pixel to the nearest reference pixel."""
    d2 = squared_edt(coastline_sites(reference, rows, cols))
    return ScalarImage(np.sqrt(d2))


def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    n = len(sorted_values)
    return float(sorted_values[max(math.ceil(p * n), 1) - 1])


@dataclass
class EvalReport:
    q25_m: float
    q50_m: float
    q75_m: float
    n_points: int
    distances_m: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_distances: bool = False) -> dict:
        d = {"q25_m": self.q25_m, "q50_m": self.q50_m, "q75_m": self.q75_m,
             "n_points": self.n_points}
        if include_distances and self.distances_m is not None:
            d["distances_m"] = [float(x) for x in self.distances_m]
        return d

    def to_json(self, include_distances: bool = False) -> str:
        return json.dumps(self.to_dict(include_distances), indent=2, sort_keys=True) + "\n"

    def to_table(self, label: str = "detected") -> str:
        head = f"{'Experiment':<20}{'25%-quantile':>14}{'50%-quantile':>14}{'75%-quantile':>14}"
        row = f"{label:<20}{self.q25_m:>14.2f}{self.q50_m:>14.2f}{self.q75_m:>14.2f}"
        return f"{head}\n{row}\n"


def _sample(points: np.ndarray, dist: np.ndarray, roi: np.ndarray | None) -> np.ndarray:
    if roi is not None:
        points = points[roi[points[:, 0], points[:, 1]].astype(bool)]
    return dist[points[:, 0], points[:, 1]]


def evaluate(detected: Coastline, reference: Coastline, meta: RasterMeta,
             shape: tuple[int, int], roi: BinaryMask | None = None,
             symmetric: bool = False) -> EvalReport:
    """Quantiles of detected-to-reference distances in metres.

    Each detected pixel (inside ``roi`` if given) is looked up in the
    reference distance image. ``symmetric`` adds reference-to-detected
    distances to the sample.
    """
    rows, cols = shape
    if roi is not None and roi.shape != (rows, cols):
        raise ValueError("roi shape differs from raster shape")
    det = detected.pixels()
    if len(det) == 0:
        raise ValueError("detected coastline is empty")
    roi_data = roi.data if roi is not None else None
    samples = _sample(det, distance_image(reference, rows, cols).data, roi_data)
    if symmetric:
        ref = reference.pixels()
        samples = np.concatenate([samples, _sample(ref, distance_image(detected, rows, cols).data, roi_data)])
    if len(samples) == 0:
        raise ValueError("no detected coastline pixels inside the region of interest")
    dm = np.sort(samples * meta.pixel_spacing_m)
    return EvalReport(nearest_rank(dm, 0.25), nearest_rank(dm, 0.5), nearest_rank(dm, 0.75),
                      len(dm), dm)
