"""Fillhole post-processing and Moore-neighbour boundary tracing.

Connectivity: land is 8-connected, water 4-connected.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import BinaryMask

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)

# Moore neighbourhood in clockwise order (row axis points down), starting west
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


@dataclass
class Coastline:
    chains: list = field(default_factory=list)   # each a list of (row, col)
    closed: list = field(default_factory=list)   # per chain: True if first and last pixels join

    def __len__(self):
        return len(self.chains)

    def pixels(self) -> np.ndarray:
        """All chain pixels as an (n, 2) int array (duplicates kept)."""
        pts = [p for c in self.chains for p in c]
        return np.array(pts, dtype=np.int64).reshape(-1, 2)


def fillhole(mask: BinaryMask) -> BinaryMask:
    """Set every water region that does not reach the image border to land."""
    filled = ndimage.binary_fill_holes(mask.data.astype(bool), structure=_FOUR)
    return BinaryMask(filled.astype(np.uint8))


def remove_small_components(mask: BinaryMask, min_area: int) -> BinaryMask:
    if min_area <= 1:
        return mask
    lab, n = ndimage.label(mask.data, structure=_EIGHT)
    sizes = np.bincount(lab.ravel())
    keep = sizes >= min_area
    keep[0] = False
    return BinaryMask(keep[lab].astype(np.uint8))


def _trace(inside, start: tuple[int, int], max_steps: int) -> list[tuple[int, int]]:
    """Clockwise Moore-neighbour trace with Jacob's stopping criterion.

    ``inside(r, c)`` tests component membership (False off-image).
    ``start`` must be the top-most, left-most pixel, so its west neighbour
    is outside and serves as the first backtrack. Tracing stops when the
    start pixel is about to be left by the same move (target pixel and
    backtrack) as the very first departure.
    """
    chain = [start]
    cur, back = start, 0          # back indexes _MOORE: the outside pixel we came from
    first_move = None
    for _ in range(max_steps):
        for step in range(1, 9):
            k = (back + step) % 8
            nxt = (cur[0] + _MOORE[k][0], cur[1] + _MOORE[k][1])
            if inside(*nxt):
                break
        else:
            return chain          # isolated pixel
        pr, pc = _MOORE[(k - 1) % 8]
        back = _MOORE.index((cur[0] + pr - nxt[0], cur[1] + pc - nxt[1]))
        if cur == start:
            if first_move is None:
                first_move = (nxt, back)
            elif first_move == (nxt, back):
                return chain[:-1]     # last entry is the re-entered start
        chain.append(nxt)
        cur = nxt
    raise RuntimeError(f"boundary trace from {start} did not close in {max_steps} steps")


def trace_boundaries(mask: BinaryMask, min_area: int = 1) -> Coastline:
    """Outer boundary of every 8-connected land component, one closed chain each.

    Chains start at the component's top-most, left-most pixel and run
    clockwise. Components are visited in row-major order of that pixel.
    """
    lab, n = ndimage.label(mask.data, structure=_EIGHT)
    rows, cols = lab.shape
    out = Coastline()
    starts = []
    for k, sl in enumerate(ndimage.find_objects(lab), start=1):
        if sl is None:
            continue
        sub = lab[sl] == k
        area = int(sub.sum())
        if area < min_area:
            continue
        flat = int(np.argmax(sub.ravel()))
        r, c = divmod(flat, sub.shape[1])
        starts.append(((sl[0].start + r, sl[1].start + c), k, area))
    for start, k, area in sorted(starts):
        def inside(r, c, k=k):
            return 0 <= r < rows and 0 <= c < cols and lab[r, c] == k
        out.chains.append(_trace(inside, start, 4 * area + 8))
        out.closed.append(True)
    return out


def coast_pixel_mask(mask: BinaryMask) -> np.ndarray:
    """Land pixels with a 4-neighbour inside the image that is water."""
    land = mask.data.astype(bool)
    water = ~land
    near = np.zeros_like(land)
    near[1:] |= water[:-1]
    near[:-1] |= water[1:]
    near[:, 1:] |= water[:, :-1]
    near[:, :-1] |= water[:, 1:]
    return land & near


def coast_segments(coastline: Coastline, mask: BinaryMask) -> Coastline:
    """Drop chain pixels whose only exposure is the image frame.

    Closed traces that run along the frame are cut there into open chains,
    so only land/water contact is left.
    """
    coast = coast_pixel_mask(mask)
    out = Coastline()
    for chain in coastline.chains:
        keep = [bool(coast[r, c]) for r, c in chain]
        if all(keep):
            out.chains.append(list(chain))
            out.closed.append(True)
            continue
        if not any(keep):
            continue
        # rotate so the chain begins right after a dropped pixel
        first_drop = keep.index(False)
        order = list(range(first_drop + 1, len(chain))) + list(range(first_drop + 1))
        run = []
        for i in order:
            if keep[i]:
                run.append(chain[i])
            elif run:
                out.chains.append(run)
                out.closed.append(False)
                run = []
        if run:
            out.chains.append(run)
            out.closed.append(False)
    return out
