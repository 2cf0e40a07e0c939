import numpy as np
import pytest
from scipy import ndimage

from coastsar.morpho import (coast_pixel_mask, coast_segments, fillhole, remove_small_components,
                             trace_boundaries)
from coastsar.raster import BinaryMask
from coastsar.sim import preset_scene
from oracles import fill_holes_bfs

EIGHT = np.ones((3, 3), bool)


def mask(a):
    return BinaryMask(np.asarray(a, np.uint8))


def boundary_predicate(land):
    """Land pixels with a 4-neighbour that is water or off the image."""
    padded = np.pad(land, 1, constant_values=False)
    out = np.zeros_like(land)
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        out |= ~padded[1 + dr:1 + dr + land.shape[0], 1 + dc:1 + dc + land.shape[1]]
    return land & out


def random_mask(rng, shape, p=None):
    p = rng.uniform(0.3, 0.7) if p is None else p
    return rng.random(shape) < p


class TestFillhole:
    def test_enclosed_pixel(self):
        a = np.ones((5, 5), np.uint8)
        a[2, 2] = 0
        assert fillhole(mask(a)).data.all()

    def test_border_water_kept(self):
        a = np.ones((5, 5), np.uint8)
        a[1:4, 0:2] = 0
        assert np.array_equal(fillhole(mask(a)).data, a)

    def test_diagonal_leak_is_not_connection(self):
        # water touching the border only diagonally is enclosed under 4-connectivity
        a = np.ones((4, 4), np.uint8)
        a[0, 0] = 0
        a[1, 1] = 0
        out = fillhole(mask(a)).data
        assert out[0, 0] == 0 and out[1, 1] == 1

    def test_matches_flood_fill_oracle(self, rng):
        for _ in range(200):
            m = random_mask(rng, (32, 32))
            assert np.array_equal(fillhole(mask(m)).data, fill_holes_bfs(m.astype(np.uint8)))

    def test_idempotent_and_only_adds_land(self, rng):
        for _ in range(100):
            m = mask(random_mask(rng, (24, 24)))
            f = fillhole(m)
            assert np.array_equal(fillhole(f).data, f.data)
            assert np.all(f.data >= m.data)


class TestRemoveSmall:
    def test_drops_specks(self):
        a = np.zeros((6, 6), np.uint8)
        a[0, 0] = 1
        a[3:5, 3:5] = 1
        out = remove_small_components(mask(a), 2).data
        assert out[0, 0] == 0 and out[3:5, 3:5].all()

    def test_min_area_one_is_identity(self, rng):
        m = mask(random_mask(rng, (8, 8)))
        assert remove_small_components(m, 1) is m


class TestTrace:
    def test_single_pixel(self):
        a = np.zeros((7, 7), np.uint8)
        a[3, 3] = 1
        c = trace_boundaries(mask(a))
        assert c.chains == [[(3, 3)]] and c.closed == [True]

    def test_two_by_two_block(self):
        a = np.zeros((4, 4), np.uint8)
        a[1:3, 1:3] = 1
        assert trace_boundaries(mask(a)).chains == [[(1, 1), (1, 2), (2, 2), (2, 1)]]

    def test_horizontal_bar_revisits_pixels(self):
        a = np.zeros((3, 5), np.uint8)
        a[1, 1:4] = 1
        assert trace_boundaries(mask(a)).chains == [[(1, 1), (1, 2), (1, 3), (1, 2)]]

    def test_chain_is_8_connected_walk(self, rng):
        m = mask(random_mask(rng, (20, 20)))
        for chain in trace_boundaries(m).chains:
            for (r0, c0), (r1, c1) in zip(chain, chain[1:] + chain[:1]):
                assert max(abs(r0 - r1), abs(c0 - c1)) <= 1

    def test_boundary_predicate_equivalence(self, rng):
        # outer tracing: holes are filled first, as in the pipeline
        for _ in range(200):
            land = fillhole(mask(random_mask(rng, (16, 16)))).data.astype(bool)
            traced = np.zeros_like(land)
            for chain in trace_boundaries(mask(land)).chains:
                for p in chain:
                    traced[p] = True
            assert np.array_equal(traced, boundary_predicate(land))

    def test_one_chain_per_component(self, rng):
        for _ in range(50):
            land = random_mask(rng, (20, 20), 0.35)
            _, n = ndimage.label(land, structure=EIGHT)
            assert len(trace_boundaries(mask(land))) == n

    def test_min_area(self):
        a = np.zeros((6, 6), np.uint8)
        a[0, 0] = 1
        a[3:5, 3:5] = 1
        c = trace_boundaries(mask(a), min_area=2)
        assert len(c) == 1 and c.chains[0][0] == (3, 3)

    def test_ec_like_single_chain(self):
        land = preset_scene("EC_like", 128, 128, seed=1).land_mask
        assert len(trace_boundaries(fillhole(land))) == 1

    @pytest.mark.parametrize("min_area", [1, 20])
    def test_st_like_chain_count(self, min_area):
        land = preset_scene("ST_like", 128, 128, seed=2).land_mask.data
        lab, n = ndimage.label(land, structure=EIGHT)
        sizes = np.bincount(lab.ravel())[1:]
        assert n > 1
        assert len(trace_boundaries(mask(land), min_area)) == int((sizes >= min_area).sum())


class TestCoastSegments:
    def test_frame_pixels_dropped(self):
        a = np.zeros((6, 6), np.uint8)
        a[:, :3] = 1
        seg = coast_segments(trace_boundaries(mask(a)), mask(a))
        pts = {p for c in seg.chains for p in c}
        assert pts == {(r, 2) for r in range(6)}
        assert seg.closed == [False]

    def test_interior_island_kept_closed(self):
        a = np.zeros((6, 6), np.uint8)
        a[2:4, 2:4] = 1
        coast = trace_boundaries(mask(a))
        seg = coast_segments(coast, mask(a))
        assert seg.chains == coast.chains and seg.closed == [True]

    def test_all_land_has_no_coast(self):
        a = np.ones((4, 4), np.uint8)
        assert len(coast_segments(trace_boundaries(mask(a)), mask(a))) == 0
        assert not coast_pixel_mask(mask(a)).any()
