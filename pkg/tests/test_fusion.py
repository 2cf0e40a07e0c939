import numpy as np
import pytest

from coastsar.fusion import VoteMap, decide, vote_sum
from coastsar.raster import BinaryMask


def masks_from(arr):
    return [BinaryMask(m) for m in np.asarray(arr, np.uint8)]


def votes_of(total, n=8):
    return VoteMap(np.array([[total]], np.int32), n)


class TestVoteSum:
    def test_all_land(self):
        v = vote_sum(masks_from(np.ones((8, 3, 3))))
        assert np.all(v.sums == 8) and v.n_scales == 8

    def test_alternating(self):
        stack = np.array([np.full((2, 2), i % 2) for i in range(8)])
        assert np.all(vote_sum(masks_from(stack)).sums == 4)

    def test_matches_direct_addition(self, rng):
        stack = rng.integers(0, 2, (8, 16, 16))
        expected = np.zeros((16, 16), int)
        for m in stack:
            expected = expected + m
        assert np.array_equal(vote_sum(masks_from(stack)).sums, expected)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            vote_sum([BinaryMask(np.zeros((2, 2), np.uint8)), BinaryMask(np.zeros((2, 3), np.uint8))])

    def test_empty(self):
        with pytest.raises(ValueError):
            vote_sum([])

    def test_as_image(self):
        v = vote_sum(masks_from(np.ones((3, 2, 2))))
        assert np.all(v.as_image().data == 3.0)


class TestDecide:
    @pytest.mark.parametrize("total,land", [(6, 1), (5, 0), (8, 1), (0, 0)])
    def test_boundary_at_three_quarters(self, total, land):
        assert decide(votes_of(total)).data[0, 0] == land

    def test_and_or_limits(self, rng):
        stack = rng.integers(0, 2, (5, 12, 12)).astype(np.uint8)
        v = vote_sum(masks_from(stack))
        assert np.array_equal(decide(v, 1.0).data, np.all(stack, axis=0).astype(np.uint8))
        assert np.array_equal(decide(v, 1e-9).data, np.any(stack, axis=0).astype(np.uint8))

    def test_extra_land_vote_never_removes_land(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 10))
            sums = rng.integers(0, n, (10, 10))
            frac = float(rng.choice([0.25, 0.5, 0.75, 1 / 3, 1.0]))
            before = decide(VoteMap(sums, n), frac).data
            after = decide(VoteMap(sums + 1, n), frac).data
            assert np.all(after >= before)

    def test_single_mask_identity(self, rng):
        m = BinaryMask(rng.integers(0, 2, (9, 9)).astype(np.uint8))
        assert np.array_equal(decide(vote_sum([m])).data, m.data)

    @pytest.mark.parametrize("frac", [0.0, -0.1, 1.5])
    def test_threshold_range(self, frac):
        with pytest.raises(ValueError):
            decide(votes_of(3), frac)

    def test_sums_out_of_range(self):
        with pytest.raises(ValueError):
            VoteMap(np.array([[9]]), 8)
