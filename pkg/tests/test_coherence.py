import numpy as np
import pytest
from scipy.special import gammaln

from coastsar import coherence as coh
from coastsar.raster import BinaryMask, ComplexImage
from coastsar.sim import SceneSpec, build_true_fields, simulate_pair
from oracles import step_width, window_coherence

# Mean sample coherence of 25 independent looks at true coherence 0.
# Frozen from 10^6 Monte-Carlo windows (Philox key 20260101, 4 x 10 x 10^5 x 25
# standard normals); standard error 9e-5.
BOXCAR25_BIAS_AT_ZERO = 0.17830


def analytic_bias_at_zero(looks):
    # E[sample coherence | gamma = 0] = Gamma(L) Gamma(3/2) / Gamma(L + 1/2)
    return float(np.exp(gammaln(looks) + gammaln(1.5) - gammaln(looks + 0.5)))


def mirror_index(i, n):
    # half-sample symmetric: -1 -> 0, n -> n - 1
    while i < 0 or i >= n:
        i = -i - 1 if i < 0 else 2 * n - 1 - i
    return i


def boxcar_reference(s1, s2, window, r, c):
    h = window // 2
    rows, cols = s1.shape
    idx = [(mirror_index(r + i, rows), mirror_index(c + j, cols))
           for i in range(-h, h + 1) for j in range(-h, h + 1)]
    a = np.array([s1[p] for p in idx])
    b = np.array([s2[p] for p in idx])
    return window_coherence(a[None], b[None])[0], np.sqrt(np.mean(np.abs(a) ** 2))


class TestBiasOracle:
    def test_frozen_value_matches_closed_form(self):
        assert abs(BOXCAR25_BIAS_AT_ZERO - analytic_bias_at_zero(25)) < 1e-3

    def test_frozen_value_reproduces(self):
        rng = np.random.Generator(np.random.Philox(key=99))
        z = rng.standard_normal((4, 100000, 25))
        est = window_coherence(z[0] + 1j * z[1], z[2] + 1j * z[3]).mean()
        assert abs(est - BOXCAR25_BIAS_AT_ZERO) < 2e-3


class TestBoxcar:
    def test_identical_pair(self, rng):
        s = ComplexImage(rng.standard_normal((30, 40)) + 1j * rng.standard_normal((30, 40)))
        p = coh.boxcar_estimate(s, s, 5)
        assert np.all(p.coherence.data == 1.0)
        assert np.all(p.looks_equivalent.data == 25)

    def test_constant_modulus_amplitude(self, rng):
        s = ComplexImage(2.0 * np.exp(1j * rng.uniform(0, 2 * np.pi, (20, 20))))
        p = coh.boxcar_estimate(s, s, 5)
        np.testing.assert_allclose(p.amplitude.data, 2.0, rtol=1e-12)

    def test_matches_direct_window_formula(self, rng):
        s1 = rng.standard_normal((12, 9)) + 1j * rng.standard_normal((12, 9))
        s2 = 0.5 * s1 + rng.standard_normal((12, 9)) + 1j * rng.standard_normal((12, 9))
        p = coh.boxcar_estimate(ComplexImage(s1), ComplexImage(s2), 5)
        for r in range(12):
            for c in range(9):
                g, a = boxcar_reference(s1, s2, 5, r, c)
                assert p.coherence.data[r, c] == pytest.approx(g, abs=1e-12)
                assert p.amplitude.data[r, c] == pytest.approx(a, rel=1e-12)

    def test_bias_floor_matches_oracle(self):
        s1, s2 = coh.homogeneous_pair(256, 256, 0.0, seed=4)
        mean = coh.boxcar_estimate(s1, s2, 5).coherence.data.mean()
        assert abs(mean - BOXCAR25_BIAS_AT_ZERO) < 0.01

    def test_bias_decreases_with_window(self):
        s1, s2 = coh.homogeneous_pair(128, 128, 0.0, seed=8)
        means = [coh.boxcar_estimate(s1, s2, w).coherence.data.mean() for w in (3, 5, 9)]
        assert means[0] >= means[1] >= means[2]

    def test_translation_equivariance(self, rng):
        s1 = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
        s2 = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
        dr, dc = 3, 5
        a = coh.boxcar_estimate(ComplexImage(s1), ComplexImage(s2), 5).coherence.data
        b = coh.boxcar_estimate(ComplexImage(np.roll(s1, (dr, dc), (0, 1))),
                                ComplexImage(np.roll(s2, (dr, dc), (0, 1))), 5).coherence.data
        # compare pixels whose windows stay clear of the borders and the roll seam
        np.testing.assert_array_equal(b[dr + 2 + 3:38, dc + 2 + 3:38], a[2 + 3:38 - dr, 2 + 3:38 - dc])

    def test_zero_power_gives_zero(self):
        z = ComplexImage(np.zeros((6, 6)))
        assert np.all(coh.boxcar_estimate(z, z, 3).coherence.data == 0)

    def test_bad_arguments(self, rng):
        s = ComplexImage(np.ones((5, 5)))
        with pytest.raises(ValueError):
            coh.boxcar_estimate(s, s, 4)
        with pytest.raises(ValueError):
            coh.boxcar_estimate(s, ComplexImage(np.ones((5, 6))), 3)


class TestNonlocal:
    def test_identical_pair(self, rng):
        s = ComplexImage(rng.standard_normal((24, 24)) + 1j * rng.standard_normal((24, 24)))
        p = coh.nonlocal_estimate(s, s, coh.NLParams(9, 3))
        np.testing.assert_allclose(p.coherence.data, 1.0, atol=1e-12)

    def test_less_biased_than_boxcar(self):
        s1, s2 = coh.homogeneous_pair(96, 96, 0.0, seed=2)
        nl = coh.nonlocal_estimate(s1, s2).coherence.data.mean()
        box = coh.boxcar_estimate(s1, s2, 5).coherence.data.mean()
        assert nl < box

    def test_looks_bounds(self):
        s1, s2 = coh.homogeneous_pair(48, 48, 0.4, seed=6)
        looks = coh.nonlocal_estimate(s1, s2).looks_equivalent.data
        assert looks.min() >= 1.0 and looks.max() <= 21 * 21 + 1e-9
        assert np.median(looks) > 25

    def test_weights(self):
        d = np.array([0.0, 1.0, 2.5, 10.0])
        w = coh.nl_weights(d, *coh.calibrate_bandwidth())
        assert w[0] == 1.0
        assert np.all((w > 0) & (w <= 1))
        assert np.all(np.diff(w) <= 0)

    def test_coherence_in_unit_interval(self, rng):
        s1 = ComplexImage(rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30)))
        s2 = ComplexImage(rng.standard_normal((30, 30)) * 3 + 0j)
        c = coh.nonlocal_estimate(s1, s2, coh.NLParams(11, 5)).coherence.data
        assert c.min() >= 0 and c.max() <= 1

    def test_tiling_and_threads_do_not_change_output(self):
        s1, s2 = coh.homogeneous_pair(37, 29, 0.3, seed=1)
        ref = coh.nonlocal_estimate(s1, s2, coh.NLParams(7, 3), tile_rows=64)
        for tile_rows, threads in ((5, 1), (8, 3), (1, 2)):
            p = coh.nonlocal_estimate(s1, s2, coh.NLParams(7, 3), tile_rows=tile_rows, threads=threads)
            assert p.coherence.data.tobytes() == ref.coherence.data.tobytes()
            assert p.amplitude.data.tobytes() == ref.amplitude.data.tobytes()

    def test_sharper_edge_than_boxcar(self):
        # land (bright, coherent) | water (dark, incoherent), averaged over rows
        land = np.zeros((384, 64), np.uint8)
        land[:, :32] = 1
        fields = build_true_fields(SceneSpec(BinaryMask(land)))
        s1, s2 = simulate_pair(fields, seed=5)
        widths = {}
        for name, prod in (("box", coh.boxcar_estimate(s1, s2, 5)), ("nl", coh.nonlocal_estimate(s1, s2))):
            prof = prod.coherence.data.mean(axis=0)
            widths[name] = step_width(prof, prof[-12:].mean(), prof[:12].mean())
        assert widths["nl"] <= widths["box"]

    def test_params_validation(self):
        with pytest.raises(ValueError):
            coh.NLParams(20, 7)
        with pytest.raises(ValueError):
            coh.NLParams(5, 7)
        with pytest.raises(ValueError):
            coh.NLParams(21, 7, h=-1.0)


class TestCalibration:
    def test_frozen_matches_fit(self):
        offset, h = coh.fit_bandwidth(21, 7)
        assert (offset, h) == pytest.approx(coh.calibrate_bandwidth(21, 7), abs=1e-12)

    def test_median_weight_is_half(self):
        offset, h = coh.calibrate_bandwidth(21, 7)
        d = coh.homogeneous_dissimilarities(21, 7)
        assert np.median(coh.nl_weights(d, offset, h)) == pytest.approx(0.5, abs=1e-9)

    def test_other_windows_calibrate_on_demand(self):
        offset, h = coh.calibrate_bandwidth(9, 3)
        assert offset > 0 and h > 0


class TestBiasCurve:
    def test_unit_coherence(self):
        for est in ("boxcar", "nonlocal"):
            (g, m), = coh.bias_curve(est, [1.0], trials=1, size=32)
            assert m == pytest.approx(1.0, abs=1e-9)

    def test_zero_boxcar_matches_oracle(self):
        (_, m), = coh.bias_curve("boxcar", [0.0], trials=4, size=128)
        assert abs(m - BOXCAR25_BIAS_AT_ZERO) < 0.01

    def test_monotone_and_nonlocal_below_boxcar(self):
        gammas = [0.0, 0.1, 0.2, 0.3, 0.6, 0.9]
        box = coh.bias_curve("boxcar", gammas, trials=2, size=64, seed=3)
        nl = coh.bias_curve("nonlocal", gammas, trials=2, size=64, seed=3)
        for curve in (box, nl):
            means = [m for _, m in curve]
            assert all(b >= a for a, b in zip(means, means[1:]))
        for (g, b), (_, n) in zip(box, nl):
            if g <= 0.3:
                assert n <= b

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            coh.bias_curve("boxcar", [1.5])
        with pytest.raises(ValueError):
            coh.bias_curve("median", [0.5])
