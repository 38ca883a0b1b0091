import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gscg.color import (
    ColorShare,
    LabColor,
    ciede2000,
    css4_palette,
    dominant_colors,
    kmeans_lab,
    merge_clusters,
    name_color,
    rgb_to_lab,
)

# Reference pairs from Sharma, Wu & Dalal's CIEDE2000 implementation notes:
# (L1, a1, b1, L2, a2, b2, expected dE00).
SHARMA_PAIRS = [
    (50.0000, 2.6772, -79.7751, 50.0000, 0.0000, -82.7485, 2.0425),
    (50.0000, 3.1571, -77.2803, 50.0000, 0.0000, -82.7485, 2.8615),
    (50.0000, 2.8361, -74.0200, 50.0000, 0.0000, -82.7485, 3.4412),
    (50.0000, -1.3802, -84.2814, 50.0000, 0.0000, -82.7485, 1.0000),
    (50.0000, -1.1848, -84.8006, 50.0000, 0.0000, -82.7485, 1.0000),
    (50.0000, -0.9009, -85.5211, 50.0000, 0.0000, -82.7485, 1.0000),
    (50.0000, 0.0000, 0.0000, 50.0000, -1.0000, 2.0000, 2.3669),
    (50.0000, -1.0000, 2.0000, 50.0000, 0.0000, 0.0000, 2.3669),
    (50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0009, 7.1792),
    (50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0010, 7.1792),
    (50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0011, 7.2195),
    (50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0012, 7.2195),
    (50.0000, -0.0010, 2.4900, 50.0000, 0.0009, -2.4900, 4.8045),
    (50.0000, -0.0010, 2.4900, 50.0000, 0.0010, -2.4900, 4.8045),
    (50.0000, -0.0010, 2.4900, 50.0000, 0.0011, -2.4900, 4.7461),
    (50.0000, 2.5000, 0.0000, 50.0000, 0.0000, -2.5000, 4.3065),
    (50.0000, 2.5000, 0.0000, 73.0000, 25.0000, -18.0000, 27.1492),
    (50.0000, 2.5000, 0.0000, 61.0000, -5.0000, 29.0000, 22.8977),
    (50.0000, 2.5000, 0.0000, 56.0000, -27.0000, -3.0000, 31.9030),
    (50.0000, 2.5000, 0.0000, 58.0000, 24.0000, 15.0000, 19.4535),
    (50.0000, 2.5000, 0.0000, 50.0000, 3.1736, 0.5854, 1.0000),
    (50.0000, 2.5000, 0.0000, 50.0000, 3.2972, 0.0000, 1.0000),
    (50.0000, 2.5000, 0.0000, 50.0000, 1.8634, 0.5757, 1.0000),
    (50.0000, 2.5000, 0.0000, 50.0000, 3.2592, 0.3350, 1.0000),
    (60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644),
    (63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630),
    (61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731),
    (35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645),
    (22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373),
    (36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146),
    (90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441),
    (90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381),
    (6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377),
    (2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082),
]


class TestRgbToLab:
    def test_white(self):
        lab = rgb_to_lab((255, 255, 255))
        assert lab.L == pytest.approx(100.0, abs=1e-4)
        assert abs(lab.a) < 0.01 and abs(lab.b) < 0.01

    def test_black(self):
        assert rgb_to_lab((0, 0, 0)) == LabColor(0.0, 0.0, 0.0)

    def test_red_reference(self):
        lab = rgb_to_lab((255, 0, 0))
        assert lab.L == pytest.approx(53.24, abs=0.01)
        assert lab.a == pytest.approx(80.09, abs=0.01)
        assert lab.b == pytest.approx(67.20, abs=0.01)

    def test_vectorized_matches_scalar(self):
        rgbs = np.array([[12, 34, 56], [200, 100, 0], [255, 255, 255]])
        batch = rgb_to_lab(rgbs)
        for i, row in enumerate(rgbs):
            assert np.allclose(batch[i], rgb_to_lab(tuple(row)))


class TestCiede2000:
    @pytest.mark.parametrize("case", SHARMA_PAIRS, ids=lambda c: f"{c[-1]}")
    def test_sharma_reference_pairs(self, case):
        l1, a1, b1, l2, a2, b2, expected = case
        assert ciede2000((l1, a1, b1), (l2, a2, b2)) == pytest.approx(expected, abs=1e-4)

    def test_identical_is_zero(self):
        assert ciede2000((43.1, 12.0, -5.0), (43.1, 12.0, -5.0)) == 0.0

    def test_symmetry_random_pairs(self):
        rng = np.random.default_rng(0)
        a = np.column_stack([rng.uniform(0, 100, 1000),
                             rng.uniform(-100, 100, (1000, 2))])
        b = np.column_stack([rng.uniform(0, 100, 1000),
                             rng.uniform(-100, 100, (1000, 2))])
        assert np.allclose(ciede2000(a, b), ciede2000(b, a), atol=1e-12)

    @given(st.floats(0, 100), st.floats(-120, 120), st.floats(-120, 120))
    @settings(max_examples=50, deadline=None)
    def test_identity_of_indiscernibles(self, L, a, b):
        assert ciede2000((L, a, b), (L, a, b)) == pytest.approx(0.0, abs=1e-12)


class TestKmeans:
    def test_single_color(self):
        labs = np.tile(rgb_to_lab((10, 200, 30)), (50, 1))
        out = kmeans_lab(labs)
        assert len(out) == 1
        assert out[0][1] == 50

    def test_two_far_colors_masses(self):
        # 70/30 split between two well-separated colors; brute-force check:
        # every pixel must sit in the cluster whose center it equals.
        labs = np.vstack([
            np.tile(rgb_to_lab((250, 10, 10)), (70, 1)),
            np.tile(rgb_to_lab((10, 10, 250)), (30, 1)),
        ])
        out = kmeans_lab(labs, k=20, seed=42)
        masses = sorted(m for _, m in out)
        assert masses == [30, 70]

    def test_determinism(self):
        rng = np.random.default_rng(5)
        labs = rgb_to_lab(rng.integers(0, 256, (500, 3)))
        a = kmeans_lab(labs, k=20, seed=42)
        b = kmeans_lab(labs, k=20, seed=42)
        assert a == b

    def test_masses_sum_to_pixel_count(self):
        rng = np.random.default_rng(7)
        labs = rgb_to_lab(rng.integers(0, 256, (321, 3)))
        out = kmeans_lab(labs, k=20, seed=42)
        assert sum(m for _, m in out) == 321


class TestMergeClusters:
    # Constructed with the ciede2000 oracle: dE((50,10,10),(52,12,10)) ~ 2.1
    # and dE((50,10,10),(20,-40,30)) ~ 38.5.
    def test_close_pair_merges_to_weighted_mean(self):
        c1, c2 = LabColor(50.0, 10.0, 10.0), LabColor(52.0, 12.0, 10.0)
        assert ciede2000(c1, c2) < 15.0
        out = merge_clusters([(c1, 30), (c2, 10)], 15.0)
        assert len(out) == 1
        center, mass = out[0]
        assert mass == 40
        assert np.allclose(center, (50.5, 10.5, 10.0))

    def test_far_pair_unchanged(self):
        c1, c2 = LabColor(50.0, 10.0, 10.0), LabColor(20.0, -40.0, 30.0)
        assert ciede2000(c1, c2) > 15.0
        out = merge_clusters([(c1, 30), (c2, 10)], 15.0)
        assert len(out) == 2

    def test_single_cluster_unchanged(self):
        out = merge_clusters([(LabColor(10, 2, 3), 7)], 15.0)
        assert out == [(LabColor(10, 2, 3), 7.0)]

    def test_mass_conserved_and_count_monotone(self):
        rng = np.random.default_rng(11)
        clusters = [(LabColor(*row), int(m)) for row, m in zip(
            np.column_stack([rng.uniform(0, 100, 15), rng.uniform(-60, 60, (15, 2))]),
            rng.integers(1, 100, 15))]
        out = merge_clusters(clusters, 15.0)
        assert len(out) <= len(clusters)
        assert sum(m for _, m in out) == pytest.approx(sum(m for _, m in clusters))
        labs = np.array([c for c, _ in out])
        if len(labs) > 1:
            d = ciede2000(labs[:, None, :], labs[None, :, :])
            iu = np.triu_indices(len(labs), k=1)
            assert (d[iu] >= 15.0).all()


class TestNameColor:
    def test_exact_palette_entry(self):
        pal = css4_palette()
        idx = pal.names.index("red")
        assert name_color(pal.lab[idx]) == "red"

    def test_pure_lightness_is_white(self):
        assert name_color((100.0, 0.0, 0.0)) == "white"

    def test_total_over_random_labs(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            lab = (rng.uniform(0, 100), rng.uniform(-128, 128), rng.uniform(-128, 128))
            assert name_color(lab) in css4_palette().names

    def test_palette_size(self):
        assert len(css4_palette()) == 148


class TestDominantColors:
    def test_lightgray_darkred_example(self):
        # 80% pixels near CSS lightgray (211,211,211), 20% near darkred (139,0,0)
        rng = np.random.default_rng(42)
        light = np.clip(rng.normal(211, 2, (800, 3)), 0, 255).astype(np.uint8)
        dark = np.clip(rng.normal((139, 0, 0), 2, (200, 3)), 0, 255).astype(np.uint8)
        shares = dominant_colors(np.vstack([light, dark]))
        names = {s.name: s.fraction for s in shares}
        light_frac = sum(v for k, v in names.items() if "gray" in k or k in ("silver", "gainsboro"))
        dark_frac = sum(v for k, v in names.items() if "red" in k or k in ("maroon", "firebrick"))
        assert light_frac == pytest.approx(0.8, abs=0.02)
        assert dark_frac == pytest.approx(0.2, abs=0.02)
        assert shares[0].name == "lightgray"

    def test_single_color(self):
        pixels = np.tile(np.array([30, 144, 255], dtype=np.uint8), (120, 1))
        shares = dominant_colors(pixels)
        assert len(shares) == 1
        assert shares[0].fraction == 1.0
        assert shares[0].name == "dodgerblue"

    def test_fractions_sum_to_one(self):
        rng = np.random.default_rng(9)
        pixels = rng.integers(0, 256, (500, 3)).astype(np.uint8)
        shares = dominant_colors(pixels)
        assert sum(s.fraction for s in shares) == pytest.approx(1.0, abs=1e-6)
        assert all(isinstance(s, ColorShare) for s in shares)

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        pixels = rng.integers(0, 256, (400, 3)).astype(np.uint8)
        assert dominant_colors(pixels) == dominant_colors(pixels)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dominant_colors(np.zeros((0, 3), dtype=np.uint8))
