import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskforge import color, extraction, geometry, metrics, parsing
from maskforge.extraction import ClusterParams, ClusterModel, SkinTone
from maskforge.synthesis import MakeupStyle, RegionStyle, generate_pair, render_style_mask

import util


class TestClusterParams:
    def test_defaults_match_paper_setting(self):
        p = ClusterParams()
        assert p.k == 6 and p.s == 2

    def test_invalid(self):
        with pytest.raises(ValueError):
            ClusterParams(k=1)
        with pytest.raises(ValueError):
            ClusterParams(k=4, s=5)


class TestKmeansLab:
    def test_exact_flat_clusters(self):
        colors = np.array([[10.0, 0, 0], [40.0, 5, 5], [70.0, -5, 10], [90.0, 20, -20]])
        img = colors[np.repeat(np.arange(4), 25)].reshape(10, 10, 3)
        roi = np.ones((10, 10), dtype=bool)
        model = extraction.kmeans_lab(img, roi, ClusterParams(k=4, s=1, seed=0))
        got = sorted(map(tuple, np.round(model.centroids, 6)))
        assert got == sorted(map(tuple, colors))
        assert sorted(model.counts) == [25, 25, 25, 25]

    def test_two_separated_clusters_with_counts(self):
        img = np.zeros((10, 10, 3))
        img[..., 0] = 10.0
        img[0, :, 0] = 90.0  # 10 px bright, 90 px dark
        model = extraction.kmeans_lab(img, np.ones((10, 10), bool), ClusterParams(k=2, s=1, seed=0))
        order = np.argsort(model.counts)
        assert np.allclose(model.centroids[order[0]], [90.0, 0, 0])
        assert np.allclose(model.centroids[order[1]], [10.0, 0, 0])
        assert sorted(model.counts) == [10, 90]

    def test_sse_close_to_multirestart_oracle(self):
        from sklearn.cluster import KMeans

        rng = np.random.default_rng(0)
        pts = np.vstack(
            [
                rng.normal((20, 0, 0), 2.0, (120, 3)),
                rng.normal((60, 10, -10), 2.0, (100, 3)),
                rng.normal((45, -15, 20), 2.0, (80, 3)),
            ]
        )
        img = pts.reshape(10, 30, 3)
        roi = np.ones((10, 30), bool)
        model = extraction.kmeans_lab(img, roi, ClusterParams(k=3, s=1, seed=0))
        _, dists = extraction._kernels.kmeans_assign(pts, model.centroids)
        sse = dists.sum()
        oracle = KMeans(n_clusters=3, n_init=50, random_state=0).fit(pts).inertia_
        assert sse <= 1.05 * oracle

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 100, (20, 20, 3))
        roi = rng.random((20, 20)) > 0.3
        a = extraction.kmeans_lab(img, roi, ClusterParams(seed=7))
        b = extraction.kmeans_lab(img, roi, ClusterParams(seed=7))
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.counts, b.counts)

    def test_too_few_roi_pixels(self):
        img = np.zeros((4, 4, 3))
        roi = np.zeros((4, 4), bool)
        roi[0, :3] = True
        with pytest.raises(ValueError, match="at least k"):
            extraction.kmeans_lab(img, roi, ClusterParams(k=6))


class TestEstimateSkinTone:
    def test_s1_is_most_frequent_centroid(self):
        model = ClusterModel(
            centroids=np.array([[10.0, 1, 1], [50.0, 2, 2], [90.0, 3, 3]]),
            counts=np.array([5, 100, 20]),
        )
        tone = extraction.estimate_skin_tone(model, 1)
        assert np.array_equal(tone.lab, [50.0, 2, 2])

    def test_hand_weighted_mean(self):
        A, B, C = np.array([60.0, 10, 5]), np.array([30.0, -5, 0]), np.array([80.0, 0, 0])
        model = ClusterModel(centroids=np.stack([A, B, C]), counts=np.array([70, 20, 10]))
        tone = extraction.estimate_skin_tone(model, 2)
        assert np.allclose(tone.lab, (70 * A + 20 * B) / 90.0)

    def test_equal_counts_s_equals_k_is_plain_mean(self):
        cents = np.array([[10.0, 0, 0], [20.0, 5, 5], [30.0, -5, 10]])
        model = ClusterModel(centroids=cents, counts=np.array([7, 7, 7]))
        tone = extraction.estimate_skin_tone(model, 3)
        assert np.allclose(tone.lab, cents.mean(axis=0))

    def test_count_tie_broken_by_darker_centroid(self):
        model = ClusterModel(
            centroids=np.array([[80.0, 0, 0], [20.0, 0, 0], [50.0, 0, 0]]),
            counts=np.array([10, 10, 10]),
        )
        tone = extraction.estimate_skin_tone(model, 1)
        assert tone.lab[0] == 20.0


class TestComputeAlphaMap:
    def test_pixel_equals_tone_is_zero(self):
        tone = SkinTone(lab=np.array([60.0, 10, 15]))
        img = np.tile(tone.lab, (3, 3, 1))
        assert np.all(extraction.compute_alpha_map(img, tone) == 0.0)

    def test_orthogonal_pixel_is_one(self):
        tone = SkinTone(lab=np.array([1.0, 0.0, 0.0]))
        img = np.tile(np.array([0.0, 1.0, 0.0]), (2, 2, 1))
        assert np.allclose(extraction.compute_alpha_map(img, tone), 1.0)

    def test_oracle_value(self):
        tone = SkinTone(lab=np.array([60.0, 10.0, 15.0]))
        img = np.tile(np.array([50.0, 30.0, 0.0]), (1, 1, 1))
        # 1 - 0.903347... from the exact-arithmetic cosine oracle
        assert extraction.compute_alpha_map(img, tone)[0, 0] == pytest.approx(
            0.096652908, abs=1e-6
        )

    def test_clamped_to_unit_interval(self):
        tone = SkinTone(lab=np.array([50.0, 0.0, 0.0]))
        img = np.tile(np.array([-50.0, 0.0, 0.0]), (1, 1, 1))  # opposite direction: cossim -1
        assert extraction.compute_alpha_map(img, tone)[0, 0] == 1.0

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance_of_tone(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.uniform(-50, 100, (4, 4, 3))
        tone = rng.uniform(1, 100, 3)
        a1 = extraction.compute_alpha_map(img, SkinTone(lab=tone))
        a2 = extraction.compute_alpha_map(img, SkinTone(lab=3.7 * tone))
        assert np.allclose(a1, a2, atol=1e-9)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_monotone_along_ray_from_tone(self, seed):
        rng = np.random.default_rng(seed)
        tone = rng.uniform(10, 90, 3)
        d = rng.normal(0, 1, 3)
        ts = np.linspace(0, 5, 40)
        pts = tone[None, :] + ts[:, None] * d[None, :]
        alphas = extraction.compute_alpha_map(pts[None, ...], SkinTone(lab=tone))[0]
        assert np.all(np.diff(alphas) >= -1e-9)


def eyeshadow_style(color_rgb, opacity, template="eyeshadow_defined", finish="matte", seed=0):
    return MakeupStyle(
        regions={"eyeshadow": RegionStyle(template, color_rgb, opacity, finish)}, seed=seed
    )


class TestExtractEyeMask:
    def test_no_makeup_flat_skin_alpha_near_zero(self, canon):
        face = util.make_face(256, seed=0)
        mask = extraction.extract_eye_mask(face.image, face.landmarks, face.parsing, canon=canon)
        assert mask.shape == (canon.height, canon.width, 4)
        assert mask[..., 3].mean() < 0.02

    def test_self_synthesis_alpha_correlation(self, canon, library):
        face = util.make_face(256, seed=3)
        style = eyeshadow_style((0.13, 0.18, 0.38), 0.75)
        smask = render_style_mask(style, library, canon)
        after, warped = generate_pair(face.image, face.landmarks, smask, canon)
        ext = extraction.extract_eye_mask(after, face.landmarks, face.parsing, canon=canon)
        T = geometry.fit_canonical_affine(face.landmarks, canon)
        ext_face = geometry.apply_affine(ext, geometry.invert_affine(T), (256, 256))
        gate = metrics.extraction_gate(face.landmarks, face.parsing, canon)
        gate_face = geometry.apply_affine(
            np.dstack([gate.astype(np.float64)] * 4), geometry.invert_affine(T), (256, 256)
        )[..., 0] > 0.5
        region = gate_face & face.parsing.member_mask(("skin",))
        r = np.corrcoef(warped[..., 3][region], ext_face[..., 3][region])[0, 1]
        assert r > 0.95

    def test_eyebrow_occlusion_changes_mask_only_outside_eyebrows(self, canon):
        face = util.make_face(256, seed=5)
        m1 = extraction.extract_eye_mask(face.image, face.landmarks, face.parsing, canon=canon)
        # occlude the eyebrow labels (hair over brows): brow pixels stay gated
        labels = face.parsing.labels.copy()
        brow_px = np.isin(labels, [2, 3])
        labels[brow_px] = 17
        p2 = parsing.ParsingMask(labels, face.parsing.names)
        m2 = extraction.extract_eye_mask(face.image, face.landmarks, p2, canon=canon)
        T = geometry.fit_canonical_affine(face.landmarks, canon)
        brow_canon = geometry.apply_affine(brow_px.astype(np.uint8), T, (canon.width, canon.height)) > 0
        changed = m1[..., 3] != m2[..., 3]
        assert not np.any(changed & brow_canon)
        assert np.all(m1[..., 3][brow_canon] == 0.0)
        assert np.all(m2[..., 3][brow_canon] == 0.0)

    def test_alpha_zero_wherever_gate_excludes(self, canon):
        face = util.make_face(256, seed=6)
        mask = extraction.extract_eye_mask(face.image, face.landmarks, face.parsing, canon=canon)
        gate = metrics.extraction_gate(face.landmarks, face.parsing, canon)
        assert np.all(mask[..., 3][~gate] == 0.0)
        assert mask[..., 3].min() >= 0.0 and mask[..., 3].max() <= 1.0

    def test_missing_eye_labels_raises(self, canon):
        face = util.make_face(256, seed=7)
        labels = face.parsing.labels.copy()
        labels[np.isin(labels, [4, 5])] = 1
        bad = parsing.ParsingMask(labels, face.parsing.names)
        with pytest.raises(ValueError, match="parsing lacks eye region"):
            extraction.extract_eye_mask(face.image, face.landmarks, bad, canon=canon)

    def test_deterministic(self, canon):
        face = util.make_face(256, seed=8)
        a = extraction.extract_eye_mask(face.image, face.landmarks, face.parsing, canon=canon)
        b = extraction.extract_eye_mask(face.image, face.landmarks, face.parsing, canon=canon)
        assert np.array_equal(a, b)

    def test_dim_mismatch(self, canon):
        face = util.make_face(256, seed=9)
        small = parsing.ParsingMask(face.parsing.labels[:128, :128], face.parsing.names)
        with pytest.raises(ValueError, match="parsing dims"):
            extraction.extract_eye_mask(face.image, face.landmarks, small, canon=canon)
