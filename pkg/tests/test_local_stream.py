"""Local-stream mechanisms against independent scalar-loop oracles."""

import math

import numpy as np
import pytest

from morphloc import (
    DimensionError,
    FaceBox,
    PatchGrid,
    Projection,
    adaptive_crop,
    cmce_refine,
    lfga_attention,
    lfga_recalibrate,
    mpff_patch_consistency,
    patch_labels,
    sspsl_pseudo_mask,
    training_losses,
)
from morphloc.errors import ParameterError


def _cos(u, v):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def cmce_oracle(f_r, f_h):
    c, h, w = f_r.shape
    out = np.zeros_like(f_r)
    for y in range(h):
        for x in range(w):
            corr = _cos(f_r[:, y, x], f_h[:, y, x])
            for ch in range(c):
                a = f_r[ch, y, x] + corr * f_h[ch, y, x]
                b = f_h[ch, y, x] + corr * f_r[ch, y, x]
                out[ch, y, x] = max(a, 0.0) + max(b, 0.0)
    return out


def lfga_attention_oracle(f_l, g):
    c, h, w = f_l.shape
    n = h * w
    vecs = [f_l[:, i // w, i % w] for i in range(n)]
    proj = [g.weights @ v + g.bias for v in vecs]
    att = np.zeros((n, n))
    for i in range(n):
        row = np.array([proj[i] @ proj[j] for j in range(n)])
        e = np.exp(row - row.max())
        att[i] = e / e.sum()
    return att


def lfga_recalibrate_oracle(f_c, att, h_proj):
    c, h, w = f_c.shape
    n = h * w
    projected = np.zeros((c, n))
    for i in range(n):
        projected[:, i] = h_proj.weights @ f_c[:, i // w, i % w] + h_proj.bias
    mixed = np.zeros((c, n))
    for ch in range(c):
        for j in range(n):
            mixed[ch, j] = sum(projected[ch, i] * att[i, j] for i in range(n))
    out = np.zeros_like(f_c)
    for i in range(n):
        for ch in range(c):
            out[ch, i // w, i % w] = max(mixed[ch, i] + f_c[ch, i // w, i % w], 0.0)
    return out


def mpff_oracle(f_ml, f_l, theta, c):
    _, h2, w2 = f_ml.shape
    _, h1, w1 = f_l.shape
    rh, rw = h2 // h1, w2 // w1
    out = np.zeros((h2, w2))
    for y in range(h2):
        for x in range(w2):
            p = theta.weights @ f_ml[:, y, x] + theta.bias
            fl = theta.weights @ f_l[:, y // rh, x // rw] + theta.bias
            out[y, x] = math.tanh(float(p @ fl) / c)
    return out


def sspsl_oracle(f_f, f_r, f_a):
    _, h, w = f_f.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            v = f_f[:, y, x]
            out[y, x] = (_cos(v, f_r) - _cos(v, f_a)) < 0.0
    return out


class TestAdaptiveCrop:
    def test_large_face_cropped_with_margin(self):
        image = np.arange(3 * 20 * 20, dtype=float).reshape(3, 20, 20)
        box = FaceBox(x=4, y=6, w=10, h=10, img_h=20, img_w=20)  # 25% of area
        out = adaptive_crop(image, box, area_lo=0.04, margin=1.3)
        # direct geometry: center (9, 11), half extent 6.5 -> rows [4.5, 17.5), cols [2.5, 15.5)
        np.testing.assert_array_equal(out, image[:, 4:18, 2:16])

    def test_small_face_returns_full_image(self):
        image = np.random.default_rng(0).normal(size=(3, 20, 20))
        box = FaceBox(x=0, y=0, w=2, h=2, img_h=20, img_w=20)  # 1% of area
        np.testing.assert_array_equal(adaptive_crop(image, box, area_lo=0.04, margin=1.3), image)

    def test_margin_clipped_to_bounds(self):
        image = np.ones((3, 10, 10))
        box = FaceBox(x=0, y=0, w=9, h=9, img_h=10, img_w=10)
        out = adaptive_crop(image, box, area_lo=0.04, margin=2.0)
        assert out.shape == (3, 10, 10)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ParameterError):
            FaceBox(x=0, y=0, w=0, h=5, img_h=10, img_w=10)

    def test_out_of_bounds_box_rejected(self):
        with pytest.raises(ParameterError):
            FaceBox(x=8, y=0, w=5, h=5, img_h=10, img_w=10)


class TestCmceRefine:
    def test_identical_nonnegative_streams(self):
        rng = np.random.default_rng(211)
        f = rng.uniform(0.1, 1.0, size=(3, 4, 4))
        np.testing.assert_allclose(cmce_refine(f, f), 4.0 * f, atol=1e-12)

    def test_orthogonal_streams(self):
        f_r = np.zeros((2, 3, 3))
        f_h = np.zeros((2, 3, 3))
        f_r[0] = 1.5
        f_h[1] = -2.0
        expected = np.maximum(f_r, 0.0) + np.maximum(f_h, 0.0)
        np.testing.assert_array_equal(cmce_refine(f_r, f_h), expected)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(223)
        f_r = rng.normal(size=(4, 3, 3))
        f_h = rng.normal(size=(4, 3, 3))
        np.testing.assert_allclose(cmce_refine(f_r, f_h), cmce_oracle(f_r, f_h), atol=1e-12)

    def test_symmetric_and_nonnegative(self):
        rng = np.random.default_rng(227)
        f_r = rng.normal(size=(3, 5, 5))
        f_h = rng.normal(size=(3, 5, 5))
        out = cmce_refine(f_r, f_h)
        np.testing.assert_array_equal(out, cmce_refine(f_h, f_r))
        assert out.min() >= 0.0


class TestLfgaAttention:
    def test_constant_feature_uniform_attention(self):
        att = lfga_attention(np.full((3, 2, 2), 1.3), Projection.seeded(4, 3, seed=1))
        np.testing.assert_allclose(att, np.full((4, 4), 0.25), atol=1e-12)

    def test_two_location_hand_softmax(self):
        f_l = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])  # features (1,0) and (0,1)
        att = lfga_attention(f_l, Projection.identity(2))
        hi = np.e / (np.e + 1.0)
        lo = 1.0 / (np.e + 1.0)
        np.testing.assert_allclose(att, [[hi, lo], [lo, hi]], atol=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(229)
        f_l = rng.normal(size=(3, 2, 2))
        g = Projection.seeded(5, 3, seed=9)
        att = lfga_attention(f_l, g)
        np.testing.assert_allclose(att, lfga_attention_oracle(f_l, g), atol=1e-9)
        np.testing.assert_allclose(att.sum(axis=1), np.ones(4), atol=1e-9)

    def test_spatial_permutation_equivariance(self):
        rng = np.random.default_rng(233)
        f_l = rng.normal(size=(3, 1, 4))  # 1-D layout so permutations stay spatial
        g = Projection.seeded(3, 3, seed=2)
        perm = np.array([2, 0, 3, 1])
        att = lfga_attention(f_l, g)
        att_perm = lfga_attention(f_l[:, :, perm], g)
        np.testing.assert_allclose(att_perm, att[np.ix_(perm, perm)], atol=1e-12)

    def test_projection_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            lfga_attention(np.ones((3, 2, 2)), Projection.identity(4))


class TestLfgaRecalibrate:
    def test_identity_attention_doubles(self):
        rng = np.random.default_rng(239)
        f_c = rng.uniform(0.0, 1.0, size=(2, 2, 2))
        out = lfga_recalibrate(f_c, np.eye(4), Projection.identity(2))
        np.testing.assert_allclose(out, 2.0 * f_c, atol=1e-12)

    def test_uniform_attention_adds_spatial_mean(self):
        f_c = np.array([[[3.0, 5.0]]])  # 1 channel, 1x2 map
        att = np.full((2, 2), 0.5)
        out = lfga_recalibrate(f_c, att, Projection.identity(1))
        np.testing.assert_allclose(out, [[[7.0, 9.0]]], atol=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(241)
        f_c = rng.normal(size=(3, 2, 2))
        att_logits = rng.normal(size=(4, 4))
        att = np.exp(att_logits) / np.exp(att_logits).sum(axis=1, keepdims=True)
        h = Projection.seeded(3, 3, seed=77)
        np.testing.assert_allclose(
            lfga_recalibrate(f_c, att, h), lfga_recalibrate_oracle(f_c, att, h), atol=1e-9
        )

    def test_wrong_attention_side_rejected(self):
        with pytest.raises(DimensionError):
            lfga_recalibrate(np.ones((2, 2, 2)), np.eye(3), Projection.identity(2))


class TestMpff:
    def test_unit_vectors_give_tanh_one(self):
        f_l = np.zeros((2, 1, 1))
        f_l[0] = 1.0
        f_ml = np.zeros((2, 2, 2))
        f_ml[0] = 1.0
        out = mpff_patch_consistency(f_ml, f_l, PatchGrid(2, 2), Projection.identity(2), c=1.0)
        np.testing.assert_allclose(out, np.full((2, 2), math.tanh(1.0)), atol=1e-12)
        assert abs(out[0, 0] - 0.761594) < 1e-6

    def test_orthogonal_gives_zero(self):
        f_l = np.zeros((2, 1, 1))
        f_l[0] = 1.0
        f_ml = np.zeros((2, 2, 2))
        f_ml[1] = 1.0
        out = mpff_patch_consistency(f_ml, f_l, PatchGrid(2, 2), Projection.identity(2), c=1.0)
        np.testing.assert_array_equal(out, np.zeros((2, 2)))

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(251)
        f_ml = rng.normal(size=(3, 6, 4))
        f_l = rng.normal(size=(3, 3, 2))
        theta = Projection.seeded(4, 3, seed=5)
        got = mpff_patch_consistency(f_ml, f_l, PatchGrid(2, 2), theta, c=2.0)
        np.testing.assert_allclose(got, mpff_oracle(f_ml, f_l, theta, 2.0), atol=1e-12)
        assert (np.abs(got) < 1.0).all()

    def test_non_integral_ratio_rejected(self):
        with pytest.raises(DimensionError):
            mpff_patch_consistency(
                np.ones((2, 5, 4)), np.ones((2, 2, 2)), PatchGrid(2, 2), Projection.identity(2), 1.0
            )

    def test_nonpositive_normalizer_rejected(self):
        with pytest.raises(ParameterError):
            mpff_patch_consistency(
                np.ones((2, 4, 4)), np.ones((2, 2, 2)), PatchGrid(2, 2), Projection.identity(2), 0.0
            )

    def test_default_normalizer_is_sqrt_out_dim(self):
        rng = np.random.default_rng(253)
        f_ml = rng.normal(size=(3, 4, 4))
        f_l = rng.normal(size=(3, 2, 2))
        theta = Projection.seeded(4, 3, seed=8)
        np.testing.assert_array_equal(
            mpff_patch_consistency(f_ml, f_l, PatchGrid(2, 2), theta),
            mpff_patch_consistency(f_ml, f_l, PatchGrid(2, 2), theta, c=math.sqrt(4)),
        )


class TestSspsl:
    def test_real_prototype_match_gives_zeros(self):
        f_r = np.array([1.0, 2.0, 3.0])
        f_a = np.array([-1.0, 0.5, 0.0])
        f_f = np.tile(f_r[:, None, None], (1, 3, 3))
        assert not sspsl_pseudo_mask(f_f, f_r, f_a).any()

    def test_forged_prototype_match_gives_ones(self):
        f_r = np.array([1.0, 0.0])
        f_a = np.array([0.0, 1.0])
        f_f = np.tile(f_a[:, None, None], (1, 2, 2))
        assert sspsl_pseudo_mask(f_f, f_r, f_a).all()

    def test_equal_prototypes_tie_to_zero(self):
        rng = np.random.default_rng(257)
        f = rng.normal(size=(3,))
        f_f = rng.normal(size=(3, 4, 4))
        assert not sspsl_pseudo_mask(f_f, f, f).any()

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(263)
        f_f = rng.normal(size=(4, 5, 5))
        f_r = rng.normal(size=4)
        f_a = rng.normal(size=4)
        np.testing.assert_array_equal(sspsl_pseudo_mask(f_f, f_r, f_a), sspsl_oracle(f_f, f_r, f_a))

    def test_positive_rescaling_invariance(self):
        rng = np.random.default_rng(269)
        f_f = rng.normal(size=(3, 4, 4))
        f_r = rng.normal(size=3)
        f_a = rng.normal(size=3)
        base = sspsl_pseudo_mask(f_f, f_r, f_a)
        # power-of-two scales keep the float arithmetic exact
        np.testing.assert_array_equal(sspsl_pseudo_mask(4.0 * f_f, 0.5 * f_r, 8.0 * f_a), base)

    def test_zero_prototype_rejected(self):
        with pytest.raises(ParameterError):
            sspsl_pseudo_mask(np.ones((2, 2, 2)), np.zeros(2), np.ones(2))


class TestPatchLabels:
    def test_all_zero_mask(self):
        assert not patch_labels(np.zeros((4, 4), dtype=bool), PatchGrid(2, 2)).any()

    def test_single_hot_pixel_labels_one_patch(self):
        mask = np.zeros((4, 6), dtype=bool)
        mask[3, 4] = True
        labels = patch_labels(mask, PatchGrid(2, 2))
        expected = np.zeros((2, 3), dtype=bool)
        expected[1, 2] = True
        np.testing.assert_array_equal(labels, expected)

    def test_matches_any_oracle(self):
        rng = np.random.default_rng(271)
        mask = rng.random((8, 8)) < 0.2
        labels = patch_labels(mask, PatchGrid(2, 2))
        for by in range(4):
            for bx in range(4):
                assert labels[by, bx] == mask[2 * by : 2 * by + 2, 2 * bx : 2 * bx + 2].any()

    def test_grid_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            patch_labels(np.zeros((5, 4), dtype=bool), PatchGrid(2, 2))


class TestTwoScaleComposition:
    def test_attention_recalibration_composes_across_scales(self):
        # the attention/recalibration pair is a single-scale primitive;
        # multi-scale use is plain composition on pooled feature maps
        rng = np.random.default_rng(281)
        f = rng.normal(size=(4, 4, 4))
        g = Projection.seeded(3, 4, seed=1)
        h = Projection.seeded(4, 4, seed=2)
        fine = lfga_recalibrate(f, lfga_attention(f, g), h)
        pooled = fine.reshape(4, 2, 2, 2, 2).mean(axis=(2, 4))
        coarse = lfga_recalibrate(pooled, lfga_attention(pooled, g), h)
        assert fine.shape == (4, 4, 4)
        assert coarse.shape == (4, 2, 2)
        assert np.isfinite(coarse).all() and (coarse >= 0.0).all()


class TestTrainingLosses:
    def test_confident_correct_prediction(self):
        labels = np.array([0.0, 1.0, 1.0, 0.0])
        preds = np.abs(labels - 1e-9)
        loc, _, _ = training_losses(preds, labels, y_hat=1.0 - 1e-9, y=1)
        assert loc < 1e-6

    def test_uniform_half_gives_ln2(self):
        preds = np.full((3, 3), 0.5)
        labels = (np.arange(9).reshape(3, 3) % 2).astype(float)
        loc, cls, total = training_losses(preds, labels, y_hat=0.5, y=0)
        assert abs(loc - math.log(2.0)) < 1e-9
        assert abs(cls - math.log(2.0)) < 1e-9
        assert total == loc + cls

    def test_hand_evaluated_cls(self):
        _, cls, _ = training_losses(np.array([0.5]), np.array([1.0]), y_hat=0.9, y=1)
        assert abs(cls - (-math.log(0.9))) < 1e-9
        assert abs(cls - 0.105361) < 1e-6

    def test_bad_labels_rejected(self):
        with pytest.raises(ParameterError):
            training_losses(np.array([0.5]), np.array([0.5]), y_hat=0.5, y=0)
        with pytest.raises(ParameterError):
            training_losses(np.array([0.5]), np.array([1.0]), y_hat=0.5, y=2)
