"""Forward warping, fusion and virtual viewpoint rendering."""

import numpy as np
import pytest
from scipy import ndimage

from flowview.errors import DimensionMismatchError, InvalidParameterError
from flowview.raster import FlowField, Image
from flowview.synthesis import (
    SynthesisParams,
    forward_warp,
    fuse_views,
    overlay_rgb,
    scale_flow,
    synthesize_view,
)
from synthetic import intensity_centroid, square_pair


def uniform_flow(w, h, u, v):
    vec = np.empty((h, w, 2), np.float32)
    vec[..., 0] = u
    vec[..., 1] = v
    return FlowField.from_array(vec)


class TestScaleFlow:
    def test_zero_scale(self):
        f = uniform_flow(4, 4, 3.0, -2.0)
        assert np.array_equal(scale_flow(f, 0.0).vectors, np.zeros((4, 4, 2), np.float32))

    def test_half_scale(self):
        f = uniform_flow(2, 2, 4.0, -2.0)
        out = scale_flow(f, 0.5)
        assert np.array_equal(out.vectors, uniform_flow(2, 2, 2.0, -1.0).vectors)

    def test_operating_points(self):
        f = uniform_flow(2, 2, 8.0, 4.0)
        for a in (0.25, 0.5, 0.75):
            out = scale_flow(f, a)
            assert np.allclose(out.vectors, f.vectors * a)


class TestSynthesisParams:
    def test_b_complements_a(self):
        assert SynthesisParams(0.25).b == 0.75

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            SynthesisParams(1.5)


class TestForwardWarp:
    def test_zero_flow_copies(self):
        rng = np.random.default_rng(0)
        img = Image.from_array(rng.integers(0, 256, (6, 7, 3)).astype(np.uint8))
        out, valid, mag = forward_warp(img, FlowField.zeros(7, 6))
        assert np.array_equal(out.pixels, img.pixels)
        assert valid.all()
        assert np.array_equal(mag.values, np.zeros((6, 7)))

    def test_uniform_shift(self):
        rng = np.random.default_rng(1)
        img = Image.from_array(rng.integers(0, 256, (8, 16, 3)).astype(np.uint8))
        out, valid, _ = forward_warp(img, uniform_flow(16, 8, 5.0, 0.0))
        assert np.array_equal(out.pixels[:, 5:], img.pixels[:, :-5])
        assert not valid[:, :5].any()
        assert valid[:, 5:].all()

    def test_conflict_larger_magnitude_wins(self):
        # p0 (red, |flow|=2) and p3 (blue, |flow|=1) both land on x=2
        pix = np.zeros((1, 4, 3), np.uint8)
        pix[0, 0] = (255, 0, 0)
        pix[0, 3] = (0, 0, 255)
        vec = np.zeros((1, 4, 2), np.float32)
        vec[0, 0, 0] = 2.0
        vec[0, 3, 0] = -1.0
        out, valid, mag = forward_warp(Image.from_array(pix), FlowField.from_array(vec))
        assert out.pixels[0, 2].tolist() == [255, 0, 0]
        assert mag.values[0, 2] == 2.0
        assert valid[0, 2]

    def test_equal_magnitude_tie_breaks_to_lower_index(self):
        pix = np.zeros((1, 3, 3), np.uint8)
        pix[0, 0] = (10, 0, 0)
        pix[0, 2] = (0, 0, 10)
        vec = np.zeros((1, 3, 2), np.float32)
        vec[0, 0, 0] = 1.0
        vec[0, 2, 0] = -1.0
        out, _, _ = forward_warp(Image.from_array(pix), FlowField.from_array(vec))
        assert out.pixels[0, 1].tolist() == [10, 0, 0]

    def test_fractional_targets_mark_both_neighbors(self):
        pix = np.full((1, 3, 3), 200, np.uint8)
        vec = np.zeros((1, 3, 2), np.float32)
        vec[0, 0, 0] = 0.5
        out, valid, _ = forward_warp(Image.from_array(pix), FlowField.from_array(vec))
        assert valid.all()


class TestFuse:
    def test_midpoint_blend(self):
        c1 = Image.from_array(np.full((2, 2, 3), 100, np.uint8))
        c2 = Image.from_array(np.full((2, 2, 3), 201, np.uint8))
        ones = np.ones((2, 2), bool)
        out, valid = fuse_views(c1, ones, c2, ones, 0.5)
        assert np.array_equal(out.pixels, np.full((2, 2, 3), 151, np.uint8))  # 150.5 rounds up
        assert valid.all()

    def test_single_hole_takes_other_view(self):
        c1 = Image.from_array(np.full((2, 2, 3), 50, np.uint8))
        c2 = Image.from_array(np.full((2, 2, 3), 250, np.uint8))
        m1 = np.ones((2, 2), bool)
        m1[0, 0] = False
        out, valid = fuse_views(c1, m1, c2, np.ones((2, 2), bool), 0.25)
        assert out.pixels[0, 0].tolist() == [250, 250, 250]
        assert valid.all()

    def test_double_hole_nearest_fill(self):
        # single valid pixel q at (2,2); hole at (0,0) must copy q's color
        # and stay flagged invalid -- checked against a BFS oracle
        c = np.zeros((3, 3, 3), np.uint8)
        c[2, 2] = (9, 8, 7)
        mask = np.zeros((3, 3), bool)
        mask[2, 2] = True
        img = Image.from_array(c)
        out, valid = fuse_views(img, mask, img, mask, 0.5)
        assert out.pixels[0, 0].tolist() == [9, 8, 7]
        assert not valid[0, 0]
        assert valid[2, 2]

    def test_nearest_fill_matches_bfs_oracle(self):
        rng = np.random.default_rng(5)
        c1 = Image.from_array(rng.integers(0, 256, (9, 9, 3)).astype(np.uint8))
        m1 = rng.random((9, 9)) < 0.3
        m1[4, 4] = True
        empty = Image.from_array(np.zeros((9, 9, 3), np.uint8))
        out, valid = fuse_views(c1, m1, empty, np.zeros((9, 9), bool), 0.0)
        # oracle: euclidean distance transform indices
        iy, ix = ndimage.distance_transform_edt(
            ~m1, return_distances=False, return_indices=True)
        for y in range(9):
            for x in range(9):
                if not m1[y, x]:
                    assert out.pixels[y, x].tolist() == c1.pixels[iy[y, x], ix[y, x]].tolist()

    def test_weight_degeneracy_at_endpoints(self):
        rng = np.random.default_rng(6)
        c1 = Image.from_array(rng.integers(0, 256, (4, 4, 3)).astype(np.uint8))
        c2 = Image.from_array(rng.integers(0, 256, (4, 4, 3)).astype(np.uint8))
        ones = np.ones((4, 4), bool)
        out0, _ = fuse_views(c1, ones, c2, ones, 0.0)
        assert np.array_equal(out0.pixels, c1.pixels)
        out1, _ = fuse_views(c1, ones, c2, ones, 1.0)
        assert np.array_equal(out1.pixels, c2.pixels)


class TestSynthesizeView:
    def test_a0_returns_img1_bit_exactly(self):
        img1, img2, f12, f21 = square_pair()
        view = synthesize_view(img1, img2, f12, f21, 0.0)
        assert np.array_equal(view.image.pixels, img1.pixels)

    def test_a1_matches_img2(self):
        img1, img2, f12, f21 = square_pair()
        view = synthesize_view(img1, img2, f12, f21, 1.0)
        # exact ground-truth flow: the psnr is unbounded; >= 30 dB required
        diff = view.image.pixels.astype(np.float64) - img2.pixels.astype(np.float64)
        interior = diff[5:-5, 5:-5]
        mse = np.mean(interior ** 2)
        psnr = np.inf if mse == 0 else 10 * np.log10(255.0 ** 2 / mse)
        assert psnr >= 30.0

    def test_square_centroid_tracks_a(self):
        img1, img2, f12, f21 = square_pair(d=10)
        x0, _ = intensity_centroid(img1)
        previous = -np.inf
        for a in (0.25, 0.5, 0.75):
            view = synthesize_view(img1, img2, f12, f21, a)
            cx, _ = intensity_centroid(view.image)
            assert abs(cx - (x0 + a * 10.0)) <= 0.5
            assert cx > previous
            previous = cx

    def test_magnitude_rescale_invariant(self):
        h = w = 64
        rng = np.random.default_rng(1)
        i1 = Image.from_array(rng.integers(0, 256, (h, w, 3)).astype(np.uint8))
        i2 = Image.from_array(rng.integers(0, 256, (h, w, 3)).astype(np.uint8))
        f = uniform_flow(w, h, 3.0, 4.0)
        fb = uniform_flow(w, h, -3.0, -4.0)
        for a in (0.25, 0.5, 0.75):
            view = synthesize_view(i1, i2, f, fb, a)
            interior = view.magnitude.values[8:-8, 8:-8]
            assert np.all(np.abs(interior - 5.0) <= 0.5)

    def test_rejects_out_of_range_a(self):
        img1, img2, f12, f21 = square_pair()
        with pytest.raises(InvalidParameterError):
            synthesize_view(img1, img2, f12, f21, 1.5)

    def test_dimension_mismatch(self):
        img1, img2, f12, f21 = square_pair()
        with pytest.raises(DimensionMismatchError):
            synthesize_view(img1, img2, f12, FlowField.zeros(3, 3), 0.5)

    def test_totality_under_random_flows(self):
        # every output pixel is splat-covered, cross-filled or nearest-filled
        rng = np.random.default_rng(9)
        for seed in range(4):
            r = np.random.default_rng(seed)
            i1 = Image.from_array(r.integers(0, 256, (24, 24, 3)).astype(np.uint8))
            i2 = Image.from_array(r.integers(0, 256, (24, 24, 3)).astype(np.uint8))
            f12 = FlowField.from_array(r.normal(0, 6, (24, 24, 2)).astype(np.float32))
            f21 = FlowField.from_array(r.normal(0, 6, (24, 24, 2)).astype(np.float32))
            view = synthesize_view(i1, i2, f12, f21, float(rng.uniform(0, 1)))
            assert view.image.pixels.shape == (24, 24, 3)
            assert np.isfinite(view.magnitude.values).all()
            if view.valid.any():
                # filled pixels must carry a color present among valid pixels
                valid_colors = {
                    tuple(c) for c in view.image.pixels[view.valid].reshape(-1, 3)
                }
                for y, x in zip(*np.where(~view.valid)):
                    assert tuple(view.image.pixels[y, x]) in valid_colors


class TestOverlay:
    def test_identical_inputs_grayscale(self):
        img1, _, _, _ = square_pair()
        out = overlay_rgb(img1, img1, img1)
        assert np.array_equal(out.pixels[:, :, 0], out.pixels[:, :, 1])
        assert np.array_equal(out.pixels[:, :, 1], out.pixels[:, :, 2])

    def test_translated_squares_fringe_colors(self):
        def square_at(x):
            a = np.zeros((16, 32, 3), np.uint8)
            a[4:12, x:x + 8] = 255
            return Image.from_array(a)

        out = overlay_rgb(square_at(10), square_at(12), square_at(14))
        row = out.pixels[8]
        # left band: only v1 covers -> pure red; right band: only v3 -> blue
        assert all(row[c].tolist() == [255, 0, 0] for c in (10, 11))
        assert all(row[c].tolist() == [0, 0, 255] for c in (20, 21))

    def test_black_inputs_black_output(self):
        black = Image.from_array(np.zeros((4, 4, 3), np.uint8))
        assert np.array_equal(overlay_rgb(black, black, black).pixels, black.pixels)
