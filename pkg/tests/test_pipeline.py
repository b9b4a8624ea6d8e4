"""CLI subcommands, pipeline composition, caching and determinism."""

import json
import logging
import os
import subprocess
import sys

import numpy as np
import pytest

from flowview.cli import run_cli
from flowview.flow import FlowParams
from flowview.pipeline import PairConfig, prepare_pair, run_pipeline
from flowview.raster import Image, load_image, read_flo, save_image, write_flo
from synthetic import central, rgb_shift_pair, square_pair


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    wd = tmp_path / "cache"
    monkeypatch.setenv("VVS_WORKDIR", str(wd))
    return wd


@pytest.fixture()
def square_files(tmp_path):
    img1, img2, f12, f21 = square_pair()
    paths = {
        "a": tmp_path / "L.png",
        "b": tmp_path / "R.png",
        "fwd": tmp_path / "f.flo",
        "back": tmp_path / "b.flo",
    }
    save_image(img1, paths["a"])
    save_image(img2, paths["b"])
    write_flo(f12, paths["fwd"])
    write_flo(f21, paths["back"])
    return paths, img1, img2


class TestViewCommand:
    def test_t0_bit_identical_output(self, square_files, tmp_path):
        paths, img1, _ = square_files
        out = tmp_path / "v.png"
        code = run_cli([
            "view", "--a", str(paths["a"]), "--b", str(paths["b"]),
            "--flow", str(paths["fwd"]), "--flow-back", str(paths["back"]),
            "--t", "0", "--out", str(out),
        ])
        assert code == 0
        assert out.read_bytes() == paths["a"].read_bytes()

    def test_overlay_rgb(self, square_files, tmp_path):
        paths, _, _ = square_files
        out = tmp_path / "ov.png"
        code = run_cli([
            "view", "--a", str(paths["a"]), "--b", str(paths["b"]),
            "--flow", str(paths["fwd"]), "--flow-back", str(paths["back"]),
            "--t", "0.25", "--t", "0.5", "--t", "0.75",
            "--overlay-rgb", "--out", str(out),
        ])
        assert code == 0
        ov = load_image(out)
        # fringes: some pixels strongly red-only, some strongly blue-only
        red = (ov.pixels[:, :, 0] > 128) & (ov.pixels[:, :, 2] < 64)
        blue = (ov.pixels[:, :, 2] > 128) & (ov.pixels[:, :, 0] < 64)
        assert red.any() and blue.any()

    def test_overlay_needs_three_t(self, square_files, tmp_path):
        paths, _, _ = square_files
        code = run_cli([
            "view", "--a", str(paths["a"]), "--b", str(paths["b"]),
            "--flow", str(paths["fwd"]), "--flow-back", str(paths["back"]),
            "--t", "0.5", "--overlay-rgb", "--out", str(tmp_path / "x.png"),
        ])
        assert code == 1


class TestFlowCommand:
    def test_epe_against_ground_truth(self, tmp_path, workdir):
        img1, img2 = rgb_shift_pair(128, 3.0, 1.5)
        a_path, b_path = tmp_path / "a.ppm", tmp_path / "b.ppm"
        save_image(img1, a_path)
        save_image(img2, b_path)
        fwd, back = tmp_path / "f.flo", tmp_path / "bk.flo"
        code = run_cli([
            "flow", "--a", str(a_path), "--b", str(b_path),
            "--out", str(fwd), "--out-back", str(back),
        ])
        assert code == 0
        flow = read_flo(fwd)
        epe = central(np.hypot(flow.vectors[..., 0] - 3.0, flow.vectors[..., 1] - 1.5))
        assert epe.mean() <= 0.3

    def test_viz_output(self, tmp_path):
        img1, img2 = rgb_shift_pair(64, 1.0, 0.5)
        a_path, b_path = tmp_path / "a.ppm", tmp_path / "b.ppm"
        save_image(img1, a_path)
        save_image(img2, b_path)
        viz = tmp_path / "flow.png"
        code = run_cli([
            "flow", "--a", str(a_path), "--b", str(b_path),
            "--out", str(tmp_path / "f.flo"), "--out-back", str(tmp_path / "b.flo"),
            "--viz", str(viz), "--levels", "3",
        ])
        assert code == 0
        assert load_image(viz).width == 64


class TestColorfixCommand:
    def test_correction_reduces_error(self, tmp_path):
        from synthetic import gamma_lut, midrange_image

        ref = midrange_image(seed=11)
        dist = Image.from_array(gamma_lut(1.4)[ref.pixels])
        ref_p, dist_p, out_p = tmp_path / "ref.ppm", tmp_path / "dist.ppm", tmp_path / "out.ppm"
        save_image(ref, ref_p)
        save_image(dist, dist_p)
        curve_p = tmp_path / "curve.json"
        code = run_cli([
            "colorfix", "--a", str(ref_p), "--b", str(dist_p),
            "--out", str(out_p), "--dump-curve", str(curve_p),
        ])
        assert code == 0
        corrected = load_image(out_p)
        before = np.abs(dist.pixels.astype(int) - ref.pixels.astype(int)).mean()
        after = np.abs(corrected.pixels.astype(int) - ref.pixels.astype(int)).mean()
        assert after <= 3.0 < before
        payload = json.loads(curve_p.read_text())
        assert set(payload) == {"r", "g", "b"}


class TestRegisterCommand:
    def test_correspondence_registration(self, tmp_path):
        from synthetic import noise_texture, rgb_from_gray

        tex = noise_texture(96, seed=8)
        img1 = rgb_from_gray(tex)
        img2 = rgb_from_gray(np.roll(tex, (0, 6), axis=(0, 1)))  # shifted right 6
        a_p, b_p = tmp_path / "a.ppm", tmp_path / "b.ppm"
        save_image(img1, a_p)
        save_image(img2, b_p)
        # image-2 point (x, y) corresponds to image-1 point (x - 6, y)
        pairs = [
            {"src": [x, y], "dst": [x - 6, y]}
            for x, y in ((10, 10), (80, 12), (78, 83), (12, 79))
        ]
        corr = tmp_path / "c.json"
        corr.write_text(json.dumps(pairs))
        out_a, out_b = tmp_path / "ra.ppm", tmp_path / "rb.ppm"
        code = run_cli([
            "register", "--a", str(a_p), "--b", str(b_p),
            "--correspondences", str(corr), "--out-a", str(out_a), "--out-b", str(out_b),
        ])
        assert code == 0
        rect = load_image(out_b)
        assert np.array_equal(rect.pixels[:, :-6], img1.pixels[:, :-6])


class TestRegisterAuto:
    def test_auto_registration_through_pipeline(self, tmp_path, workdir):
        from synthetic import noise_texture, rgb_from_gray

        tex = noise_texture(160, seed=2, octaves=((2.0, 1.0), (8.0, 4.0)))
        img1 = rgb_from_gray(tex)
        img2 = rgb_from_gray(np.roll(tex, (4, 7), axis=(0, 1)))
        p1, p2 = tmp_path / "a1.ppm", tmp_path / "a2.ppm"
        save_image(img1, p1)
        save_image(img2, p2)
        prep = prepare_pair(PairConfig(
            path1=p1, path2=p2, auto_register=True,
            flow_params=FlowParams(levels=3)))
        rect2 = load_image(prep.cache_dir / "rect_2.ppm")
        # interior of the rectified second image matches image 1
        interior = np.s_[10:-10, 10:-10]
        assert np.array_equal(rect2.pixels[interior], img1.pixels[interior])


class TestCloseupCommand:
    def test_closeup_render(self, square_files, tmp_path):
        paths, _, _ = square_files
        out = tmp_path / "c.png"
        code = run_cli([
            "closeup", "--a", str(paths["a"]), "--b", str(paths["b"]),
            "--flow", str(paths["fwd"]), "--flow-back", str(paths["back"]),
            "--t", "0.5", "--zoom", "1.5", "--tau", "auto", "--out", str(out),
        ])
        assert code == 0
        assert load_image(out).width == 96

    def test_closeup_zoom_one_equals_view(self, square_files, tmp_path):
        paths, _, _ = square_files
        c_out, v_out = tmp_path / "c.png", tmp_path / "v.png"
        assert run_cli([
            "closeup", "--a", str(paths["a"]), "--b", str(paths["b"]),
            "--flow", str(paths["fwd"]), "--flow-back", str(paths["back"]),
            "--t", "0.5", "--zoom", "1", "--out", str(c_out),
        ]) == 0
        assert run_cli([
            "view", "--a", str(paths["a"]), "--b", str(paths["b"]),
            "--flow", str(paths["fwd"]), "--flow-back", str(paths["back"]),
            "--t", "0.5", "--out", str(v_out),
        ]) == 0
        assert np.array_equal(load_image(c_out).pixels, load_image(v_out).pixels)


class TestExitCodes:
    def test_usage_error_is_1(self):
        assert run_cli([]) == 1
        assert run_cli(["view"]) == 1
        assert run_cli(["nonsense"]) == 1

    def test_processing_error_is_2(self, tmp_path):
        assert run_cli([
            "flow", "--a", str(tmp_path / "missing.png"), "--b", str(tmp_path / "m2.png"),
            "--out", str(tmp_path / "f.flo"), "--out-back", str(tmp_path / "b.flo"),
        ]) == 2


class TestPipeline:
    def test_identical_images_roundtrip(self, tmp_path, workdir):
        img, _ = rgb_shift_pair(64, 0.0, 0.0, seed=9)
        p1, p2 = tmp_path / "x.ppm", tmp_path / "y.ppm"
        save_image(img, p1)
        save_image(img, p2)
        view = run_pipeline(PairConfig(path1=p1, path2=p2), 0.5)
        assert np.array_equal(view.image.pixels, img.pixels)

    def test_full_run_centroid_midpoint(self, tmp_path, workdir):
        img1, img2, f12, f21 = square_pair()
        p1, p2 = tmp_path / "sq1.ppm", tmp_path / "sq2.ppm"
        save_image(img1, p1)
        save_image(img2, p2)
        fp, bp = tmp_path / "f.flo", tmp_path / "b.flo"
        write_flo(f12, fp)
        write_flo(f21, bp)
        config = PairConfig(path1=p1, path2=p2, flow_path=fp, flow_back_path=bp)
        view = run_pipeline(config, 0.5)
        from synthetic import intensity_centroid

        x0, _ = intensity_centroid(img1)
        cx, _ = intensity_centroid(view.image)
        assert abs(cx - (x0 + 0.5 * 10)) <= 0.5

    def test_cache_hit_on_rerun(self, tmp_path, workdir, caplog):
        img1, img2 = rgb_shift_pair(64, 1.0, 0.5)
        p1, p2 = tmp_path / "c1.ppm", tmp_path / "c2.ppm"
        save_image(img1, p1)
        save_image(img2, p2)
        config = PairConfig(path1=p1, path2=p2)
        with caplog.at_level(logging.INFO, logger="flowview.pipeline"):
            first = prepare_pair(config)
            assert any("cache store" in r.message for r in caplog.records)
            caplog.clear()
            second = prepare_pair(config)
            assert any("cache hit" in r.message for r in caplog.records)
        assert np.array_equal(first.f12.vectors, second.f12.vectors)
        assert np.array_equal(first.img2.pixels, second.img2.pixels)

    def test_stage_artifacts_loadable(self, tmp_path, workdir):
        img1, img2 = rgb_shift_pair(64, 1.0, 0.5)
        p1, p2 = tmp_path / "s1.ppm", tmp_path / "s2.ppm"
        save_image(img1, p1)
        save_image(img2, p2)
        prep = prepare_pair(PairConfig(path1=p1, path2=p2))
        cache = prep.cache_dir
        for name in ("rect_1.ppm", "rect_2.ppm", "curve.json", "fwd.flo", "back.flo"):
            assert (cache / name).exists()
        assert np.array_equal(load_image(cache / "rect_1.ppm").pixels, img1.pixels)
        read_flo(cache / "fwd.flo")
        json.loads((cache / "curve.json").read_text())

    def test_stage_labels_in_errors(self, tmp_path, workdir):
        from flowview.errors import PipelineError

        img1, _ = rgb_shift_pair(64, 0.0, 0.0)
        img_small, _ = rgb_shift_pair(32, 0.0, 0.0)
        p1, p2 = tmp_path / "e1.ppm", tmp_path / "e2.ppm"
        save_image(img1, p1)
        save_image(img_small, p2)
        with pytest.raises(PipelineError, match=r"\[register\]"):
            prepare_pair(PairConfig(path1=p1, path2=p2))


class TestDeterminism:
    def test_byte_stable_across_runs_and_thread_counts(self, tmp_path):
        img1, img2 = rgb_shift_pair(96, 2.0, 1.0)
        a_p, b_p = tmp_path / "a.ppm", tmp_path / "b.ppm"
        save_image(img1, a_p)
        save_image(img2, b_p)
        outputs = []
        for i, threads in enumerate(("1", "4")):
            env = dict(os.environ)
            env["OMP_NUM_THREADS"] = threads
            env["VVS_WORKDIR"] = str(tmp_path / f"wd{i}")
            fwd = tmp_path / f"f{i}.flo"
            back = tmp_path / f"b{i}.flo"
            view = tmp_path / f"v{i}.png"
            subprocess.run(
                [sys.executable, "-m", "flowview.cli", "flow", "--a", str(a_p),
                 "--b", str(b_p), "--out", str(fwd), "--out-back", str(back),
                 "--levels", "3"],
                check=True, env=env,
            )
            subprocess.run(
                [sys.executable, "-m", "flowview.cli", "view", "--a", str(a_p),
                 "--b", str(b_p), "--flow", str(fwd), "--flow-back", str(back),
                 "--t", "0.5", "--out", str(view)],
                check=True, env=env,
            )
            outputs.append((fwd.read_bytes(), back.read_bytes(), view.read_bytes()))
        assert outputs[0] == outputs[1]
