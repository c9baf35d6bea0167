import dataclasses

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage

from usseg.cli import main
from usseg.config import ConfigError, load_phantom_spec, load_pipeline_config
from usseg.evaluate import boundary_mask, dice_scores, overlay
from usseg.image_core import NORMALIZED, GrayImage, LabelMap, load_pgm, save_pgm
from usseg.ncut import NcutParams, recursive_ncut
from usseg.phantom import PhantomSpec, generate_phantom
from usseg.pipeline import (
    PipelineError,
    PipelineParams,
    crop_image,
    run_pipeline,
)

SMALL_SPEC = PhantomSpec(
    size=48,
    nodule_center=(16.0, 16.0),
    nodule_axes=(9.0, 7.0),
    trachea_center=(34.0, 34.0),
    trachea_radius=6.0,
)


class TestPhantom:
    def test_deterministic_bit_identical(self):
        a_img, a_truth = generate_phantom(PhantomSpec(seed=3))
        b_img, b_truth = generate_phantom(PhantomSpec(seed=3))
        assert np.array_equal(a_img.data, b_img.data)
        assert np.array_equal(a_truth.labels, b_truth.labels)

    def test_seed_changes_noise_not_truth(self):
        a_img, a_truth = generate_phantom(PhantomSpec(seed=0))
        b_img, b_truth = generate_phantom(PhantomSpec(seed=1))
        assert not np.array_equal(a_img.data, b_img.data)
        assert np.array_equal(a_truth.labels, b_truth.labels)

    def test_truth_geometry(self):
        spec = PhantomSpec()
        _, truth = generate_phantom(spec)
        cx, cy = spec.nodule_center
        tx, ty = spec.trachea_center
        assert truth.labels[int(cy), int(cx)] == 2
        assert truth.labels[int(ty), int(tx)] == 3
        assert truth.labels[0, 0] == 1

    def test_speckle_scale_matches_sigma(self):
        spec = PhantomSpec(speckle_sigma=0.15, seed=2)
        img, truth = generate_phantom(spec)
        interior = ndimage.binary_erosion(truth.labels == 1, iterations=4)
        observed = img.data[interior].std()
        expected = spec.speckle_sigma * spec.background_level
        assert abs(observed - expected) <= 0.2 * expected

    def test_zero_noise_is_piecewise_constant(self):
        img, truth = generate_phantom(PhantomSpec(speckle_sigma=0.0))
        for label, level in ((1, 0.55), (2, 0.25), (3, 0.15)):
            assert np.all(img.data[truth.labels == label] == level)

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            PhantomSpec(nodule_center=(2.0, 2.0))
        with pytest.raises(ValueError):
            PhantomSpec(background_level=1.5)
        with pytest.raises(ValueError):
            PhantomSpec(speckle_sigma=-0.1)


class TestDice:
    def test_perfect_match(self):
        _, truth = generate_phantom(PhantomSpec())
        scores = dice_scores(truth, truth)
        assert set(scores) == {1, 2, 3}
        for label, (matched, value) in scores.items():
            assert matched == label
            assert value == 1.0

    def test_disjoint_regions_zero(self):
        a = LabelMap(4, 1, np.array([[1, 1, 0, 0]]))
        b = LabelMap(4, 1, np.array([[0, 0, 1, 1]]))
        assert dice_scores(a, b) == {1: (None, 0.0)}

    def test_greedy_matching_consumes_predictions(self):
        truth = LabelMap(6, 1, np.array([[1, 1, 1, 2, 2, 2]]))
        pred = LabelMap(6, 1, np.array([[1, 1, 1, 1, 1, 2]]))
        scores = dice_scores(pred, truth)
        assert scores[1] == (1, pytest.approx(6.0 / 8.0))
        # Pred 1 is consumed by truth 1, so truth 2 falls back to pred 2.
        assert scores[2] == (2, pytest.approx(2.0 / 4.0))

    def test_hand_value(self):
        truth = LabelMap(4, 1, np.array([[1, 1, 1, 0]]))
        pred = LabelMap(4, 1, np.array([[0, 1, 1, 1]]))
        assert dice_scores(pred, truth)[1] == (1, pytest.approx(4.0 / 6.0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dice_scores(
                LabelMap(2, 1, np.array([[1, 1]])), LabelMap(3, 1, np.array([[1, 1, 1]]))
            )


class TestOverlayAndBoundary:
    def test_boundary_oracle_small(self):
        labels = np.array([[1, 1, 2], [1, 1, 2], [3, 3, 3]])
        expected = np.array(
            [[False, True, True], [True, True, True], [True, True, True]]
        )
        assert np.array_equal(boundary_mask(labels), expected)

    def test_single_region_no_boundary(self):
        assert not boundary_mask(np.ones((5, 5), dtype=int)).any()

    def test_overlay_writes_png(self, tmp_path):
        img, truth = generate_phantom(SMALL_SPEC)
        path = tmp_path / "out.png"
        overlay(img, truth, path)
        with Image.open(path) as im:
            assert im.size == (48, 48)
            assert im.mode == "RGB"

    def test_overlay_colors_only_boundaries(self, tmp_path):
        img, truth = generate_phantom(SMALL_SPEC)
        path = tmp_path / "out.png"
        overlay(img, truth, path)
        with Image.open(path) as im:
            rgb = np.asarray(im)
        colored = (rgb.max(axis=2) != rgb.min(axis=2))
        assert np.array_equal(colored, boundary_mask(truth.labels))


class TestCrop:
    def test_basic(self):
        img, _ = generate_phantom(SMALL_SPEC)
        sub = crop_image(img, (4, 6, 10, 8))
        assert (sub.width, sub.height) == (10, 8)
        assert np.array_equal(sub.data, img.data[6:14, 4:14])

    def test_out_of_bounds(self):
        img, _ = generate_phantom(SMALL_SPEC)
        for rect in ((-1, 0, 4, 4), (0, 0, 49, 4), (46, 46, 4, 4), (0, 0, 0, 4)):
            with pytest.raises(ValueError):
                crop_image(img, rect)


FAST_NCUT = {"ncut.max_regions": "4", "ncut.min_region": "32"}


def fast_params(**kw):
    return PipelineParams(ncut=NcutParams(max_regions=4, min_region=32), **kw)


class TestRunPipeline:
    def test_stage_snapshots_and_timings(self):
        img, _ = generate_phantom(SMALL_SPEC)
        result = run_pipeline(img, fast_params(), keep_stages=True)
        assert set(result.stages) == {"homomorphic", "diffusion", "frac_gradient"}
        assert set(result.timings) == {
            "homomorphic",
            "diffusion",
            "frac_gradient",
            "ncut",
        }
        assert all(t >= 0 for t in result.timings.values())
        assert result.labels.labels.shape == (48, 48)

    def test_all_disabled_equals_plain_ncut(self):
        img, _ = generate_phantom(SMALL_SPEC)
        p = fast_params(
            enable_homomorphic=False, enable_diffusion=False, enable_frac=False
        )
        result = run_pipeline(img, p)
        direct = recursive_ncut(img, p.ncut)
        assert np.array_equal(result.labels.labels, direct.labels)

    def test_raw_input_is_normalized_first(self):
        img, _ = generate_phantom(SMALL_SPEC)
        raw = GrayImage(img.width, img.height, img.data * 255.0)
        p = fast_params(
            enable_homomorphic=False, enable_diffusion=False, enable_frac=False
        )
        result = run_pipeline(raw, p, keep_stages=True)
        assert "normalize" in result.stages
        assert result.stages["normalize"].value_range == NORMALIZED

    def test_crop_stage_applied(self):
        img, _ = generate_phantom(SMALL_SPEC)
        p = dataclasses.replace(fast_params(), crop=(0, 0, 32, 32))
        result = run_pipeline(img, p)
        assert result.labels.labels.shape == (32, 32)

    def test_bad_crop_reports_stage(self):
        img, _ = generate_phantom(SMALL_SPEC)
        p = dataclasses.replace(fast_params(), crop=(0, 0, 999, 999))
        with pytest.raises(PipelineError) as err:
            run_pipeline(img, p)
        assert err.value.stage == "crop"

    def test_accepted_ncuts_below_threshold(self):
        img, _ = generate_phantom(SMALL_SPEC)
        result = run_pipeline(img, fast_params())
        assert all(v <= fast_params().ncut.ncut_threshold for v in result.region_ncuts)


def write_config(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestConfig:
    def test_full_round_trip(self, tmp_path):
        path = write_config(
            tmp_path / "p.cfg",
            [
                "# pipeline settings",
                "homomorphic.gamma_high = 2.5",
                "diffusion.dt = 0.2  # inline comment",
                "diffusion.iterations = 10",
                "frac.order_v = 0.7",
                "ncut.ncut_threshold = 0.05",
                "ncut.max_regions = 4",
                "pipeline.enable_frac = off",
                "pipeline.crop = 2,3,20,21",
            ],
        )
        p = load_pipeline_config(path)
        assert p.homomorphic.gamma_high == 2.5
        assert p.diffusion.dt == 0.2
        assert p.diffusion.iterations == 10
        assert p.frac.order_v == 0.7
        assert p.ncut.ncut_threshold == 0.05
        assert p.ncut.max_regions == 4
        assert p.enable_frac is False
        assert p.enable_homomorphic is True
        assert p.crop == (2, 3, 20, 21)

    def test_defaults_from_empty_file(self, tmp_path):
        p = load_pipeline_config(write_config(tmp_path / "p.cfg", [""]))
        assert p == PipelineParams()

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path / "p.cfg", ["ncut.sigma_q = 1.0"])
        with pytest.raises(ConfigError):
            load_pipeline_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = write_config(tmp_path / "p.cfg", ["wavelet.levels = 3"])
        with pytest.raises(ConfigError):
            load_pipeline_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_config(
            tmp_path / "p.cfg", ["diffusion.dt = 0.1", "diffusion.dt = 0.2"]
        )
        with pytest.raises(ConfigError):
            load_pipeline_config(path)

    def test_bad_boolean_rejected(self, tmp_path):
        path = write_config(tmp_path / "p.cfg", ["pipeline.enable_frac = maybe"])
        with pytest.raises(ConfigError):
            load_pipeline_config(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = write_config(tmp_path / "p.cfg", ["diffusion.dt 0.1"])
        with pytest.raises(ConfigError):
            load_pipeline_config(path)

    def test_invalid_value_propagates(self, tmp_path):
        path = write_config(tmp_path / "p.cfg", ["diffusion.dt = 0.9"])
        with pytest.raises(ValueError):
            load_pipeline_config(path)

    def test_phantom_spec_load_and_seed_override(self, tmp_path):
        path = write_config(
            tmp_path / "ph.cfg",
            [
                "phantom.size = 64",
                "phantom.background_level = 0.6",
                "phantom.nodule_center = 20,20",
                "phantom.nodule_axes = 10,8",
                "phantom.trachea_center = 46,46",
                "phantom.trachea_radius = 8",
                "phantom.seed = 5",
            ],
        )
        spec = load_phantom_spec(path)
        assert spec.size == 64 and spec.seed == 5
        assert spec.nodule_center == (20.0, 20.0)
        assert load_phantom_spec(path, seed=9).seed == 9


class TestCli:
    def make_phantom_files(self, tmp_path):
        out = str(tmp_path / "img.pgm")
        truth = str(tmp_path / "truth.pgm")
        assert main(["phantom", "--out", out, "--truth", truth]) == 0
        return out, truth

    def test_phantom_and_eval_round_trip(self, tmp_path, capsys):
        out, truth = self.make_phantom_files(tmp_path)
        capsys.readouterr()
        assert main(["eval", "--pred", truth, "--truth", truth]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines == ["1 1 1.000000", "2 2 1.000000", "3 3 1.000000"]

    def test_run_otsu(self, tmp_path, capsys):
        out, _ = self.make_phantom_files(tmp_path)
        labels = str(tmp_path / "labels.pgm")
        assert main(["run", "--input", out, "--method", "otsu", "--labels", labels]) == 0
        assert "regions 2" in capsys.readouterr().out
        saved = load_pgm(labels)
        assert set(np.unique(saved.data)) <= {1.0, 2.0}

    def test_run_edge_writes_binary(self, tmp_path):
        out, _ = self.make_phantom_files(tmp_path)
        labels = str(tmp_path / "edges.pgm")
        assert (
            main(["run", "--input", out, "--method", "edge:sobel", "--labels", labels])
            == 0
        )
        saved = load_pgm(labels)
        assert set(np.unique(saved.data)) <= {0.0, 255.0}

    def test_run_ncut_with_config_and_overlay(self, tmp_path, capsys):
        img, _ = generate_phantom(SMALL_SPEC)
        pgm = str(tmp_path / "small.pgm")
        save_pgm(img, pgm)
        cfg = write_config(
            tmp_path / "p.cfg",
            [f"{k} = {v}" for k, v in FAST_NCUT.items()],
        )
        labels = str(tmp_path / "labels.pgm")
        png = str(tmp_path / "seg.png")
        code = main(
            [
                "run",
                "--input",
                pgm,
                "--config",
                cfg,
                "--labels",
                labels,
                "--overlay",
                png,
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "regions" in out
        assert load_pgm(labels).data.shape == (48, 48)
        with Image.open(png) as im:
            assert im.size == (48, 48)

    def test_hist_output(self, tmp_path, capsys):
        out, _ = self.make_phantom_files(tmp_path)
        capsys.readouterr()
        assert main(["hist", "--input", out]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 256
        total = sum(int(line.split()[1]) for line in lines)
        assert total == 128 * 128

    def test_missing_input_reports_error(self, tmp_path, capsys):
        code = main(["run", "--input", str(tmp_path / "nope.pgm")])
        assert code == 1
        assert "error in input" in capsys.readouterr().err

    def test_bad_config_reports_error(self, tmp_path, capsys):
        out, _ = self.make_phantom_files(tmp_path)
        cfg = write_config(tmp_path / "p.cfg", ["bogus.key = 1"])
        code = main(["run", "--input", out, "--config", cfg])
        assert code == 1
        assert "error in config" in capsys.readouterr().err

    def test_bad_crop_reports_error(self, tmp_path, capsys):
        out, _ = self.make_phantom_files(tmp_path)
        code = main(["run", "--input", out, "--crop", "1,2,3"])
        assert code == 1
        assert "error in arguments" in capsys.readouterr().err

    def test_unknown_method_reports_error(self, tmp_path, capsys):
        out, _ = self.make_phantom_files(tmp_path)
        code = main(["run", "--input", out, "--method", "kmeans"])
        assert code == 1
        assert "error in arguments" in capsys.readouterr().err
