"""Tests for the experiment harness and the command-line interface."""

import dataclasses
import json

import numpy as np
import pytest

from poisson_cs.cli import main
from poisson_cs.errors import InvalidParamError
from poisson_cs.experiments import (
    ExperimentSpec,
    default_grid,
    make_sparse_signal,
    make_test_image,
    run_image_recon,
    run_sweep,
    run_verify_stats,
    sweep_csv_rows,
    write_sweep_csv,
)
from poisson_cs.transforms import read_pgm, write_pgm


def tiny_sweep_spec(**over):
    fields = dict(
        kind="intensity",
        grid={"intensity": [1e4, 1e6]},
        trials=3,
        master_seed=7,
        solver="P4",
        lambda_points=4,
        dim=40,
        n_measurements=20,
        sparsity=3,
        max_iters=400,
    )
    fields.update(over)
    return ExperimentSpec(**fields)


class TestSignalGenerator:
    def test_shape_and_intensity(self):
        rng = np.random.default_rng(0)
        x = make_sparse_signal(50, 5, 1e6, rng)
        assert np.count_nonzero(x) == 5
        assert x.sum() == pytest.approx(1e6)
        assert np.all(x >= 0)

    def test_magnitude_spread(self):
        rng = np.random.default_rng(1)
        x = make_sparse_signal(50, 10, 10.0, rng)
        nz = x[x > 0]
        assert nz.max() / nz.min() <= 3.0  # uniform(0.5, 1.5) ratio bound

    def test_sparsity_validated(self):
        rng = np.random.default_rng(2)
        with pytest.raises(InvalidParamError):
            make_sparse_signal(5, 9, 1.0, rng)


class TestSpec:
    def test_defaults_fill_grid(self):
        spec = ExperimentSpec(kind="sparsity", grid={})
        assert spec.grid == default_grid("sparsity")

    def test_paper_scale_grids_are_larger(self):
        for kind in ("intensity", "measurements", "sparsity", "verify-stats", "image"):
            desk = default_grid(kind, paper_scale=False)
            paper = default_grid(kind, paper_scale=True)
            key = next(iter(desk))
            assert len(paper[key]) > len(desk[key])

    def test_validation(self):
        with pytest.raises(InvalidParamError):
            ExperimentSpec(kind="intensity", trials=0)
        with pytest.raises(InvalidParamError):
            ExperimentSpec(kind="intensity", solver="P9")
        with pytest.raises(InvalidParamError):
            ExperimentSpec(kind="intensity", lambda_mode="fixed")


class TestRunSweep:
    def test_manifest_structure(self):
        man = run_sweep(tiny_sweep_spec())
        assert len(man.cells) == 2
        for cell in man.cells:
            assert cell["trials"] == 3
            assert len(cell["trial_records"]) == 3
            q = cell["rrmse"]
            assert q["min"] <= q["q25"] <= q["median"] <= q["q75"] <= q["max"]

    def test_determinism(self, tmp_path):
        a = run_sweep(tiny_sweep_spec())
        b = run_sweep(tiny_sweep_spec())
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_sweep_csv(a, pa)
        write_sweep_csv(b, pb)
        assert pa.read_bytes() == pb.read_bytes()
        # Manifests agree on everything except the wall-clock field.
        da, db = dataclasses.asdict(a), dataclasses.asdict(b)
        da.pop("wall_clock_s")
        db.pop("wall_clock_s")
        assert da == db

    def test_seed_changes_results(self):
        a = run_sweep(tiny_sweep_spec())
        b = run_sweep(tiny_sweep_spec(master_seed=8))
        assert sweep_csv_rows(a) != sweep_csv_rows(b)

    def test_worker_pool_matches_serial(self, tmp_path):
        serial = run_sweep(tiny_sweep_spec(trials=2))
        pooled = run_sweep(tiny_sweep_spec(trials=2, workers=2))
        pa, pb = tmp_path / "s.csv", tmp_path / "p.csv"
        write_sweep_csv(serial, pa)
        write_sweep_csv(pooled, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_p2_records_constraint_fields(self):
        man = run_sweep(tiny_sweep_spec(solver="P2", trials=2))
        rec = man.cells[0]["trial_records"][0]
        assert rec["constraint_residual"] is not None
        assert "epsilon" in rec

    def test_fixed_lambda_mode(self):
        man = run_sweep(
            tiny_sweep_spec(lambda_mode="fixed", lambda_value=1e-3, trials=2)
        )
        for cell in man.cells:
            for rec in cell["trial_records"]:
                assert rec["lambda_used"] == 1e-3

    def test_p2_percentile_epsilon_mode(self):
        man = run_sweep(
            tiny_sweep_spec(solver="P2", epsilon_mode="percentile", trials=2)
        )
        for cell in man.cells:
            for rec in cell["trial_records"]:
                # Pilot-estimated radius: positive and O(sqrt(N)).
                assert 0.0 < rec["epsilon"] < 10.0 * np.sqrt(20)
                assert rec["rrmse"] < 1.0


class TestVerifyStats:
    def test_report_fields_and_bounds(self):
        spec = ExperimentSpec(
            kind="verify-stats",
            grid={"n_measurements": [30, 60], "intensity": [1e3, 1e5]},
            trials=200,
            master_seed=3,
        )
        report = run_verify_stats(spec)
        assert len(report["cells"]) == 4
        for cell in report["cells"]:
            assert cell["m"] == 2 * cell["N"]
            assert cell["mean"] <= cell["bounds"]["mean_bound"]
            assert cell["p99"] > cell["mean"]
            assert isinstance(cell["ks_pass"], bool)
            assert cell["bounds"]["s_min"] > 0

    def test_mean_scales_like_sqrt_n(self):
        spec = ExperimentSpec(
            kind="verify-stats",
            grid={"n_measurements": [25, 50, 100, 200], "intensity": [1e6]},
            trials=400,
            master_seed=4,
        )
        cells = run_verify_stats(spec)["cells"]
        slope = np.polyfit(
            np.log([c["N"] for c in cells]), np.log([c["mean"] for c in cells]), 1
        )[0]
        assert 0.40 <= slope <= 0.55


class TestImageRecon:
    def test_small_run(self, tmp_path):
        img = make_test_image(16, 16)
        src = tmp_path / "img.pgm"
        write_pgm(src, img)
        spec = ExperimentSpec(
            kind="image",
            grid={"intensity": [1e6]},
            solver="P4",
            n_measurements=20,
            patch=7,
            stride=3,
            image_size=16,
            master_seed=1,
            lambda_points=4,
            max_iters=1000,
        )
        report = run_image_recon(spec, src, tmp_path / "out")
        cell = report["cells"][0]
        assert cell["n_patches"] == 16  # range(0, 10, 3) twice
        assert 0.0 <= cell["rrmse"] < 0.5
        recon = read_pgm(cell["out_image"])
        assert recon.shape == (16, 16)

    def test_zero_image_rejected(self, tmp_path):
        src = tmp_path / "zero.pgm"
        write_pgm(src, np.zeros((16, 16)))
        spec = ExperimentSpec(kind="image", grid={"intensity": [1e4]}, image_size=16)
        with pytest.raises(InvalidParamError):
            run_image_recon(spec, src, tmp_path / "out")

    def test_worker_pool_matches_serial(self, tmp_path):
        img = make_test_image(16, 16)
        src = tmp_path / "img.pgm"
        write_pgm(src, img)
        fields = dict(
            kind="image", grid={"intensity": [1e5]}, solver="P4",
            n_measurements=20, patch=7, stride=4, image_size=16,
            master_seed=2, lambda_points=3, max_iters=300,
        )
        serial = run_image_recon(ExperimentSpec(**fields), src, tmp_path / "s")
        pooled = run_image_recon(ExperimentSpec(**fields, workers=2), src, tmp_path / "p")
        assert serial["cells"][0]["rrmse"] == pooled["cells"][0]["rrmse"]


class TestMakeTestImage:
    def test_deterministic_and_bounded(self):
        a = make_test_image(64, 64)
        b = make_test_image(64, 64)
        assert np.array_equal(a, b)
        assert a.min() >= 0.0 and a.max() <= 255.0
        assert a.std() > 20.0  # actual structure, not a flat field


class TestCli:
    def test_sweep_subcommand(self, tmp_path, capsys):
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({
            "grid": {"intensity": [1e4, 1e6]},
            "trials": 2,
            "solver": "P4",
            "lambda_points": 4,
            "dim": 40,
            "n_measurements": 20,
            "sparsity": 3,
            "max_iters": 400,
        }))
        out = tmp_path / "results"
        code = main(["sweep", "--kind", "intensity", "--config", str(cfg),
                     "--out", str(out), "--seed", "5"])
        assert code == 0
        csv_text = (out / "sweep_intensity.csv").read_text()
        assert csv_text.startswith("kind,solver,m,N,s,intensity,trials,")
        assert len(csv_text.strip().splitlines()) == 3
        manifest = json.loads((out / "manifest_intensity.json").read_text())
        assert manifest["master_seed"] == 5
        assert len(manifest["cells"]) == 2

    def test_sweep_determinism_end_to_end(self, tmp_path):
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({
            "grid": {"intensity": [1e5]},
            "trials": 2,
            "solver": "P2",
            "dim": 40,
            "n_measurements": 20,
            "sparsity": 3,
            "max_iters": 400,
        }))
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["sweep", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "sweep_intensity.csv").read_bytes() == \
            (out2 / "sweep_intensity.csv").read_bytes()

    def test_verify_stats_subcommand(self, tmp_path):
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({
            "grid": {"n_measurements": [30], "intensity": [1e4]},
            "trials": 100,
        }))
        out = tmp_path / "results"
        code = main(["verify-stats", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        report = json.loads((out / "verify_stats.json").read_text())
        assert report["cells"][0]["N"] == 30
        assert "mean_bound" in report["cells"][0]["bounds"]

    def test_image_subcommand(self, tmp_path):
        src = tmp_path / "img.pgm"
        write_pgm(src, make_test_image(16, 16))
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({
            "grid": {"intensity": [1e6]},
            "n_measurements": 20,
            "stride": 3,
            "image_size": 16,
            "lambda_points": 4,
            "max_iters": 1000,
        }))
        out = tmp_path / "results"
        code = main(["image", "--input", str(src), "--config", str(cfg),
                     "--out", str(out)])
        assert code == 0
        report = json.loads((out / "image_recon.json").read_text())
        assert report["cells"][0]["rrmse"] < 0.5

    def test_unconverged_exit_code_two(self, tmp_path):
        # One iteration cannot converge; results must still be written.
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({
            "grid": {"intensity": [1e4]},
            "trials": 1,
            "solver": "P4",
            "lambda_points": 2,
            "dim": 40,
            "n_measurements": 20,
            "sparsity": 3,
            "max_iters": 1,
        }))
        out = tmp_path / "results"
        code = main(["sweep", "--config", str(cfg), "--out", str(out)])
        assert code == 2
        assert (out / "sweep_intensity.csv").exists()
