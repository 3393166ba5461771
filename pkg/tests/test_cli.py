"""Command-line entry points, exercised in-process via main()."""

import json

import pytest

from radarprune import dataset as ds
from radarprune.cli import build_parser, main
from radarprune.experiment import ExperimentSpec
from radarprune.schedules import ScheduleConfig
from radarprune.surgery import read_reports_csv
from radarprune.train import TrainConfig


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = ExperimentSpec(
        seed=0,
        out_dir=str(root / "run"),
        dataset=ds.DatasetConfig(per_class=4, seed=0),
        train=TrainConfig(epochs=1, seed=0),
        schedule=ScheduleConfig(retrain_epochs_low=1, retrain_epochs_high=1, eval_each_step=False),
        metrics=("l1",),
        strategies=("one-shot",),
        pruning_percentages=(50.0,),
    )
    config = root / "config.json"
    config.write_text(spec.to_json())
    return root, config, spec


class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([])
        assert exc.value.code == 2

    def test_invalid_metric_rejected(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["saliency", "--metric", "l2"])
        assert exc.value.code == 2

    def test_invalid_strategy_rejected(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(
                ["prune", "--metric", "l1", "--strategy", "setup-c", "--percent", "10"]
            )
        assert exc.value.code == 2

    def test_strategy_aliases_accepted(self):
        args = build_parser().parse_args(
            ["prune", "--metric", "l1", "--strategy", "setup-a", "--percent", "10"]
        )
        assert args.strategy == "setup-a"
        assert args.percent == 10.0

    def test_export_pgm_default_constant(self):
        args = build_parser().parse_args(["generate", "--export-pgm"])
        assert args.export_pgm == 8
        args = build_parser().parse_args(["generate", "--export-pgm", "3"])
        assert args.export_pgm == 3
        args = build_parser().parse_args(["generate"])
        assert args.export_pgm is None


class TestCommands:
    def test_generate(self, workdir, capsys):
        root, config, spec = workdir
        assert main(["generate", "--config", str(config), "--export-pgm", "2"]) == 0
        out = capsys.readouterr().out
        assert "dataset written" in out
        for name in ds.SPLIT_NAMES:
            split_dir = spec.paths()["dataset"] / name
            assert (split_dir / "index.json").exists()
            assert len(list((split_dir / "pgm").glob("*.pgm"))) == 2

    def test_train(self, workdir, capsys):
        root, config, spec = workdir
        assert main(["train", "--config", str(config)]) == 0
        assert "baseline test accuracy" in capsys.readouterr().out
        assert spec.paths()["baseline_model"].exists()

    def test_saliency(self, workdir, capsys):
        root, config, spec = workdir
        assert main(["saliency", "--config", str(config), "--metric", "l1"]) == 0
        assert "saliency table" in capsys.readouterr().out
        assert (spec.paths()["out"] / "saliency_l1.csv").exists()

    def test_prune_single_cell(self, workdir, capsys):
        root, config, spec = workdir
        code = main(
            [
                "prune",
                "--config",
                str(config),
                "--metric",
                "l1",
                "--strategy",
                "one-shot",
                "--percent",
                "50",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "l1/one-shot p=50" in out
        assert "speedup" in out
        assert (spec.paths()["traces"] / "l1_one-shot_p50.json").exists()

    def test_prune_failure_exits_nonzero(self, workdir, capsys):
        root, config, spec = workdir
        code = main(
            [
                "prune",
                "--config",
                str(config),
                "--metric",
                "l1",
                "--strategy",
                "one-shot",
                "--percent",
                "100",
            ]
        )
        assert code == 1
        assert "cell failed" in capsys.readouterr().err

    def test_matrix_and_report(self, workdir, capsys):
        root, config, spec = workdir
        assert main(["matrix", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "1 cells succeeded, 0 failed" in out
        rows = read_reports_csv(spec.paths()["matrix_csv"])
        assert len(rows) == 1
        assert main(["report", "--config", str(config)]) == 0
        table = capsys.readouterr().out
        assert "baseline" in table
        assert "l1/one-shot" in table

    def test_report_without_results(self, tmp_path, capsys):
        code = main(["report", "--out", str(tmp_path / "nothing")])
        assert code == 1
        assert "no results" in capsys.readouterr().err

    def test_seed_override_propagates(self, workdir, tmp_path):
        root, config, spec = workdir
        out = tmp_path / "seeded"
        assert (
            main(
                [
                    "generate",
                    "--config",
                    str(config),
                    "--out",
                    str(out),
                    "--seed",
                    "9",
                ]
            )
            == 0
        )
        index = json.loads((out / "dataset" / "train" / "index.json").read_text())
        assert all(row["seed"][0] == 9 for row in index)
