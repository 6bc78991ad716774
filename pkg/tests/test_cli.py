import pytest

from app.cli import build_parser, build_run_config, main, read_config_file
from app.config.settings import Settings
from app.models.run_config import ConfigError, TuningMode
from app.models.simulation import DgpVariant

SIMULATE = ["simulate", "--dgp", "DGP3", "--cells", "40:10", "--reps", "2", "--folds", "5", "--grid-size", "10"]


def test_simulate_writes_identical_files(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(SIMULATE + ["--out", str(first)]) == 0
    assert main(SIMULATE + ["--out", str(second)]) == 0
    summary = (first / "simulation_summary.csv").read_bytes()
    assert summary == (second / "simulation_summary.csv").read_bytes()
    assert summary.decode().count("\n") == 4


def test_simulate_dump_sample(tmp_path):
    assert main(SIMULATE + ["--out", str(tmp_path), "--reps", "1", "--dump-sample"]) == 0
    assert (tmp_path / "sample.csv").exists()
    assert (tmp_path / "sample_truth.csv").exists()


def test_eigen_study(tmp_path):
    code = main(
        [
            "eigen-study", "--n", "100", "--s-values", "2", "4", "--reps", "2",
            "--expected-d-s", "2", "--expected-d-reps", "3", "--p-values", "1", "3",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    for name in ("eigen_study.csv", "expected_d_summary.csv", "expected_d_matrix.csv", "deviation_bound.csv"):
        assert (tmp_path / name).exists()


def test_forecast(tmp_path, planted_csv):
    code = main(
        [
            "forecast", "--data", str(planted_csv), "--target", "TARGET", "--windows", "5",
            "--methods", "RWwD", "--transforms", "NT", "--out", str(tmp_path),
        ]
    )
    assert code == 0
    for name in (
        "forecast_records.csv",
        "forecast_summary.csv",
        "selection_frequency.csv",
        "active_counts.csv",
        "scale_summary.csv",
    ):
        assert (tmp_path / name).exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--dgp", "DGP1", "--cells", "40"],
        ["simulate", "--dgp", "DGP7", "--cells", "40:10"],
        ["simulate", "--dgp", "DGP3", "--cells", "40:10:5"],
        ["simulate", "--dgp", "DGP1", "--cells", "40:4:20", "--reps", "1"],
        ["eigen-study", "--n", "10", "--s-values", "20"],
        ["forecast", "--target", "X"],
    ],
)
def test_configuration_errors_exit_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_forecast_unknown_target_exits_2(tmp_path, planted_csv):
    assert main(["forecast", "--data", str(planted_csv), "--target", "NOPE", "--out", str(tmp_path)]) == 2


def test_unreadable_data_exits_1(tmp_path):
    assert main(["forecast", "--data", str(tmp_path / "none.csv"), "--target", "X", "--out", str(tmp_path)]) == 1


class TestConfigLayering:
    def test_file_values_and_flag_override(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# pilot run\ndgp = DGP4\ncells = 40:10, 80:10\nreps = 7\nreplications = 5\ntuning = calibrated\n",
            encoding="utf-8",
        )
        with pytest.raises(ConfigError):
            read_config_file(path)

        path.write_text(
            "# pilot run\ndgp = DGP4\ncells = 40:10, 80:10\nreplications = 5\ntuning = calibrated\n",
            encoding="utf-8",
        )
        args = build_parser().parse_args(["simulate", "--config", str(path), "--reps", "3"])
        cfg = build_run_config(args, Settings())
        assert cfg.dgp == DgpVariant.DGP4
        assert [cell.label for cell in cfg.cells] == ["40:10:0", "80:10:0"]
        assert cfg.replications == 3
        assert cfg.tuning == TuningMode.CALIBRATED

    def test_settings_supply_defaults(self):
        args = build_parser().parse_args(["simulate", "--cells", "40:10:20"])
        cfg = build_run_config(args, Settings())
        assert cfg.dgp == DgpVariant.DGP1
        assert cfg.folds == Settings().tuning.folds
        assert cfg.seed == Settings().simulation.seed

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("cells 40:10\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            read_config_file(path)
