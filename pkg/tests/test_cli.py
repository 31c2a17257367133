import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from emit_mimo import __version__
from emit_mimo.cli import cli
from emit_mimo.data.exporters import write_pgm


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def image_file(tmp_path):
    image = (np.arange(256).reshape(16, 16) % 256).astype(np.uint8)
    return write_pgm(image, tmp_path / "tiny.pgm")


class TestInformational:
    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_info(self, runner):
        result = runner.invoke(cli, ["info"])
        assert result.exit_code == 0
        assert "System Information" in result.output

    def test_list_commands(self, runner):
        result = runner.invoke(cli, ["list-commands"])
        assert result.exit_code == 0
        assert "transmit" in result.output


def _scenario_args(scenario, out, *extra):
    return ["--scenario", str(scenario), "--out", str(out), *extra]


class TestValidate:
    def test_valid(self, runner, small_scenario_file):
        result = runner.invoke(cli, ["validate", str(small_scenario_file)])
        assert result.exit_code == 0
        assert "Scenario validation passed" in result.output

    def test_invalid_scenario_exits_2(self, runner, tmp_path, small_scenario_file):
        path = tmp_path / "bad.yaml"
        text = small_scenario_file.read_text(encoding="utf-8") + "colour: blue\n"
        path.write_text(text, encoding="utf-8")
        assert runner.invoke(cli, ["validate", str(path)]).exit_code == 2

    def test_missing_scenario_exits_3(self, runner, tmp_path):
        result = runner.invoke(cli, ["validate", str(tmp_path / "none.yaml")])
        assert result.exit_code == 3


class TestComputeCommands:
    def test_fieldmap(self, runner, small_scenario_file, tmp_path):
        out = tmp_path / "out"
        args = _scenario_args(small_scenario_file, out, "fieldmap")
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        assert "Solve time" in result.output
        table = pd.read_csv(out / "fieldmap.csv")
        assert len(table) == 121
        assert table["abs_norm"].isna().sum() == 2
        header = b"P5\n11 11\n255\n"
        assert (out / "fieldmap.pgm").read_bytes().startswith(header)

    def test_fieldmap_needs_scenario(self, runner, tmp_path):
        assert runner.invoke(cli, ["--out", str(tmp_path), "fieldmap"]).exit_code == 2

    def test_modes(self, runner, small_scenario_file, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(cli, _scenario_args(small_scenario_file, out, "modes"))
        assert result.exit_code == 0, result.output
        spectrum = pd.read_csv(out / "modes.csv")
        assert list(spectrum.columns) == [
            "index",
            "sigma",
            "sigma_norm",
            "rx_energy_rel",
        ]
        assert np.isclose(spectrum["sigma_norm"].sum(), 1.0)
        summary = pd.read_csv(out / "modes_summary.csv")
        assert 1.0 <= summary.loc[0, "c_eff"] <= 3.0
        assert (out / "crosstalk.csv").exists()
        assert (out / "mode_1.pgm").exists()

    def test_modes_without_maps(self, runner, small_scenario_file, tmp_path):
        out = tmp_path / "out"
        args = _scenario_args(small_scenario_file, out, "modes", "--no-maps")
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        assert not (out / "mode_1.csv").exists()

    def test_ill_conditioned_exits_4(self, runner, small_scenario_file, tmp_path):
        config_file = tmp_path / "strict.json"
        config_file.write_text(json.dumps({"cond_limit": 1.0}), encoding="utf-8")
        args = ["--config-file", str(config_file)]
        args += _scenario_args(small_scenario_file, tmp_path, "fieldmap")
        assert runner.invoke(cli, args).exit_code == 4

    def test_bad_config_file_exits_2(self, runner, tmp_path):
        config_file = tmp_path / "settings.txt"
        config_file.write_text("cond_limit = 1", encoding="utf-8")
        result = runner.invoke(cli, ["--config-file", str(config_file), "info"])
        assert result.exit_code == 2

    def test_sweep(self, runner, tmp_path):
        result = runner.invoke(
            cli,
            [
                "--out",
                str(tmp_path),
                "sweep",
                "distance",
                "--value",
                "2",
                "--value",
                "8",
                "--sources-per-side",
                "4",
                "--aperture-lambda",
                "2",
            ],
        )
        assert result.exit_code == 0, result.output
        table = pd.read_csv(tmp_path / "sweep_distance.csv")
        assert table["x"].tolist() == [2.0, 8.0]
        assert table["c_eff"].iloc[0] > table["c_eff"].iloc[1]

    def test_sweep_family(self, runner, tmp_path):
        args = ["--out", str(tmp_path), "sweep", "aperture", "--value", "2"]
        args += ["--value", "3", "--sources-per-side", "4"]
        args += ["--distance-lambda", "5", "--distance-lambda", "10"]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        table = pd.read_csv(tmp_path / "sweep_aperture.csv")
        assert list(table.columns) == ["x", "c_eff_d5", "c_eff_d10"]


class TestTransmit:
    def _run(self, runner, scenario, out, *extra):
        return runner.invoke(cli, _scenario_args(scenario, out, *extra))

    def test_deterministic(self, runner, small_scenario_file, image_file, tmp_path):
        extra = ("--seed", "42", "transmit", "--image", str(image_file))
        first = self._run(runner, small_scenario_file, tmp_path / "a", *extra)
        second = self._run(runner, small_scenario_file, tmp_path / "b", *extra)
        assert first.exit_code == 0, first.output
        assert second.exit_code == 0, second.output
        received_a = (tmp_path / "a" / "received.pgm").read_bytes()
        assert received_a == (tmp_path / "b" / "received.pgm").read_bytes()
        metrics = pd.read_csv(tmp_path / "a" / "transmit_metrics.csv")
        assert metrics.loc[0, "seed"] == 42
        assert metrics.loc[0, "n_bits"] == 16 * 16 * 8

    def test_bad_image_exits_3(self, runner, small_scenario_file, tmp_path):
        missing = str(tmp_path / "nope.pgm")
        result = self._run(
            runner, small_scenario_file, tmp_path, "transmit", "--image", missing
        )
        assert result.exit_code == 3

    def test_unknown_scheme_exits_2(
        self, runner, small_scenario_file, image_file, tmp_path
    ):
        extra = ("transmit", "--image", str(image_file), "--scheme", "best")
        result = self._run(runner, small_scenario_file, tmp_path, *extra)
        assert result.exit_code == 2

    def test_compare(self, runner, small_scenario_file, image_file, tmp_path):
        extra = ("transmit", "--image", str(image_file))
        extra += ("--compare", "2", "--combining", "mrc")
        result = self._run(runner, small_scenario_file, tmp_path, *extra)
        assert result.exit_code == 0, result.output
        table = pd.read_csv(tmp_path / "scheme_comparison.csv")
        assert len(table) == 6
        assert table["seed"].unique().tolist() == [7, 8]


@pytest.mark.slow
def test_oracle_regenerate(runner, small_scenario_file, tmp_path):
    golden = tmp_path / "golden"
    args = ["--out", str(tmp_path), "oracle", "regenerate", str(small_scenario_file)]
    result = runner.invoke(cli, args + ["--golden-dir", str(golden)])
    assert result.exit_code == 0, result.output
    for name in (
        "specfun",
        "allocation_discrepancy",
        "boundary_residuals",
        "oracle_reports",
    ):
        assert (golden / f"{name}.csv").exists()
    reports = pd.read_csv(golden / "oracle_reports.csv")
    assert reports["passed"].all()
