import os

import pytest

from app.main import build_parser, list_presets, main
from core.pipelines.pipeline_types import PresetRegistry
from schema import PresetName


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 10
    assert lines[0].startswith("solve ")


def test_list_presets_aligns_descriptions():
    width = max(len(preset.value) for preset in PresetName)
    for line, preset in zip(list_presets(), PresetName):
        assert line[:width].rstrip() == preset.value
        artifacts = ", ".join(PresetRegistry.get_artifacts(preset))
        assert line[width + 2:] == f"{PresetRegistry.describe(preset)}  [{artifacts}]"


def test_every_preset_is_a_subcommand():
    parser = build_parser()
    for preset in PresetName:
        args = parser.parse_args([preset.value, "--config", "x.cfg", "--seed", "4"])
        assert args.command == preset.value
        assert args.seed == 4


def test_config_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["solve"])


def test_preset_run_through_cli(analytic_config, isolated_output, capsys):
    assert main(["ls-audit", "--config", analytic_config]) == 0
    out = capsys.readouterr().out
    assert "[PASS] ls_lower" in out
    assert os.path.exists(isolated_output / "ls-audit" / "ls_report.csv")


def test_run_command_uses_configured_preset(analytic_config, isolated_output, tmp_path):
    out = tmp_path / "chosen"
    assert main(["run", "--config", analytic_config, "--out", str(out)]) == 0
    assert (out / "ls_report.csv").exists()


def test_subcommand_overrides_configured_preset(analytic_config, isolated_output):
    assert main(["exponent-report", "--config", analytic_config]) == 1
    assert (isolated_output / "exponent-report" / "exponent.csv").exists()


def test_missing_config_file(isolated_output, tmp_path):
    assert main(["solve", "--config", str(tmp_path / "absent.cfg")]) == 2


def test_history_with_ledger_disabled(isolated_output):
    assert main(["history"]) == 2


def test_history_lists_runs(analytic_config, isolated_output, monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("OBSTACLE_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.sqlite'}")
    assert main(["ls-audit", "--config", analytic_config]) == 0
    capsys.readouterr()
    assert main(["history", "--preset", "ls-audit"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1
    assert "ls-audit" in lines[0] and "passed" in lines[0]


def test_history_lists_checks_of_each_run(analytic_config, isolated_output, monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("OBSTACLE_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.sqlite'}")
    assert main(["ls-audit", "--config", analytic_config]) == 0
    capsys.readouterr()
    assert main(["history", "--checks"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    assert lines[1].strip().startswith("[PASS] ls_lower:")
    assert lines[2].strip().startswith("[PASS] ls_upper:")
