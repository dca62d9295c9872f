import json
import os

from core.pipelines.runner import ExperimentRunner, output_root, resolve_out_dir
from core.pipelines.config import load_config
from infrastructure.database.connection import create_session_factory
from infrastructure.database.repository import RunRepository
from infrastructure.storage.artifacts import MANIFEST_NAME
from schema import ExitCode, PresetName, RunStatus

from conftest import ANALYTIC_CONFIG


def _manifest(directory):
    with open(os.path.join(directory, MANIFEST_NAME), encoding="utf-8") as handle:
        return json.load(handle)


def _read(path):
    with open(path, "rb") as handle:
        return handle.read()


def test_output_directory_from_environment(analytic_config, isolated_output, tmp_path):
    config = load_config(analytic_config)
    assert output_root() == str(isolated_output)
    assert resolve_out_dir(config) == os.path.join(str(isolated_output), "ls-audit")
    config = load_config(analytic_config, {"run.out": str(tmp_path / "elsewhere")})
    assert resolve_out_dir(config) == str(tmp_path / "elsewhere")


def test_ls_audit_passes(analytic_config, isolated_output):
    outcome = ExperimentRunner().run_file(analytic_config)
    assert outcome.exit_code == ExitCode.PASSED
    assert os.path.exists(os.path.join(outcome.out_dir, "ls_report.csv"))
    assert not os.path.exists(os.path.join(outcome.out_dir, MANIFEST_NAME))
    assert [check.name for check in outcome.checks] == ["ls_lower", "ls_upper"]


def test_unknown_preset_is_a_config_error(write_config, isolated_output):
    path = write_config(ANALYTIC_CONFIG.replace("ls-audit", "sweep"))
    outcome = ExperimentRunner().run_file(path)
    assert outcome.exit_code == ExitCode.CONFIG_ERROR
    manifest = _manifest(outcome.out_dir)
    assert manifest["error_key"] == "run.preset"
    assert manifest["exit_code"] == 2


def test_missing_obstacle_writes_manifest(write_config, isolated_output, tmp_path):
    text = "\n".join(line for line in ANALYTIC_CONFIG.splitlines() if "obstacle" not in line)
    out = str(tmp_path / "failed")
    outcome = ExperimentRunner().run_file(write_config(text), out=out)
    assert outcome.status == RunStatus.CONFIG_ERROR
    assert outcome.artifacts == [os.path.join(os.path.abspath(out), MANIFEST_NAME)]
    assert _manifest(out)["error_key"] == "obstacle"


def test_unconverged_solve_exits_with_solver_failure(write_config, isolated_output):
    path = write_config(ANALYTIC_CONFIG + "solver.method = pgs\nsolver.max_iter = 1\n")
    outcome = ExperimentRunner().run_file(path)
    assert outcome.exit_code == ExitCode.SOLVER_FAILURE
    assert outcome.unconverged == ["solve"]
    manifest = _manifest(outcome.out_dir)
    assert manifest["status"] == "solver_failure"
    assert manifest["unconverged"] == ["solve"]


def test_successful_run_removes_stale_manifest(write_config, isolated_output):
    failing = write_config(ANALYTIC_CONFIG + "solver.method = pgs\nsolver.max_iter = 1\n", "failing.cfg")
    first = ExperimentRunner().run_file(failing)
    assert os.path.exists(os.path.join(first.out_dir, MANIFEST_NAME))

    second = ExperimentRunner().run_file(write_config(ANALYTIC_CONFIG))
    assert second.out_dir == first.out_dir
    assert second.exit_code == ExitCode.PASSED
    assert not os.path.exists(os.path.join(second.out_dir, MANIFEST_NAME))


def test_reruns_are_bit_identical(analytic_config, isolated_output):
    first = ExperimentRunner().run_file(analytic_config, preset=PresetName.EQUATION_AUDIT)
    contents = {path: _read(path) for path in first.artifacts}
    second = ExperimentRunner().run_file(analytic_config, preset=PresetName.EQUATION_AUDIT)
    assert sorted(second.artifacts) == sorted(contents)
    for path in second.artifacts:
        assert _read(path) == contents[path]


def test_failure_manifests_are_reproducible(write_config, isolated_output):
    path = write_config(ANALYTIC_CONFIG + "solver.method = pgs\nsolver.max_iter = 1\n")
    first = ExperimentRunner().run_file(path)
    before = _read(os.path.join(first.out_dir, MANIFEST_NAME))
    ExperimentRunner().run_file(path)
    assert _read(os.path.join(first.out_dir, MANIFEST_NAME)) == before


def test_runs_are_recorded_in_the_ledger(analytic_config, isolated_output, monkeypatch, tmp_path):
    url = f"sqlite:///{tmp_path / 'ledger' / 'runs.sqlite'}"
    monkeypatch.setenv("OBSTACLE_DATABASE_URL", url)
    outcome = ExperimentRunner().run_file(analytic_config, seed=5)

    with create_session_factory(url)() as db:
        repository = RunRepository(db)
        runs = repository.list_runs()
        assert [run.id for run in runs] == [outcome.run_id]
        run = runs[0]
        assert run.preset == "ls-audit"
        assert run.status == "passed"
        assert run.exit_code == 0
        assert run.seed == 5
        assert [check.name for check in repository.list_checks(run.id)] == ["ls_lower", "ls_upper"]


def test_ledger_can_be_skipped(analytic_config, isolated_output, monkeypatch, tmp_path):
    monkeypatch.setenv("OBSTACLE_DATABASE_URL", f"sqlite:///{tmp_path / 'unused.sqlite'}")
    outcome = ExperimentRunner(use_ledger=False).run_file(analytic_config)
    assert outcome.exit_code == ExitCode.PASSED
    assert not (tmp_path / "unused.sqlite").exists()
