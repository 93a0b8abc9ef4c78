"""CLI entry points: headless runs, codegen, error reporting."""

import json
from importlib import resources

import pytest

from siloplant.cli import main
from siloplant.runtime import WALL_CLOCK_FIELDS


def strip_wall_fields(log_text):
    lines = []
    for line in log_text.splitlines():
        doc = json.loads(line)
        for field in WALL_CLOCK_FIELDS:
            doc.pop(field, None)
        lines.append(json.dumps(doc, sort_keys=True))
    return "\n".join(lines)


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps([
        {"cycle": 0, "kind": "START_PROCESS", "payload": {"recipe": "A"}},
        {"cycle": 5, "kind": "START_PROCESS", "payload": {"recipe": "B"}},
    ]))
    return path


class TestRunCommand:
    def test_headless_run_writes_complete_log(self, tmp_path, scenario_file, capsys):
        log = tmp_path / "run.jsonl"
        rc = main(["run", "--scenario", str(scenario_file), "--cycles", "50",
                   "--log", str(log)])
        assert rc == 0
        lines = log.read_text().splitlines()
        assert len(lines) == 50
        assert [json.loads(l)["cycle"] for l in lines] == list(range(50))
        summary = json.loads(capsys.readouterr().out)
        assert summary["cycles"] == 50
        assert summary["processes"]["p1"]["recipe"] == "A"

    def test_two_runs_byte_identical_without_wall_fields(self, tmp_path, scenario_file):
        logs = []
        for name in ("a.jsonl", "b.jsonl"):
            log = tmp_path / name
            rc = main(["run", "--scenario", str(scenario_file), "--cycles", "320",
                       "--log", str(log)])
            assert rc == 0
            logs.append(strip_wall_fields(log.read_text()))
        assert logs[0] == logs[1]
        # The wall-clock fields themselves must exist in the raw lines.
        raw = (tmp_path / "a.jsonl").read_text().splitlines()[0]
        assert all(field in json.loads(raw) for field in WALL_CLOCK_FIELDS)

    def test_missing_cycles_is_usage_error(self, scenario_file, capsys):
        rc = main(["run", "--scenario", str(scenario_file)])
        assert rc == 2
        assert "cycles" in capsys.readouterr().err

    def test_rejected_scenario_command_logged_not_fatal(self, tmp_path, capsys):
        scenario = tmp_path / "s.json"
        scenario.write_text(json.dumps([
            {"cycle": 0, "kind": "START_PROCESS", "payload": {"recipe": "A"}},
            {"cycle": 1, "kind": "START_PROCESS", "payload": {"recipe": "A"}},
        ]))
        log = tmp_path / "run.jsonl"
        rc = main(["run", "--scenario", str(scenario), "--cycles", "5", "--log", str(log)])
        assert rc == 0
        events = [e for l in log.read_text().splitlines()
                  for e in json.loads(l)["events"]]
        rejected = [e for e in events if e["type"] == "command_rejected"]
        assert rejected and rejected[0]["reason"] == "SILOS_BUSY"

    def test_invalid_scenario_kind_rejected(self, tmp_path, capsys):
        scenario = tmp_path / "s.json"
        scenario.write_text(json.dumps([{"cycle": 0, "kind": "EXPLODE"}]))
        rc = main(["run", "--scenario", str(scenario), "--cycles", "5"])
        assert rc == 1
        assert "VALIDATION" in capsys.readouterr().err

    def test_starting_a_process_clears_stale_manual_overrides(self, tmp_path):
        scenario = tmp_path / "s.json"
        scenario.write_text(json.dumps([
            {"cycle": 0, "kind": "MANUAL_ACTUATOR",
             "payload": {"silo": "S3", "actuator": "in_valve", "value": True}},
            {"cycle": 10, "kind": "START_PROCESS", "payload": {"recipe": "B"}},
        ]))
        log = tmp_path / "run.jsonl"
        rc = main(["run", "--scenario", str(scenario), "--cycles", "20", "--log", str(log)])
        assert rc == 0
        lines = [json.loads(l) for l in log.read_text().splitlines()]
        assert lines[5]["silos"]["S3"]["actuators"]["in_valve"] is True
        # From the batch's start the idle S3 controller owns the valve again.
        assert all(not l["silos"]["S3"]["actuators"]["in_valve"] for l in lines[10:])


class TestCodegenCommand:
    def model_path(self, tmp_path):
        text = resources.files("siloplant.data").joinpath("liqueur_model.json").read_text()
        path = tmp_path / "model.json"
        path.write_text(text)
        return path

    def test_codegen_to_file(self, tmp_path):
        out = tmp_path / "plant.st"
        rc = main(["codegen", str(self.model_path(tmp_path)), "-o", str(out)])
        assert rc == 0
        text = out.read_text()
        assert "FUNCTION_BLOCK MHSILO_CONTROLLER" in text

    def test_codegen_to_stdout(self, tmp_path, capsys):
        rc = main(["codegen", str(self.model_path(tmp_path))])
        assert rc == 0
        assert "INTERFACE PROCESS2MHSILO_IF" in capsys.readouterr().out

    def test_codegen_reports_each_error_class(self, tmp_path, capsys):
        cases = {
            "syntax.json": ("{broken", "SYNTAX"),
            "unresolved.json": (
                json.dumps({"blocks": [{"name": "A", "extends": "GHOST"}]}),
                "UNRESOLVED_REFERENCE",
            ),
            "cycle.json": (
                json.dumps({"blocks": [{"name": "A", "extends": "A"}]}),
                "CYCLIC_INHERITANCE",
            ),
            "dup.json": (
                json.dumps({"interfaces": [{"name": "X"}, {"name": "X"}]}),
                "DUPLICATE_NAME",
            ),
        }
        for filename, (content, code) in cases.items():
            path = tmp_path / filename
            path.write_text(content)
            rc = main(["codegen", str(path)])
            err = capsys.readouterr().err
            assert rc == 1
            assert code in err

    def test_codegen_missing_file(self, tmp_path, capsys):
        rc = main(["codegen", str(tmp_path / "absent.json")])
        assert rc == 2
        assert "cannot read" in capsys.readouterr().err

    def test_codegen_output_reparses_to_same_model(self, tmp_path):
        from siloplant.stgen import parse_model

        out = tmp_path / "plant.st"
        main(["codegen", str(self.model_path(tmp_path)), "-o", str(out)])
        original = parse_model(self.model_path(tmp_path).read_text())
        assert parse_model(out.read_text()) == original
