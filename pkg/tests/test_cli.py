import json

import pytest

import mkc_lab.cli as cli
from mkc_lab.report import RunReport, Variable, emit_report


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_ks_check(capsys):
    code, out = run_cli(capsys, "ks-check")
    assert code == 0
    assert "obstruction" in out
    assert "result: PASS" in out


def test_classical_bound_json(capsys):
    code, out = run_cli(capsys, "classical-bound", "--format", "json")
    assert code == 0
    body = json.loads(out)
    assert body["command"] == "classical-bound"
    assert body["all_passed"] is True
    bound = next(v for v in body["variables"] if v["variable"] == "bound")
    assert bound["mean"] == 4.0 and bound["pass"] is True
    # config echo excludes execution details
    assert "parallel" not in body["config"]
    assert body["config"]["seed"] == 0


def test_unknown_subcommand_usage_error(capsys):
    assert cli.main(["definitely-not-a-command"]) == 2
    assert cli.main(["cabello-single", "--bogus-flag"]) == 2


def test_config_validation_exit_2(capsys):
    assert cli.main(["pom-box", "--shots", "0"]) == 2
    assert cli.main(["chsh-toy", "--epsilon", "-1"]) == 2


def test_csv_schema(capsys):
    code, out = run_cli(capsys, "pom-box", "--shots", "500", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "variable,mean,se,target,tolerance,pass"
    assert lines[1].startswith("success_rate,1,")


def test_repeat_invocations_byte_identical(capsys):
    args = ("pom-classical", "--shots", "4000", "--seed", "3", "--format", "json")
    _, first = run_cli(capsys, *args)
    _, second = run_cli(capsys, *args)
    assert first == second


def test_parallel_pool_size_invariant(capsys):
    base = ("cabello-single", "--shots", "25000", "--seed", "5", "--format", "json")
    _, sequential = run_cli(capsys, *base, "--parallel", "1")
    _, pooled = run_cli(capsys, *base, "--parallel", "2")
    assert sequential == pooled
    body = json.loads(pooled)
    assert body["all_passed"] is True


def test_mixture_subcommand(capsys):
    code, out = run_cli(capsys, "mixture", "--shots", "8000", "--format", "json")
    assert code == 0
    body = json.loads(out)
    joint = next(v for v in body["variables"] if v["variable"] == "joint_rho")
    assert joint["target"] == 0.5625


def test_pom_audit_subcommand(capsys):
    code, out = run_cli(capsys, "pom-audit", "--protocol", "classical-unwrapped",
                        "--shots", "8000", "--format", "json")
    assert code == 0
    body = json.loads(out)
    assert body["variables"][0]["target"] == 0.75


def test_sequential_no_collapse_is_informational(capsys):
    code, out = run_cli(capsys, "cabello-sequential", "--shots", "300", "--no-collapse",
                        "--format", "json")
    assert code == 0
    body = json.loads(out)
    agreement = next(v for v in body["variables"] if v["variable"] == "a11_agreement_rate")
    assert agreement["pass"] is None
    assert agreement["mean"] < 0.9


def test_failed_target_exits_1(capsys, monkeypatch):
    def failing_handler(args):
        return [Variable.checked("broken", 0.0, None, 1.0, 0.1)], 0

    monkeypatch.setitem(cli._HANDLERS, "ks-check", failing_handler)
    code, out = run_cli(capsys, "ks-check")
    assert code == 1
    assert "FAIL" in out


def test_emit_report_empty_documents():
    report = RunReport(command="demo", config={"seed": 1}, variables=[])
    parsed = json.loads(emit_report(report, "json"))
    assert parsed["variables"] == []
    assert emit_report(report, "csv") == "variable,mean,se,target,tolerance,pass"
    assert "(no variables)" in emit_report(report, "text")
    with pytest.raises(ValueError):
        emit_report(report, "yaml")


def test_json_round_trips_at_six_digits():
    report = RunReport(
        command="demo",
        config={},
        variables=[Variable.checked("x", 0.123456789, 0.000123456789, 0.1234, 0.01)],
    )
    body = json.loads(emit_report(report, "json"))
    assert body["variables"][0]["mean"] == 0.123457
    assert body["variables"][0]["se"] == 0.000123457


def test_variable_checked_logic():
    assert Variable.checked("v", 1.0, None, 1.0, 0.0).passed is True
    assert Variable.checked("v", 1.05, None, 1.0, 0.01).passed is False
    assert Variable.info("v", 2.0).passed is None
