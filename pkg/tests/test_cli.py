import json
from fractions import Fraction

import pytest

from conftest import sample_path
from utils.cli import dispatch
from utils.rangeprop import Interval, Range
from utils.spec_parser import build_model, load_spec
from utils.verdict import Invalid, Valid


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch):
    monkeypatch.setenv("RELIC_PARALLEL", "false")
    monkeypatch.setenv("RELIC_PROGRESS", "false")


def test_compose_cascade(capsys) -> None:
    code, report = dispatch(["compose", sample_path("cascade.rlc")])
    assert code == 0
    assert report.command == "compose"
    out = capsys.readouterr().out
    assert "strongest system-property:" in out


def test_compose_emits_a_reusable_spec(tmp_path) -> None:
    target = tmp_path / "delay_composed.rlc"
    code, _ = dispatch(["compose", sample_path("delay.rlc"), "--emit", str(target)])
    assert code == 0
    assert target.read_text(encoding="utf-8").startswith("system delay_composed domain real {")


def test_integer_composition_emits_a_readable_spec(tmp_path) -> None:
    target = tmp_path / "abc_int_composed.rlc"
    code, _ = dispatch(["compose", sample_path("abc_int.rlc"), "--emit", str(target)])
    assert code == 0
    model, postulates = build_model(load_spec(str(target)))
    assert model.name == "abc_int_composed"
    assert postulates == []


@pytest.mark.parametrize("sample, expected", [("abc.rlc", 1), ("abc_int.rlc", 0), ("delay_init.rlc", 0)])
def test_verify_exit_codes(sample: str, expected: int) -> None:
    code, report = dispatch(["verify", sample_path(sample)])
    assert code == expected
    assert len(report.verdicts) == len(report.postulates)


def test_verify_text_report(capsys) -> None:
    code, report = dispatch(["verify", sample_path("delay_init.rlc")])
    assert report.verdicts == [Valid(2), Valid(1)]
    out = capsys.readouterr().out
    assert "P1: valid (k=2)" in out
    assert "P2: valid (k=1)" in out


def test_verify_structured_report(capsys) -> None:
    code, report = dispatch(["--format", "structured", "verify", sample_path("abc.rlc")])
    assert code == 1
    assert isinstance(report.verdicts[0], Invalid)
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "relic.report/v1"
    assert doc["exit_code"] == 1
    assert doc["verdicts"][0]["status"] == "invalid"
    assert doc["verdicts"][0]["postulate"] == "P1"
    assert "verify" in doc["timings"]


def test_order(capsys) -> None:
    code, report = dispatch(["--format", "structured", "order", sample_path("shifted_sum.rlc")])
    assert code == 0
    assert report.order == {"order_bound": 2, "pruned_order": 1}
    assert json.loads(capsys.readouterr().out)["order"]["pruned_order"] == 1


@pytest.mark.parametrize("sample, expected", [("bounds_real.smt2", 0), ("parity_int.smt2", 1),
                                              ("mixed.smt2", 0)])
def test_sat_exit_codes(sample: str, expected: int) -> None:
    code, report = dispatch(["sat", sample_path(sample)])
    assert code == expected
    assert report.sat.status == ("sat" if expected == 0 else "unsat")


def test_sat_prints_model(capsys) -> None:
    dispatch(["sat", sample_path("bounds_real.smt2")])
    lines = capsys.readouterr().out.splitlines()
    assert "sat" in lines
    assert any(line.startswith("x ") for line in lines)


def test_range_with_baseline(capsys) -> None:
    code, report = dispatch(["range", sample_path("abs.json"), "--output", "y", "--baseline"])
    assert code == 0
    assert report.range_interval == Range(Fraction(0), Fraction(5))
    assert report.baseline == Interval(Fraction(-5), Fraction(5))
    out = capsys.readouterr().out
    assert "interval: [0, 5]" in out
    assert "interval baseline: [-5, 5]" in out


def test_range_of_a_relu_network() -> None:
    code, report = dispatch(["range", sample_path("relu_pair.json"), "--output", "y"])
    assert code == 0
    assert report.range_interval == Range(Fraction(0), Fraction(1))


def test_range_plot(tmp_path) -> None:
    target = tmp_path / "abs.png"
    code, report = dispatch(["range", sample_path("abs.json"), "--output", "y", "--plot", str(target)])
    assert code == 0
    assert report.plot == str(target)
    assert target.exists()


def test_range_unknown_output() -> None:
    code, report = dispatch(["range", sample_path("abs.json"), "--output", "nope"])
    assert code == 3
    assert "nope" in report.errors[0]


def test_missing_file_is_an_error(tmp_path, capsys) -> None:
    code, report = dispatch(["verify", str(tmp_path / "missing.rlc")])
    assert code == 3
    assert report.errors
    assert "error:" in capsys.readouterr().err


def test_errors_are_structured_when_asked(tmp_path, capsys) -> None:
    broken = tmp_path / "broken.rlc"
    broken.write_text("system s {\n  component A {\n", encoding="utf-8")
    code, _ = dispatch(["--format", "structured", "compose", str(broken)])
    assert code == 3
    doc = json.loads(capsys.readouterr().out)
    assert doc["exit_code"] == 3
    assert doc["errors"]


def test_usage_error() -> None:
    code, _ = dispatch(["verify", sample_path("delay.rlc"), "--k-max", "0"])
    assert code == 3


def test_help() -> None:
    code, report = dispatch(["--help"])
    assert code == 0
    assert report.command == "help"
