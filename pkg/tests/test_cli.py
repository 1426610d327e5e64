import json

import pytest

from src.algebra.pl_algebra import hat, step_f
from src.cli.commands import identity_deviations, main, round_trip_deviation
from src.core.core_types import PiecewiseLinear
from src.core.file_formats import read_function, read_network, write_network

FAST = ["--oracle-resolution", "20000"]


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def without_clock(report):
    report = dict(report)
    assert report.pop("wall_time") >= 0
    return report


# verify-identity

def test_verify_identity_default_grid(capsys):
    assert main(["verify-identity"]) == 0
    out = capsys.readouterr().out
    assert "max deviation:" in out
    assert "with 100000 points" in out


def test_verify_identity_detects_injected_fault(capsys):
    assert main(["verify-identity", "--inject-fault"]) == 1
    assert "identity violated" in capsys.readouterr().err


def test_verify_identity_on_sub_grid():
    assert main(["verify-identity", "--lo", "0", "--hi", "2"]) == 0


def test_verify_identity_rejects_empty_interval():
    assert main(["verify-identity", "--lo", "1", "--hi", "0"]) == 1


def test_identity_deviations_are_exact():
    deviations = identity_deviations(-10.0, 10.0, 100_000)
    assert set(deviations) == {"hat", "identity", "constant", "step_f", "step_g", "step_limits"}
    assert max(deviations.values()) <= 1e-12
    assert identity_deviations(-10.0, 10.0, 1000, inject_fault=True)["hat"] > 1e-7


# norm

def test_norm_of_step_f_file(tmp_path, capsys):
    path = tmp_path / "step_f.json"
    write_network(path, step_f())
    assert main(["norm", "--net", str(path), "--exact"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"value": 0.5, "witness": 1.0, "method": "exact_pl"}


def test_norm_of_pl_file_defaults_to_exact(write_json, capsys):
    path = write_json("ramp.json", {"format": 1, "knots": [0.0], "values": [0.0], "m_left": 0.0, "m_right": 1.0})
    assert main(["norm", "--pl", path]) == 0
    assert json.loads(capsys.readouterr().out) == {"value": 1.0, "witness": "+inf", "method": "exact_pl"}


def test_norm_of_expression_uses_grid(tmp_path, capsys):
    report = tmp_path / "norm_report.json"
    assert main(["norm", "--expr", "sqrt(1+x^2)", "--grid", "1000", "--report", str(report)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["method"] == "grid_oracle"
    assert out["value"] == 1.0
    saved = load(report)
    assert saved["format"] == 1
    assert saved["subcommand"] == "norm"
    assert saved["outputs"]["norm"] == out


@pytest.mark.parametrize("grid", ["0", "-5"])
def test_norm_rejects_non_positive_grid(write_json, grid, capsys):
    path = write_json("ramp.json", {"format": 1, "units": [[1, 0, 1]]})
    assert main(["norm", "--expr", "x", "--grid", grid]) == 1
    assert "greater than 0" in capsys.readouterr().err
    assert main(["norm", "--net", path, "--grid", grid]) == 1


def test_norm_exact_refuses_expressions(capsys):
    assert main(["norm", "--expr", "x", "--exact"]) == 1
    assert "--exact needs" in capsys.readouterr().err


def test_norm_reports_json_syntax_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"units": [1, 2,', encoding="utf-8")
    assert main(["norm", "--net", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: ")
    assert "line 1 column" in err


def test_norm_reports_field_path(write_json, capsys):
    path = write_json("zero.json", {"format": 1, "units": [[1, 0, 1], [0, 1, 1]]})
    assert main(["norm", "--net", path]) == 1
    assert "units.1" in capsys.readouterr().err


# convert

def test_convert_hat_round_trip(tmp_path, capsys):
    src = tmp_path / "hat.json"
    write_network(src, hat(1.0, 1.0))
    assert main(["convert", "--in", str(src), "--check"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("round-trip deviation: ")
    assert float(line.split()[2]) <= 1e-9


def test_convert_writes_the_other_representation(tmp_path):
    src, pl_path, back_path = tmp_path / "hat.json", tmp_path / "hat_pl.json", tmp_path / "hat_net.json"
    write_network(src, hat(1.0, 1.0))
    assert main(["convert", "--in", str(src), "--out", str(pl_path)]) == 0
    pl = read_function(pl_path)
    assert isinstance(pl, PiecewiseLinear)
    assert pl.knots == (0.0, 1.0, 2.0)
    assert main(["convert", "--in", str(pl_path), "--out", str(back_path)]) == 0
    assert round_trip_deviation(hat(1.0, 1.0), read_network(back_path)) <= 1e-12


# dual-demo

def test_dual_demo_boundary_measure(write_json, capsys):
    path = write_json("boundary.json", {"format": 1, "atoms": [{"loc": "+inf", "w": 1.0}]})
    assert main(["dual-demo", "--measure", path]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "boundary mass: +inf → 1.0 via ramp_plus"


def test_dual_demo_defaults_to_plus_infinity(capsys):
    assert main(["dual-demo"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "boundary mass: +inf → 1.0 via ramp_plus"


def test_dual_demo_separation_probe(capsys):
    assert main(["dual-demo", "--separation-budget", "10", "--separation-resolution", "500"]) == 0
    out = capsys.readouterr().out
    assert "separation (literal, 10 hats)" in out
    assert "separation (corrected, 10 hats)" in out


def test_dual_demo_bad_measure(write_json, capsys):
    path = write_json("dup.json", {"atoms": [{"loc": 1, "w": 1}, {"loc": 1, "w": 2}]})
    assert main(["dual-demo", "--measure", path]) == 1


# approximate

def test_approximate_identity_is_exact(tmp_path):
    out, report = tmp_path / "n.json", tmp_path / "r.json"
    code = main(["approximate", "--expr", "x", "--eps", "1e-9", "--out", str(out), "--report", str(report)] + FAST)
    assert code == 0
    assert len(read_network(out)) == 2
    cert = load(report)["outputs"]["certificate"]
    assert cert["success"] is True
    assert cert["measured_error"] == 0.0
    assert cert["unit_count"] == 2


def test_approximate_rejects_quadratic_target(capsys):
    assert main(["approximate", "--expr", "x*x", "--eps", "0.1"] + FAST) == 1
    assert "not in Y" in capsys.readouterr().err


def test_approximate_writes_report_and_samples(tmp_path):
    out, report, samples = tmp_path / "n.json", tmp_path / "r.json", tmp_path / "s.csv"
    argv = ["approximate", "--expr", "sqrt(1+x^2)", "--eps", "0.1", "--out", str(out), "--report", str(report),
            "--samples", str(samples), "--sample-resolution", "50"] + FAST
    assert main(argv) == 0
    payload = load(report)
    assert payload["format"] == 1
    assert payload["subcommand"] == "approximate"
    assert payload["inputs"]["expr"] == "sqrt(1+x^2)"
    assert payload["outputs"]["certificate"]["measured_error"] <= 0.1
    lines = samples.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,target,network,weighted_residual"
    assert len(lines) == 1 + 99


def test_approximate_is_deterministic(tmp_path):
    out, report = tmp_path / "n.json", tmp_path / "r.json"
    argv = ["approximate", "--expr", "sqrt(1+x^2)", "--eps", "0.1", "--out", str(out), "--report", str(report)] + FAST
    assert main(argv) == 0
    first, first_net = without_clock(load(report)), out.read_bytes()
    assert main(argv) == 0
    assert without_clock(load(report)) == first
    assert out.read_bytes() == first_net


def test_approximate_report_to_stdout(capsys):
    assert main(["approximate", "--expr", "abs(x)", "--eps", "0.01"] + FAST) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["outputs"]["network_file"] is None
    assert payload["outputs"]["certificate"]["alpha_plus"] == pytest.approx(1.0, abs=1e-12)


def test_budget_exhaustion_exits_2_with_outputs(tmp_path, capsys):
    out, report = tmp_path / "n.json", tmp_path / "r.json"
    argv = ["approximate", "--expr", "sin(x)", "--eps", "1e-3", "--max-knots", "40",
            "--out", str(out), "--report", str(report)] + FAST
    assert main(argv) == 2
    assert "knot budget exhausted" in capsys.readouterr().err
    assert len(read_network(out)) > 0
    assert load(report)["outputs"]["certificate"]["success"] is False


def test_approximate_opaque_target_file(tmp_path):
    src = tmp_path / "step_f.json"
    write_network(src, step_f())
    report = tmp_path / "r.json"
    assert main(["approximate", "--target-file", str(src), "--eps", "0.01", "--report", str(report)] + FAST) == 0
    cert = load(report)["outputs"]["certificate"]
    assert cert["target_label"] == "step_f"
    assert (cert["alpha_plus"], cert["alpha_minus"]) == (0.0, 0.0)


def test_expression_error_is_positioned(capsys):
    assert main(["approximate", "--expr", "1 + $", "--eps", "0.1"]) == 1
    assert "position 4" in capsys.readouterr().err


def test_probe_failure_is_reported(capsys):
    assert main(["approximate", "--expr", "9^x", "--eps", "0.1"]) == 1
    assert "target not evaluable at large |x|" in capsys.readouterr().err


def test_plot_and_pdf_outputs(tmp_path):
    plots, pdf = tmp_path / "plots", tmp_path / "cert.pdf"
    argv = ["approximate", "--expr", "sqrt(1+x^2)", "--eps", "0.1", "--report", str(tmp_path / "r.json"),
            "--plot-dir", str(plots), "--pdf", str(pdf)] + FAST
    assert main(argv) == 0
    assert (plots / "approximation.png").stat().st_size > 0
    assert (plots / "weighted_residual.png").stat().st_size > 0
    assert pdf.read_bytes().startswith(b"%PDF")


# argument handling

@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["norm"],
        ["approximate", "--expr", "x"],
        ["approximate", "--expr", "x", "--eps", "-1"],
        ["approximate", "--expr", "x", "--target-file", "f.json", "--eps", "0.1"],
        ["norm", "--net", "a.json", "--exact", "--grid", "10"],
    ],
)
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


def test_negative_thread_count_is_rejected(capsys):
    assert main(["--threads", "-1", "verify-identity", "--points", "10"]) == 1
    assert "thread count" in capsys.readouterr().err


def test_missing_file_is_input_error(tmp_path, capsys):
    assert main(["convert", "--in", str(tmp_path / "nope.json")]) == 1
    assert "cannot read" in capsys.readouterr().err
