import csv
import io
import math

import pytest

from udnplan import figures, harness
from udnplan.cli import main
from udnplan.scenario import Scenario
from udnplan.svg import Plot, Series, render

FAST = ["--set", "window_side=20", "--trials", "6", "--seed", "1"]


def read_rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_validate_prints_hash(capsys):
    assert main(["validate"]) == 0
    assert capsys.readouterr().out.strip() == f"ok {Scenario().params_hash()}"


def test_invalid_scenario_exits_2(capsys):
    assert main(["validate", "--set", "alpha_mu=1.5"]) == 2
    assert capsys.readouterr().err.startswith("udnplan: scenario:")


def test_unknown_key_exits_2(capsys):
    assert main(["estimate", "--set", "lamda_u=1"]) == 2
    assert "lamda_u" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--regime", "thz"])
    assert info.value.code == 2


def test_missing_scenario_file_exits_2(tmp_path, capsys):
    assert main(["validate", "--scenario", str(tmp_path / "nope.cfg")]) == 2


def test_scenario_file_is_read(tmp_path, capsys):
    p = tmp_path / "s.cfg"
    p.write_text("lambda_mu = 3\n")
    assert main(["validate", "--scenario", str(p)]) == 0
    assert Scenario().with_overrides(lambda_mu=3).params_hash() in capsys.readouterr().out


def test_single_point_sweep_equals_estimate(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["estimate", *FAST, "--set", "lambda_mu=0.3", "--out", str(a)]) == 0
    assert main(["sweep", *FAST, "--param", "lambda_mu", "--grid", "0.3", "--out", str(b)]) == 0
    assert (a / "estimate.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_sweep_csv_shape(capsys):
    assert main(["sweep", *FAST, "--param", "lambda_mu", "--grid", "0.1,0.5"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# udnplan ")
    assert "\r\n" in out
    rows = read_rows(out)
    assert [float(r["lambda_mu"]) for r in rows] == [0.1, 0.5]
    assert set(harness.columns(("mc", "analytic"))) == set(rows[0])
    for r in rows:
        assert float(r["ratio"]) == pytest.approx(float(r["bound"]) / float(r["mean"]))


@pytest.mark.parametrize("grid", ["0.5,0.1", "0.1,0.1", "a,b", ""])
def test_bad_grid_exits_2(grid, capsys):
    assert main(["sweep", *FAST, "--param", "lambda_mu", "--grid", grid]) == 2


def test_unknown_sweep_parameter_exits_2(capsys):
    assert main(["sweep", *FAST, "--param", "nope", "--grid", "1"]) == 2


def test_indoor_bound_in_sweep(capsys):
    assert main(["sweep", "--regime", "mm_in", "--param", "lambda_mm", "--grid", "1",
                 "--outputs", "analytic"]) == 0
    (row,) = read_rows(capsys.readouterr().out)
    assert float(row["bound"]) == pytest.approx(math.log(1 + math.pi), rel=1e-15)
    assert "mean" not in row


def test_out_of_domain_bound_is_blank(capsys, caplog):
    assert main(["sweep", "--regime", "mm_out", "--param", "lambda_mm", "--grid", "0.01,1",
                 "--outputs", "analytic"]) == 0
    rows = read_rows(capsys.readouterr().out)
    assert rows[0]["bound"] == "" and rows[1]["bound"] != ""
    assert "analytic: need lambda_mm > area_in" in caplog.text


def test_infeasible_planner_sweep_exits_3(capsys):
    args = ["sweep", "--param", "lambda_mm", "--grid", "1,50", "--outputs", "planner",
            "--set", "t_min=0.04", "--set", "lambda_mu=100"]
    assert main(args) == 3
    rows = read_rows(capsys.readouterr().out)
    assert [r["feasible"] for r in rows] == ["true", "false"]


def test_feasible_planner_sweep_exits_0(capsys):
    args = ["sweep", "--param", "lambda_mm", "--grid", "1,5", "--outputs", "planner",
            "--set", "t_min=0.01", "--set", "lambda_mu=100"]
    assert main(args) == 0


def test_sweep_spec_validation():
    with pytest.raises(harness.UsageError):
        harness.SweepSpec("lambda_mu", (1.0,), outputs=("nope",))
    with pytest.raises(harness.UsageError):
        harness.SweepSpec("lambda_mu", (1.0,), regime="thz")
    with pytest.raises(harness.UsageError):
        harness.SweepSpec("lambda_mu", ())


def test_fmt():
    assert harness.fmt(0.1) == "0.1"
    assert harness.fmt(math.nan) == ""
    assert harness.fmt(True) == "true"
    assert float(harness.fmt(1 / 3)) == 1 / 3


def test_figure_without_ratio_requirement_has_one_curve_per_area(tmp_path):
    art = figures.make_figure("fig6", tmp_path, {"t_min": "0"}, timestamp=False)
    text = art.csv_path.read_text()
    header = next(ln for ln in text.splitlines() if not ln.startswith("#"))
    assert header.split(",") == ["area_in", "lambda_mm", "r_dl_unconstrained"]
    svg = art.svg_path.read_text()
    assert svg.count("no requirement") == 2 and "T=" not in svg
    assert art.extra_csv[0].name == "fig6_scan.csv"


def test_figure_with_requirement(tmp_path):
    art = figures.make_figure("fig6", tmp_path, timestamp=False)
    rows = read_rows(art.csv_path.read_text())
    assert {"feasible", "r_dl"} <= set(rows[0])
    assert all(float(r["lambda_mm"]) > float(r["area_in"]) for r in rows)


@pytest.mark.parametrize("fig_id", ["fig5", "fig7"])
def test_analytic_figures_are_reproducible(fig_id, tmp_path):
    a = figures.make_figure(fig_id, tmp_path / "a", timestamp=False)
    b = figures.make_figure(fig_id, tmp_path / "b", timestamp=False)
    assert a.csv_path.read_bytes() == b.csv_path.read_bytes()
    assert a.svg_path.read_bytes() == b.svg_path.read_bytes()


def test_figure_command(tmp_path, capsys):
    assert main(["figure", "fig3", "--trials", "4", "--seed", "2", "--set", "window_side=20",
                 "--out", str(tmp_path), "--no-timestamp"]) == 0
    out = capsys.readouterr().out.split()
    assert out == [str(tmp_path / "fig3.csv"), str(tmp_path / "fig3.svg")]
    text = (tmp_path / "fig3.csv").read_text()
    assert "# figure = fig3" in text and "# seed = 2" in text and "# trials = 4" in text
    assert "generated" not in (tmp_path / "fig3.svg").read_text()


def test_svg_timestamp_flag():
    p = Plot("t", "x", "y", [Series("s", [1, 2, 3], [1.0, math.nan, 2.0])], logx=True)
    assert "<!-- generated" in render(p, timestamp=True)
    plain = render(p, timestamp=False)
    assert "generated" not in plain
    assert plain == render(p, timestamp=False)
    assert plain.startswith("<svg") or plain.startswith("<?xml")
