import json

import pytest
from click.testing import CliRunner

from cli import cli


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner(mix_stderr=False)


def invoke(runner, *args):
    return runner.invoke(cli, ["--log-level", "ERROR", *args])


def test_norm_single_point_prints_value(runner):
    result = invoke(runner, "norm", "--family", "box", "--point", "3;4,0,0")
    assert result.exit_code == 0
    assert result.output == "5\n"


def test_norm_koranyi_value(runner):
    result = invoke(runner, "norm", "--family", "koranyi", "--point", "1;1,0,0")
    assert result.exit_code == 0
    assert float(result.output) == 2.0 ** 0.25


def test_norm_single_point_json(runner):
    result = invoke(runner, "--format", "json", "norm", "--family", "max", "--point", "1;1,0,0")
    assert json.loads(result.output) == [{"point": "1;1,0,0", "family": "max", "value": 1.0}]


def test_norm_batch_defaults_to_csv(runner, tmp_path):
    points = tmp_path / "points.txt"
    points.write_text("# two points\n3;4,0,0\n0;0,0,1\n")
    result = invoke(runner, "norm", "--family", "box", "--batch", str(points))
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "point,family,value"
    assert lines[1].endswith(",box,5")
    assert len(lines) == 3


def test_norm_needs_exactly_one_source(runner):
    assert invoke(runner, "norm", "--family", "box").exit_code == 2


@pytest.mark.parametrize("args", [
    ["norm", "--family", "euclid", "--point", "1;0,0,0"],
    ["norm", "--family", "box", "--point", "1+x;0,0,0"],
    ["equiv", "--from", "max", "--to", "koranyi", "--samples", "0"],
    ["equiv", "--from", "box", "--to", "koranyi", "--samples", "10"],
    ["--n", "2", "ops", "table"],
    ["ops", "expand", "--op", "X9"],
])
def test_usage_errors_exit_two(runner, args):
    assert invoke(runner, *args).exit_code == 2


def test_ops_table_passes(runner):
    result = invoke(runner, "ops", "table")
    assert result.exit_code == 0
    assert "[X0,X1]" in result.output
    assert " fail" not in result.output


def test_ops_expand_sublaplacian(runner):
    result = invoke(runner, "ops", "expand", "--op", "sublaplacian")
    assert result.exit_code == 0
    assert result.output.splitlines()[0] == "dx0^2: -1/4"


def test_ops_diff_frames_json(runner):
    result = invoke(runner, "ops", "diff", "--frames")
    data = json.loads(result.output)
    assert data["differing_fields"] == ["X1", "X2", "X3"]


def test_equiv_then_verify_round_trip(runner, tmp_path):
    estimate = invoke(runner, "--seed", "3", "equiv", "--from", "max", "--to", "koranyi",
                      "--samples", "5000", "--refine")
    assert estimate.exit_code == 0
    data = json.loads(estimate.output)
    assert data["from"] == "max" and data["to"] == "koranyi"
    path = tmp_path / "estimate.json"
    path.write_text(estimate.output)

    checked = invoke(runner, "--seed", "4", "equiv", "verify", "--estimate", str(path), "--fresh", "5000")
    assert checked.exit_code == 0
    assert json.loads(checked.output)["violations"] == 0


def test_equiv_verify_flags_violations(runner, tmp_path):
    estimate = json.loads(invoke(runner, "equiv", "--from", "max", "--to", "koranyi", "--samples", "500").output)
    estimate["upper_M"] = 1.0
    path = tmp_path / "estimate.json"
    path.write_text(json.dumps(estimate))
    checked = invoke(runner, "equiv", "verify", "--estimate", str(path), "--fresh", "2000")
    assert checked.exit_code == 1
    assert json.loads(checked.output)["violations"] > 0


def test_equiv_table_csv(runner):
    result = invoke(runner, "--format", "csv", "equiv", "--samples", "300", "table", "--families", "koranyi,max")
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "from,to,lower_m,upper_M,samples,seed,refined"
    assert len(lines) == 3


def test_haar_is_reproducible(runner):
    first = invoke(runner, "--seed", "5", "haar", "--rho", "1.5", "--samples", "20000")
    second = invoke(runner, "--seed", "5", "haar", "--rho", "1.5", "--samples", "20000")
    assert first.exit_code == 0
    assert first.output == second.output
    assert json.loads(first.output)["exponent"] == 10


def test_ccdist_identity(runner):
    result = invoke(runner, "ccdist", "--target", "0;0,0,0", "--steps", "8", "--restarts", "1")
    assert result.exit_code == 0
    assert json.loads(result.output)["distance"] == 0.0
