import csv
import json

import pytest

from framelap.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, build_parser, main
from framelap.decomposition import MUTATIONS
from framelap.report import load_report

U_SOURCES = ["sin(y1)*y3", "cos(y2)", "(y3 - 1)*y1"]
# a one-point grid lands on z = (0.3, 1.0)
REFERENCE_DOMAIN = {"z1": [0.3, 0.5], "z2": [1.0, 1.2]}


def write_config(tmp_path, data) -> str:
    path = tmp_path / "run.json"
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


@pytest.fixture
def ellipsoid_config(tmp_path):
    return write_config(tmp_path, {"geometry": {"catalog": "ellipsoid", "params": {"a": 2.0}}, "frame": "coordinate"})


# Parser Tests
def test_grid_argument():
    args = build_parser().parse_args(["curvature", "--config", "run.json", "--grid", "3x4"])
    assert args.grid == (3, 4)


def test_points_and_grid_are_exclusive():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["curvature", "--config", "run.json", "--grid", "2x2", "--points", "4"])


def test_bad_grid_argument():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["curvature", "--config", "run.json", "--grid", "2by2"])


# Command Tests
def test_curvature_on_ellipsoid(ellipsoid_config, tmp_path, capsys):
    json_path = tmp_path / "curvature.json"
    csv_path = tmp_path / "curvature.csv"
    code = main(
        ["curvature", "--config", ellipsoid_config, "--grid", "2x2", "--json", str(json_path), "--csv", str(csv_path)]
    )
    assert code == EXIT_OK
    assert "PASSED" in capsys.readouterr().out

    report = load_report(str(json_path))
    assert report.command == "curvature"
    assert len(report.rows) == 4
    assert report.provenance.frames == ["coordinate"]
    assert report.provenance.orientations["coordinate"] in ([1], [-1])
    assert report.entry("closed_form:kappa").passed
    with open(csv_path, newline="") as f:
        assert len(list(csv.DictReader(f))) == 4


def test_random_sampling_records_seed(ellipsoid_config, tmp_path):
    json_path = tmp_path / "report.json"
    code = main(["curvature", "--config", ellipsoid_config, "--points", "3", "--seed", "5", "--json", str(json_path)])
    assert code == EXIT_OK
    assert load_report(str(json_path)).provenance.seed == 5


def test_verify_structure_on_two_frames(ellipsoid_config, tmp_path):
    json_path = tmp_path / "report.json"
    argv = ["verify", "--config", ellipsoid_config, "--suite", "structure", "--grid", "1x2"]
    code = main(argv + ["--frame", "coordinate", "--frame", "tilted", "--json", str(json_path)])
    assert code == EXIT_OK
    report = load_report(str(json_path))
    assert report.provenance.frames == ["coordinate", "tilted"]
    assert len(report.rows) == 4


def test_compare_frames_adds_difference_rows(tmp_path):
    config = {
        "geometry": {"catalog": "ellipsoid", "params": {"a": 2.0}, "domain": REFERENCE_DOMAIN},
        "field": {"u": U_SOURCES, "extension": "closed-form"},
    }
    json_path = tmp_path / "compare.json"
    argv = ["compare-frames", "--config", write_config(tmp_path, config), "--grid", "1x1"]
    code = main(argv + ["--frame", "coordinate", "--frame", "tilted", "--json", str(json_path)])
    assert code == EXIT_OK
    rows = load_report(str(json_path)).rows
    assert [row.frame for row in rows] == ["coordinate", "tilted", "coordinate vs tilted"]
    assert rows[-1].quantities["E_max_difference"] > 1e-3


@pytest.mark.parametrize("mutation", MUTATIONS)
def test_debug_mutation_fails_the_run(tmp_path, mutation):
    config = {
        "geometry": {"catalog": "ellipsoid", "params": {"a": 2.0}, "domain": REFERENCE_DOMAIN},
        "frame": "tilted",
        "field": {"u": U_SOURCES, "extension": "closed-form"},
        "sampling": {"grid": [1, 1]},
    }
    path = write_config(tmp_path, config)
    assert main(["verify", "--config", path, "--suite", "decomposition"]) == EXIT_OK
    argv = ["verify", "--config", path, "--suite", "decomposition", "--debug-mutation", mutation]
    assert main(argv) == EXIT_FAILED


def test_debug_mutation_needs_a_decomposition(ellipsoid_config):
    argv = ["curvature", "--config", ellipsoid_config, "--grid", "1x1", "--debug-mutation", "Nq"]
    assert main(argv) == EXIT_CONFIG
    argv = ["verify", "--config", ellipsoid_config, "--suite", "lemmas", "--debug-mutation", "Ev"]
    assert main(argv) == EXIT_CONFIG


def test_fold_over_fails_the_run(tmp_path):
    config = {"geometry": {"catalog": "unit-sphere", "domain": {"s_max": 1.5}}, "sampling": {"grid": [1, 1]}}
    assert main(["extend", "--config", write_config(tmp_path, config)]) == EXIT_FAILED


def test_tolerance_override_can_fail_the_run(ellipsoid_config):
    argv = ["curvature", "--config", ellipsoid_config, "--grid", "1x1", "--tol-override", "curvature=1e-30"]
    assert main(argv + ["--tol-override", "E_relative=1e-30"]) == EXIT_FAILED


# Configuration Error Tests
def test_malformed_json(tmp_path):
    assert main(["curvature", "--config", write_config(tmp_path, '{"geometry": ')]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["curvature", "--config", str(tmp_path / "nothing.json")]) == EXIT_CONFIG


def test_unknown_catalog_entry(tmp_path):
    assert main(["curvature", "--config", write_config(tmp_path, {"geometry": {"catalog": "moebius"}})]) == EXIT_CONFIG


def test_verify_needs_a_suite(ellipsoid_config):
    assert main(["verify", "--config", ellipsoid_config]) == EXIT_CONFIG


def test_unknown_frame_on_command_line(ellipsoid_config):
    assert main(["curvature", "--config", ellipsoid_config, "--frame", "polar"]) == EXIT_CONFIG


def test_bad_tolerance_override(ellipsoid_config):
    assert main(["curvature", "--config", ellipsoid_config, "--tol-override", "curvature"]) == EXIT_CONFIG


def test_bad_expression(tmp_path):
    config = {"geometry": {"catalog": "ellipsoid"}, "field": {"v": ["z1 +", "0"]}}
    assert main(["curvature", "--config", write_config(tmp_path, config)]) == EXIT_CONFIG
