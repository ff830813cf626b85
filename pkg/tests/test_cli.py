"""Command line surface: exit codes, JSON/CSV payloads, determinism."""

import csv
import io
import json
import math

import numpy as np
import pytest

from finslerlab.cli import main

from conftest import euclid_config, funk_config, klein_config

LN3 = math.log(3.0)


def poly_const(n, value):
    return [[value] + [0] * n]


def curved_config():
    zero = [[0.0, 0, 0]]
    g11 = [[1.0, 0, 0], [0.3, 0, 2]]
    g22 = [[1.0, 0, 0], [0.3, 2, 0]]
    return {
        "family": "riemannian",
        "dimension": 2,
        "riemannian": {"metric": [[g11, zero], [zero, g22]]},
    }


def randers_bad_config():
    n = 2
    metric = [
        [poly_const(n, 1.0 if i == j else 0.0) for j in range(n)] for i in range(n)
    ]
    one_form = [poly_const(n, 1.1), poly_const(n, 0.0)]
    return {
        "family": "randers",
        "dimension": n,
        "randers": {"metric": metric, "one_form": one_form},
    }


@pytest.fixture(scope="module")
def cfg(tmp_path_factory):
    d = tmp_path_factory.mktemp("configs")
    files = {
        "klein2": klein_config(2),
        "klein2x2": klein_config(2, scale=2.0),
        "funk2": funk_config(2),
        "euclid2": euclid_config(2),
        "curved": curved_config(),
        "randers_bad": randers_bad_config(),
        "interval1": {"family": "interval_funk", "dimension": 1, "k": 1.0},
    }
    paths = {}
    for name, doc in files.items():
        p = d / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    bad = d / "bad.json"
    bad.write_text("{not valid json")
    paths["bad"] = str(bad)
    paths["dir"] = d
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidateCommand:
    def test_klein_passes(self, cfg, capsys):
        code, out, _ = run(capsys, "metric", "validate", "--config", cfg["klein2"])
        assert code == 0
        doc = json.loads(out)
        assert doc["passed"] is True
        assert doc["reversible_observed"] is True
        assert doc["reversible_declared"] is True

    def test_funk_is_irreversible(self, cfg, capsys):
        code, out, _ = run(capsys, "metric", "validate", "--config", cfg["funk2"])
        assert code == 0
        doc = json.loads(out)
        assert doc["passed"] is True
        assert doc["reversible_observed"] is False
        assert doc["reversible_declared"] is False

    def test_convexity_failure_exits_2(self, cfg, capsys):
        code, out, _ = run(capsys, "metric", "validate", "--config", cfg["randers_bad"])
        assert code == 2
        doc = json.loads(out)
        assert doc["passed"] is False
        assert any("convexity" in msg for msg in doc["failures"])


class TestUsageErrors:
    def test_malformed_json_exits_64(self, cfg, capsys):
        code, _, err = run(capsys, "metric", "validate", "--config", cfg["bad"])
        assert code == 64
        assert "usage error" in err

    def test_missing_file_exits_64(self, cfg, capsys):
        code, _, err = run(
            capsys, "metric", "validate", "--config", str(cfg["dir"] / "nope.json")
        )
        assert code == 64
        assert "usage error" in err

    def test_unknown_option_exits_64(self, cfg, capsys):
        code, _, err = run(
            capsys, "metric", "validate", "--config", cfg["klein2"], "--nope"
        )
        assert code == 64

    def test_missing_required_option_exits_64(self, capsys):
        code, _, _ = run(capsys, "distance", "--from", "0,0", "--to", "0.5,0")
        assert code == 64

    def test_no_arguments_exits_64(self, capsys):
        code, _, _ = run(capsys)
        assert code == 64

    def test_bad_vector_exits_64(self, cfg, capsys):
        code, _, err = run(
            capsys,
            "distance",
            "--config",
            cfg["klein2"],
            "--from",
            "0,0",
            "--to",
            "0.5",
        )
        assert code == 64
        assert "components" in err

    def test_pseudo_needs_dimension_two(self, cfg, capsys):
        code, _, err = run(
            capsys,
            "distance",
            "--config",
            cfg["interval1"],
            "--from",
            "0",
            "--to",
            "0.5",
            "--pseudo",
        )
        assert code == 64
        assert "dimension" in err


class TestTraceCommand:
    def test_radial_trace_csv(self, cfg, capsys):
        length = repr(math.atanh(0.5))
        code, out, _ = run(
            capsys,
            "geodesic",
            "trace",
            "--config",
            cfg["klein2"],
            "--x0",
            "0,0",
            "--y0",
            "1,0",
            "--length",
            length,
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["s", "x1", "x2", "y1", "y2", "F_residual"]
        data = np.array([[float(v) for v in row] for row in rows[1:]])
        assert abs(data[0, 0]) == 0.0
        assert abs(data[-1, 1] - 0.5) <= 1e-8
        # unit-speed residual column stays tiny
        assert np.max(np.abs(data[:, 5])) <= 1e-8

    def test_resampled_trace_grid(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "geodesic",
            "trace",
            "--config",
            cfg["klein2"],
            "--x0",
            "0,0",
            "--y0",
            "1,0",
            "--length",
            "0.5",
            "--step",
            "0.1",
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        svals = [float(r[0]) for r in rows[1:]]
        assert svals == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5], abs=1e-12)

    def test_domain_exit_reports_arc_length(self, cfg, capsys):
        # tracing backwards through the Funk ball exits the chart at -ln 2
        code, _, err = run(
            capsys,
            "geodesic",
            "trace",
            "--config",
            cfg["funk2"],
            "--x0",
            "0,0",
            "--y0",
            "1,0",
            "--length",
            "-1.0",
        )
        assert code == 3
        doc = json.loads(err)
        assert doc["error"] == "DomainExitError"
        assert doc["exit_arc_length"] == pytest.approx(-math.log(2.0), abs=1e-6)


class TestCurvatureCommand:
    def test_klein_center_report(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "curvature",
            "report",
            "--config",
            cfg["klein2"],
            "--x",
            "0,0",
            "--y",
            "0.6,0.8",
        )
        assert code == 0
        doc = json.loads(out)
        assert set(doc) >= {
            "riemann_matrix",
            "flagpole_residual",
            "ricci_scalar",
            "ricci_tensor",
            "scalar_shape_lambda",
            "scalar_shape_residual",
            "flag_curvature",
            "flag_edge",
        }
        y = np.array([0.6, 0.8])
        want = np.outer(y, y) - float(y @ y) * np.eye(2)
        assert np.max(np.abs(np.array(doc["riemann_matrix"]) - want)) <= 1e-9
        assert doc["ricci_scalar"] == pytest.approx(-1.0, abs=1e-9)
        assert doc["flag_curvature"] == pytest.approx(-1.0, abs=1e-9)
        assert doc["scalar_shape_lambda"] == pytest.approx(-1.0, abs=1e-9)
        assert doc["scalar_shape_residual"] <= 1e-9
        assert doc["flagpole_residual"] <= 1e-9

    def test_explicit_flag_edge(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "curvature",
            "report",
            "--config",
            cfg["funk2"],
            "--x",
            "0.2,0.1",
            "--y",
            "1,0",
            "--u",
            "0,1",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["flag_edge"] == [0.0, 1.0]
        assert doc["flag_curvature"] == pytest.approx(-0.25, abs=1e-6)

    def test_parallel_flag_edge_exits_3(self, cfg, capsys):
        code, _, err = run(
            capsys,
            "curvature",
            "report",
            "--config",
            cfg["klein2"],
            "--x",
            "0,0",
            "--y",
            "1,0",
            "--u",
            "2,0",
        )
        assert code == 3
        assert json.loads(err)["error"] == "DegenerateFlagError"


class TestEinsteinCommand:
    def test_klein_constant(self, cfg, capsys):
        code, out, _ = run(capsys, "einstein", "check", "--config", cfg["klein2"])
        assert code == 0
        doc = json.loads(out)
        assert doc["is_einstein"] is True
        assert doc["einstein_constant_c"] == pytest.approx(1.0, abs=1e-4)

    def test_curved_metric_has_no_constant(self, cfg, capsys):
        code, out, _ = run(capsys, "einstein", "check", "--config", cfg["curved"])
        assert code == 0
        doc = json.loads(out)
        assert doc["einstein_constant_c"] is None


class TestDistanceCommand:
    def test_plain_distance(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "distance",
            "--config",
            cfg["klein2"],
            "--from",
            "0,0",
            "--to",
            "0.5,0",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["d_F"] == pytest.approx(math.atanh(0.5), abs=1e-8)
        assert isinstance(doc["diagnostics"], dict)

    def test_pseudo_distance_payload(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "distance",
            "--config",
            cfg["klein2"],
            "--from",
            "0,0",
            "--to",
            "0.5,0",
            "--pseudo",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["gauge_k"] == 1.0
        assert doc["d_M"] == pytest.approx(LN3, abs=1e-8)
        assert doc["d_M"] == doc["canonical_length"]
        assert doc["theoretical"] == pytest.approx(LN3, abs=1e-8)
        assert doc["theoretical_available"] is True
        assert doc["einstein_c"] == pytest.approx(1.0, abs=1e-4)

    def test_pseudo_without_einstein_constant(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "distance",
            "--config",
            cfg["curved"],
            "--from",
            "-0.3,0.1",
            "--to",
            "0.4,-0.2",
            "--pseudo",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["theoretical"] is None
        assert doc["theoretical_available"] is False
        assert doc["einstein_c"] is None
        assert doc["d_M"] > 0.0


class TestTheoremCommand:
    def test_klein_verification(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "theorem1",
            "verify",
            "--config",
            cfg["klein2"],
            "--pairs",
            "2",
            "--seed",
            "0",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["summary"]["passed"] is True
        assert doc["summary"]["factor"] == pytest.approx(2.0, abs=1e-6)
        assert len(doc["pairs"]) == 2

    def test_non_einstein_exits_4(self, cfg, capsys):
        code, _, err = run(
            capsys,
            "theorem1",
            "verify",
            "--config",
            cfg["curved"],
            "--pairs",
            "2",
        )
        assert code == 4
        doc = json.loads(err)
        assert doc["error"] == "NotEinsteinError"
        assert "Einstein normal form" in doc["detail"]

    def test_threads_env_is_deterministic(self, cfg, capsys, tmp_path, monkeypatch):
        f1 = tmp_path / "serial.json"
        f2 = tmp_path / "pooled.json"
        monkeypatch.delenv("FINSLERLAB_THREADS", raising=False)
        code1, _, _ = run(
            capsys,
            "theorem1",
            "verify",
            "--config",
            cfg["klein2"],
            "--pairs",
            "2",
            "--out",
            str(f1),
        )
        monkeypatch.setenv("FINSLERLAB_THREADS", "2")
        code2, _, _ = run(
            capsys,
            "theorem1",
            "verify",
            "--config",
            cfg["klein2"],
            "--pairs",
            "2",
            "--out",
            str(f2),
        )
        assert code1 == 0 and code2 == 0
        assert f1.read_bytes() == f2.read_bytes()

    def test_threads_env_must_be_integer(self, cfg, capsys, monkeypatch):
        monkeypatch.setenv("FINSLERLAB_THREADS", "many")
        code, _, err = run(
            capsys,
            "theorem1",
            "verify",
            "--config",
            cfg["klein2"],
            "--pairs",
            "2",
        )
        assert code == 64
        assert "FINSLERLAB_THREADS" in err


class TestCompareCommand:
    def test_homothetic_pair(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "projective",
            "compare",
            "--config-a",
            cfg["klein2"],
            "--config-b",
            cfg["klein2x2"],
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["related"] is True
        assert doc["homothetic"] is True
        assert doc["scale_ratio"] == pytest.approx(2.0, abs=1e-10)

    def test_related_not_homothetic(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "projective",
            "compare",
            "--config-a",
            cfg["klein2"],
            "--config-b",
            cfg["funk2"],
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["related"] is True
        assert doc["homothetic"] is False

    def test_unrelated_pair(self, cfg, capsys):
        code, out, _ = run(
            capsys,
            "projective",
            "compare",
            "--config-a",
            cfg["klein2"],
            "--config-b",
            cfg["curved"],
        )
        assert code == 0
        assert json.loads(out)["related"] is False


class TestOutputFiles:
    def test_out_file_and_repeatability(self, cfg, capsys, tmp_path):
        f1 = tmp_path / "a.json"
        f2 = tmp_path / "b.json"
        for f in (f1, f2):
            code, out, _ = run(
                capsys,
                "distance",
                "--config",
                cfg["klein2"],
                "--from",
                "0,0",
                "--to",
                "0.5,0",
                "--out",
                str(f),
            )
            assert code == 0
            assert out == ""
        assert f1.read_bytes() == f2.read_bytes()
        doc = json.loads(f1.read_text())
        assert doc["d_F"] == pytest.approx(math.atanh(0.5), abs=1e-8)
