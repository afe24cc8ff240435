import json
import math

import pytest

from sepprob.report import (
    COLUMNS,
    ArtifactError,
    ResultRow,
    config_hash,
    fmt_float,
    read_artifact,
    render_csv,
    render_json,
    report_summary,
    write_artifact,
)

CONFIG = {"command": "bounds", "seed": 1, "n_samples": 100}


def _rows():
    return [
        ResultRow("dominant", 1024 / (135 * math.pi**2), "quadrature", target=0.7685399411, abs_error=1e-11, passed=True),
        ResultRow("full_ph", 0.4528, "qmc-estimate", std_error=1.5e-4, n=10_000_000, seed=1),
        ResultRow("curve", 0.1 + 0.2, "closed-form", xi=-0.25),
    ]


def test_fmt_float_round_trips_doubles():
    for x in (0.1 + 0.2, math.pi, 1e-300, -2.5e17, 5e-324):
        assert float(fmt_float(x)) == x
    assert fmt_float(None) == ""
    assert fmt_float(float("nan")) == "nan"


def test_unknown_provenance_rejected():
    with pytest.raises(ValueError):
        ResultRow("x", 1.0, "guess")


def test_config_hash_is_key_order_independent():
    a = {"x": 1, "y": [1, 2]}
    b = {"y": [1, 2], "x": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"x": 2, "y": [1, 2]})
    assert len(config_hash(a)) == 12


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_artifact_round_trip(tmp_path, fmt):
    rows = _rows()
    p = write_artifact(tmp_path / f"a.{fmt}", CONFIG, rows, fmt=fmt)
    doc = read_artifact(p)
    assert doc["config"] == CONFIG
    assert doc["config_hash"] == config_hash(CONFIG)
    assert doc["rows"] == rows


def test_csv_layout_and_determinism():
    text = render_csv(CONFIG, _rows())
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == f"# config_hash: {config_hash(CONFIG)}"
    assert lines[2] == ",".join(COLUMNS)
    assert lines[2].startswith("name,xi,value,std_error,n,seed")
    assert text == render_csv(dict(CONFIG), _rows())


def test_json_is_valid_and_sorted():
    doc = json.loads(render_json(CONFIG, _rows(), {"extra": 1}))
    assert doc["columns"] == list(COLUMNS)
    assert doc["extra"] == 1
    assert len(doc["rows"]) == 3


def test_corrupt_artifacts_raise(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("name,value\nx,1\n")
    with pytest.raises(ArtifactError):
        read_artifact(bad)
    bad.write_text('{"rows": [')
    with pytest.raises(ArtifactError):
        read_artifact(bad)
    with pytest.raises(ArtifactError):
        read_artifact(tmp_path / "missing.csv")


def test_summary_ranks_lower_estimate_upper(tmp_path):
    rows = [
        ResultRow("dominant", 0.7685, "quadrature"),
        ResultRow("intermediate", 0.6286, "quadrature"),
        ResultRow("paired_intermediate", 0.5376, "quadrature"),
        ResultRow("full_ph", 0.4528, "qmc-estimate", std_error=1e-4),
        ResultRow("absolute", 0.0348, "qmc-estimate", std_error=1e-4),
        ResultRow("full_ph", 0.3, "qmc-estimate", xi=0.0),  # DESF rows are ignored
    ]
    a = write_artifact(tmp_path / "a.csv", CONFIG, rows)
    out = tmp_path / "summary.json"
    s = report_summary([a], out=out)
    assert [r.name for r in s.rows] == ["absolute", "full_ph", "paired_intermediate", "intermediate", "dominant"]
    assert [r.rank for r in s.rows] == [1, 2, 3, 4, 5]
    assert s.ordered
    assert s.rows[-1].boundary == pytest.approx(0.7685 / 2)
    assert json.loads(out.read_text())["ordered"] is True
    assert "ordering: ok" in s.render()


def test_summary_reports_violations(tmp_path):
    rows = [ResultRow("full_ph", 0.9, "qmc-estimate"), ResultRow("dominant", 0.7685, "quadrature")]
    s = report_summary([write_artifact(tmp_path / "a.json", CONFIG, rows, fmt="json")])
    assert not s.ordered
    assert "full_ph" in s.violations[0]


def test_summary_of_nothing_writes_nothing(tmp_path):
    out = tmp_path / "s.txt"
    with pytest.raises(ArtifactError):
        report_summary([], out=out)
    assert not out.exists()
