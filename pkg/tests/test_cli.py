import json
import math

import pytest
import yaml

from zwanzig import cli

BASIC = """\
model:
  kind: reservoir
  variant: bare
  C: 1.0
  N: 20
grid:
  t_max: 3.0
  samples_per_unit: 10
method: all
seed: 3
"""


def write(tmp_path, text, name="scenario.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize("preset", cli.PRESETS)
def test_presets_validate(preset, capsys):
    assert cli.main(["validate", preset]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_mixing_order_violation_with_line(tmp_path, capsys):
    text = ("model:\n  kind: reservoir\n  variant: mixing\n  C: 1.0\n  K: 3\n"
            "  deltas: [0.2, 0.1]\ngrid:\n  t_max: 5\n  bogus: 1\n")
    path = write(tmp_path, text)
    assert cli.main(["validate", path]) == cli.EXIT_CONFIG
    out = capsys.readouterr().out.splitlines()
    assert f"{path}:9: unknown key 'grid.bogus'" in out
    assert any(line.startswith(f"{path}:6:") and "increase" in line for line in out)


def test_chain_coupling_range(tmp_path, capsys):
    path = write(tmp_path, "model:\n  kind: chain\n  N: 49\n  C2: 1.2\n")
    assert cli.main(["validate", path]) == cli.EXIT_CONFIG
    assert f"{path}:4:" in capsys.readouterr().out


@pytest.mark.parametrize("text, fragment", [
    ("model: {kind: reservoir, C: 1.0, colour: red}\n", "unknown key 'model.colour'"),
    ("model: {kind: magnet}\n", "unknown model kind"),
    ("model: {kind: reservoir}\nmethod: leapfrog\n", "method 'leapfrog'"),
    ("model: {kind: reservoir}\nseed: -4\n", "unsigned 64-bit"),
    ("model: {kind: reservoir, C: -1}\n", "'C'"),
    ("model: {kind: chain, C2: 0.8}\nmethod: bessel\n", "bessel path"),
    ("model: {kind: reservoir}\nanalysis: {scan_metrics: [series]}\n", "not a scalar metric"),
    ("model: {kind: reservoir}\noutput: {formats: [xlsx]}\n", "csv or tsv"),
    ("grid: {t_max: 1}\n", "missing 'model'"),
    ("- just\n- a list\n", "top level"),
    ("model:\n  kind: [unclosed\n", ":3: YAML error"),
])
def test_config_errors(tmp_path, capsys, text, fragment):
    assert cli.main(["validate", write(tmp_path, text)]) == cli.EXIT_CONFIG
    assert fragment in capsys.readouterr().out


def test_unreadable_config(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == cli.EXIT_CONFIG
    assert "cannot read" in capsys.readouterr().err


def test_round_trip():
    sc = cli.parse_config(BASIC)
    once = sc.dump()
    again = cli.parse_config(once)
    assert again.data == sc.data
    assert again.dump() == once


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, BASIC), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"manifest.json", "metrics.json", "config.yaml"} <= names
    assert {f"series_{m}.csv" for m in ("oracle", "oracle-ode", "fourier", "cycle-sum")} <= names
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["config_sha256"]) == 64
    assert {"numpy", "scipy"} <= set(man["versions"])
    assert man["wall_time_s"] >= 0
    rows = (out / "series_oracle.csv").read_text().splitlines()
    assert rows[0].split(",")[0] == "t"
    assert len(rows) == 31 + 1


def test_empty_analysis_gives_series_only(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, BASIC.replace("method: all", "method: oracle") + "analysis: {}\n"),
                     "--out", str(out)]) == 0
    assert json.loads((out / "metrics.json").read_text()) == {"run": {"files": ["series_oracle.csv"]}}


def _series_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.suffix == ".csv"}


def test_byte_identical_reruns(tmp_path):
    text = ("model:\n  kind: ensemble\n  C: 1.0\n  N: 15\n  delta0: 0.05\n  M: 6\n"
            "grid: {t_max: 8.0, samples_per_unit: 5}\nseed: 42\n")
    path = write(tmp_path, text)
    runs = []
    for i, threads in enumerate(("1", "3")):
        out = tmp_path / f"run{i}"
        assert cli.main(["run", path, "--out", str(out), "--threads", threads]) == 0
        runs.append(_series_bytes(out))
    assert runs[0] and runs[0] == runs[1]
    out = tmp_path / "other"
    assert cli.main(["run", path, "--out", str(out), "--seed", "43"]) == 0
    assert _series_bytes(out) != runs[0]


def test_scan_table(tmp_path):
    text = "model:\n  kind: chain\n  N: 10\n  C2: 0.3\n"
    out = tmp_path / "scan"
    code = cli.main(["scan", write(tmp_path, text), "--param", "model.C2", "--values", "0.1, 0.5",
                     "--out", str(out)])
    assert code == 0
    lines = (out / "scan.csv").read_text().splitlines()
    assert lines[0] == "model.C2,k_c,k_c_detected"
    assert len(lines) == 3
    assert float(lines[2].split(",")[1]) == pytest.approx(11.0)


def test_scan_rejects_bad_value(tmp_path, capsys):
    text = "model:\n  kind: chain\n  N: 10\n"
    code = cli.main(["scan", write(tmp_path, text), "--param", "model.C2", "--values", "0.2,1.5",
                     "--out", str(tmp_path / "s")])
    assert code == cli.EXIT_CONFIG
    assert "C2" in capsys.readouterr().err


def test_single_value_scan_matches_run(tmp_path):
    path = write(tmp_path, "model:\n  kind: reservoir\n  C: 1.0\n  N: 10\ngrid: {t_max: 1}\n")
    assert cli.main(["scan", path, "--param", "model.C", "--values", "2", "--out", str(tmp_path / "s")]) == 0
    row = (tmp_path / "s" / "scan.csv").read_text().splitlines()[1].split(",")
    assert float(row[1]) == pytest.approx(4 * math.pi)
    assert float(row[2]) == pytest.approx(4 * math.pi**2)


def test_numeric_failure_exit(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise ArithmeticError("no bracket")

    monkeypatch.setattr(cli, "execute", boom)
    assert cli.main(["run", write(tmp_path, BASIC), "--out", str(tmp_path / "o")]) == cli.EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err


def test_series_block_runs_each_value(tmp_path):
    text = BASIC.replace("method: all", "method: fourier") + "series: {param: model.C, values: [0.5, 1.0]}\n"
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, text), "--out", str(out)]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics) == {"0", "1"}
    assert metrics["1"]["override"] == {"model.C": 1.0}
    assert (out / "series_fourier_1.csv").exists()


def test_dump_is_sorted_yaml():
    text = cli.dump_config({"b": 1, "a": {"d": 2, "c": [1, 2]}})
    assert yaml.safe_load(text) == {"a": {"c": [1, 2], "d": 2}, "b": 1}
    assert text.index("a:") < text.index("b:")
