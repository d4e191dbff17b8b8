import json

import pytest

from ragfpy import scenarios
from ragfpy.cli import (
    AUGMENTED_CSV,
    METRICS_JSON,
    METRICS_TXT,
    PROVENANCE,
    REPORT_JSON,
    build_parser,
    main,
)
from ragfpy.metrics import METRICS_KEYS
from ragfpy.tabular import load_csv


@pytest.fixture
def indexed_f(scenario_dir_f, tmp_path):
    kb = tmp_path / "kb.json"
    assert main(["-q", "index", "--kb-dir", str(scenario_dir_f["corpus"]), "--out", str(kb)]) == 0
    return scenario_dir_f, kb


def _run_args(paths, kb, out, *extra):
    return [
        "-q",
        "run",
        "--data",
        str(paths["data"]),
        "--target",
        "overweight",
        "--description",
        str(paths["description"]),
        "--kb",
        str(kb),
        "--config",
        str(paths["config"]),
        "--out",
        str(out),
        *extra,
    ]


def test_index(indexed_f, tmp_path):
    paths, kb = indexed_f
    payload = json.loads(kb.read_text(encoding="utf-8"))
    assert [d["id"] for d in payload["documents"]] == ["bmi", "hydration", "posture"]
    again = tmp_path / "again.json"
    assert main(["-q", "index", "--kb-dir", str(paths["corpus"]), "--out", str(again)]) == 0
    assert again.read_bytes() == kb.read_bytes()


def test_index_empty_dir(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["-q", "index", "--kb-dir", str(empty), "--out", str(tmp_path / "kb.json")]) == 2
    assert "EmptyCorpus" in capsys.readouterr().err


def test_run_replay(indexed_f, tmp_path, monkeypatch):
    # replay runs over a hash-embedded index never need the API key
    monkeypatch.delenv("RAFG_API_KEY", raising=False)
    paths, kb = indexed_f
    out = tmp_path / "run"
    assert main(_run_args(paths, kb, out, "--replay", str(paths["replay"]))) == 0
    for name in (AUGMENTED_CSV, METRICS_JSON, METRICS_TXT, REPORT_JSON, PROVENANCE):
        assert (out / name).exists()

    augmented = load_csv(out / AUGMENTED_CSV, "overweight")
    assert augmented.feature_names == ("weight", "height", "bmi")
    assert (out / AUGMENTED_CSV).read_text(encoding="utf-8").startswith("# original 2, generated 1\n")

    metrics = json.loads((out / METRICS_JSON).read_text(encoding="utf-8"))
    assert tuple(metrics) == METRICS_KEYS
    report = json.loads((out / REPORT_JSON).read_text(encoding="utf-8"))
    assert report["stop_reason"] == "patience"
    assert [f["name"] for f in report["features"]] == ["weight", "height", "bmi"]
    assert [row["decision"] for row in report["trajectory"]] == ["accepted", "rejected", "rejected"]
    assert set(report["correlations"]["bmi"]) == {"weight", "height"}

    lines = (out / PROVENANCE).read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["header"]["mode"] == "replay"
    assert "summary" in json.loads(lines[-1])


def test_run_reports_are_reproducible(indexed_f, tmp_path):
    paths, kb = indexed_f
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(_run_args(paths, kb, out, "--replay", str(paths["replay"]))) == 0
    for name in (REPORT_JSON, METRICS_JSON, AUGMENTED_CSV):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    # only the header line carries a timestamp
    a, b = [(out / PROVENANCE).read_text(encoding="utf-8").splitlines() for out in outs]
    assert len(a) == len(b) > 2
    assert a[1:] == b[1:]


def test_live_mode_needs_api_key(indexed_f, tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("RAFG_API_KEY", raising=False)
    paths, kb = indexed_f
    out = tmp_path / "run"
    assert main(_run_args(paths, kb, out)) == 2
    assert "RAFG_API_KEY" in capsys.readouterr().err
    assert not out.exists()


def test_exhausted_replay(indexed_f, tmp_path, capsys):
    paths, kb = indexed_f
    short = tmp_path / "short.txt"
    scenarios.write_replay(scenarios.bmi_replay(patience=2)[:3], short)
    assert main(_run_args(paths, kb, tmp_path / "run", "--replay", str(short))) == 3
    assert "ReplayExhausted" in capsys.readouterr().err


def test_bad_inputs(indexed_f, tmp_path):
    paths, kb = indexed_f
    missing = dict(paths, data=tmp_path / "nope.csv")
    assert main(_run_args(missing, kb, tmp_path / "run", "--offline")) == 2
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"patience": 2, "colour": "red"}), encoding="utf-8")
    assert main(_run_args(dict(paths, config=config), kb, tmp_path / "run", "--offline")) == 2
    args = _run_args(paths, kb, tmp_path / "run", "--offline")
    args[args.index("overweight")] = "shoe_size"
    assert main(args) == 2


def test_offline_run_and_report(indexed_f, tmp_path, capsys):
    paths, kb = indexed_f
    out = tmp_path / "run"
    assert main(_run_args(paths, kb, out, "--offline")) == 0
    report = json.loads((out / REPORT_JSON).read_text(encoding="utf-8"))
    assert report["generated_features"] == 1
    capsys.readouterr()
    assert main(["report", "--run", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "stop reason       patience" in printed
    assert "accepted" in printed and "bmi" in printed
    assert "generated features" in printed
    assert main(["report", "--run", str(tmp_path / "missing")]) == 2


def test_parser_modes():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["run", "--replay", "r.txt", "--offline"])
    with pytest.raises(SystemExit):
        parser.parse_args(["-v", "-q", "report", "--run", "x"])
    args = parser.parse_args(["index", "--kb-dir", "docs", "--out", "kb.json"])
    assert args.dim == 256


def test_description_is_read_verbatim(indexed_f, tmp_path):
    paths, kb = indexed_f
    text = "  " + scenarios.BMI_DESCRIPTION + "\n\n"
    description = tmp_path / "description.txt"
    description.write_text(text, encoding="utf-8")
    out = tmp_path / "run"
    assert main(_run_args(dict(paths, description=description), kb, out, "--offline")) == 0
    lines = (out / PROVENANCE).read_text(encoding="utf-8").splitlines()
    first = json.loads(lines[1])
    assert first["decision"] == "accepted"
    assert first["description"].startswith(text)
    assert "\n\nNewly added feature: bmi = weight / (height * height)." in first["description"]


def test_unreadable_inputs_exit_2(indexed_f, tmp_path, capsys):
    paths, kb = indexed_f
    folder = tmp_path / "folder"
    folder.mkdir()
    assert main(_run_args(dict(paths, description=folder), kb, tmp_path / "run", "--offline")) == 2
    assert "Error" in capsys.readouterr().err
    assert main(["report", "--run", str(folder)]) == 2
