import json

import pytest
import yaml

from openplan import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_then_analyze(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", str(tmp_path / "fx"), "--paths", "2")
    assert code == 0
    code, out, _ = run(capsys, "analyze", str(tmp_path / "fx" / "session.json"))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("office\tpath\trun") and len(lines) == 5


def test_analyze_json_and_linear_abscissa(tmp_path, capsys):
    run(capsys, "simulate", str(tmp_path), "--sti-model", "linear", "--no-noise")
    code, out, _ = run(capsys, "analyze", str(tmp_path / "session.json"), "--format", "json", "--abscissa", "linear")
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["d2s_db"] == pytest.approx(6.0)


def test_analyze_validation_error_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump({"source_power": [90] * 7, "paths": []}))
    code, _, err = run(capsys, "analyze", str(p))
    assert code == 1 and "paths" in err


def test_analyze_missing_file_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "analyze", str(tmp_path / "none.yaml"))
    assert code == 1 and "not found" in err


def test_internal_error_exit_2(monkeypatch, capsys):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli.report, "reproduce_paper", boom)
    code, _, err = run(capsys, "reproduce-paper")
    assert code == 2 and "kaput" in err


def test_classify(capsys, tmp_path):
    code, out, _ = run(capsys, "classify", "d2s=8.7", "rd=10.5", "lpas4m=49")
    assert code == 0
    assert [l.split("\t")[2] for l in out.strip().splitlines()[1:]] == ["good", "poor", "unclassified"]
    table = tmp_path / "t.json"
    table.write_text('{"lpas4m": {"good": 49.5, "poor": 52.0}}')
    code, out, _ = run(capsys, "classify", "lpas4m=49", "--annex-a-table", str(table))
    assert out.strip().splitlines()[1].endswith("good")
    code, _, _ = run(capsys, "classify", "d2s")
    assert code == 1


def test_reproduce_writes_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(capsys, "reproduce-paper", "--seed", "4", "--resamples", "300", "-o", str(out),
                     "--type2-retention", "18:18,20;21:23,25", "--tolerance-profile", "loose")
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["header"]["type2_retention"] == {"18": ["18", "20"], "21": ["23", "25"]}
    assert rep["header"]["tolerance_profile"] == "loose"


def test_reproduce_text(capsys):
    code, out, _ = run(capsys, "reproduce-paper", "--resamples", "200", "--format", "text")
    assert code == 0 and "NOTE: n_resamples=200" in out


def test_emit_plot_data(capsys):
    code, out, _ = run(capsys, "emit-plot-data", "fig2", "--resamples", "50")
    assert code == 0
    body = [l for l in out.splitlines() if not l.startswith("#")]
    assert len(body) == 1 + 3 * 50


def test_repeatability_subcommand(tmp_path, capsys):
    from openplan.dataset import BundledDataset

    rows = BundledDataset.load().tidy()
    p = tmp_path / "t.tsv"
    p.write_text("office\tpath\trun\tmetric\tvalue\n" + "".join(
        f"{r['office']}\t{r['path']}\t{r['run']}\t{r['metric']}\t{r['value']}\n" for r in rows))
    code, out, _ = run(capsys, "repeatability", str(p), "--resamples", "200", "--type2-offices",
                       "18,21,22,23,24,26,27", "--anova")
    assert code == 0
    res = json.loads(out)
    assert res["type1"]["rd"]["reliability"]["estimator"] == "anova"
    assert res["type2"]["rd"]["reliability"]["k"] == 4


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code != 0
