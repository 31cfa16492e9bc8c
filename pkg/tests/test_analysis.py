import pytest

from openplan import analysis
from openplan.dataset import TYPE2_OFFICES, BundledDataset
from openplan.repeatstats import delta_range


@pytest.fixture(scope="module")
def rows():
    return BundledDataset.load().tidy()


def test_type1_groups(rows):
    groups = analysis.type1_groups(rows, "rd")
    assert len(groups) == 36 and all(g.k == 2 for g in groups)
    assert groups[0].values == (12.9, 13.9)


def test_type2_groups_default_drops_last_path(rows):
    groups = analysis.type2_groups(rows, "rd", TYPE2_OFFICES)
    assert [g.group_id for g in groups] == [str(o) for o in TYPE2_OFFICES]
    assert all(g.k == 4 for g in groups)
    mean = sum(delta_range(g).delta for g in groups) / len(groups)
    assert mean == pytest.approx(2.57, abs=0.005)


def test_retention_policies():
    assert analysis.retained_paths("18", ["21", "19", "20"], "drop-last") == ["19", "20"]
    assert analysis.retained_paths("18", ["19", "20", "21"], "drop-first") == ["20", "21"]
    assert analysis.retained_paths("18", ["19", "20", "21"], {"18": ["19", "21"]}) == ["19", "21"]
    with pytest.raises(ValueError, match="not measured"):
        analysis.retained_paths("18", ["19", "20"], {"18": ["19", "99"]})
    assert analysis.parse_retention("18:19,21;21:23,25") == {"18": ["19", "21"], "21": ["23", "25"]}
    assert analysis.parse_retention(None) == "drop-last"


def test_custom_retention_changes_groups(rows):
    default = analysis.type2_groups(rows, "d2s", TYPE2_OFFICES)
    custom = analysis.type2_groups(rows, "d2s", TYPE2_OFFICES, "drop-first")
    assert default[0].values != custom[0].values
    assert default[2:] == custom[2:]


def test_read_tidy_round_trip(rows):
    text = "# comment\noffice\tpath\trun\tmetric\tvalue\n" + "".join(
        f"{r['office']}\t{r['path']}\t{r['run']}\t{r['metric']}\t{r['value']}\n" for r in rows)
    back = analysis.read_tidy(text)
    assert len(back) == len(rows)
    assert back[0] == {"office": "1", "path": "1", "run": 1, "metric": "rd", "value": 12.9}


def test_read_tidy_error_has_line():
    with pytest.raises(ValueError, match="line 3"):
        analysis.read_tidy("office\tpath\trun\tmetric\tvalue\n1\t1\t1\trd\t2\n1\t1\tx\trd\t2\n")


def test_duplicate_runs_rejected():
    rows = [{"office": "1", "path": "1", "run": 1, "metric": "rd", "value": 1.0}] * 2
    with pytest.raises(ValueError, match="duplicate run"):
        analysis.type1_groups(rows, "rd")


def test_repeatability_tables(rows):
    cfg = analysis.AnalysisConfig(n_resamples=300, seed=1)
    out = analysis.repeatability_tables(rows, ["rd", "d2s"], cfg, TYPE2_OFFICES)
    assert out["type1"]["rd"]["delta"]["n"] == 36
    assert out["type2"]["d2s"]["reliability"]["k"] == 4
    assert len(out["type1"]["kendall"]) == 1
