import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from volscreen import chemspace as cs
from volscreen import cli
from volscreen import screen as sc
from volscreen import subsearch as ss
from volscreen import synthetic as sy
from volscreen import vapordata as vd

SAMPLE = Path(__file__).resolve().parents[1] / "data" / "sample_records.csv"
SVG = "{http://www.w3.org/2000/svg}"

FAST_INI = """\
[dataset]
n_temperatures = 3
[featsel]
inner_folds = 5
[search]
k_max = 2
restarts = 1
final_restarts = 1
[generator]
n = 40
mw_max = 350
[chemspace]
perplexity = 5
iters = 250
min_pts = 3
subset = all
"""


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Corpus -> dataset -> selection -> search, shared by the subcommand tests."""
    d = tmp_path_factory.mktemp("cli")
    vd.write_records(d / "records.csv", sy.antoine_corpus(40, seed=1))
    (d / "fast.ini").write_text(FAST_INI)
    assert run("build-dataset", "--config", d / "fast.ini", "--records", d / "records.csv", "--out", d) == 0
    assert run("select-features", "--config", d / "fast.ini", "--dataset", d / "dataset.csv",
               "--features", d / "features.csv", "--out", d) == 0
    assert run("search-gpr", "--config", d / "fast.ini", "--dataset", d / "dataset.csv",
               "--features", d / "features.csv", "--selection", d / "selection.csv", "--out", d) == 0
    return d


# -- argument handling -------------------------------------------------------

def test_unknown_flag_exits_1(capsys):
    assert run("generate", "--bogus") == 1
    assert "bogus" in capsys.readouterr().err


def test_missing_subcommand_exits_1():
    assert run() == 1


def test_missing_input_file_exits_1(tmp_path):
    assert run("screen", "--candidates", tmp_path / "nope.smi", "--constant", "-9", "--out", tmp_path) == 1


def test_bad_config_value_exits_1(tmp_path):
    (tmp_path / "bad.ini").write_text("[generator]\np_cyclic = 2.0\n")
    assert run("generate", "--config", tmp_path / "bad.ini", "--out", tmp_path) == 1


def test_runtime_failure_exits_2(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("solver exploded")
    monkeypatch.setattr(cli.molgen, "generate_many", boom)
    assert run("generate", "--out", tmp_path) == 2


def test_version(capsys):
    assert run("--version") == 0
    assert "volscreen" in capsys.readouterr().out


# -- config and manifest -------------------------------------------------------

def test_config_layers_and_hash(tmp_path):
    (tmp_path / "a.ini").write_text("[search]\nk_max = 3\n")
    cfg = cli.load_config(tmp_path / "a.ini", {"search": {"restarts": 2}})
    assert cfg["search"]["k_max"] == "3" and cfg["search"]["restarts"] == "2"
    assert cfg["generator"]["preset"] == "fg_off"
    same = cli.load_config(tmp_path / "a.ini", {"search": {"restarts": "2"}})
    other = cli.load_config(tmp_path / "a.ini", {"search": {"restarts": "3"}})
    assert cli.config_hash(cfg) == cli.config_hash(same) != cli.config_hash(other)


def test_manifest_written_next_to_outputs(tmp_path):
    assert run("generate", "--n", 5, "--seed", 4, "--out", tmp_path) == 0
    m = json.loads((tmp_path / "manifest_generate.json").read_text())
    assert m["command"] == "generate" and m["config"]["run"]["seed"] == "4"
    assert m["outputs"] == ["candidates.smi", "traces.jsonl"]
    assert len(m["config_sha256"]) == 64


# -- individual stages ---------------------------------------------------------

def test_fit_antoine(tmp_path):
    ref = vd.AntoineParams(9.0, 2500.0, -50.0)
    with open(tmp_path / "pts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "smiles", "temperature_K", "log10_vp_pa", "exclude"])
        for T in np.linspace(320, 420, 6):
            w.writerow(["m1", "CCCCCCCC", T, vd.antoine_vp(ref, T), 0])
        w.writerow(["m1", "CCCCCCCC", 400.5, 99.0, 1])  # flagged outlier
    assert run("fit-antoine", "--points", tmp_path / "pts.csv", "--out", tmp_path) == 0
    (rec,) = vd.read_records(tmp_path / "antoine_records.csv")
    assert rec.params.B == pytest.approx(2500.0, rel=1e-3)


def test_build_dataset_sample_corpus(tmp_path):
    assert run("build-dataset", "--records", SAMPLE, "--out", tmp_path) == 0
    table = rows(tmp_path / "dataset.csv")
    assert table[0] == vd.DATASET_HEADER
    assert len(table) - 1 == 20 + 11 + 20
    names, X = vd.read_feature_matrix(tmp_path / "features.csv")
    assert X.shape == (51, len(vd.DESCRIPTOR_FEATURES))


def test_build_dataset_filters_and_partitions(pipeline):
    report = rows(pipeline / "filter_report.csv")
    assert report[0] == ["id", "reason", "detail"]
    reasons = {r[0]: r[1] for r in report[1:]}
    assert reasons == {"reject_n": "element set", "reject_c": "min-carbon"}
    ds = vd.read_dataset(pipeline / "dataset.csv")
    assert "isomer_dup" not in ds.molecules
    assert len(ds.molecules) == 40
    vd.check_partition(ds, ds.partition)


def test_selection_and_search_outputs(pipeline):
    sel = rows(pipeline / "selection.csv")
    assert sel[0] == ["feature", "fold0", "fold1", "fold2", "selected"]
    selected = cli.read_selection(pipeline / "selection.csv")
    assert selected and "temperature_K" in selected
    recs = ss.read_search_report(pipeline / "search_report.csv")
    assert len(recs) == ss.total_subsets(len(selected), (1, 2))
    ens = ss.load_ensemble(pipeline / "ensemble" / "ensemble.json")
    assert 1 <= len(ens.members) <= 10


def test_predict_from_smiles_and_features(pipeline, tmp_path):
    (tmp_path / "q.smi").write_text("CCCCCCCCCCCC a\nCCCCCCCCCCCCCCCCCCCC b\n")
    ens = pipeline / "ensemble" / "ensemble.json"
    assert run("predict", "--ensemble", ens, "--smiles", tmp_path / "q.smi", "--temperature", 350,
               "--out", tmp_path) == 0
    pred = rows(tmp_path / "predictions.csv")
    assert pred[0] == ["id", "mean", "std"] and [r[0] for r in pred[1:]] == ["a", "b"]
    assert float(pred[2][1]) < float(pred[1][1])  # heavier is less volatile
    out2 = tmp_path / "f"
    assert run("predict", "--ensemble", ens, "--features", pipeline / "features.csv", "--out", out2) == 0
    assert len(rows(out2 / "predictions.csv")) == 1 + len(vd.read_dataset(pipeline / "dataset.csv"))


def test_predict_single_model(pipeline, tmp_path):
    (tmp_path / "q.smi").write_text("CCCCCCCCCCCC\n")
    member = sorted((pipeline / "ensemble").glob("member_*.json"))[0]
    # a member takes a feature subset, so a full descriptor row is a validation error
    code = run("predict", "--model", member, "--smiles", tmp_path / "q.smi", "--out", tmp_path)
    feats = ss.load_ensemble(pipeline / "ensemble" / "ensemble.json").members[0][0]
    assert code == (0 if len(feats) == len(vd.DESCRIPTOR_FEATURES) else 1)


def test_shap(pipeline, tmp_path):
    assert run("shap", "--ensemble", pipeline / "ensemble" / "ensemble.json", "--features",
               pipeline / "features.csv", "--rows", "0,5", "--background", 20, "--out", tmp_path) == 0
    table = rows(tmp_path / "shap.csv")
    assert table[0][:3] == ["row", "base_value", "prediction"]
    for r in table[1:]:
        vals = [float(v) for v in r[1:]]
        assert vals[0] + sum(vals[2:]) == pytest.approx(vals[1], abs=1e-8)


def test_screen_with_constant_and_ensemble(pipeline, tmp_path):
    assert run("generate", "--n", 12, "--out", tmp_path) == 0
    smi = tmp_path / "candidates.smi"
    assert run("screen", "--candidates", smi, "--constant", -9, "--out", tmp_path) == 0
    rep = sc.read_screen_report(tmp_path / "screen_report.csv")
    assert [r.verdict for r in rep.rows] == ["pass"] * 12
    out2 = tmp_path / "ens"
    assert run("screen", "--candidates", smi, "--ensemble", pipeline / "ensemble" / "ensemble.json",
               "--out", out2) == 0
    assert len(sc.read_screen_report(out2 / "screen_report.csv").rows) == 12


def test_embed_and_plot(tmp_path):
    assert run("generate", "--n", 30, "--out", tmp_path) == 0
    assert run("embed-cluster", "--smiles", tmp_path / "candidates.smi", "--perplexity", 5,
               "--min-pts", 3, "--out", tmp_path) == 0
    ids, coords, labels = cs.read_embedding(tmp_path / "embedding.csv")
    assert len(ids) == 30
    assert run("plot", "--embedding", tmp_path / "embedding.csv", "--summary", tmp_path / "clusters.csv",
               "--out", tmp_path) == 0
    root = ET.parse(tmp_path / "embedding.svg").getroot()
    circles = root.findall(f"{SVG}circle")
    assert len(circles) == 30
    assert [int(c.get("data-cluster")) for c in circles] == labels.tolist()


# -- SVG ---------------------------------------------------------------------

def test_svg_three_points_one_cluster(tmp_path):
    cli.emit_svg_scatter([[0, 0], [1, 1], [2, 0]], [0, 0, 0], [1], tmp_path / "a.svg")
    root = ET.parse(tmp_path / "a.svg").getroot()
    circles = root.findall(f"{SVG}circle")
    assert len(circles) == 3
    assert not [c for c in circles if c.get("fill") == cli.NOISE_COLOR]
    outlined = [c for c in circles if c.get("stroke")]
    assert len(outlined) == 1 and outlined[0].get("cx") == circles[1].get("cx")


def test_svg_noise_grey_and_deterministic(tmp_path):
    pts, labs = np.random.default_rng(0).normal(size=(10, 2)), [0, 1, -1, 0, 1, -1, 2, 2, 2, -1]
    cli.emit_svg_scatter(pts, labs, [0, 1], tmp_path / "a.svg")
    cli.emit_svg_scatter(pts, labs, [0, 1], tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    circles = ET.parse(tmp_path / "a.svg").getroot().findall(f"{SVG}circle")
    assert sum(c.get("fill") == cli.NOISE_COLOR for c in circles) == 3


def test_svg_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        cli.emit_svg_scatter(np.zeros((0, 2)), [], [], tmp_path / "x.svg")


# -- end to end ----------------------------------------------------------------

def test_run_reports_failing_stage(tmp_path, capsys):
    assert run("run", "--records", tmp_path / "missing.csv", "--out", tmp_path) == 2
    assert "build-dataset" in capsys.readouterr().err


def test_run_end_to_end_small(pipeline, tmp_path, capsys):
    cfg = cli.load_config(pipeline / "fast.ini", {"paths": {"records": pipeline / "records.csv"}})
    summary = cli.run_end_to_end(cfg, tmp_path)
    b = summary["build-dataset"]
    assert b["filtered"] <= b["records"] and b["molecules"] <= b["filtered"]
    s = summary["search-gpr"]
    assert s["kept"] <= s["stage2_survivors"] <= s["stage1_survivors"] <= s["subsets"]
    c = summary["screen"]
    assert c["pass"] <= c["stage1_survivors"] <= c["candidates"] == 40
    for name in ("dataset.csv", "selection.csv", "search_report.csv", "candidates.smi",
                 "screen_report.csv", "embedding.csv", "clusters.csv", "embedding.svg",
                 "summary.json", "manifest_run.json"):
        assert (tmp_path / name).exists(), name
