import math
from math import comb

import numpy as np
import pytest

from volscreen import gpr
from volscreen import subsearch as ss
from volscreen import synthetic as sy
from volscreen.errors import BadK, MissingFeature

FAST = dict(kernels=("matern52", "squaredexponential"), bases=("constant", "linear"), restarts=1)


@pytest.fixture(scope="module")
def small():
    return sy.feature_dataset(n_molecules=60, n_temperatures=2, n_decoys=3, seed=3)


def names(n):
    return [f"f{j:02d}" for j in range(n)]


# -- enumeration ---------------------------------------------------------------

def test_subset_counts():
    assert len(ss.enumerate_subsets(names(51), 2)) == 1275
    assert ss.total_subsets(51, [4]) == 249_900 == comb(51, 4)
    assert ss.enumerate_subsets(names(4), 4) == [tuple(names(4))]
    assert len(ss.enumerate_subsets(names(5), 2)) == 10


def test_subsets_lexicographic_and_unique():
    subs = ss.enumerate_subsets(["a", "b", "c", "d"], 2)
    assert subs == [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")]
    assert len(set(subs)) == len(subs)


@pytest.mark.parametrize("k", [0, 5, -1])
def test_bad_k(k):
    with pytest.raises(BadK):
        ss.enumerate_subsets(names(4), k)


# -- stages --------------------------------------------------------------------

def test_cv_splits_exclude_holdout(small):
    hold = set(small.indices("holdout"))
    for train, val in ss.cv_splits(small):
        assert not hold & set(train) and not hold & set(val)
        assert not set(train) & set(val)


def test_stage1_true_vs_noise(small):
    cfg = ss.SearchConfig(restarts=1)
    true, noise = ss.stage1_screen(small, [("x1", "x2", "T"), ("decoy00", "decoy01")], cfg)
    assert true.stage1_r2 > 0.9 and true.status == "stage1_passed"
    assert noise.stage1_r2 < 0.3 and noise.status == "screened_out"


def test_stage2_grid_has_forty_combos(small):
    rec = ss.SubsetRecord(("x1", "x2", "T"), "stage1_passed", 0.95)
    ss.stage2_grid(small, [rec], ss.SearchConfig(restarts=1))
    assert len(rec.combo_scores) == 40
    assert rec.status == "grid_done"
    best = max(rec.combo_scores.items(), key=lambda kv: (kv[1][0], -kv[1][1]))
    assert rec.stage2_r2 == best[1][0]


def test_linear_target_prefers_linear_basis():
    rng = np.random.default_rng(0)
    ds = sy.feature_dataset(n_molecules=40, n_temperatures=1, n_decoys=1, seed=0)
    ds.y = 2.0 * ds.columns(["x1"])[:, 0] - ds.columns(["x2"])[:, 0] + 1e-3 * rng.normal(size=len(ds))
    rec = ss.SubsetRecord(("x1", "x2"), "stage1_passed", 0.99)
    ss.stage2_grid(ds, [rec], ss.SearchConfig(restarts=1, kernels=("matern52", "squaredexponential")))
    top = max(v[0] for v in rec.combo_scores.values())
    tied = [k for k, v in rec.combo_scores.items() if v[0] >= top - 1e-6]
    assert any(k.split("/")[0] in ("linear", "pureQuadratic") for k in tied)


def test_stage_monotonicity_and_audit(small):
    cfg = ss.SearchConfig(k_values=(1, 2, 3), **FAST)
    res = ss.run_search(small, small.feature_names, cfg)
    assert res.trained_models == res.expected_models
    assert len(res.records) == ss.total_subsets(len(small.feature_names), (1, 2, 3))
    for r in res.records:
        if r.stage2_r2 is not None:
            assert r.stage1_r2 > cfg.stage1_threshold
        if r.holdout is not None:
            assert r.stage2_r2 > cfg.stage2_threshold
        if r.status == "final_kept":
            assert r.holdout["r2"] > cfg.final_threshold
    kept = [r.features for r in ss.rank_kept(res.records)]
    assert ("x1", "x2", "T") in kept
    assert res.holdout_metrics["r2"] > 0.9
    assert len(res.ensemble.members) <= cfg.ensemble_size


def test_holdout_never_influences_early_stages(small):
    cfg = ss.SearchConfig(**FAST)
    subs = [("x1", "x2", "T"), ("x1", "T")]
    a = ss.stage1_screen(small, subs, cfg)
    poisoned = small.with_features(small.features.copy(), small.feature_names)
    hold = poisoned.indices("holdout")
    poisoned.y = poisoned.y.copy()
    poisoned.y[hold] = 1e3
    poisoned.features[hold] = -1e3
    b = ss.stage1_screen(poisoned, subs, cfg)
    assert [r.stage1_r2 for r in a] == [r.stage1_r2 for r in b]


def test_thread_count_does_not_change_results(small):
    subs = ss.enumerate_subsets(small.feature_names, 2)
    one = ss.stage1_screen(small, subs, ss.SearchConfig(n_jobs=1, restarts=1))
    two = ss.stage1_screen(small, subs, ss.SearchConfig(n_jobs=2, restarts=1))
    assert [(r.features, r.stage1_r2, r.status) for r in one] == [(r.features, r.stage1_r2, r.status) for r in two]


def test_checkpoint_resume(small, tmp_path):
    subs = ss.enumerate_subsets(small.feature_names, 1)
    ck = tmp_path / "ck.jsonl"
    cfg = ss.SearchConfig(restarts=1, checkpoint=str(ck), checkpoint_every=2)
    first = ss.stage1_screen(small, subs[:3], cfg)
    assert len(ck.read_text().splitlines()) == 3
    full = ss.stage1_screen(small, subs, cfg)
    assert len(ck.read_text().splitlines()) == len(subs)
    assert [r.stage1_r2 for r in full[:3]] == [r.stage1_r2 for r in first]


def test_failed_subset_is_recorded_not_fatal(small):
    ds = small.with_features(small.features.copy(), small.feature_names)
    ds.features[5, 0] = np.nan
    recs = ss.stage1_screen(ds, [("x1",), ("x2",)], ss.SearchConfig(restarts=1))
    assert recs[0].status == "failed" and recs[0].error
    assert recs[1].status in ("stage1_passed", "screened_out")


# -- ensemble ------------------------------------------------------------------

class Fixed:
    def __init__(self, v):
        self.v = v

    def predict(self, X, return_std=True):
        m = np.full(len(X), self.v)
        return (m, np.zeros(len(X))) if return_std else m


def test_ensemble_arithmetic():
    ens = ss.EnsembleModel([(("a",), Fixed(-5.0)), (("b",), Fixed(-6.0))])
    mean, std = ss.ensemble_predict(ens, np.zeros((3, 2)), ["a", "b"])
    np.testing.assert_allclose(mean, -5.5)
    np.testing.assert_allclose(std, 0.5)


def test_identical_members_zero_spread():
    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(10, 1)), rng.normal(size=10)
    m = gpr.train(X, y, restarts=1)
    ens = ss.EnsembleModel([((f"c{k}",), m) for k in range(10)])
    Xq = np.repeat(rng.normal(size=(4, 1)), 10, axis=1)
    mean, std = ss.ensemble_predict(ens, Xq, [f"c{k}" for k in range(10)])
    np.testing.assert_allclose(mean, m.predict(Xq[:, :1], return_std=False))
    np.testing.assert_allclose(std, 0.0, atol=1e-15)


def test_ensemble_errors():
    with pytest.raises(ValueError):
        ss.EnsembleModel([(("a",), Fixed(1.0)), (("a",), Fixed(2.0))])
    ens = ss.EnsembleModel([(("a", "z"), Fixed(1.0))])
    with pytest.raises(MissingFeature):
        ss.ensemble_predict(ens, np.zeros((1, 1)), ["a"])


def test_ensemble_beats_median_member():
    wins = 0
    for seed in range(10):
        ds = sy.feature_dataset(n_molecules=48, n_temperatures=2, n_decoys=4, noise=0.3, seed=seed)
        train, hold = ds.indices("fold0", "fold1", "fold2"), ds.indices("holdout")
        decoys = [f"decoy{k:02d}" for k in range(4)]
        subsets = [("x1", "x2", "T")] + [("x1", "x2", "T", d) for d in decoys]
        subsets += [("x1", "x2", "T", a, b) for a, b in ss.enumerate_subsets(decoys, 2)]
        members, rmses = [], []
        for s in subsets:
            X = ds.columns(list(s))
            m = gpr.train(X[train], ds.y[train], "matern52", "constant", restarts=1)
            members.append((s, m))
            rmses.append(gpr.regression_metrics(ds.y[hold], m.predict(X[hold], return_std=False))["rmse"])
        mean, _ = ss.ensemble_predict(ss.EnsembleModel(members), ds.features[hold], ds.feature_names)
        wins += gpr.regression_metrics(ds.y[hold], mean)["rmse"] < np.median(rmses)
    assert wins >= 8


# -- persistence ----------------------------------------------------------------

def test_report_round_trip(tmp_path):
    recs = [
        ss.SubsetRecord(("a",), "screened_out", 0.1),
        ss.SubsetRecord(("a", "b"), "final_kept", 0.95, "linear", "ardmatern52", 0.97, 0.1,
                        {"r2": 0.93, "rmse": 0.2, "mae": 0.1, "mape": 3.0}),
    ]
    ss.write_search_report(tmp_path / "r.csv", recs)
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head == ("features,stage1_r2,basis,kernel,stage2_r2,holdout_r2,holdout_rmse,"
                    "holdout_mae,holdout_mape,status")
    back = ss.read_search_report(tmp_path / "r.csv")
    assert [(r.features, r.status, r.stage1_r2, r.holdout) for r in back] == \
        [(r.features, r.status, r.stage1_r2, r.holdout) for r in recs]


def test_ensemble_save_load(tmp_path):
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(12, 2)), rng.normal(size=12)
    ens = ss.EnsembleModel([(("p", "q"), gpr.train(X, y, restarts=1)),
                            (("q",), gpr.train(X[:, 1:], y, "matern32", "linear", restarts=1))])
    path = ss.save_ensemble(tmp_path / "ens", ens)
    back = ss.load_ensemble(path)
    Xq = rng.normal(size=(5, 2))
    a = ss.ensemble_predict(ens, Xq, ["p", "q"])
    b = ss.ensemble_predict(back, Xq, ["p", "q"])
    np.testing.assert_array_equal(a[0], b[0])
    assert math.isfinite(a[1].sum())
