"""Staged exhaustive feature-subset search over GPR models.

Stage 1 scores every k-subset by 3-fold CV with a constant basis and an
isotropic Matern 5/2 kernel.  Subsets with mean CV R² above 0.7 are re-scored
in stage 2 on the full 4 basis x 10 kernel grid.  Subsets whose best combo
beats 0.85 are trained on the three CV folds and scored on the untouched
holdout partition (stage 3); those above 0.9 are kept and retrained on all
data.  The best kept subsets form an averaging ensemble.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

from . import gpr
from .errors import BadK, MissingFeature, VolscreenError
from .vapordata import CV_FOLDS, Dataset

log = logging.getLogger(__name__)

STAGE1_KERNEL = "matern52"
STAGE1_BASIS = "constant"


def enumerate_subsets(features: Sequence[str], k: int) -> list[tuple]:
    """All k-subsets in lexicographic order of feature index."""
    features = list(features)
    if not 1 <= k <= len(features):
        raise BadK(f"k={k} with {len(features)} features")
    if len(set(features)) != len(features):
        raise ValueError("duplicate feature names")
    return list(itertools.combinations(features, k))


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("VOLSCREEN_THREADS", default)))
    except ValueError:
        return default


@dataclass
class SearchConfig:
    k_values: tuple = (1, 2, 3, 4)
    stage1_threshold: float = 0.7
    stage2_threshold: float = 0.85
    final_threshold: float = 0.9
    ensemble_size: int = 10
    kernels: tuple = gpr.KERNELS
    bases: tuple = gpr.BASES
    restarts: int = 3
    final_restarts: int | None = None  # defaults to ``restarts``
    seed: int = 0
    n_jobs: int | None = None
    checkpoint: str | None = None
    checkpoint_every: int = 100

    @property
    def jobs(self) -> int:
        return self.n_jobs if self.n_jobs is not None else worker_count()


@dataclass
class SubsetRecord:
    features: tuple
    status: str = "pending"
    stage1_r2: float | None = None
    basis: str | None = None
    kernel: str | None = None
    stage2_r2: float | None = None
    stage2_rmse: float | None = None
    holdout: dict | None = None
    error: str | None = None
    combo_scores: dict = field(default_factory=dict, repr=False)

    @property
    def key(self) -> str:
        return "|".join(self.features)


@dataclass
class EnsembleModel:
    members: list  # (features tuple, GprModel)

    def __post_init__(self):
        keys = [tuple(f) for f, _ in self.members]
        if len(set(keys)) != len(keys):
            raise ValueError("ensemble members must use distinct feature subsets")

    @property
    def feature_names(self) -> list:
        return sorted({n for f, _ in self.members for n in f})

    def member_predictions(self, X, names: Sequence[str]) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lookup = {n: k for k, n in enumerate(names)}
        out = []
        for feats, model in self.members:
            missing = [f for f in feats if f not in lookup]
            if missing:
                raise MissingFeature(f"input lacks features {missing}")
            out.append(model.predict(X[:, [lookup[f] for f in feats]], return_std=False))
        return np.array(out)


def ensemble_predict(ensemble: EnsembleModel, X, names: Sequence[str]):
    """Mean and population std of member mean predictions."""
    preds = ensemble.member_predictions(X, names)
    return preds.mean(axis=0), preds.std(axis=0)


# ---------------------------------------------------------------------------
# CV machinery
# ---------------------------------------------------------------------------

def cv_splits(dataset: Dataset, folds: Sequence[str] = CV_FOLDS) -> list:
    """``(train_idx, val_idx)`` for each CV fold; never touches the holdout."""
    labels = dataset.labels
    out = []
    for f in folds:
        val = np.flatnonzero(labels == f)
        train = np.flatnonzero(np.isin(labels, [g for g in folds if g != f]))
        if val.size == 0 or train.size == 0:
            raise ValueError(f"CV fold {f!r} is empty")
        out.append((train, val))
    return out


def _cv_score(X, y, splits, kernel, basis, restarts, seed):
    r2s, rmses = [], []
    for train, val in splits:
        model = gpr.train(X[train], y[train], kernel, basis, seed=seed, restarts=restarts)
        pred = model.predict(X[val], return_std=False)
        m = gpr.regression_metrics(y[val], pred)
        r2s.append(m["r2"])
        rmses.append(m["rmse"])
    return float(np.mean(r2s)), float(np.mean(rmses))


def _stage1_one(X, y, splits, features, cfg):
    rec = SubsetRecord(tuple(features))
    try:
        r2, rmse = _cv_score(X, y, splits, STAGE1_KERNEL, STAGE1_BASIS, cfg.restarts, cfg.seed)
        rec.stage1_r2 = r2
        rec.status = "stage1_passed" if r2 > cfg.stage1_threshold else "screened_out"
    except (VolscreenError, np.linalg.LinAlgError, ValueError) as exc:
        rec.status = "failed"
        rec.error = f"stage1: {exc}"
    return rec


def _combo_name(basis, kernel):
    return f"{basis}/{kernel}"


def _stage2_one(X, y, splits, rec: SubsetRecord, cfg):
    best = None
    for basis in cfg.bases:
        for kernel in cfg.kernels:
            name = _combo_name(basis, kernel)
            try:
                r2, rmse = _cv_score(X, y, splits, kernel, basis, cfg.restarts, cfg.seed)
            except (VolscreenError, np.linalg.LinAlgError, ValueError) as exc:
                rec.combo_scores[name] = (math.nan, math.nan)
                log.debug("combo %s failed on %s: %s", name, rec.key, exc)
                continue
            rec.combo_scores[name] = (r2, rmse)
            key = (-r2, rmse, name)
            if best is None or key < best[0]:
                best = (key, basis, kernel, r2, rmse)
    if best is None:
        rec.status = "failed"
        rec.error = "stage2: every combo failed"
        return rec
    _, rec.basis, rec.kernel, rec.stage2_r2, rec.stage2_rmse = best
    rec.status = "grid_done"
    return rec


def _columns(dataset: Dataset, features) -> np.ndarray:
    return dataset.columns(list(features))


def _run(jobs, fn, items):
    if jobs > 1 and len(items) > 1:
        return Parallel(n_jobs=jobs, prefer="threads")(delayed(fn)(it) for it in items)
    return [fn(it) for it in items]


def _load_checkpoint(path) -> dict:
    done = {}
    if path and Path(path).exists():
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    d["features"] = tuple(d["features"])
                    done[tuple(d["features"])] = SubsetRecord(**d)
    return done


def _append_checkpoint(path, records) -> None:
    with open(path, "a") as fh:
        for rec in records:
            d = asdict(rec)
            d["features"] = list(rec.features)
            fh.write(json.dumps(d) + "\n")


def stage1_screen(dataset: Dataset, subsets: Iterable[Sequence[str]], cfg: SearchConfig | None = None):
    """Stage-1 CV screen.  Returns records in the order of ``subsets``."""
    cfg = cfg or SearchConfig()
    splits = cv_splits(dataset)
    subsets = [tuple(s) for s in subsets]
    done = _load_checkpoint(cfg.checkpoint)
    todo = [s for s in subsets if s not in done]
    if done:
        log.info("resuming stage 1: %d of %d subsets already scored", len(subsets) - len(todo), len(subsets))

    def one(s):
        return _stage1_one(_columns(dataset, s), dataset.y, splits, s, cfg)

    step = cfg.checkpoint_every if cfg.checkpoint else max(1, len(todo))
    for start in range(0, len(todo), step):
        chunk = _run(cfg.jobs, one, todo[start:start + step])
        for rec in chunk:
            done[rec.features] = rec
        if cfg.checkpoint:
            _append_checkpoint(cfg.checkpoint, chunk)
    return [done[s] for s in subsets]


def stage2_grid(dataset: Dataset, records: Sequence[SubsetRecord], cfg: SearchConfig | None = None):
    """Full basis x kernel grid for stage-1 survivors (records updated in place)."""
    cfg = cfg or SearchConfig()
    splits = cv_splits(dataset)
    survivors = [r for r in records if r.status == "stage1_passed"]

    def one(rec):
        return _stage2_one(_columns(dataset, rec.features), dataset.y, splits, rec, cfg)

    _run(cfg.jobs, one, survivors)
    return survivors


@dataclass
class FinalModels:
    evaluation: dict = field(default_factory=dict)  # features -> model trained on CV folds
    full: dict = field(default_factory=dict)  # features -> model retrained on all data


def stage3_final(dataset: Dataset, records: Sequence[SubsetRecord], cfg: SearchConfig | None = None):
    """Holdout evaluation for stage-2 survivors; keepers are retrained on all rows."""
    cfg = cfg or SearchConfig()
    restarts = cfg.final_restarts or cfg.restarts
    train = dataset.indices(*CV_FOLDS)
    hold = dataset.indices("holdout")
    if hold.size == 0:
        raise ValueError("dataset has no holdout partition")
    everything = np.arange(len(dataset))
    models = FinalModels()
    candidates = [r for r in records if r.status == "grid_done" and r.stage2_r2 > cfg.stage2_threshold]

    def one(rec):
        X = _columns(dataset, rec.features)
        try:
            model = gpr.train(X[train], dataset.y[train], rec.kernel, rec.basis, seed=cfg.seed, restarts=restarts)
            rec.holdout = gpr.regression_metrics(dataset.y[hold], model.predict(X[hold], return_std=False))
        except (VolscreenError, np.linalg.LinAlgError, ValueError) as exc:
            rec.error = f"stage3: {exc}"
            return rec, None, None
        full = None
        if rec.holdout["r2"] > cfg.final_threshold:
            rec.status = "final_kept"
            full = gpr.train(X, dataset.y, rec.kernel, rec.basis, seed=cfg.seed, restarts=restarts)
        return rec, model, full

    for rec, model, full in _run(cfg.jobs, one, candidates):
        if model is not None:
            models.evaluation[rec.features] = model
        if full is not None:
            models.full[rec.features] = full
    return candidates, models


def rank_kept(records: Iterable[SubsetRecord]) -> list:
    kept = [r for r in records if r.status == "final_kept"]
    return sorted(kept, key=lambda r: (-r.holdout["r2"], r.holdout["rmse"], r.features))


@dataclass
class SearchResult:
    records: list
    ensemble: EnsembleModel | None  # members retrained on all data
    eval_ensemble: EnsembleModel | None  # members trained on the CV folds only
    holdout_metrics: dict | None
    trained_models: int
    expected_models: int
    feature_names: list

    def by_status(self) -> dict:
        out = {}
        for r in self.records:
            out[r.status] = out.get(r.status, 0) + 1
        return out


def expected_model_count(records: Sequence[SubsetRecord], cfg: SearchConfig) -> int:
    """Trainings implied by the stage thresholds (failed fits included)."""
    n1 = len(records)
    n2 = sum(1 for r in records if r.stage1_r2 is not None and r.stage1_r2 > cfg.stage1_threshold)
    n3 = sum(1 for r in records if r.stage2_r2 is not None and r.stage2_r2 > cfg.stage2_threshold)
    nk = sum(1 for r in records if r.status == "final_kept")
    folds = len(CV_FOLDS)
    return folds * n1 + folds * len(cfg.kernels) * len(cfg.bases) * n2 + n3 + nk


def run_search(dataset: Dataset, features: Sequence[str], cfg: SearchConfig | None = None) -> SearchResult:
    cfg = cfg or SearchConfig()
    subsets = []
    for k in cfg.k_values:
        if k <= len(features):
            subsets.extend(enumerate_subsets(features, k))
    log.info("stage 1: %d subsets", len(subsets))
    records = stage1_screen(dataset, subsets, cfg)
    survivors = stage2_grid(dataset, records, cfg)
    log.info("stage 2: %d survivors", len(survivors))
    _, models = stage3_final(dataset, records, cfg)

    folds = len(CV_FOLDS)
    trained = folds * len(records)
    trained += sum(folds * len(r.combo_scores) for r in survivors)
    trained += sum(1 for r in records if r.stage2_r2 is not None and r.stage2_r2 > cfg.stage2_threshold)
    trained += len(models.full)

    top = rank_kept(records)[: cfg.ensemble_size]
    ensemble = eval_ens = metrics = None
    if top:
        ensemble = EnsembleModel([(r.features, models.full[r.features]) for r in top])
        eval_ens = EnsembleModel([(r.features, models.evaluation[r.features]) for r in top])
        hold = dataset.indices("holdout")
        names = list(dataset.feature_names)
        mean, _ = ensemble_predict(eval_ens, dataset.features[hold], names)
        metrics = gpr.regression_metrics(dataset.y[hold], mean)
    return SearchResult(records, ensemble, eval_ens, metrics, trained,
                        expected_model_count(records, cfg), list(features))


# ---------------------------------------------------------------------------
# reports and persistence
# ---------------------------------------------------------------------------

REPORT_HEADER = [
    "features", "stage1_r2", "basis", "kernel", "stage2_r2",
    "holdout_r2", "holdout_rmse", "holdout_mae", "holdout_mape", "status",
]


def _f(x):
    return "" if x is None else format(float(x), ".17g")


def write_search_report(path, records: Iterable[SubsetRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in records:
            h = r.holdout or {}
            w.writerow([
                r.key, _f(r.stage1_r2), r.basis or "", r.kernel or "", _f(r.stage2_r2),
                _f(h.get("r2")), _f(h.get("rmse")), _f(h.get("mae")), _f(h.get("mape")), r.status,
            ])


def read_search_report(path) -> list[SubsetRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            def num(k):
                return float(row[k]) if row[k] != "" else None
            hold = None
            if row["holdout_r2"] != "":
                hold = {m: num(f"holdout_{m}") for m in ("r2", "rmse", "mae", "mape")}
            out.append(SubsetRecord(
                tuple(row["features"].split("|")), row["status"], num("stage1_r2"),
                row["basis"] or None, row["kernel"] or None, num("stage2_r2"), None, hold,
            ))
    return out


def save_ensemble(directory, ensemble: EnsembleModel, prefix: str = "member") -> Path:
    """Write one JSON model file per member plus ``ensemble.json`` listing them."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"format": "volscreen.ensemble/1", "members": []}
    for k, (feats, model) in enumerate(ensemble.members):
        fname = f"{prefix}_{k:02d}.json"
        gpr.save_model(directory / fname, model)
        manifest["members"].append({"file": fname, "features": list(feats)})
    path = directory / "ensemble.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path


def load_ensemble(path) -> EnsembleModel:
    path = Path(path)
    with open(path) as fh:
        manifest = json.load(fh)
    members = []
    for m in manifest["members"]:
        members.append((tuple(m["features"]), gpr.load_model(path.parent / m["file"])))
    return EnsembleModel(members)


def total_subsets(n_features: int, k_values: Iterable[int]) -> int:
    return sum(comb(n_features, k) for k in k_values)
