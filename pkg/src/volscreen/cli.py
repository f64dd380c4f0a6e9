"""Command-line pipeline: subcommands, INI configuration, manifests and SVG plots.

Exit status is 0 on success, 1 for invalid input or usage and 2 for runtime
failures.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from . import chemgraph as cg
from . import chemspace, featsel, gpr, molgen, screen, subsearch
from . import vapordata as vd
from .errors import StageFailure, TooFewGroups, VolscreenError

log = logging.getLogger("volscreen")

DEFAULTS = {
    "run": {"seed": "0", "threads": "1"},
    "paths": {"records": "", "points": ""},
    "dataset": {
        "mode": "variable", "n_temperatures": "20", "min_sep": "2.0",
        "temperature": "387.0", "min_carbon": "6", "k_folds": "3",
    },
    "featsel": {"r2_threshold": "0.5", "inner_folds": "10", "grouped": "true"},
    "search": {
        "k_max": "4", "stage1_threshold": "0.7", "stage2_threshold": "0.85",
        "final_threshold": "0.9", "ensemble_size": "10", "restarts": "3",
        "final_restarts": "3", "checkpoint_every": "100",
    },
    "generator": {"preset": "fg_off", "n": "1000"},
    "screen": {"stage1_pa": "1e-5", "stage2_pa": "5e-9", "stage1_T": "387.0", "stage2_T": "300.0"},
    "chemspace": {
        "metric": "rogers_tanimoto", "nbits": "2048", "radius": "2", "perplexity": "30",
        "iters": "1000", "eps": "auto", "min_pts": "10", "cluster_space": "embedding",
        "subset": "pass",
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def load_config(path=None, overrides: dict | None = None) -> configparser.ConfigParser:
    """Defaults, then the INI file, then ``{section: {key: value}}`` overrides."""
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    cfg.read_dict(DEFAULTS)
    if path:
        if not Path(path).exists():
            raise FileNotFoundError(f"config file {path} not found")
        cfg.read(path)
    for section, values in (overrides or {}).items():
        if not cfg.has_section(section):
            cfg.add_section(section)
        for k, v in values.items():
            if v is not None:
                cfg.set(section, k, str(v))
    return cfg


def config_dict(cfg) -> dict:
    return {s: dict(sorted(cfg.items(s))) for s in sorted(cfg.sections())}


def config_hash(cfg) -> str:
    blob = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(out: Path, command: str, cfg, outputs) -> Path:
    manifest = {
        "tool": "volscreen",
        "version": __version__,
        "command": command,
        "config_sha256": config_hash(cfg),
        "config": config_dict(cfg),
        "outputs": sorted(str(o) for o in outputs),
    }
    path = out / f"manifest_{command}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def generator_config(cfg) -> molgen.GrowthConfig:
    sec = dict(cfg.items("generator"))
    sec.pop("n", None)
    return molgen.GrowthConfig.from_mapping(sec)


def search_config(cfg, threads: int) -> subsearch.SearchConfig:
    s = cfg["search"]
    k_max = s.getint("k_max")
    return subsearch.SearchConfig(
        k_values=tuple(range(1, k_max + 1)),
        stage1_threshold=s.getfloat("stage1_threshold"),
        stage2_threshold=s.getfloat("stage2_threshold"),
        final_threshold=s.getfloat("final_threshold"),
        ensemble_size=s.getint("ensemble_size"),
        restarts=s.getint("restarts"),
        final_restarts=s.getint("final_restarts"),
        seed=cfg["run"].getint("seed"),
        n_jobs=threads,
        checkpoint_every=s.getint("checkpoint_every"),
    )


# ---------------------------------------------------------------------------
# SVG scatter
# ---------------------------------------------------------------------------

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#393b79",
)
NOISE_COLOR = "#b0b0b0"


def emit_svg_scatter(points, labels, medoids, path, size: int = 600, margin: int = 30) -> None:
    """Cluster-coloured scatter; noise grey, medoids outlined.  Deterministic bytes."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    labels = np.asarray(labels, dtype=int)
    if len(P) == 0:
        raise ValueError("no points to plot")
    if len(labels) != len(P):
        raise ValueError("labels do not align with points")
    medoids = set(int(m) for m in medoids)
    lo = P.min(axis=0)
    span = np.ptp(P, axis=0)
    span[span == 0] = 1.0
    scale = (size - 2 * margin) / span.max()
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>',
    ]
    for k, ((x, y), lab) in enumerate(zip(P, labels)):
        cx = margin + (x - lo[0]) * scale
        cy = size - margin - (y - lo[1]) * scale
        color = NOISE_COLOR if lab < 0 else PALETTE[lab % len(PALETTE)]
        extra = ' stroke="#000000" stroke-width="2" r="6"' if k in medoids else ' r="3"'
        lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}"{extra} fill="{color}" data-cluster="{lab}"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# stage implementations (shared by subcommands and the end-to-end run)
# ---------------------------------------------------------------------------

POINTS_HEADER = ["id", "smiles", "temperature_K", "log10_vp_pa"]


def do_fit_antoine(points_path, out: Path) -> Path:
    groups = defaultdict(list)
    smiles = {}
    with open(points_path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in POINTS_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"points file lacks columns {missing}")
        for row in reader:
            smiles[row["id"]] = row["smiles"]
            excl = row.get("exclude", "0") in ("1", "true", "yes")
            groups[row["id"]].append((float(row["temperature_K"]), float(row["log10_vp_pa"]), excl))
    records = []
    for mid, pts in groups.items():
        exclude = {k for k, p in enumerate(pts) if p[2]}
        fit = vd.fit_antoine([(t, v) for t, v, _ in pts], exclude=exclude)
        records.append(vd.AntoineRecord(mid, smiles[mid], fit.params))
    path = out / "antoine_records.csv"
    vd.write_records(path, records)
    return path


def do_build_dataset(records_path, cfg, out: Path) -> dict:
    d = cfg["dataset"]
    seed = cfg["run"].getint("seed")
    records = vd.read_records(records_path)
    kept, report = vd.composition_filter(records, min_carbon=d.getint("min_carbon"))
    kept = vd.consolidate_isomers(kept)
    if d.get("mode") == "fixed":
        ds, skipped = vd.build_fixed_dataset(kept, T=d.getfloat("temperature"))
    else:
        ds = vd.build_variable_dataset(kept, n=d.getint("n_temperatures"), min_sep=d.getfloat("min_sep"))
    try:
        ds.partition = vd.stratified_group_split(ds, k_folds=d.getint("k_folds"), seed=seed)
    except TooFewGroups as exc:
        # tiny corpora still get a dataset; the partition column stays empty
        log.warning("dataset left unpartitioned: %s", exc)
    ds = vd.attach_descriptors(ds, {r.id: r.smiles for r in kept})
    vd.write_dataset(out / "dataset.csv", ds)
    vd.write_feature_matrix(out / "features.csv", ds.feature_names, ds.features)
    with open(out / "filter_report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "reason", "detail"])
        for rid, reason, detail in report.rejected:
            w.writerow([rid, reason, detail])
    return {"records": len(records), "filtered": len(kept), "molecules": len(ds.molecules), "instances": len(ds)}


def load_dataset(dataset_path, features_path) -> vd.Dataset:
    ds = vd.read_dataset(dataset_path)
    names, X = vd.read_feature_matrix(features_path)
    if len(X) != len(ds):
        raise ValueError(f"feature matrix has {len(X)} rows, dataset has {len(ds)}")
    return ds.with_features(X, names)


def read_selection(path) -> list:
    with open(path, newline="") as fh:
        return [r["feature"] for r in csv.DictReader(fh) if r["selected"] == "1"]


def do_select(ds, cfg, out: Path) -> list:
    f = cfg["featsel"]
    res = featsel.select_features(ds, r2_threshold=f.getfloat("r2_threshold"),
                                  inner_folds=f.getint("inner_folds"), seed=cfg["run"].getint("seed"),
                                  grouped=f.getboolean("grouped"))
    featsel.write_selection_report(out / "selection.csv", res)
    return res.features


def do_search(ds, features, cfg, out: Path, threads: int):
    if not features:
        raise ValueError("no features selected")
    scfg = search_config(cfg, threads)
    res = subsearch.run_search(ds, features, scfg)
    subsearch.write_search_report(out / "search_report.csv", res.records)
    if res.trained_models != res.expected_models:
        raise RuntimeError(f"model audit failed: {res.trained_models} trained, {res.expected_models} expected")
    if res.ensemble is None:
        raise RuntimeError("no subset passed the final holdout threshold")
    subsearch.save_ensemble(out / "ensemble", res.ensemble)
    return res


def fixed_temperature_ensemble(records_path, cfg, ensemble: subsearch.EnsembleModel, seed: int):
    """Members of ``ensemble`` refit without temperature on the stage-1 temperature dataset."""
    T = cfg["screen"].getfloat("stage1_T")
    records = vd.read_records(records_path)
    kept, _ = vd.composition_filter(records, min_carbon=cfg["dataset"].getint("min_carbon"))
    ds, _ = vd.build_fixed_dataset(vd.consolidate_isomers(kept), T=T)
    if len(ds) < 5:
        raise ValueError(f"only {len(ds)} records cover {T} K")
    ds = vd.attach_descriptors(ds, {r.id: r.smiles for r in kept})
    members, seen = [], set()
    for feats, model in ensemble.members:
        sub = tuple(f for f in feats if f != vd.TEMPERATURE_FEATURE)
        if not sub or sub in seen or np.ptp(ds.columns(sub), axis=0).min() == 0:
            continue
        seen.add(sub)
        members.append((sub, gpr.train(ds.columns(sub), ds.y, model.kernel, model.basis, seed=seed, restarts=1)))
    if not members:
        cols = [n for n in cg.DESCRIPTOR_NAMES if np.ptp(ds.columns([n])) > 0]
        members = [(tuple(cols), gpr.train(ds.columns(cols), ds.y, "ardmatern52", "linear", seed=seed, restarts=1))]
    return subsearch.EnsembleModel(members)


def read_candidates(path) -> list:
    return [smi for _, smi in cg.read_smiles_file(path)]


def do_screen(candidates, predictor1, predictor2, cfg, out: Path) -> screen.ScreenReport:
    s = cfg["screen"]
    rep = screen.screen(candidates, predictor1, s.getfloat("stage1_pa"), s.getfloat("stage2_pa"),
                        s.getfloat("stage1_T"), s.getfloat("stage2_T"), predictor2=predictor2)
    screen.write_screen_report(out / "screen_report.csv", rep)
    return rep


def do_embed(smiles, values, cfg, out: Path, seed: int):
    c = cfg["chemspace"]
    fps = [cg.morgan_fingerprint(cg.parse_smiles(s), c.getint("radius"), c.getint("nbits")) for s in smiles]
    eps = None if c.get("eps") == "auto" else c.getfloat("eps")
    res = chemspace.analyze(fps, values, metric=c.get("metric"), perplexity=c.getfloat("perplexity"),
                            seed=seed, iters=c.getint("iters"), eps=eps, min_pts=c.getint("min_pts"),
                            cluster_space=c.get("cluster_space"))
    ids = [f"c{k:05d}" for k in range(len(smiles))]
    chemspace.write_embedding(out / "embedding.csv", ids, res.coords, res.labels)
    chemspace.write_cluster_summary(out / "clusters.csv", res, ids)
    with open(out / "cluster_members.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "smiles", "cluster"])
        for i, s, lab in zip(ids, smiles, res.labels):
            w.writerow([i, s, int(lab)])
    return res


def do_plot(embedding_path, summary_path, out: Path) -> Path:
    ids, coords, labels = chemspace.read_embedding(embedding_path)
    medoids = []
    if summary_path:
        lookup = {i: k for k, i in enumerate(ids)}
        medoids = [lookup[r["medoid_id"]] for r in chemspace.read_cluster_summary(summary_path)]
    path = out / "embedding.svg"
    emit_svg_scatter(coords, labels, medoids, path)
    return path


def embed_inputs(report: screen.ScreenReport, subset: str):
    rows = report.rows if subset == "all" else [r for r in report.rows if r.verdict == "pass"]
    smiles = [r.smiles for r in rows]
    values = [r.log10vp_300K if r.log10vp_300K is not None else r.log10vp_387K for r in rows]
    return smiles, np.array(values, dtype=float)


# ---------------------------------------------------------------------------
# end-to-end
# ---------------------------------------------------------------------------

def _stage(name, fn, *args, **kw):
    log.info("stage %s", name)
    try:
        return fn(*args, **kw)
    except StageFailure:
        raise
    except Exception as exc:
        raise StageFailure(name, f"{type(exc).__name__}: {exc}") from exc


def run_end_to_end(cfg, out, threads: int = 1) -> dict:
    """build-dataset, select-features, search-gpr, generate, screen, embed-cluster, plot."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["run"].getint("seed")
    records_path = cfg["paths"].get("records")
    if not records_path or not Path(records_path).exists():
        raise StageFailure("build-dataset", f"records file {records_path!r} not found")
    summary = {"version": __version__, "config_sha256": config_hash(cfg), "seed": seed}

    summary["build-dataset"] = _stage("build-dataset", do_build_dataset, records_path, cfg, out)
    ds = _stage("build-dataset", load_dataset, out / "dataset.csv", out / "features.csv")
    features = _stage("select-features", do_select, ds, cfg, out)
    summary["select-features"] = {"candidates": len(ds.feature_names), "selected": len(features),
                                  "features": list(features)}
    res = _stage("search-gpr", do_search, ds, features, cfg, out, threads)
    t1 = cfg["search"].getfloat("stage1_threshold")
    t2 = cfg["search"].getfloat("stage2_threshold")
    summary["search-gpr"] = {
        "subsets": len(res.records),
        "stage1_survivors": sum(1 for r in res.records if r.stage1_r2 is not None and r.stage1_r2 > t1),
        "stage2_survivors": sum(1 for r in res.records if r.stage2_r2 is not None and r.stage2_r2 > t2),
        "kept": res.by_status().get("final_kept", 0),
        "ensemble_size": len(res.ensemble.members),
        "trained_models": res.trained_models,
        "ensemble_holdout": res.holdout_metrics,
    }
    n = cfg["generator"].getint("n")
    _, traces = _stage("generate", molgen.generate_many, n, seed, _stage("generate", generator_config, cfg))
    _stage("generate", molgen.write_generated, out / "candidates.smi", out / "traces.jsonl", traces)
    summary["generate"] = {"candidates": len(traces), "unique": len({t.smiles for t in traces})}

    stage1_model = _stage("screen", fixed_temperature_ensemble, records_path, cfg, res.ensemble, seed)
    p1 = screen.DescriptorEnsemblePredictor(stage1_model, name="descriptor-gpr-ensemble@fixed-T")
    p2 = screen.DescriptorEnsemblePredictor(res.ensemble)
    rep = _stage("screen", do_screen, [t.smiles for t in traces], p1, p2, cfg, out)
    summary["screen"] = rep.counts() | {"predictors": [p1.name, p2.name]}

    smiles, values = embed_inputs(rep, cfg["chemspace"].get("subset"))
    cres = _stage("embed-cluster", do_embed, smiles, values, cfg, out, seed)
    summary["embed-cluster"] = {
        "points": len(smiles), "clusters": cres.n_clusters, "noise": cres.n_noise,
        "eps": cres.eps, "min_pts": cres.min_pts,
        "sizes": [cres.stats[k]["size"] for k in sorted(cres.stats)],
    }
    _stage("plot", do_plot, out / "embedding.csv", out / "clusters.csv", out)

    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "run", cfg, sorted(p.name for p in out.iterdir() if p.is_file()) + ["ensemble/"])
    return summary


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, help="worker count (else VOLSCREEN_THREADS)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="volscreen", description="Vapor-pressure modelling and candidate screening.")
    p.add_argument("--version", action="version", version=f"volscreen {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("fit-antoine", parents=[common], help="fit Antoine constants to (T, log10 Pa) points")
    s.add_argument("--points", required=True)

    s = sub.add_parser("build-dataset", parents=[common], help="filter records and build the partitioned dataset")
    s.add_argument("--records")
    s.add_argument("--mode", choices=("variable", "fixed"))
    s.add_argument("--n-temperatures", type=int)
    s.add_argument("--temperature", type=float)
    s.add_argument("--min-carbon", type=int)

    s = sub.add_parser("select-features", parents=[common], help="prune and LASSO-select features")
    s.add_argument("--dataset", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--r2-threshold", type=float)
    s.add_argument("--inner-folds", type=int)

    s = sub.add_parser("search-gpr", parents=[common], help="staged GPR subset search and ensemble")
    s.add_argument("--dataset", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--selection", help="selection report; default is every feature column")
    s.add_argument("--k-max", type=int)
    s.add_argument("--restarts", type=int)

    s = sub.add_parser("predict", parents=[common], help="ensemble or single-model predictions")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--ensemble")
    g.add_argument("--model")
    s.add_argument("--features", help="feature matrix CSV")
    s.add_argument("--smiles", help="SMILES file (descriptors are computed)")
    s.add_argument("--temperature", type=float, default=387.0)

    s = sub.add_parser("shap", parents=[common], help="exact Shapley attributions for one ensemble member")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--member", type=int, default=0)
    s.add_argument("--features", required=True)
    s.add_argument("--rows", default="0", help="comma-separated row indices to explain")
    s.add_argument("--background", type=int, default=50, help="background rows drawn from the matrix")

    s = sub.add_parser("generate", parents=[common], help="grow candidate molecules")
    s.add_argument("--n", type=int)
    s.add_argument("--preset", choices=("fg_off", "fg_on"))

    s = sub.add_parser("screen", parents=[common], help="two-stage vapor-pressure screen")
    s.add_argument("--candidates", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--ensemble")
    g.add_argument("--constant", type=float, help="stub predictor value (log10 Pa)")
    s.add_argument("--stage1-ensemble", help="separate ensemble for the first stage")

    s = sub.add_parser("embed-cluster", parents=[common], help="t-SNE embedding and DBSCAN clusters")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--report", help="screen report CSV")
    g.add_argument("--smiles", help="SMILES file")
    s.add_argument("--subset", choices=("pass", "all"))
    s.add_argument("--perplexity", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--min-pts", type=int)

    s = sub.add_parser("plot", parents=[common], help="SVG scatter of an embedding")
    s.add_argument("--embedding", required=True)
    s.add_argument("--summary")

    s = sub.add_parser("run", parents=[common], help="end-to-end pipeline")
    s.add_argument("--records")
    return p


_OVERRIDES = {
    "mode": ("dataset", "mode"), "n_temperatures": ("dataset", "n_temperatures"),
    "temperature": ("dataset", "temperature"), "min_carbon": ("dataset", "min_carbon"),
    "r2_threshold": ("featsel", "r2_threshold"), "inner_folds": ("featsel", "inner_folds"),
    "k_max": ("search", "k_max"), "restarts": ("search", "restarts"),
    "n": ("generator", "n"), "preset": ("generator", "preset"),
    "subset": ("chemspace", "subset"), "perplexity": ("chemspace", "perplexity"),
    "eps": ("chemspace", "eps"), "min_pts": ("chemspace", "min_pts"),
    "records": ("paths", "records"), "seed": ("run", "seed"), "threads": ("run", "threads"),
}


def _overrides(args) -> dict:
    out = defaultdict(dict)
    for attr, (section, key) in _OVERRIDES.items():
        if args.command == "predict" and attr == "temperature":
            continue
        v = getattr(args, attr, None)
        if v is not None:
            out[section][key] = v
    return out


def _dispatch(args, cfg, out: Path) -> list:
    seed = cfg["run"].getint("seed")
    threads = args.threads if args.threads is not None else subsearch.worker_count(cfg["run"].getint("threads"))
    cmd = args.command
    if cmd == "fit-antoine":
        return [do_fit_antoine(args.points, out)]
    if cmd == "build-dataset":
        records = cfg["paths"].get("records")
        if not records:
            raise ValueError("no records file given (--records or [paths] records)")
        do_build_dataset(records, cfg, out)
        return [out / "dataset.csv", out / "features.csv", out / "filter_report.csv"]
    if cmd == "select-features":
        do_select(load_dataset(args.dataset, args.features), cfg, out)
        return [out / "selection.csv"]
    if cmd == "search-gpr":
        ds = load_dataset(args.dataset, args.features)
        feats = read_selection(args.selection) if args.selection else list(ds.feature_names)
        do_search(ds, feats, cfg, out, threads)
        return [out / "search_report.csv", out / "ensemble" / "ensemble.json"]
    if cmd == "predict":
        if args.smiles:
            pairs = cg.read_smiles_file(args.smiles)
            ids = [i for i, _ in pairs]
            names = list(vd.DESCRIPTOR_FEATURES)
            X = np.array([vd.descriptor_row(cg.parse_smiles(s), args.temperature) for _, s in pairs])
        elif args.features:
            names, X = vd.read_feature_matrix(args.features)
            ids = [str(k) for k in range(len(X))]
        else:
            raise ValueError("predict needs --features or --smiles")
        if args.ensemble:
            mean, std = subsearch.ensemble_predict(subsearch.load_ensemble(args.ensemble), X, names)
        else:
            model = gpr.load_model(args.model)
            if X.shape[1] != model.n_features:
                raise ValueError(f"model takes {model.n_features} features, input has {X.shape[1]}")
            mean, std = model.predict(X)
        path = out / "predictions.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "mean", "std"])
            for i, m, s in zip(ids, mean, std):
                w.writerow([i, vd.fmt(m), vd.fmt(s)])
        return [path]
    if cmd == "shap":
        ens = subsearch.load_ensemble(args.ensemble)
        if not 0 <= args.member < len(ens.members):
            raise ValueError(f"member {args.member} out of range")
        feats, model = ens.members[args.member]
        names, X = vd.read_feature_matrix(args.features)
        missing = [f for f in feats if f not in names]
        if missing:
            raise ValueError(f"feature matrix lacks {missing}")
        Xs = X[:, [names.index(f) for f in feats]]
        rng = np.random.default_rng(seed)
        bg = Xs[rng.choice(len(Xs), size=min(args.background, len(Xs)), replace=False)]
        path = out / "shap.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "base_value", "prediction", *feats])
            for r in (int(v) for v in args.rows.split(",")):
                res = gpr.shapley_values(model, Xs[r], bg)
                w.writerow([r, vd.fmt(res.base_value), vd.fmt(res.prediction), *(vd.fmt(v) for v in res.values)])
        return [path]
    if cmd == "generate":
        _, traces = molgen.generate_many(cfg["generator"].getint("n"), seed, generator_config(cfg))
        molgen.write_generated(out / "candidates.smi", out / "traces.jsonl", traces)
        return [out / "candidates.smi", out / "traces.jsonl"]
    if cmd == "screen":
        cands = read_candidates(args.candidates)
        if args.constant is not None:
            p1 = p2 = screen.ConstantPredictor(args.constant)
        else:
            p2 = screen.DescriptorEnsemblePredictor(subsearch.load_ensemble(args.ensemble))
            p1 = (screen.DescriptorEnsemblePredictor(subsearch.load_ensemble(args.stage1_ensemble))
                  if args.stage1_ensemble else p2)
        do_screen(cands, p1, p2, cfg, out)
        return [out / "screen_report.csv"]
    if cmd == "embed-cluster":
        if args.report:
            smiles, values = embed_inputs(screen.read_screen_report(args.report), cfg["chemspace"].get("subset"))
        else:
            smiles, values = read_candidates(args.smiles), None
        do_embed(smiles, values, cfg, out, seed)
        return [out / "embedding.csv", out / "clusters.csv", out / "cluster_members.csv"]
    if cmd == "plot":
        return [do_plot(args.embedding, args.summary, out)]
    if cmd == "run":
        summary = run_end_to_end(cfg, out, threads)
        json.dump(summary, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
        return []
    raise UsageError(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs = _dispatch(args, cfg, out)
        if args.command != "run":
            write_manifest(out, args.command, cfg, [Path(o).relative_to(out) for o in outputs])
    except StageFailure as exc:
        print(f"volscreen: stage {exc.stage} failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, FileNotFoundError, configparser.Error, UsageError) as exc:
        print(f"volscreen: invalid input: {exc}", file=sys.stderr)
        return 1
    except (VolscreenError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"volscreen: runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
