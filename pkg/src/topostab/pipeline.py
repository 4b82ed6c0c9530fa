"""End-to-end orchestration: corpus -> diagrams -> CDER features -> forests.

Everything here is deterministic for a fixed config and seed: artifacts carry
no timestamps, floats are serialized with repr, JSON keys are sorted, and all
randomness flows from numpy generators seeded with `seed + repeat_index`.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cder, pdb_ingest, persistence, synth
from .complexes import build_rips, build_weighted_alpha
from .errors import (ConfigError, DataError, EmptyClass, NoRegionsFound,
                     EmptyInput, ZeroVariance, ZeroVarianceDiff)
from .forest import Dataset, fit as forest_fit, forest_to_json, \
    mdi_importance, predict_proba, random_search_cv
from .pdb_ingest import STABLE, UNSTABLE, WeightedPointCloud
from .stats import (average_precision, hexbin, hexgrid_rows,
                    paired_t_one_tailed, pearson_r, stratified_split)

log = logging.getLogger(__name__)

FEATURE_SET_NAMES = ("SME", "CDER", "CDER+SME")

DEFAULT_FOREST_SPACE = {
    "n_trees": [100],
    "max_depth": [None, 8],
    "min_samples_leaf": [1, 3],
    "max_features": ["sqrt"],
}


@dataclass
class Sample:
    id: str
    score: float
    label: str
    points: np.ndarray
    weights: np.ndarray


@dataclass
class PipelineConfig:
    corpus: dict
    filtration: dict
    dims: list = field(default_factory=lambda: [0, 1])
    threshold: float = 1.0
    subsample_points: int | None = None
    cder_params: dict = field(default_factory=dict)
    forest: dict = field(default_factory=dict)
    feature_sets: list = field(default_factory=lambda: ["CDER"])
    sme_csv: str | None = None
    split_fraction: float = 0.8
    n_repeats: int = 10
    seed: int = 0
    hexbin_side: float | None = None


_CONFIG_KEYS = {
    "corpus", "filtration", "dims", "threshold", "subsample_points",
    "cder", "forest", "feature_sets", "sme_csv", "split_fraction",
    "n_repeats", "seed", "hexbin_side",
}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def parse_config(raw: dict, base_dir: str = ".") -> PipelineConfig:
    """Validate a config dict; relative paths resolve against base_dir."""
    _require(isinstance(raw, dict), "config must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    _require(not unknown, f"unknown config keys: {unknown}")

    def path_of(p):
        return os.path.normpath(os.path.join(base_dir, p))

    corpus = raw.get("corpus")
    _require(isinstance(corpus, dict) and "kind" in corpus,
             "config needs a corpus object with a 'kind'")
    corpus = dict(corpus)
    kind = corpus["kind"]
    if kind == "synthetic":
        unknown = sorted(set(corpus) -
                         {"kind", "n_per_class", "n_points", "noise"})
        _require(not unknown, f"unknown synthetic corpus keys: {unknown}")
        _require(int(corpus.get("n_per_class", 0)) > 0,
                 "synthetic corpus needs n_per_class > 0")
        _require(int(corpus.get("n_points", 0)) >= 4,
                 "synthetic corpus needs n_points >= 4")
        _require(float(corpus.get("noise", 0.0)) >= 0,
                 "noise must be nonnegative")
    elif kind == "pdb":
        unknown = sorted(set(corpus) -
                         {"kind", "pdb_dir", "scores_csv", "downsample"})
        _require(not unknown, f"unknown pdb corpus keys: {unknown}")
        _require("pdb_dir" in corpus and "scores_csv" in corpus,
                 "pdb corpus needs pdb_dir and scores_csv")
        corpus["pdb_dir"] = path_of(corpus["pdb_dir"])
        corpus["scores_csv"] = path_of(corpus["scores_csv"])
        _require(os.path.isdir(corpus["pdb_dir"]),
                 f"pdb_dir not found: {corpus['pdb_dir']}")
        _require(os.path.isfile(corpus["scores_csv"]),
                 f"scores_csv not found: {corpus['scores_csv']}")
        mode = corpus.get("downsample")
        _require(mode in (None, "extremes", "random"),
                 f"downsample must be extremes or random, got {mode!r}")
    else:
        raise ConfigError(f"unknown corpus kind {kind!r}")

    filtration = raw.get("filtration")
    _require(isinstance(filtration, dict) and "kind" in filtration,
             "config needs a filtration object with a 'kind'")
    filtration = dict(filtration)
    fkind = filtration["kind"]
    if fkind == "rips":
        unknown = sorted(set(filtration) - {"kind", "max_scale", "max_dim"})
        _require(not unknown, f"unknown rips keys: {unknown}")
        _require(float(filtration.get("max_scale", 0.0)) > 0,
                 "rips needs max_scale > 0")
        filtration.setdefault("max_dim", 2)
    elif fkind == "weighted-alpha":
        unknown = sorted(set(filtration) - {"kind", "max_dim"})
        _require(not unknown, f"unknown weighted-alpha keys: {unknown}")
        filtration.setdefault("max_dim", 3)
    else:
        raise ConfigError(f"unknown filtration kind {fkind!r}")
    _require(int(filtration["max_dim"]) >= 1, "filtration max_dim must be >= 1")

    dims = raw.get("dims", [0, 1])
    _require(isinstance(dims, list) and dims and
             all(isinstance(d, int) and d >= 0 for d in dims),
             "dims must be a non-empty list of nonnegative integers")
    dims = sorted(set(dims))
    _require(max(dims) < int(filtration["max_dim"]),
             "every feature dim must be below the filtration max_dim, or "
             "its classes can never die")

    cder_params = dict(raw.get("cder", {}))
    unknown = sorted(set(cder_params) - {"entropy_threshold", "min_mass"})
    _require(not unknown, f"unknown cder keys: {unknown}")

    forest = dict(raw.get("forest", {}))
    unknown = sorted(set(forest) - {"space", "n_iter", "k_folds"})
    _require(not unknown, f"unknown forest keys: {unknown}")
    forest.setdefault("space", dict(DEFAULT_FOREST_SPACE))
    forest.setdefault("n_iter", 4)
    forest.setdefault("k_folds", 10)
    _require(int(forest["n_iter"]) > 0, "forest n_iter must be positive")
    _require(int(forest["k_folds"]) >= 2, "forest k_folds must be >= 2")
    space = forest["space"]
    _require(isinstance(space, dict) and space and
             all(isinstance(v, list) and v for v in space.values()),
             "forest space must map names to non-empty option lists")

    feature_sets = raw.get("feature_sets", ["CDER"])
    _require(isinstance(feature_sets, list) and feature_sets,
             "feature_sets must be a non-empty list")
    bad = [f for f in feature_sets if f not in FEATURE_SET_NAMES]
    _require(not bad, f"unknown feature sets: {bad}")
    _require(len(set(feature_sets)) == len(feature_sets),
             "feature_sets has duplicates")
    feature_sets = [f for f in FEATURE_SET_NAMES if f in feature_sets]

    sme_csv = raw.get("sme_csv")
    if sme_csv is not None:
        sme_csv = path_of(sme_csv)
        _require(os.path.isfile(sme_csv), f"sme_csv not found: {sme_csv}")
    needs_sme = [f for f in feature_sets if "SME" in f]
    _require(not (needs_sme and sme_csv is None),
             f"feature sets {needs_sme} need an sme_csv")

    split_fraction = float(raw.get("split_fraction", 0.8))
    _require(0 < split_fraction < 1, "split_fraction must lie in (0, 1)")
    n_repeats = int(raw.get("n_repeats", 10))
    _require(n_repeats >= 1, "n_repeats must be >= 1")
    seed = int(raw.get("seed", 0))

    subsample = raw.get("subsample_points")
    if subsample is not None:
        subsample = int(subsample)
        _require(subsample >= 4, "subsample_points must be >= 4")

    hexbin_side = raw.get("hexbin_side")
    if hexbin_side is not None:
        hexbin_side = float(hexbin_side)
        _require(hexbin_side > 0, "hexbin_side must be positive")

    return PipelineConfig(
        corpus=corpus, filtration=filtration, dims=dims,
        threshold=float(raw.get("threshold", 1.0)),
        subsample_points=subsample, cder_params=cder_params, forest=forest,
        feature_sets=feature_sets, sme_csv=sme_csv,
        split_fraction=split_fraction, n_repeats=n_repeats, seed=seed,
        hexbin_side=hexbin_side)


def load_config(path: str) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


# -- corpus assembly ----------------------------------------------------------


def _label_of(score: float, threshold: float) -> str:
    return STABLE if score > threshold else UNSTABLE


def build_synthetic_corpus(corpus_cfg: dict, threshold: float,
                           seed: int) -> list:
    clouds = synth.make_toy_corpus(
        n_per_class=int(corpus_cfg["n_per_class"]),
        n_points=int(corpus_cfg["n_points"]),
        noise=float(corpus_cfg.get("noise", 0.0)), seed=seed)
    return [Sample(id=c.id, score=c.score,
                   label=_label_of(c.score, threshold), points=c.points,
                   weights=np.zeros(len(c.points)))
            for c in clouds]


def build_pdb_corpus(corpus_cfg: dict, threshold: float, seed: int) -> list:
    pdb_dir = corpus_cfg["pdb_dir"]
    with open(corpus_cfg["scores_csv"], encoding="utf-8") as fh:
        scores = pdb_ingest.load_scores_csv(fh.read())
    names = sorted(n for n in os.listdir(pdb_dir) if n.endswith(".pdb"))
    if not names:
        raise DataError(f"no .pdb files in {pdb_dir}")

    clouds, protos = {}, []
    for name in names:
        sample_id = name[:-4]
        if sample_id not in scores:
            raise DataError(f"no stability score for {sample_id}")
        with open(os.path.join(pdb_dir, name), encoding="utf-8") as fh:
            try:
                atoms = pdb_ingest.parse_pdb(fh.read())
            except DataError as exc:
                raise type(exc)(f"{name}: {exc}") from exc
        clouds[sample_id] = pdb_ingest.assign_weights(atoms)
        protos.append(pdb_ingest.ProteinSample(
            id=sample_id, topology=sample_id.split("_")[0],
            stability_score=scores[sample_id]))

    mode = corpus_cfg.get("downsample")
    if mode is None:
        labeled = pdb_ingest.label_samples(protos, threshold)
    else:
        labeled = pdb_ingest.label_and_downsample(protos, threshold,
                                                  seed=seed, mode=mode)
    return [Sample(id=p.id, score=p.stability_score, label=p.label,
                   points=clouds[p.id].points, weights=clouds[p.id].weights)
            for p in labeled]


def build_corpus(cfg: PipelineConfig) -> list:
    if cfg.corpus["kind"] == "synthetic":
        samples = build_synthetic_corpus(cfg.corpus, cfg.threshold, cfg.seed)
    else:
        samples = build_pdb_corpus(cfg.corpus, cfg.threshold, cfg.seed)
    if cfg.subsample_points is not None:
        for s in samples:
            if len(s.points) > cfg.subsample_points:
                idx = synth.maxmin_indices(s.points, cfg.subsample_points)
                s.points = s.points[idx]
                s.weights = s.weights[idx]
    return samples


# -- persistent homology over the corpus --------------------------------------


def _ph_one(args):
    sample_id, points, weights, filtration = args
    try:
        if filtration["kind"] == "rips":
            fc = build_rips(points, max_scale=float(filtration["max_scale"]),
                            max_dim=int(filtration["max_dim"]))
        else:
            fc = build_weighted_alpha(
                WeightedPointCloud(points=points, weights=weights),
                max_dim=int(filtration["max_dim"]))
        return sample_id, persistence.reduce(fc, source_id=sample_id)
    except DataError as exc:
        raise DataError(f"sample {sample_id}: {exc}") from exc


def compute_diagrams(samples, filtration: dict, jobs: int = 1) -> dict:
    """Persistence diagrams per sample id, in deterministic sample order."""
    tasks = [(s.id, s.points, s.weights, filtration) for s in samples]
    out = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for sample_id, dgs in pool.map(_ph_one, tasks, chunksize=1):
                out[sample_id] = dgs
    else:
        for task in tasks:
            sample_id, dgs = _ph_one(task)
            out[sample_id] = dgs
    return out


def transformed_points(diagrams_by_id: dict, dims) -> dict:
    """{id: {dim: (m, 2) birth/persistence points}} with essentials dropped."""
    out = {}
    for sample_id, dgs in diagrams_by_id.items():
        per_dim = {}
        for dg in dgs:
            if dg.dim in dims:
                td = persistence.transform(persistence.drop_essentials(dg))
                per_dim[dg.dim] = td.points
        out[sample_id] = per_dim
    return out


# -- feature assembly ----------------------------------------------------------


def fit_cder_models(points_by_id: dict, labels_by_id: dict, domain: list,
                    train_ids, dims, entropy_threshold: float,
                    min_mass: float) -> dict:
    """One CderModel per dim, fitted on the training ids only.

    A dim where no region clears the entropy bar contributes an empty model
    (zero features) instead of failing the run.
    """
    models = {}
    for dim in dims:
        clouds = [points_by_id[i].get(dim, np.zeros((0, 2)))
                  for i in train_ids]
        labels = [labels_by_id[i] for i in train_ids]
        dset = cder.assign_weights(clouds, labels, domain=domain)
        try:
            models[dim] = cder.fit(dset, **_cder_kwargs(entropy_threshold,
                                                        min_mass))
        except (NoRegionsFound, EmptyInput) as exc:
            log.warning("dim %d: %s; continuing with zero features", dim, exc)
            models[dim] = cder.CderModel(coordinates=[], meta={
                "entropy_threshold": entropy_threshold,
                "min_mass": min_mass, "note": "no regions found"})
    return models


def _cder_kwargs(entropy_threshold, min_mass):
    kw = {}
    if entropy_threshold is not None:
        kw["entropy_threshold"] = entropy_threshold
    if min_mass is not None:
        kw["min_mass"] = min_mass
    return kw


def cder_feature_matrix(models: dict, points_by_id: dict, ids) -> np.ndarray:
    rows = [cder.vectorize_sample(models, points_by_id[i]) for i in ids]
    return np.array(rows, dtype=float).reshape(len(list(ids)), -1)


def load_sme_table(path: str) -> pdb_ingest.SmeFeatureTable:
    with open(path, encoding="utf-8") as fh:
        return pdb_ingest.load_sme_csv(fh.read())


def assemble_feature_sets(feature_sets, X_cder, names_cder, sme_table, ids):
    """{set name: (matrix, names)} honoring CDER-first column order."""
    out = {}
    X_sme, names_sme = None, None
    if sme_table is not None:
        try:
            X_sme = sme_table.matrix_for(ids)
        except KeyError as exc:
            raise DataError(str(exc)) from exc
        names_sme = [f"sme_{c}" for c in sme_table.columns]
    for name in feature_sets:
        if name == "CDER":
            out[name] = (X_cder, list(names_cder))
        elif name == "SME":
            out[name] = (X_sme, list(names_sme))
        else:
            out[name] = (np.hstack([X_cder, X_sme]),
                         list(names_cder) + list(names_sme))
    return out


# -- artifact writers ----------------------------------------------------------


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                         else v for v in row])
    return buf.getvalue()


def _json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def labels_csv(samples) -> str:
    return _csv_text(["id", "score", "label"],
                     [(s.id, float(s.score), s.label) for s in samples])


def features_csv(ids, names, X) -> str:
    rows = [(i, *map(float, X[k])) for k, i in enumerate(ids)]
    return _csv_text(["id", *names], rows)


def importance_csv(names, importances) -> str:
    return _csv_text(["feature", "importance"],
                     list(zip(names, map(float, importances))))


def predictions_csv(ids, probas, truths) -> str:
    return _csv_text(["id", "proba_unstable", "truth"],
                     [(i, float(p), int(t))
                      for i, p, t in zip(ids, probas, truths)])


def correlation_rows(names_a, X_a, names_b, X_b):
    rows = []
    for i, na in enumerate(names_a):
        for j, nb in enumerate(names_b):
            try:
                r = pearson_r(X_a[:, i], X_b[:, j])
            except ZeroVariance:
                r = float("nan")
            rows.append((na, nb, float(r)))
    return rows


def correlation_csv(rows) -> str:
    return _csv_text(["cder_feature", "sme_feature", "r"], rows)


def hexbin_csv(points, stable_mask, side: float | None) -> str:
    header = ["hex_center_u", "hex_center_v", "signed_count",
              "log_signed_value"]
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return _csv_text(header, [])
    if side is None:
        u_range = float(points[:, 0].max() - points[:, 0].min())
        side = u_range / 50.0 if u_range > 0 else 1.0
    grid = hexbin(points, list(stable_mask), side)
    return _csv_text(header, [(float(u), float(v), int(c), float(g))
                              for u, v, c, g in hexgrid_rows(grid)])


def _set_tag(name: str) -> str:
    return name.lower().replace("+", "_plus_")


# -- the pipeline --------------------------------------------------------------


def _std(values) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def run_pipeline(cfg: PipelineConfig, out_dir: str, jobs: int = 1) -> dict:
    """Run every repeat and write all artifacts; returns the report dict."""
    run_dir = os.path.join(out_dir, f"run_seed{cfg.seed}")
    os.makedirs(run_dir, exist_ok=True)

    samples = build_corpus(cfg)
    ids = [s.id for s in samples]
    labels_by_id = {s.id: s.label for s in samples}
    domain = sorted({s.label for s in samples})
    if len(domain) < 2:
        raise EmptyClass("corpus has a single class after thresholding")
    y_all = np.array([domain.index(s.label) for s in samples])
    _write(os.path.join(run_dir, "labels.csv"), labels_csv(samples))
    log.info("corpus: %d samples (%s)", len(samples),
             ", ".join(f"{d}={int((y_all == k).sum())}"
                       for k, d in enumerate(domain)))

    diagrams_by_id = compute_diagrams(samples, cfg.filtration, jobs=jobs)
    diag_rows, trans_rows = [], []
    for s in samples:
        diag_rows.extend(persistence.diagram_rows(s.id, diagrams_by_id[s.id]))
    points_by_id = transformed_points(diagrams_by_id, set(cfg.dims))
    for s in samples:
        for dim in cfg.dims:
            pts = points_by_id[s.id].get(dim)
            if pts is not None:
                trans_rows.extend((s.id, dim, u, v) for u, v in pts)
    _write(os.path.join(run_dir, "diagrams.csv"),
           persistence.write_diagram_csv(diag_rows))
    _write(os.path.join(run_dir, "transformed.csv"),
           persistence.write_transformed_csv(trans_rows))
    log.info("persistence done: %d finite points across %d samples",
             len(trans_rows), len(samples))

    sme_table = load_sme_table(cfg.sme_csv) if cfg.sme_csv else None
    ct = cfg.cder_params.get("entropy_threshold")
    cm = cfg.cder_params.get("min_mass")

    per_set = {name: {"per_repeat_aps": [], "num_feat": []}
               for name in cfg.feature_sets}
    for r in range(cfg.n_repeats):
        rseed = cfg.seed + r
        rep_dir = os.path.join(run_dir, f"repeat_{r:02d}")
        os.makedirs(rep_dir, exist_ok=True)
        train_ids, valid_ids = stratified_split(
            ids, [labels_by_id[i] for i in ids], cfg.split_fraction,
            seed=rseed)
        _write(os.path.join(rep_dir, "split.json"),
               _json_text({"seed": rseed, "train": train_ids,
                           "valid": valid_ids}))

        models = fit_cder_models(points_by_id, labels_by_id, domain,
                                 train_ids, cfg.dims, ct, cm)
        _write(os.path.join(rep_dir, "cder_model.json"),
               cder.models_to_json(models))
        X_cder = cder_feature_matrix(models, points_by_id, ids)
        names_cder = cder.feature_names(models)
        if "CDER" in cfg.feature_sets and X_cder.shape[1] == 0:
            raise DataError("CDER produced zero features on every dim; "
                            "loosen entropy_threshold or min_mass")

        matrices = assemble_feature_sets(cfg.feature_sets, X_cder,
                                         names_cder, sme_table, ids)
        row_of = {i: k for k, i in enumerate(ids)}
        tr_idx = [row_of[i] for i in train_ids]
        va_idx = [row_of[i] for i in valid_ids]
        y_valid = y_all[va_idx]
        for name in cfg.feature_sets:
            X, names = matrices[name]
            data_train = Dataset(X[tr_idx], y_all[tr_idx], names, train_ids)
            search = random_search_cv(data_train, cfg.forest["space"],
                                      n_iter=int(cfg.forest["n_iter"]),
                                      k_folds=int(cfg.forest["k_folds"]),
                                      seed=rseed)
            model = forest_fit(data_train, search.best_params, seed=rseed)
            probas = predict_proba(model, X[va_idx])
            aps = average_precision(probas, y_valid)
            per_set[name]["per_repeat_aps"].append(float(aps))
            per_set[name]["num_feat"].append(int(X.shape[1]))

            tag = _set_tag(name)
            _write(os.path.join(rep_dir, f"best_params_{tag}.json"),
                   _json_text({"params": search.best_params,
                               "cv_aps": search.best_score}))
            _write(os.path.join(rep_dir, f"importance_{tag}.csv"),
                   importance_csv(names, mdi_importance(model)))
            _write(os.path.join(rep_dir, f"predictions_{tag}.csv"),
                   predictions_csv(valid_ids, probas, y_valid))
            log.info("repeat %d %s: validation APS %.4f (%d features)",
                     r, name, aps, X.shape[1])

    report = {
        "seed": cfg.seed,
        "n_repeats": cfg.n_repeats,
        "n_samples": len(ids),
        "threshold": cfg.threshold,
        "class_counts": {d: int((y_all == k).sum())
                         for k, d in enumerate(domain)},
        "positive_label": domain[1] if len(domain) > 1 else domain[0],
        "feature_sets": {},
    }
    for name in cfg.feature_sets:
        aps_list = per_set[name]["per_repeat_aps"]
        report["feature_sets"][name] = {
            "per_repeat_aps": aps_list,
            "mean_aps": float(np.mean(aps_list)),
            "std_aps": _std(aps_list),
            "num_feat": per_set[name]["num_feat"],
        }
    if "SME" in cfg.feature_sets and "CDER+SME" in cfg.feature_sets:
        combined = per_set["CDER+SME"]["per_repeat_aps"]
        sme_only = per_set["SME"]["per_repeat_aps"]
        try:
            t, p = paired_t_one_tailed(combined, sme_only)
            report["paired_t_combined_gt_sme"] = {"t": t, "p": p}
        except (ZeroVarianceDiff, ValueError) as exc:
            report["paired_t_combined_gt_sme"] = {"t": None, "p": None,
                                                  "note": str(exc)}

    _full_data_artifacts(cfg, run_dir, points_by_id, labels_by_id, domain,
                         ids, y_all, sme_table, ct, cm)
    _hexbin_artifacts(cfg, run_dir, points_by_id, labels_by_id, ids)

    _write(os.path.join(run_dir, "report.json"), _json_text(report))
    return report


def _full_data_artifacts(cfg, run_dir, points_by_id, labels_by_id, domain,
                         ids, y_all, sme_table, ct, cm) -> None:
    """No-split variant: CDER + forest on the whole corpus, for the
    correlation and importance tables."""
    models = fit_cder_models(points_by_id, labels_by_id, domain, ids,
                             cfg.dims, ct, cm)
    _write(os.path.join(run_dir, "cder_model_full.json"),
           cder.models_to_json(models))
    X_cder = cder_feature_matrix(models, points_by_id, ids)
    names_cder = cder.feature_names(models)
    _write(os.path.join(run_dir, "features_cder_full.csv"),
           features_csv(ids, names_cder, X_cder))

    if sme_table is not None:
        try:
            X_sme = sme_table.matrix_for(ids)
        except KeyError as exc:
            raise DataError(str(exc)) from exc
        names_sme = [f"sme_{c}" for c in sme_table.columns]
        _write(os.path.join(run_dir, "correlation.csv"), correlation_csv(
            correlation_rows(names_cder, X_cder, names_sme, X_sme)))
        X_full = np.hstack([X_cder, X_sme])
        names_full = names_cder + names_sme
    else:
        X_full, names_full = X_cder, names_cder

    if X_full.shape[1] == 0:
        log.warning("no features for the full-data model; skipping "
                    "importance.csv")
        return
    data = Dataset(X_full, y_all, names_full, ids)
    search = random_search_cv(data, cfg.forest["space"],
                              n_iter=int(cfg.forest["n_iter"]),
                              k_folds=int(cfg.forest["k_folds"]),
                              seed=cfg.seed)
    model = forest_fit(data, search.best_params, seed=cfg.seed)
    _write(os.path.join(run_dir, "importance.csv"),
           importance_csv(names_full, mdi_importance(model)))
    _write(os.path.join(run_dir, "forest_full.json"), forest_to_json(model))


def _hexbin_artifacts(cfg, run_dir, points_by_id, labels_by_id, ids) -> None:
    for dim in cfg.dims:
        pts, stable_mask = [], []
        for i in ids:
            p = points_by_id[i].get(dim)
            if p is None or len(p) == 0:
                continue
            pts.append(p)
            stable_mask.extend([labels_by_id[i] == STABLE] * len(p))
        pooled = np.vstack(pts) if pts else np.zeros((0, 2))
        _write(os.path.join(run_dir, f"hexbin_h{dim}.csv"),
               hexbin_csv(pooled, stable_mask, cfg.hexbin_side))
