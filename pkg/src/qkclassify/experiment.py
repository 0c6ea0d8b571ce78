"""Experiment protocols: k-fold (or holdout) model comparison, the
feature-count sweep, and the stage helpers the CLI verbs are built from.

Stages run in a fixed order: load, text pipeline (text sources only),
normalize, feature selection, one Gram matrix per kernel model on the full
dataset, then per-fold training and evaluation on sub-blocks of that Gram.
Every stage error is re-raised as :class:`StageError` carrying the stage name.
"""

from __future__ import annotations

import csv
import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, datasets, evaluation, featselect, kernel, svm, textpipe, trees
from .config import QUANTUM_MODELS, ExperimentConfig, config_to_dict, dump_config, materialize
from .evaluation import METRIC_NAMES, FoldSplit
from .sim import MAX_QUBITS


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@contextmanager
def stage(name: str, timings: dict | None = None):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (ValueError, OSError, KeyError) as exc:
        raise StageError(name, str(exc)) from exc
    finally:
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


# -- data preparation -------------------------------------------------------

@dataclass
class PreparedData:
    X: np.ndarray
    y: np.ndarray
    names: list[str]
    kind: str
    info: dict = field(default_factory=dict)


def _is_text_csv(path: Path) -> bool:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    return "text" in [h.strip() for h in header]


def prepare_data(cfg: ExperimentConfig, timings: dict | None = None) -> PreparedData:
    """Load the dataset and apply the text pipeline and normalization."""
    d = cfg.dataset
    docs = None
    with stage("load", timings):
        if d.source == "synthetic_text":
            docs, y = datasets.synthetic_reviews(d.n_samples, d.pos_fraction, d.seed)
        elif d.source == "synthetic_numeric":
            ds = datasets.synthetic_numeric(d.n_samples, d.n_features, d.pos_fraction, d.seed)
        elif d.source == "iris":
            ds = datasets.load_iris(d.iris_classes)
        else:
            path = Path(d.source)
            if not path.is_file():
                raise datasets.DatasetError(
                    f"dataset {d.source!r} is neither a file nor a builtin {datasets.BUILTINS}")
            if _is_text_csv(path):
                docs, y = textpipe.read_text_csv(path)
            else:
                ds = datasets.load_numeric_csv(path)
    info: dict = {"source": d.source}
    if docs is not None:
        with stage("preprocess", timings):
            tokens = textpipe.preprocess_corpus(docs, cfg.clean_options)
            dtm = textpipe.vectorize(tokens, cfg.preprocess.max_vocab)
            X, names, kind = dtm.counts.astype(float), list(dtm.vocabulary.tokens), "text"
            info.update(empty_documents=textpipe.empty_documents(tokens), vocabulary_size=len(names),
                        stopwords_sha256=textpipe.stopwords_digest())
    else:
        X, y, names, kind = ds.X, ds.y, list(ds.feature_names), "numeric"
    scaling = cfg.preprocess.scaling
    if scaling == "auto":
        scaling = "l2" if kind == "text" else "minmax_pi"
    with stage("normalize", timings):
        if scaling == "l2":
            X = textpipe.l2_normalize(X)
        elif scaling == "minmax_pi":
            X = datasets.minmax_scale(X)
    info.update(kind=kind, scaling=scaling, n_samples=int(X.shape[0]), n_columns=int(X.shape[1]),
                n_positive=int(np.sum(y == 1)), n_negative=int(np.sum(y == -1)))
    if info["n_positive"] == 0 or info["n_negative"] == 0:
        raise StageError("load", "dataset must contain both classes")
    return PreparedData(np.asarray(X, dtype=float), np.asarray(y, dtype=int), names, kind, info)


def selection_report(cfg: ExperimentConfig, data: PreparedData, timings=None):
    """Feature ranking on the full prepared matrix (None when selection is off)."""
    s = cfg.selection
    if not s.enabled:
        return None
    with stage("select", timings):
        return featselect.build_selection_report(
            data.X, data.y, data.names, lasso=cfg.lasso_config, forest=cfg.forest_config,
            step=s.rfe_step, n_keep=s.rfe_keep, lambda_grid=s.lasso_grid)


def feature_columns(data: PreparedData, report, k: int | None) -> list[int]:
    d = data.X.shape[1]
    if report is None:
        if d > MAX_QUBITS:
            raise StageError("select", f"{d} columns exceed the {MAX_QUBITS}-qubit limit; enable selection")
        return list(range(d))
    if k > d:
        raise StageError("select", f"k={k} exceeds the {d} available features")
    with stage("select"):
        return featselect.select_features(report, k)


# -- models -----------------------------------------------------------------

def is_kernel_model(name: str) -> bool:
    return name != "decision_tree"


def model_gram(cfg: ExperimentConfig, name: str, X: np.ndarray) -> tuple[np.ndarray, dict]:
    """Full-dataset Gram matrix for a kernel model plus descriptive metadata."""
    if name in QUANTUM_MODELS:
        spec = cfg.feature_map(name)
        G = kernel.gram_matrix(spec, X, cfg.estimation)
        meta = {"feature_map": spec.to_dict(), "estimation": asdict(cfg.estimation)}
        if cfg.estimation.sampled:
            floored = kernel.psd_floor(G)
            meta["psd_floor_applied"] = floored is not G
            G = floored
        return G, meta
    if name == "rbf_svm":
        kind = cfg.rbf_kind.resolve(X)
    elif name == "linear_svm":
        kind = svm.ClassicalKernelKind("linear")
    else:
        raise ValueError(f"{name} has no Gram matrix")
    return svm.classical_gram(X, kind), {"classical_kernel": asdict(kind)}


def gram_filename(name: str) -> str:
    return f"gram_{name}.csv"


def load_gram(gram_dir: Path, name: str, n: int) -> np.ndarray:
    path = Path(gram_dir) / gram_filename(name)
    G = kernel.read_matrix_csv(path)
    if G.shape != (n, n):
        raise ValueError(f"{path} is {G.shape[0]}x{G.shape[1]}, expected {n}x{n}")
    return G


def _kernel_builder(G, y, svm_cfg, log: list):
    def build(train, test):
        model = svm.train_smo(G[np.ix_(train, train)], y[train], svm_cfg)
        log.append({"iterations": model.iterations, "converged": model.converged,
                    "n_support": int(model.support_indices.size)})
        return svm.decision_function(model, G[np.ix_(test, train)])
    return build


def _tree_builder(X, y, tree_cfg):
    def build(train, test):
        model = trees.cart_train(X[train], y[train], tree_cfg)
        return trees.cart_scores(model, X[test])
    return build


def make_split(cfg: ExperimentConfig, y) -> FoldSplit:
    e = cfg.evaluation
    with stage("split"):
        if e.protocol == "cv":
            return evaluation.stratified_folds(y, e.cv_k, e.seed)
        train, test = evaluation.stratified_holdout(y, e.holdout_fraction, e.seed)
        return FoldSplit(1, e.seed, [(train, test)])


def evaluate_model(cfg, name, X, y, split, G=None) -> tuple[evaluation.CvResult, list]:
    log: list = []
    if is_kernel_model(name):
        builder = _kernel_builder(G, y, cfg.svm_config, log)
    else:
        builder = _tree_builder(X, y, cfg.tree_config)
    return evaluation.cross_validate(builder, y, split), log


# -- outputs ----------------------------------------------------------------

CONFUSION_FIELDS = ("tp", "fp", "fn", "tn")


def _fold_label(split: FoldSplit, f: int) -> str:
    return "holdout" if split.k == 1 and len(split) == 1 else str(f)


def write_metrics_csv(path, results: dict, split: FoldSplit) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "fold", *METRIC_NAMES, *CONFUSION_FIELDS])
        for name, res in results.items():
            for fr in res.folds:
                m = fr.metrics.as_dict()
                w.writerow([name, _fold_label(split, fr.fold), *(_fmt(m[k]) for k in METRIC_NAMES),
                            *(getattr(fr.confusion, k) for k in CONFUSION_FIELDS)])
            if len(res.folds) > 1:
                w.writerow([name, "mean", *(_fmt(res.mean[k]) for k in METRIC_NAMES), "", "", "", ""])
                w.writerow([name, "std", *(_fmt(res.std[k]) for k in METRIC_NAMES), "", "", "", ""])


def write_roc_csv(path, results: dict, split: FoldSplit) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "fold", "fpr", "tpr", "threshold"])
        for name, res in results.items():
            for fr in res.folds:
                if fr.metrics.auc is None:
                    continue
                curve, _ = evaluation.roc_auc(fr.scores, fr.y_true)
                for a, b, t in zip(curve.fpr, curve.tpr, curve.thresholds):
                    w.writerow([name, _fold_label(split, fr.fold), _fmt(a), _fmt(b),
                                "inf" if math.isinf(t) else _fmt(t)])


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                          encoding="utf-8")


def _result_record(res: evaluation.CvResult, log: list, split: FoldSplit) -> dict:
    aucs = [(fr.metrics.auc, -fr.fold) for fr in res.folds if fr.metrics.auc is not None]
    best = _fold_label(split, -max(aucs)[1]) if aucs else None
    return {
        "best_auc_fold": best,
        "mean": res.mean,
        "std": res.std,
        "undefined_folds": res.undefined_folds,
        "folds": [
            {"fold": _fold_label(split, fr.fold), "metrics": fr.metrics.as_dict(), "confusion": asdict(fr.confusion),
             "n_test": int(fr.test_indices.size)}
            for fr in res.folds
        ],
        "solver": log,
    }


def comparison_summary(results: dict) -> dict:
    """Which model has the highest mean accuracy, and whether proposed_full
    is at least as accurate as every other rostered model."""
    acc = {n: r.mean["accuracy"] for n, r in results.items()}
    best = max(acc, key=lambda n: (acc[n], n))
    out = {"mean_accuracy": acc, "best_model": best, "proposed_full_ge_all": None}
    if "proposed_full" in acc:
        out["proposed_full_ge_all"] = all(acc["proposed_full"] >= v for v in acc.values())
    return out


# -- protocols --------------------------------------------------------------

def _base_report(cfg: ExperimentConfig, data: PreparedData, report, cols, protocol: str) -> dict:
    return {
        "tool": "qkclassify",
        "version": __version__,
        "protocol": protocol,
        "master_seed": cfg.run.seed,
        "config": config_to_dict(cfg),
        "dataset": data.info,
        "selection": None if report is None else {
            **report.to_dict(),
            "selected_columns": cols,
            "selected_names": [data.names[j] for j in cols],
            "file": "selection.csv",
        },
    }


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None, gram_dir: str | Path | None = None,
                   write_grams: bool = True) -> dict:
    """Compare the rostered models under CV (or a holdout) and write outputs."""
    cfg = materialize(cfg)
    out = Path(out or cfg.run.out)
    timings: dict = {}
    data = prepare_data(cfg, timings)
    report = selection_report(cfg, data, timings)
    cols = feature_columns(data, report, cfg.selection.k)
    X, y = data.X[:, cols], data.y
    split = make_split(cfg, y)

    results, records, grams = {}, {}, {}
    for name in cfg.models.roster:
        G, meta = None, {}
        if is_kernel_model(name):
            with stage("kernel", timings):
                if gram_dir is not None:
                    G, meta = load_gram(gram_dir, name, y.size), {"gram_source": gram_filename(name)}
                else:
                    G, meta = model_gram(cfg, name, X)
            grams[name] = G
            meta["gram_min_eigenvalue"] = kernel.min_eigenvalue(G)
        with stage("train", timings):
            res, log = evaluate_model(cfg, name, X, y, split, G)
        results[name] = res
        records[name] = {**meta, **_result_record(res, log, split)}

    with stage("write", timings):
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "metrics.csv", results, split)
        write_roc_csv(out / "roc.csv", results, split)
        if write_grams:
            for name, G in grams.items():
                kernel.write_matrix_csv(out / gram_filename(name), G)
        if report is not None:
            featselect.write_selection_csv(out / "selection.csv", report)
        (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
        run = _base_report(cfg, data, report, cols, cfg.evaluation.protocol)
        run.update(models=records, comparison=comparison_summary(results),
                   outputs=sorted(p.name for p in out.iterdir() if p.suffix in (".csv", ".ini")) + ["report.json"])
        run["timings_s"] = timings
        write_json(out / "report.json", run)
    return run


def sweep_features(cfg: ExperimentConfig, out: str | Path | None = None) -> dict:
    """Holdout precision_pos for every model and every k in [k_min, k_max]."""
    cfg = materialize(cfg)
    out = Path(out or cfg.run.out)
    timings: dict = {}
    data = prepare_data(cfg, timings)
    report = selection_report(cfg, data, timings)
    s, e = cfg.selection, cfg.evaluation
    if report is None:
        raise StageError("select", "the feature sweep needs selection enabled")
    if s.k_max > data.X.shape[1]:
        raise StageError("select", f"k_max={s.k_max} exceeds the {data.X.shape[1]} available features")
    with stage("split", timings):
        train, test = evaluation.stratified_holdout(data.y, e.holdout_fraction, e.seed)
        split = FoldSplit(1, e.seed, [(train, test)])
    table: dict[int, dict[str, float | None]] = {}
    per_k: dict[str, dict] = {}
    for k in range(s.k_min, s.k_max + 1):
        cols = feature_columns(data, report, k)
        X = data.X[:, cols]
        table[k], per_k[str(k)] = {}, {"selected_names": [data.names[j] for j in cols], "models": {}}
        for name in cfg.models.roster:
            G = None
            if is_kernel_model(name):
                with stage("kernel", timings):
                    G, _ = model_gram(cfg, name, X)
            with stage("train", timings):
                res, log = evaluate_model(cfg, name, X, data.y, split, G)
            fr = res.folds[0]
            table[k][name] = fr.metrics.precision_pos
            per_k[str(k)]["models"][name] = {"metrics": fr.metrics.as_dict(), "confusion": asdict(fr.confusion)}

    with stage("write", timings):
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", *cfg.models.roster])
            for k, row in table.items():
                w.writerow([k, *(_fmt(row[n]) for n in cfg.models.roster)])
        featselect.write_selection_csv(out / "selection.csv", report)
        (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
        run = _base_report(cfg, data, report, report.preference[: s.k_max], "sweep")
        run.update(metric="precision_pos", holdout={"n_train": int(train.size), "n_test": int(test.size)},
                   sweep=per_k, outputs=["config.ini", "report.json", "selection.csv", "sweep.csv"])
        run["timings_s"] = timings
        write_json(out / "report.json", run)
    return run


def read_sweep_csv(path) -> tuple[list[str], dict[int, dict[str, float | None]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    models = rows[0][1:]
    table = {int(r[0]): {m: (float(v) if v != "" else None) for m, v in zip(models, r[1:])} for r in rows[1:]}
    return models, table


# -- single-stage entry points (one per CLI verb) ---------------------------

def _write_common(out: Path, cfg: ExperimentConfig, run: dict, timings: dict) -> None:
    (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    run["timings_s"] = timings
    write_json(out / "report.json", run)


def _write_table(path: Path, names, X, y) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, "label"])
        for row, lab in zip(X, y):
            w.writerow([*(_fmt(v) for v in row), 1 if lab == 1 else 0])


def export_features(cfg: ExperimentConfig, out=None) -> dict:
    """Loaded and normalized matrix as ``features.csv``."""
    cfg = materialize(cfg)
    out = Path(out or cfg.run.out)
    timings: dict = {}
    data = prepare_data(cfg, timings)
    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "features.csv", data.names, data.X, data.y)
    run = _base_report(cfg, data, None, [], "preprocess")
    run["outputs"] = ["config.ini", "features.csv", "report.json"]
    _write_common(out, cfg, run, timings)
    return run


def export_selection(cfg: ExperimentConfig, out=None) -> dict:
    """``selection.csv`` plus the top-k matrix as ``features_selected.csv``."""
    cfg = materialize(cfg)
    out = Path(out or cfg.run.out)
    timings: dict = {}
    data = prepare_data(cfg, timings)
    report = selection_report(cfg, data, timings)
    if report is None:
        raise StageError("select", "selection is disabled in [selection] enabled")
    cols = feature_columns(data, report, cfg.selection.k)
    out.mkdir(parents=True, exist_ok=True)
    featselect.write_selection_csv(out / "selection.csv", report)
    _write_table(out / "features_selected.csv", [data.names[j] for j in cols], data.X[:, cols], data.y)
    run = _base_report(cfg, data, report, cols, "select")
    run["outputs"] = ["config.ini", "features_selected.csv", "report.json", "selection.csv"]
    _write_common(out, cfg, run, timings)
    return run


def export_kernels(cfg: ExperimentConfig, out=None) -> dict:
    """One ``gram_<model>.csv`` per kernel model in the roster."""
    cfg = materialize(cfg)
    out = Path(out or cfg.run.out)
    timings: dict = {}
    data = prepare_data(cfg, timings)
    report = selection_report(cfg, data, timings)
    cols = feature_columns(data, report, cfg.selection.k)
    X = data.X[:, cols]
    out.mkdir(parents=True, exist_ok=True)
    run = _base_report(cfg, data, report, cols, "kernel")
    run["kernels"] = {}
    for name in cfg.models.roster:
        if not is_kernel_model(name):
            continue
        with stage("kernel", timings):
            G, meta = model_gram(cfg, name, X)
            kernel.write_matrix_csv(out / gram_filename(name), G)
        run["kernels"][name] = {**meta, "gram_min_eigenvalue": kernel.min_eigenvalue(G), "file": gram_filename(name)}
    run["outputs"] = sorted(["config.ini", "report.json", *(v["file"] for v in run["kernels"].values())])
    _write_common(out, cfg, run, timings)
    return run


def fit_models(cfg: ExperimentConfig, out=None, gram_dir=None) -> dict:
    """Train each model once and save it as ``model_<name>.json``.

    The training rows are the holdout train split under ``protocol = holdout``
    and the whole dataset under ``protocol = cv``.
    """
    cfg = materialize(cfg)
    out = Path(out or cfg.run.out)
    timings: dict = {}
    data = prepare_data(cfg, timings)
    report = selection_report(cfg, data, timings)
    cols = feature_columns(data, report, cfg.selection.k)
    X, y = data.X[:, cols], data.y
    if cfg.evaluation.protocol == "holdout":
        train = make_split(cfg, y).folds[0][0]
    else:
        train = np.arange(y.size)
    out.mkdir(parents=True, exist_ok=True)
    run = _base_report(cfg, data, report, cols, "train")
    run["models"] = {}
    for name in cfg.models.roster:
        record = {"model": name, "train_indices": train.tolist(), "columns": cols}
        if is_kernel_model(name):
            with stage("kernel", timings):
                if gram_dir is not None:
                    G, meta = load_gram(gram_dir, name, y.size), {"gram_source": gram_filename(name)}
                else:
                    G, meta = model_gram(cfg, name, X)
            with stage("train", timings):
                model = svm.train_smo(G[np.ix_(train, train)], y[train], cfg.svm_config)
            record.update(meta, svm=model.to_dict())
        else:
            with stage("train", timings):
                tree = trees.cart_train(X[train], y[train], cfg.tree_config)
            record["tree"] = {k: getattr(tree, k) for k in ("n_features", "feature", "threshold", "left", "right",
                                                            "positive_fraction")}
        fname = f"model_{name}.json"
        write_json(out / fname, record)
        run["models"][name] = fname
    run["outputs"] = sorted(["config.ini", "report.json", *run["models"].values()])
    _write_common(out, cfg, run, timings)
    return run
