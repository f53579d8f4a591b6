"""Command-line driver: ingest -> featurize -> train -> evaluate plus
assessment, drift, context-extraction, mining, and gradient-check
subcommands.

Every run writes a manifest (effective config, its hash, seed, library
versions) into the output directory right after config parsing, so even
failed runs leave a record.  With a fixed config and seed every emitted
artifact is byte-identical across reruns: nothing here embeds
timestamps or wall-clock measurements.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import load_dataset
from .drift import drift_report
from .evaluation import (
    POLICIES,
    compute_metrics,
    grid_search,
    grid_table_csv,
    mean_report_scores,
    rounds12_splits,
    rounds10_wrap_splits,
    time_kfold_splits,
)
from .features import standard_configs, transform, FeatureModel, build_char_vocab, build_word_vocab, aggregate_char_word
from .models import (
    CLASSIFIER_KINDS,
    ClassifierSpec,
    TrainedModel,
    predict,
    standard_classifier_grid,
    train_classifier,
)
from .neural import (
    AcGruConfig,
    CommitInput,
    backward,
    forward,
    init_parameters,
    multitask_loss,
)
from .pumine import ContentFilterConfig, content_filter_jsonl, load_keywords
from .scopes import CONTEXT_MODES, ContextConfig, build_input, context_indices
from .textprep import preprocess_text, tokenize_code

logger = logging.getLogger("svassess")

GRANULARITIES = ("report", "function", "commit")
CLI_PROTOCOLS = ("time_kfold", "rounds12", "rounds10")
SUBCOMMANDS = (
    "ingest",
    "featurize",
    "train",
    "evaluate",
    "assess",
    "drift",
    "context",
    "mine",
    "gradcheck",
)
# deterministic stand-in for training expense, used only to break ranking
# ties: relative fit cost per record by classifier kind
COST_PER_RECORD = {
    "naive_bayes": 1,
    "logistic_regression": 100,
    "linear_svm": 100,
    "knn": 0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract is 1
        raise UsageError(f"{message}\n{self.format_usage()}")


@dataclass(frozen=True)
class PipelineConfig:
    command: str
    dataset: str | None = None
    granularity: str = "report"
    protocol: str = "time_kfold"
    policy: str = "ch3"
    seed: int = 0
    workers: int = 1
    out: str = "assess_out"
    mode: str = "vuln_only"
    time_k: int = 2
    feature_configs: tuple[int, ...] = (1,)
    classifiers: tuple[str, ...] = ("naive_bayes",)
    record: str | None = None
    models: str | None = None
    keywords: str | None = None
    site: str = "SO"
    step: int = 1

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"granularity must be one of {GRANULARITIES}")
        if self.protocol not in CLI_PROTOCOLS:
            raise ValueError(f"protocol must be one of {CLI_PROTOCOLS}")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.mode not in CONTEXT_MODES:
            raise ValueError(f"mode must be one of {CONTEXT_MODES}")
        if self.workers < 1 or self.time_k < 1:
            raise ValueError("workers and time_k must be at least 1")
        n_feature_configs = len(standard_configs())
        if not self.feature_configs or any(
            not (1 <= i <= n_feature_configs) for i in self.feature_configs
        ):
            raise ValueError(
                f"feature_configs must be indices in 1..{n_feature_configs}"
            )
        if not self.classifiers or any(
            kind not in CLASSIFIER_KINDS for kind in self.classifiers
        ):
            raise ValueError(f"classifiers must come from {CLASSIFIER_KINDS}")
        for attr in ("dataset", "record", "keywords"):
            path = getattr(self, attr)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{attr} path does not exist: {path}")

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "dataset": self.dataset,
            "granularity": self.granularity,
            "protocol": self.protocol,
            "policy": self.policy,
            "seed": self.seed,
            "workers": self.workers,
            "out": self.out,
            "mode": self.mode,
            "time_k": self.time_k,
            "feature_configs": list(self.feature_configs),
            "classifiers": list(self.classifiers),
            "record": self.record,
            "models": self.models,
            "keywords": self.keywords,
            "site": self.site,
            "step": self.step,
        }


def build_parser() -> _Parser:
    parser = _Parser(prog="assess", description="vulnerability assessment workbench")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--dataset", help="input JSONL dataset")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out")
        sp.add_argument("--granularity", choices=GRANULARITIES)
        sp.add_argument("--mode", choices=CONTEXT_MODES)
        sp.add_argument("--protocol", choices=CLI_PROTOCOLS)
        sp.add_argument("--policy", choices=POLICIES)
    return parser


_FLAG_KEYS = (
    "dataset",
    "seed",
    "workers",
    "out",
    "granularity",
    "mode",
    "protocol",
    "policy",
)


def effective_config(ns: argparse.Namespace) -> PipelineConfig:
    """JSON config file first, command-line flags on top."""
    raw: dict = {}
    if ns.config:
        path = Path(ns.config)
        if not path.exists():
            raise ValueError(f"config file does not exist: {path}")
        raw = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
    for key in _FLAG_KEYS:
        value = getattr(ns, key)
        if value is not None:
            raw[key] = value
    known = set(PipelineConfig.__dataclass_fields__) - {"command"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for tuple_key in ("feature_configs", "classifiers"):
        if tuple_key in raw:
            raw[tuple_key] = tuple(raw[tuple_key])
    return PipelineConfig(command=ns.command, **raw)


def write_manifest(cfg: PipelineConfig) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    config_dict = cfg.to_dict()
    digest = hashlib.sha256(
        json.dumps(config_dict, sort_keys=True).encode("utf-8")
    ).hexdigest()
    manifest = {
        "config": config_dict,
        "config_sha256": digest,
        "seed": cfg.seed,
        "versions": {"svassess": __version__, "numpy": np.version.version},
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Shared pipeline pieces
# ---------------------------------------------------------------------------


def _require_dataset(cfg: PipelineConfig) -> str:
    if not cfg.dataset:
        raise ValueError(f"{cfg.command} needs a dataset (--dataset or config)")
    return cfg.dataset


def _tokenize(record, granularity: str) -> list[str]:
    if granularity == "report":
        return preprocess_text(record.description)
    if granularity == "function":
        return tokenize_code("\n".join(record.lines))
    return tokenize_code(record.diff_text)


def _split_plan(cfg: PipelineConfig, records):
    if cfg.protocol == "time_kfold":
        return time_kfold_splits(records, cfg.time_k)
    if cfg.protocol == "rounds12":
        return rounds12_splits(records)
    return rounds10_wrap_splits(records, seed=cfg.seed)


def _fit_features(docs, nlp_config):
    word_vocab = build_word_vocab(docs, nlp_config)
    char_vocab = build_char_vocab(docs, nlp_config)
    return aggregate_char_word(
        docs, word_vocab, char_vocab, nlp_config.char_min, nlp_config.char_max, nlp_config
    )


@dataclass(frozen=True)
class GridPoint:
    """One grid cell: a text-feature recipe paired with a classifier."""

    feature_config: int
    classifier: ClassifierSpec

    @property
    def n_hyperparameters(self) -> int:
        return self.classifier.n_hyperparameters

    def describe(self) -> str:
        return f"nlp{self.feature_config}|{self.classifier.describe()}"


def _grid_points(cfg: PipelineConfig) -> list[GridPoint]:
    points = []
    for idx in cfg.feature_configs:
        for spec in standard_classifier_grid():
            if spec.kind in cfg.classifiers:
                points.append(GridPoint(feature_config=idx, classifier=spec))
    return points


def _task_slug(task: str) -> str:
    return task.lower().replace(" ", "_")


def emit_report(rows: list[tuple[str, dict | None]]) -> str:
    """Aligned per-task table plus an average row; tasks without scores
    show n/a."""
    header = ("task", "accuracy", "macro_f1", "weighted_f1", "mcc")
    keys = ("accuracy", "macro_f1", "weighted_f1", "mcc")
    scored = [s for _, s in rows if s is not None]
    body = list(rows)
    if scored:
        body.append(
            (
                "average",
                {k: sum(s[k] for s in scored) / len(scored) for k in keys},
            )
        )
    name_width = max(len(header[0]), *(len(name) for name, _ in body))
    widths = [max(len(k), 11) for k in header[1:]]
    lines = [
        header[0].ljust(name_width)
        + "".join("  " + h.rjust(w) for h, w in zip(header[1:], widths))
    ]
    for name, scores in body:
        cells = []
        for key, width in zip(keys, widths):
            text = "n/a" if scores is None else f"{scores[key]:.4f}"
            cells.append("  " + text.rjust(width))
        lines.append(name.ljust(name_width) + "".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_ingest(cfg: PipelineConfig) -> int:
    ds = load_dataset(_require_dataset(cfg), cfg.granularity)
    label_counts: dict[str, dict[str, int]] = {}
    dates = []
    for record in ds:
        dates.append(getattr(record, "published_date", None) or record.date)
        for task, cls in record.labels.items():
            label_counts.setdefault(task, {}).setdefault(cls, 0)
            label_counts[task][cls] += 1
    summary = {
        "records": len(ds),
        "granularity": cfg.granularity,
        "tasks": list(ds.tasks),
        "label_counts": label_counts,
        "date_min": min(dates).isoformat(),
        "date_max": max(dates).isoformat(),
    }
    (Path(cfg.out) / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"ingested {len(ds)} {cfg.granularity} records, {len(ds.tasks)} tasks")
    return 0


def _cmd_featurize(cfg: PipelineConfig) -> int:
    ds = load_dataset(_require_dataset(cfg), cfg.granularity)
    docs = [_tokenize(r, cfg.granularity) for r in ds]
    nlp = standard_configs()[cfg.feature_configs[0] - 1]
    model, vectors = _fit_features(docs, nlp)
    out = Path(cfg.out)
    (out / "feature_model.json").write_text(model.to_json() + "\n", encoding="utf-8")
    stats = {
        "feature_config": cfg.feature_configs[0],
        "width": model.width,
        "word_terms": len(model.word_vocab),
        "char_terms": len(model.char_vocab),
        "nonzeros": int(sum(len(v.indices) for v in vectors)),
    }
    (out / "feature_stats.json").write_text(
        json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"feature width {model.width} over {len(docs)} docs")
    return 0


def _load_corpus(cfg: PipelineConfig):
    ds = load_dataset(_require_dataset(cfg), cfg.granularity)
    docs = {r.id: _tokenize(r, cfg.granularity) for r in ds}
    labels = {
        task: {r.id: r.labels[task] for r in ds} for task in ds.tasks
    }
    return ds, docs, labels


class _FeatureCache:
    """Per (feature config, fold) fitted models and vectors, shared by
    every task and classifier in a run - the features do not depend on
    either, so each pair is fitted exactly once."""

    def __init__(self, docs):
        self.docs = docs
        self._fits: dict = {}

    def fold_vectors(self, feature_config: int, fold):
        key = (feature_config, fold)
        if key not in self._fits:
            nlp = standard_configs()[feature_config - 1]
            model, train_vecs = _fit_features(
                [self.docs[i] for i in fold.train_ids], nlp
            )
            vecs = dict(zip(fold.train_ids, train_vecs))
            for i in fold.val_ids:
                vecs[i] = transform(model, self.docs[i])
            self._fits[key] = vecs
        return self._fits[key]

    def full_fit(self, feature_config: int, ids):
        key = (feature_config, None)
        if key not in self._fits:
            nlp = standard_configs()[feature_config - 1]
            model, vecs = _fit_features([self.docs[i] for i in ids], nlp)
            self._fits[key] = (model, dict(zip(ids, vecs)))
        return self._fits[key]


def _make_task_evaluator(cfg, cache: _FeatureCache, task_labels):
    def evaluate_point(point, fold):
        vecs = cache.fold_vectors(point.feature_config, fold)
        clf = train_classifier(
            point.classifier,
            [vecs[i] for i in fold.train_ids],
            [task_labels[i] for i in fold.train_ids],
            seed=cfg.seed,
        )
        predicted, _ = predict(clf, [vecs[i] for i in fold.val_ids])
        gold = [task_labels[i] for i in fold.val_ids]
        return compute_metrics(gold, predicted)

    return evaluate_point


def _cmd_train(cfg: PipelineConfig) -> int:
    ds, docs, labels = _load_corpus(cfg)
    plan = _split_plan(cfg, ds.records)
    grid = _grid_points(cfg)
    n_records = len(ds)
    cache = _FeatureCache(docs)
    all_ids = tuple(r.id for r in ds)

    def train_cost(point):
        return COST_PER_RECORD[point.classifier.kind] * n_records

    out = Path(cfg.out)
    models_dir = out / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    selected = {}
    for task in ds.tasks:
        evaluate_point = _make_task_evaluator(cfg, cache, labels[task])

        def refit(point):
            model, vecs = cache.full_fit(point.feature_config, all_ids)
            clf = train_classifier(
                point.classifier,
                [vecs[i] for i in all_ids],
                [labels[task][i] for i in all_ids],
                seed=cfg.seed,
            )
            return model, clf

        (feature_model, classifier), best, table = grid_search(
            grid, plan, cfg.policy, evaluate_point, refit, train_cost=train_cost
        )
        slug = _task_slug(task)
        (out / f"grid_{slug}.csv").write_text(grid_table_csv(table), encoding="utf-8")
        bundle = {
            "task": task,
            "feature_config": best.spec.feature_config,
            "classifier_spec": best.spec.classifier.to_dict(),
            "feature_model": json.loads(feature_model.to_json()),
            "classifier": json.loads(classifier.to_json()),
        }
        (models_dir / f"{slug}.json").write_text(
            json.dumps(bundle, sort_keys=True) + "\n", encoding="utf-8"
        )
        selected[task] = {
            "feature_config": best.spec.feature_config,
            "classifier_spec": best.spec.classifier.to_dict(),
            "mean_scores": best.mean_scores,
            "n_folds": best.n_folds,
        }
        print(f"{task}: {best.spec.describe()} acc={best.mean_scores['accuracy']:.4f}")
    (out / "selected.json").write_text(
        json.dumps(selected, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def _cmd_evaluate(cfg: PipelineConfig) -> int:
    out = Path(cfg.out)
    selected_path = Path(cfg.models) if cfg.models else out / "selected.json"
    if selected_path.is_dir():
        selected_path = selected_path / "selected.json"
    if not selected_path.exists():
        raise ValueError(f"no selection at {selected_path}; run the train subcommand first")
    selected = json.loads(selected_path.read_text(encoding="utf-8"))
    ds, docs, labels = _load_corpus(cfg)
    plan = _split_plan(cfg, ds.records)
    cache = _FeatureCache(docs)
    metrics = {}
    rows = []
    for task in ds.tasks:
        if task not in selected:
            raise ValueError(f"selection file lacks task {task!r}")
        point = GridPoint(
            feature_config=int(selected[task]["feature_config"]),
            classifier=ClassifierSpec.from_dict(selected[task]["classifier_spec"]),
        )
        evaluate_point = _make_task_evaluator(cfg, cache, labels[task])
        fold_reports = [
            evaluate_point(point, fold) for fold in plan.tuples if fold.val_ids
        ]
        if fold_reports:
            mean = mean_report_scores(fold_reports)
            metrics[task] = {
                "config": point.describe(),
                "folds": [r.to_dict() for r in fold_reports],
                "mean": mean,
            }
            rows.append((task, mean))
        else:
            metrics[task] = {"config": point.describe(), "folds": [], "mean": None}
            rows.append((task, None))
    (out / "metrics.json").write_text(
        json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    report = emit_report(rows)
    (out / "report.txt").write_text(report, encoding="utf-8")
    print(report, end="")
    return 0


def _cmd_assess(cfg: PipelineConfig) -> int:
    if not cfg.record:
        raise ValueError("assess needs a record JSON file (config key: record)")
    obj = json.loads(Path(cfg.record).read_text(encoding="utf-8"))
    description = obj.get("description")
    if not isinstance(description, str) or not description.strip():
        raise ValueError("record file needs a non-empty 'description'")
    models_dir = Path(cfg.models) if cfg.models else Path(cfg.out) / "models"
    bundles = sorted(models_dir.glob("*.json"))
    if not bundles:
        raise ValueError(f"no model bundles in {models_dir}; run the train subcommand first")
    tokens = preprocess_text(description)
    assessment = {}
    for path in bundles:
        bundle = json.loads(path.read_text(encoding="utf-8"))
        feature_model = FeatureModel.from_json(json.dumps(bundle["feature_model"]))
        classifier = TrainedModel.from_json(json.dumps(bundle["classifier"]))
        vec = transform(feature_model, tokens)
        predicted, _ = predict(classifier, [vec])
        assessment[bundle["task"]] = predicted[0]
    payload = {"id": obj.get("id"), "labels": assessment}
    (Path(cfg.out) / "assessment.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_drift(cfg: PipelineConfig) -> int:
    ds = load_dataset(_require_dataset(cfg), cfg.granularity)
    dated = []
    for r in ds:
        date = getattr(r, "published_date", None) or r.date
        dated.append((r.id, date.year, _tokenize(r, cfg.granularity)))
    last_year = max(year for _, year, _ in dated)
    train_docs = [tokens for _, year, tokens in dated if year < last_year]
    if not train_docs:  # single-year corpus: no held-out year to contrast
        train_docs = [tokens for _, _, tokens in dated]
    nlp = standard_configs()[cfg.feature_configs[0] - 1]
    model, _ = _fit_features(train_docs, nlp)
    report = drift_report(model, dated)
    out = Path(cfg.out)
    (out / "drift.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "new_terms.csv").write_text(report.new_terms_csv(), encoding="utf-8")
    for year in sorted(report.coverage_by_year):
        new = report.new_terms.get(year, 0)
        print(
            f"{year}: new_terms={new} coverage={report.coverage_by_year[year]:.4f}"
        )
    print(f"all-zero records: {len(report.all_zero_ids)}")
    return 0


def _cmd_context(cfg: PipelineConfig) -> int:
    if cfg.granularity != "function":
        raise ValueError("context extraction works on --granularity function")
    ds = load_dataset(_require_dataset(cfg), cfg.granularity)
    context_cfg = ContextConfig()
    lines = []
    for record in ds:
        vuln, ctx = context_indices(record, cfg.mode, context_cfg, seed=cfg.seed)
        tokens = build_input(record, cfg.mode, context_cfg, seed=cfg.seed)
        lines.append(
            json.dumps(
                {
                    "id": record.id,
                    "mode": cfg.mode,
                    "vulnerable": sorted(vuln),
                    "context": sorted(ctx),
                    "tokens": tokens,
                },
                sort_keys=True,
            )
        )
    (Path(cfg.out) / "contexts.jsonl").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )
    print(f"extracted {cfg.mode} context for {len(lines)} functions")
    return 0


def _cmd_mine(cfg: PipelineConfig) -> int:
    if not cfg.keywords:
        raise ValueError("mine needs a keyword list (config key: keywords)")
    if cfg.step not in (1, 2):
        raise ValueError("step must be 1 or 2")
    ds = load_dataset(_require_dataset(cfg), "post")
    with open(cfg.keywords, "r", encoding="utf-8") as fh:
        keywords = load_keywords(fh)
    posts = [p for p in ds if p.site == cfg.site]
    filter_config = ContentFilterConfig()
    out = Path(cfg.out)
    kept = content_filter_jsonl(posts, cfg.site, cfg.step, filter_config, keywords)
    (out / "mined.jsonl").write_text(kept, encoding="utf-8")
    (out / "filter_config.json").write_text(
        json.dumps(filter_config.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    n_kept = len([ln for ln in kept.splitlines() if ln])
    print(f"kept {n_kept} of {len(posts)} {cfg.site} posts at step {cfg.step}")
    return 0


def _numeric_gradient(fn, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn()
        flat[i] = orig - h
        fm = fn()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def _cmd_gradcheck(cfg: PipelineConfig) -> int:
    net_cfg = AcGruConfig(
        vocab_size=50,
        input_len=12,
        embed_dim=8,
        filter_sizes=(1, 3, 5),
        filters_per_size=4,
        gru_hidden=6,
        attention_hidden=6,
        tasks=(("task_a", 3), ("task_b", 2)),
        dropout=0.0,
        seed=cfg.seed,
    )
    params = init_parameters(net_cfg)
    rng = np.random.default_rng(cfg.seed)
    inp = CommitInput(
        *[rng.integers(0, net_cfg.vocab_size, size=net_cfg.input_len) for _ in range(4)]
    )
    gold = {"task_a": 1, "task_b": 0}
    _, cache = forward(params, net_cfg, inp)
    analytic = backward(params, net_cfg, cache, gold)

    def loss_now():
        _, c = forward(params, net_cfg, inp)
        return multitask_loss(c["probs"], gold)

    results = {}
    worst = 0.0
    for name in params.names():
        numeric = _numeric_gradient(loss_now, params.data[name])
        a = analytic[name].reshape(-1)
        n = numeric.reshape(-1)
        # near-zero components are compared absolutely (floor 1e-6) since
        # h=1e-5 central differences carry ~1e-11 of float64 roundoff
        rel = np.abs(a - n) / np.maximum(1e-6, np.abs(a) + np.abs(n))
        results[name] = float(rel.max())
        worst = max(worst, results[name])
    passed = worst < 1e-4
    (Path(cfg.out) / "gradcheck.json").write_text(
        json.dumps(
            {"max_relative_error": results, "passed": passed}, indent=2, sort_keys=True
        )
        + "\n",
        encoding="utf-8",
    )
    for name in sorted(results):
        print(f"{name}: {results[name]:.3e}")
    print(f"gradcheck {'PASSED' if passed else 'FAILED'} (worst {worst:.3e})")
    return 0 if passed else 2


_COMMANDS = {
    "ingest": _cmd_ingest,
    "featurize": _cmd_featurize,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "assess": _cmd_assess,
    "drift": _cmd_drift,
    "context": _cmd_context,
    "mine": _cmd_mine,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ASSESS_LOG", "WARNING").upper())
    parser = build_parser()
    try:
        ns = parser.parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if not ns.command:
        print(parser.format_usage(), file=sys.stderr)
        return 1
    try:
        cfg = effective_config(ns)
    except (ValueError, TypeError, OSError) as exc:
        logger.error("invalid configuration: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        write_manifest(cfg)
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[cfg.command](cfg)
    except (ValueError, FileNotFoundError) as exc:
        logger.error("%s failed: %s", cfg.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("%s crashed", cfg.command)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
