"""Command-line interface: train, cv, gridsearch, predict, evaluate."""

from __future__ import annotations

import argparse
import csv
import io
import sys

from .config import RUN_KEYS, ConfigError, RunConfig, format_value, read_config_file
from .corpus import CorpusError, Dataset, augment_minority, load_olid_tsv
from .evaluation import (
    DEFAULT_GRIDS,
    EvaluationError,
    cross_validate,
    evaluate,
    expand_grid,
    grid_search,
)
from .neural import TrainingDiverged
from .persistence import ArtifactError, load_model, save_model, write_atomic
from .pipeline import MODEL_KINDS, build_pipeline
from .preprocess import MODES, load_verb_exceptions

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAINING = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _add_common(p, data=True):
    p.add_argument("--task", required=True, choices=["a", "b", "c"], type=str.lower)
    p.add_argument("--model", required=True, choices=sorted(MODEL_KINDS))
    if data:
        p.add_argument("--data", required=True, help="labeled OLID TSV file")
    p.add_argument("--config", help="'key = value' hyperparameter file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preprocess", choices=MODES, help="root reduction mode")
    p.add_argument("--augment", action="store_true", default=None,
                   help="add synthetic minority-class tweets to training data")
    p.add_argument("--target-ratio", type=float, help="minority/majority ratio to augment up to")
    p.add_argument("--drop-hashtag-body", action="store_true", default=None,
                   help="remove whole hashtags instead of only the '#'")
    p.add_argument("--exceptions", help="verb exception table for --preprocess lemma")


def build_parser():
    parser = argparse.ArgumentParser(prog="offdetect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a labeled file and save it")
    _add_common(p)
    p.add_argument("--out", required=True, help="model artifact path")

    p = sub.add_parser("cv", help="k-fold cross-validation report")
    _add_common(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--report", help="also write a key=value report file")

    p = sub.add_parser("gridsearch", help="cross-validated grid search")
    _add_common(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--report", help="also write a key=value report file")
    p.add_argument("--out", help="train the best config on all data and save it here")

    p = sub.add_parser("predict", help="label tweets with a saved model")
    p.add_argument("--model", required=True, help="model artifact path")
    p.add_argument("--data", required=True, help="TSV with id and tweet columns")
    p.add_argument("--out", required=True, help="predictions CSV path")

    p = sub.add_parser("evaluate", help="score a predictions CSV against gold labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--task", choices=["a", "b", "c"], type=str.lower,
                   help="score over the task's full class list")
    return parser


def _run_config(args, entries=None):
    entries = read_config_file(args.config) if args.config and entries is None else (entries or {})
    return RunConfig.from_entries(
        args.task, args.model, args.seed, entries,
        preprocess_mode=args.preprocess, augment=args.augment,
        target_ratio=args.target_ratio, drop_hashtag_body=args.drop_hashtag_body,
    )


def _exceptions(args):
    return load_verb_exceptions(args.exceptions) if getattr(args, "exceptions", None) else None


def _estimator(cfg: RunConfig, exceptions, hyper=None):
    return build_pipeline(cfg.model, cfg.preprocess_mode, cfg.seed, cfg.drop_hashtag_body,
                          exceptions, **(cfg.hyperparameters if hyper is None else hyper))


def _load(args) -> Dataset:
    return load_olid_tsv(args.data, args.task.upper())


def _fit_full(cfg, ds, exceptions):
    train = augment_minority(ds, cfg.target_ratio, cfg.seed) if cfg.augment else ds
    pipe = _estimator(cfg, exceptions).fit(train.texts(), train.labels())
    return pipe


def cmd_train(args, out):
    cfg = _run_config(args)
    exceptions = _exceptions(args)
    ds = _load(args)
    pipe = _fit_full(cfg, ds, exceptions)
    pred = [str(v) for v in pipe.predict(ds.texts())]
    report = evaluate(ds.labels(), pred, ds.classes)
    clf = pipe.named_steps["clf"]
    loss = getattr(clf, "loss_curve_", None)
    if loss is not None and len(loss):
        print(f"final training loss: {loss[-1]:.6f}", file=out)
    print(f"training accuracy: {report.accuracy:.6f} macro_f1: {report.macro_f1:.6f}", file=out)
    write_atomic(args.out, save_model(pipe, cfg))
    print(f"saved {cfg.model} model to {args.out}", file=out)


def _cv_lines(report, prefix=""):
    human = [
        f"{prefix}fold {i}: macro_f1={r.macro_f1:.6f} accuracy={r.accuracy:.6f} n={r.n}"
        for i, r in enumerate(report.per_fold, start=1)
    ]
    human.append(f"{prefix}mean: macro_f1={report.mean_macro_f1:.6f} "
                 f"accuracy={report.mean_accuracy:.6f}")
    kv = []
    for i, r in enumerate(report.per_fold, start=1):
        kv += [f"fold.{i}.macro_f1={r.macro_f1!r}", f"fold.{i}.accuracy={r.accuracy!r}",
               f"fold.{i}.n={r.n}"]
    kv += [f"mean.macro_f1={report.mean_macro_f1!r}", f"mean.accuracy={report.mean_accuracy!r}"]
    return human, kv


def cmd_cv(args, out):
    cfg = _run_config(args)
    exceptions = _exceptions(args)
    ds = _load(args)
    report = cross_validate(_estimator(cfg, exceptions), ds, args.k, cfg.seed, cfg.augment_ratio)
    human, kv = _cv_lines(report)
    header = [f"task={cfg.task}", f"model={cfg.model}", f"k={args.k}", f"seed={cfg.seed}"]
    if args.report:
        write_atomic(args.report, "\n".join(header + kv) + "\n")
    print("\n".join(human + [""] + kv), file=out)


def _describe(cfg):
    return " ".join(f"{k}={format_value(v)}" for k, v in cfg.items()) or "(defaults)"


def cmd_gridsearch(args, out):
    entries = read_config_file(args.config) if args.config else {
        k: list(v) for k, v in DEFAULT_GRIDS[args.model].items()
    }
    run_keys = {k: v for k, v in entries.items() if k in RUN_KEYS}
    grid_keys = {k: v for k, v in entries.items() if k not in run_keys}
    cfg = _run_config(args, run_keys)
    if not grid_keys:
        raise ConfigError("parameter grid is empty")
    grid = expand_grid(grid_keys)
    for hyper in grid:  # validate every key before any training starts
        RunConfig(cfg.task, cfg.model, cfg.preprocess_mode, cfg.seed, hyper)
    exceptions = _exceptions(args)
    ds = _load(args)
    result = grid_search(lambda hyper: _estimator(cfg, exceptions, hyper), grid, ds, args.k,
                         cfg.seed, cfg.augment_ratio)
    human, kv = [], [f"task={cfg.task}", f"model={cfg.model}", f"k={args.k}", f"seed={cfg.seed}"]
    for i, (hyper, score) in enumerate(result.all, start=1):
        human.append(f"config {i}: {_describe(hyper)} mean_macro_f1={score:.6f}")
        kv.append(f"config.{i}.params={_describe(hyper)}")
        kv.append(f"config.{i}.mean_macro_f1={score!r}")
    human.append(f"best: {_describe(result.best_config)} mean_macro_f1={result.best_score:.6f}")
    kv.append(f"best.params={_describe(result.best_config)}")
    kv.append(f"best.mean_macro_f1={result.best_score!r}")
    if args.out:
        best_cfg = RunConfig(cfg.task, cfg.model, cfg.preprocess_mode, cfg.seed,
                             result.best_config, cfg.augment, cfg.target_ratio,
                             cfg.drop_hashtag_body)
        pipe = _fit_full(best_cfg, ds, exceptions)
        blob = save_model(pipe, best_cfg)
    if args.report:
        write_atomic(args.report, "\n".join(kv) + "\n")
    if args.out:
        write_atomic(args.out, blob)
    print("\n".join(human + [""] + kv), file=out)


def cmd_predict(args, out):
    with open(args.model, "rb") as fh:
        pipe, cfg = load_model(fh.read())
    ds = load_olid_tsv(args.data, cfg.task.upper(), labeled=False)
    labels = [str(v) for v in pipe.predict(ds.texts())] if len(ds) else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label"])
    writer.writerows(zip(ds.ids(), labels))
    write_atomic(args.out, buf.getvalue())
    print(f"wrote {len(labels)} predictions to {args.out}", file=out)


def _read_label_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["id", "label"]:
        raise CorpusError(f"{path}: expected header 'id,label'")
    labels = {}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise CorpusError(f"{path}:{line_no}: expected 2 columns")
        if row[0] in labels:
            raise CorpusError(f"{path}:{line_no}: duplicate id {row[0]!r}")
        labels[row[0]] = row[1]
    return labels


def cmd_evaluate(args, out):
    pred = _read_label_csv(args.pred)
    gold = _read_label_csv(args.gold)
    missing = sorted(set(gold) - set(pred))
    extra = sorted(set(pred) - set(gold))
    if missing or extra:
        raise CorpusError(
            f"prediction ids do not match gold ids ({len(missing)} missing, {len(extra)} extra)"
        )
    ids = list(gold)
    y_true = [gold[i] for i in ids]
    y_pred = [pred[i] for i in ids]
    if args.task:
        from .corpus import TASK_LABELS
        classes = TASK_LABELS[args.task.upper()]
    else:
        classes = sorted(set(y_true) | set(y_pred))
    report = evaluate(y_true, y_pred, classes)
    print(f"macro_f1={report.macro_f1:.6f} accuracy={report.accuracy:.6f} n={report.n}", file=out)
    for label, f1 in report.per_class_f1.items():
        print(f"f1[{label}]={f1:.6f}", file=out)


COMMANDS = {
    "train": cmd_train,
    "cv": cmd_cv,
    "gridsearch": cmd_gridsearch,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, out)
    except (ConfigError, UsageError) as exc:
        print(f"offdetect: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, ArtifactError, OSError, ValueError) as exc:
        print(f"offdetect: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDiverged, EvaluationError, FloatingPointError) as exc:
        print(f"offdetect: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
