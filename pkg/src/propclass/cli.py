"""
Command-line front end.

    propclass run --config run.yaml
    propclass synth --n 600 --noise 0 --seed 1 --out listings.csv
    propclass predict --model out/tree.model --input out/test.csv

Exit codes: 0 success, 1 usage, 2 data error, 3 internal error. Failures
print one JSON error record on stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .config import CONFIG_KEYS, REPORT_FORMATS, load_config_file, resolve_config
from .errors import ConfigError, DataError, PropclassError, StageError
from .evaluation import (
    compare,
    comparison_to_dict,
    evaluate,
    format_comparison_text,
    format_report_text,
    load_report,
    read_predictions,
    report_to_dict,
    save_comparison,
    save_report,
)
from .features import ALL_FEATURES, BinTable
from .ingest import (
    QUERY_COLUMNS,
    SynthConfig,
    clean,
    generate_synthetic,
    read_listings,
    read_queries,
    write_dataset,
)
from .knn import KnnModel, neighbor_details, predict_knn
from .pipeline import load_model, run_pipeline, stage, train_models, write_models
from .tree import decision_path, predict_tree

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def setup_logging(level: str = "WARNING") -> None:
    logging.basicConfig(
        level=getattr(logging, level),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors raise ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, ConfigError):
        return EXIT_USAGE
    if isinstance(cause, DataError):
        return EXIT_DATA
    return EXIT_INTERNAL


def error_record(exc: BaseException, stage_name: str) -> Dict[str, Any]:
    """Machine-readable description of a failure."""
    if isinstance(exc, StageError):
        stage_name, cause = exc.stage, exc.cause
    else:
        cause = exc
    return {
        "stage": stage_name,
        "error": type(cause).__name__,
        "message": str(cause),
        "exit_code": exit_code(exc),
    }


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _parse_weights(items: Optional[Sequence[str]]) -> Dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or name not in ALL_FEATURES:
            raise ConfigError(
                f"--weight expects FEATURE=VALUE with a known feature, got {item!r}"
            )
        try:
            out[f"weight_{name}"] = float(value)
        except ValueError:
            raise ConfigError(
                f"--weight {name} needs a number, got {value!r}"
            ) from None
    return out


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    values = {k: v for k, v in vars(args).items() if k in CONFIG_KEYS and v is not None}
    values.update(_parse_weights(args.weight))
    return values


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat YAML config file")
    p.add_argument("--input", help="listing CSV")
    p.add_argument(
        "--synth-n", dest="synth_n", type=int, help="generate this many listings"
    )
    p.add_argument("--synth-noise", dest="synth_noise", type=float)
    p.add_argument("--synth-seed", dest="synth_seed", type=int)
    p.add_argument(
        "--seed", type=int, help="split seed (required here or in the config)"
    )
    p.add_argument("--train-ratio", dest="train_ratio", type=float)
    p.add_argument("--size-bins", dest="size_bins", action="store_const", const=True)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.add_argument("--min-leaf", dest="min_leaf", type=int)
    p.add_argument("--min-gain", dest="min_gain", type=float)
    p.add_argument("--criterion", choices=("gini", "entropy"))
    p.add_argument("--k", type=int)
    p.add_argument(
        "--no-location", dest="use_location", action="store_const", const=False
    )
    p.add_argument(
        "--weight", action="append", metavar="FEATURE=W", help="k-NN feature weight"
    )
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--format", choices=REPORT_FORMATS)
    p.add_argument("--strict", action="store_const", const=True)
    p.add_argument("--n-jobs", dest="n_jobs", type=int)


def cmd_run(args: argparse.Namespace) -> None:
    with stage("config"):
        config = resolve_config(args.config, _overrides(args))
    result = run_pipeline(config)
    if config.format == "text":
        _emit(format_comparison_text(result.comparison))
    else:
        d = comparison_to_dict(result.comparison)
        _emit(json.dumps(d, indent=2, sort_keys=True))


def cmd_train(args: argparse.Namespace) -> None:
    with stage("config"):
        config = resolve_config(args.config, _overrides(args))
    trained = train_models(config)
    with stage("write"):
        paths = write_models(trained, config.output_dir)
    for path in paths:
        _emit(str(path))


def cmd_ingest(args: argparse.Namespace) -> None:
    with stage("ingest"):
        raw = read_listings(args.input, strict=args.strict)
    with stage("clean"):
        dataset = clean(raw.records, provenance=raw.source, malformed=len(raw.rejected))
    with stage("write"):
        path = write_dataset(dataset, args.out)
    s = dataset.summary
    _emit(
        f"Kept {len(dataset)} listings (duplicates={s.duplicates_removed} "
        f"invalid={s.invalid_removed} malformed={s.malformed_removed}) -> {path}"
    )


def cmd_synth(args: argparse.Namespace) -> None:
    with stage("config"):
        config = SynthConfig(n=args.n, noise_rate=args.noise, seed=args.seed)
    with stage("ingest"):
        dataset = generate_synthetic(config)
    with stage("write"):
        path = write_dataset(dataset, args.out)
    _emit(f"Generated {len(dataset)} listings ({config.provenance}) -> {path}")


def _bins_from(config_path: Optional[Path]) -> BinTable:
    if config_path is None:
        return BinTable()
    values = load_config_file(config_path)
    keys = BinTable().to_mapping()
    return BinTable.from_mapping({k: v for k, v in values.items() if k in keys})


def cmd_predict(args: argparse.Namespace) -> None:
    with stage("config"):
        bins = _bins_from(args.config)
    with stage("ingest"):
        model = load_model(args.model)
        rows = read_queries(args.input, bins)

    out_rows: List[Dict[str, Any]] = []
    lines = []
    with stage("predict"):
        for n, query in enumerate(rows.queries, start=1):
            row = {c: query[c] for c in QUERY_COLUMNS}
            if rows.observed is not None:
                row["observed"] = rows.observed[n - 1].label
            if isinstance(model, KnnModel):
                label, neighbors = predict_knn(model, query)
                row["predicted"] = label.label
                row["neighbors"] = ";".join(f"{i}:{d:.6f}" for i, d in neighbors)
                lines.append(f"{n}: {label.label}")
                for nb in neighbor_details(model, neighbors):
                    lines.append(
                        f"    #{nb['index']} {nb['label']} d={nb['distance']:.4f}  "
                        f"{nb['location']}, building {nb['building_size']:g} m2, "
                        f"land {nb['land_size']:g} m2, {nb['bedroom']} bed, "
                        f"{nb['bathroom']} bath"
                    )
            else:
                label, probs = predict_tree(model, query)
                path = " -> ".join(f"Node {i}" for i in decision_path(model, query))
                row["predicted"] = label.label
                row["probability"] = round(probs[label], 6)
                lines.append(
                    f"{n}: {label.label} probability {probs[label]:.3f}  ({path})"
                )
            out_rows.append(row)
    _emit("\n".join(lines))
    if args.out is not None:
        with stage("write"):
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(out_rows).to_csv(out, index=False, lineterminator="\n")


def cmd_evaluate(args: argparse.Namespace) -> None:
    with stage("ingest"):
        rows = read_predictions(args.predictions)
    with stage("evaluate"):
        report = evaluate(
            args.name,
            rows.truths,
            rows.preds,
            descriptor=f"predictions from {Path(args.predictions).name}",
            fingerprint=rows.fingerprint,
            provenance={"data_source": Path(args.predictions).name},
        )
    if args.out is not None:
        with stage("write"):
            save_report(report, args.out)
    if args.format == "structured":
        _emit(json.dumps(report_to_dict(report), indent=2, sort_keys=True))
    else:
        _emit(format_report_text(report))


def cmd_compare(args: argparse.Namespace) -> None:
    with stage("ingest"):
        a = load_report(args.a)
        b = load_report(args.b)
    with stage("compare"):
        comparison = compare(a, b)
    if args.out is not None:
        with stage("write"):
            save_comparison(comparison, args.out)
    if args.format == "structured":
        _emit(json.dumps(comparison_to_dict(comparison), indent=2, sort_keys=True))
    else:
        _emit(format_comparison_text(comparison))


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="propclass",
        description="Classify property listings into price classes with a "
        "decision tree and k-NN, and compare the two.",
    )
    parser.add_argument(
        "--log-level", dest="log_level", choices=LOG_LEVELS, default="WARNING"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline: ingest to comparison")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser(
        "train", help="fit both models and write them with the test partition"
    )
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ingest", help="read and clean a listing CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate listings with a planted price class")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("predict", help="classify a CSV of listings with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="write predictions CSV")
    p.add_argument("--config", type=Path, help="config file with bin bounds")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="confusion matrix of a predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--name", default="model")
    p.add_argument("--out", help="report file (.json or .txt)")
    p.add_argument("--format", choices=REPORT_FORMATS, default="text")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="compare two JSON evaluation reports")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", help="comparison file (.json or .txt)")
    p.add_argument("--format", choices=REPORT_FORMATS, default="text")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        sys.stderr.write(json.dumps(error_record(e, "config")) + "\n")
        return EXIT_USAGE
    setup_logging(args.log_level)
    try:
        args.func(args)
    except Exception as e:
        record = error_record(e, args.command)
        if not isinstance(e, PropclassError) or record["exit_code"] == EXIT_INTERNAL:
            logger.exception("Internal error")
        sys.stderr.write(json.dumps(record) + "\n")
        return record["exit_code"]
    return EXIT_OK
