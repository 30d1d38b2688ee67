"""
End-to-end run: ingest, clean, label, split, fit both classifiers, evaluate
them on the shared test set and compare.
"""

import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple, Union

from .config import PipelineConfig, config_to_mapping
from .errors import InputNotFound, ModelFormatError, StageError
from .evaluation import (
    ComparisonReport,
    EvalReport,
    compare,
    evaluate,
    save_comparison,
    save_report,
    test_set_fingerprint,
)
from .features import LabeledInstance, PriceClass, label_dataset
from .ingest import (
    Dataset,
    clean,
    dataset_fingerprint,
    generate_synthetic,
    read_listings,
    write_dataset,
    write_instances,
)
from .knn import (
    KNN_FORMAT,
    KnnModel,
    describe_knn,
    fit_knn,
    knn_from_dict,
    predict_knn_batch,
    save_knn,
)
from .split import SplitPair, stratified_split
from .tree import (
    TREE_FORMAT,
    DecisionTree,
    describe_tree,
    fit_tree,
    predict_tree,
    save_tree,
    tree_from_dict,
)

logger = logging.getLogger(__name__)

STAGES = (
    "config",
    "ingest",
    "clean",
    "label",
    "split",
    "train_tree",
    "train_knn",
    "evaluate",
    "compare",
    "write",
)

CLEANED_FILE = "cleaned.csv"
TEST_FILE = "test.csv"
TREE_FILE = "tree.model"
KNN_FILE = "knn.model"

Model = Union[DecisionTree, KnnModel]


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Log the stage and wrap any failure in a StageError naming it."""
    logger.info("-> %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


@dataclass(frozen=True)
class TrainedModels:
    dataset: Dataset
    split: SplitPair
    tree: DecisionTree
    knn: KnnModel


@dataclass(frozen=True)
class PipelineResult:
    output_dir: Path
    dataset: Dataset
    split: SplitPair
    tree: DecisionTree
    knn: KnnModel
    tree_report: EvalReport
    knn_report: EvalReport
    comparison: ComparisonReport
    artifacts: Tuple[Path, ...]


def load_dataset(config: PipelineConfig) -> Dataset:
    """Read or generate listings and clean them."""
    with stage("ingest"):
        if config.synth is not None:
            generated = generate_synthetic(config.synth, config.bins)
            records, source, malformed = generated.records, generated.provenance, 0
        else:
            raw = read_listings(str(config.input), strict=config.strict)
            records, source, malformed = raw.records, raw.source, len(raw.rejected)
    with stage("clean"):
        return clean(records, provenance=source, malformed=malformed)


def train_models(config: PipelineConfig) -> TrainedModels:
    """The pipeline up to and including model fitting."""
    dataset = load_dataset(config)
    with stage("label"):
        instances = label_dataset(dataset, config.bins, with_size_bins=config.size_bins)
    with stage("split"):
        pair = stratified_split(instances, config.split)
    with stage("train_tree"):
        tree = fit_tree(pair.train, config.tree)
    with stage("train_knn"):
        knn = fit_knn(pair.train, config.knn)
    return TrainedModels(dataset, pair, tree, knn)


def predict_labels(
    model: Model, queries: Sequence[Any], n_jobs: int = 1
) -> List[PriceClass]:
    if isinstance(model, DecisionTree):
        return [predict_tree(model, q)[0] for q in queries]
    return [label for label, _ in predict_knn_batch(model, queries, n_jobs)]


def provenance(config: PipelineConfig, dataset: Dataset) -> Dict[str, Any]:
    s = dataset.summary
    return {
        "config": config_to_mapping(config),
        "seed": config.seed,
        "data_source": config.data_source,
        "input_fingerprint": dataset_fingerprint(dataset),
        "records": len(dataset),
        "removed": {
            "duplicates": s.duplicates_removed,
            "invalid": s.invalid_removed,
            "malformed": s.malformed_removed,
        },
    }


def _evaluate_model(
    name: str,
    model: Model,
    metadata: Dict[str, str],
    test: Sequence[LabeledInstance],
    config: PipelineConfig,
    prov: Dict[str, Any],
) -> EvalReport:
    preds = predict_labels(model, test, config.tree.n_jobs)
    return evaluate(
        name,
        [i.label for i in test],
        preds,
        descriptor=f"{metadata['descriptor']} seed={config.seed}",
        fingerprint=test_set_fingerprint(test),
        provenance=prov,
        metadata=metadata,
    )


def report_paths(output_dir: Path, stem: str, fmt: str) -> List[Path]:
    """JSON always, so `compare` can read it back; text as well for format text."""
    paths = [output_dir / f"{stem}.json"]
    if fmt == "text":
        paths.append(output_dir / f"{stem}.txt")
    return paths


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """
    Run every stage and write the artifacts into `config.output_dir`:
    cleaned.csv, test.csv, tree.model, knn.model, eval_tree.*, eval_knn.*
    and comparison.*.

    Raises:
        StageError: naming the stage that failed, with the cause attached.
    """
    trained = train_models(config)
    test = trained.split.test
    with stage("evaluate"):
        prov = provenance(config, trained.dataset)
        tree_report = _evaluate_model(
            "tree", trained.tree, describe_tree(trained.tree), test, config, prov
        )
        knn_report = _evaluate_model(
            "knn", trained.knn, describe_knn(trained.knn), test, config, prov
        )
    with stage("compare"):
        comparison = compare(tree_report, knn_report)
    with stage("write"):
        out = Path(config.output_dir)
        artifacts = [
            write_dataset(trained.dataset, out / CLEANED_FILE),
            write_instances(test, out / TEST_FILE),
            save_tree(trained.tree, out / TREE_FILE),
            save_knn(trained.knn, out / KNN_FILE),
        ]
        for path in report_paths(out, "eval_tree", config.format):
            artifacts.append(save_report(tree_report, path))
        for path in report_paths(out, "eval_knn", config.format):
            artifacts.append(save_report(knn_report, path))
        for path in report_paths(out, "comparison", config.format):
            artifacts.append(save_comparison(comparison, path))
    logger.info("Wrote %d artifacts to %s", len(artifacts), out)
    return PipelineResult(
        output_dir=out,
        dataset=trained.dataset,
        split=trained.split,
        tree=trained.tree,
        knn=trained.knn,
        tree_report=tree_report,
        knn_report=knn_report,
        comparison=comparison,
        artifacts=tuple(artifacts),
    )


def write_models(trained: TrainedModels, output_dir: Union[str, Path]) -> List[Path]:
    """Write both models and the held-out test partition."""
    out = Path(output_dir)
    return [
        save_tree(trained.tree, out / TREE_FILE),
        save_knn(trained.knn, out / KNN_FILE),
        write_instances(trained.split.test, out / TEST_FILE),
    ]


def load_model(path: Union[str, Path]) -> Model:
    """Load a tree or k-NN model file, dispatching on its format tag."""
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError(path, str(e)) from None
    kind = d.get("format") if isinstance(d, dict) else None
    if kind == TREE_FORMAT:
        return tree_from_dict(d, source=str(path))
    if kind == KNN_FORMAT:
        return knn_from_dict(d, source=str(path))
    raise ModelFormatError(path, f"unknown model format {kind!r}")
