"""
propclass
=========

Price-class classification of property listings with a decision tree and
k-nearest neighbors, evaluated on a shared stratified test set.

Exposes:
- parse_price, read_listings, clean, generate_synthetic
- price_class, size_bin, label_dataset, normalize
- stratified_split
- fit_tree, predict_tree, best_split, impurity
- fit_knn, predict_knn, distance
- accumulate, per_class_recall, overall_accuracy, compare
- PipelineConfig, run_pipeline
"""

from .config import PipelineConfig, resolve_config
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    accumulate,
    compare,
    evaluate,
    overall_accuracy,
    per_class_recall,
)
from .features import (
    BinTable,
    LabeledInstance,
    PriceClass,
    label_dataset,
    normalize,
    price_class,
    size_bin,
)
from .ingest import (
    Dataset,
    ListingRecord,
    SynthConfig,
    clean,
    generate_synthetic,
    parse_price,
    read_listings,
)
from .knn import KnnModel, KnnParams, distance, fit_knn, predict_knn
from .pipeline import PipelineResult, run_pipeline
from .split import SplitPair, SplitParams, stratified_split
from .tree import DecisionTree, TreeParams, best_split, fit_tree, impurity, predict_tree

__all__ = [
    "BinTable",
    "ConfusionMatrix",
    "Dataset",
    "DecisionTree",
    "EvalReport",
    "KnnModel",
    "KnnParams",
    "LabeledInstance",
    "ListingRecord",
    "PipelineConfig",
    "PipelineResult",
    "PriceClass",
    "SplitPair",
    "SplitParams",
    "SynthConfig",
    "TreeParams",
    "accumulate",
    "best_split",
    "clean",
    "compare",
    "distance",
    "evaluate",
    "fit_knn",
    "fit_tree",
    "generate_synthetic",
    "impurity",
    "label_dataset",
    "normalize",
    "overall_accuracy",
    "parse_price",
    "per_class_recall",
    "predict_knn",
    "predict_tree",
    "price_class",
    "read_listings",
    "resolve_config",
    "run_pipeline",
    "size_bin",
    "stratified_split",
]
