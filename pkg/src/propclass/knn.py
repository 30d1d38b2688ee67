"""
k-nearest-neighbor classification with a range-normalized mixed distance.

Numeric features contribute |a - b| after min-max scaling on the training
set; location contributes 0 when equal and 1 otherwise. The distance is the
weighted mean of those per-feature dissimilarities, so it lies in [0, 1].
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, partial
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import (
    EmptyTrainingSet,
    InsufficientData,
    InvalidParameter,
    ModelFormatError,
)
from .features import (
    DEFAULT_FEATURES,
    LabeledInstance,
    Normalizer,
    PriceClass,
    canonical_order,
    feature_value,
    fit_normalizer,
    is_categorical,
)
from .settings import DEF_K

logger = logging.getLogger(__name__)

KNN_FORMAT = "propclass.knn"
KNN_VERSION = 1

Neighbor = Tuple[int, float]


def _default_weights() -> Dict[str, float]:
    return dict.fromkeys(DEFAULT_FEATURES, 1.0)


@dataclass(frozen=True)
class KnnParams:
    """
    k-NN parameters.

    Args:
        k: Number of neighbors that vote.
        weights: Weight per feature. Features with weight 0 are ignored.
        use_location: Include the location mismatch term.
    """

    k: int = DEF_K
    weights: Mapping[str, float] = field(default_factory=_default_weights)
    use_location: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameter("k", self.k, "must be >= 1")
        for name, w in self.weights.items():
            if w < 0:
                raise InvalidParameter(f"weights[{name}]", w, "must be >= 0")
        ordered = {f: float(self.weights[f]) for f in canonical_order(self.weights)}
        object.__setattr__(self, "weights", ordered)
        if not self.active_features:
            raise InvalidParameter(
                "weights", ordered, "at least one enabled weight > 0"
            )

    @property
    def active_features(self) -> Tuple[str, ...]:
        return tuple(
            f
            for f, w in self.weights.items()
            if w > 0 and (self.use_location or not is_categorical(f))
        )

    @property
    def numeric_features(self) -> Tuple[str, ...]:
        return tuple(f for f in self.active_features if not is_categorical(f))

    @property
    def categorical_features(self) -> Tuple[str, ...]:
        return tuple(f for f in self.active_features if is_categorical(f))

    def describe(self) -> str:
        weights = ",".join(f"{f}:{self.weights[f]:g}" for f in self.active_features)
        return f"k={self.k}, weights={weights}, use_location={self.use_location}"


@dataclass(frozen=True)
class KnnModel:
    """Stored training instances plus the normalizer fitted on them."""

    instances: Tuple[LabeledInstance, ...]
    normalizer: Normalizer
    params: KnnParams

    def __post_init__(self):
        if not self.instances:
            raise EmptyTrainingSet()
        if len(self.instances) < self.params.k:
            raise InsufficientData(len(self.instances), self.params.k)

    @cached_property
    def _numeric_weights(self) -> np.ndarray:
        return np.array([self.params.weights[f] for f in self.params.numeric_features])

    @cached_property
    def _total_weight(self) -> float:
        return sum(self.params.weights[f] for f in self.params.active_features)

    @cached_property
    def _rows(self) -> np.ndarray:
        return self._scaled(self.instances)

    @cached_property
    def _categories(self) -> List[np.ndarray]:
        return [
            np.array([str(feature_value(i, f)) for i in self.instances])
            for f in self.params.categorical_features
        ]

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([int(i.label) for i in self.instances], dtype=np.int64)

    def _scaled(self, instances: Sequence[Any]) -> np.ndarray:
        names = self.params.numeric_features
        raw = np.array(
            [[float(feature_value(i, f)) for f in names] for i in instances],
            dtype=np.float64,
        ).reshape(len(instances), len(names))
        lo = np.array([self.normalizer.ranges[f][0] for f in names])
        hi = np.array([self.normalizer.ranges[f][1] for f in names])
        span = hi - lo
        safe = np.where(span > 0, span, 1.0)
        scaled = np.clip((raw - lo) / safe, 0.0, 1.0)
        return np.where(span > 0, scaled, 0.0)

    def _weighted_mean(
        self, rows: np.ndarray, cats: List[np.ndarray], query: Any
    ) -> np.ndarray:
        q = self._scaled([query])[0]
        total = (np.abs(rows - q) * self._numeric_weights).sum(axis=1)
        for name, values in zip(self.params.categorical_features, cats, strict=True):
            mismatch = (values != str(feature_value(query, name))).astype(np.float64)
            total = total + self.params.weights[name] * mismatch
        return total / self._total_weight

    def distances(self, query: Any) -> np.ndarray:
        """Distance from `query` to every stored instance, in stored order."""
        return self._weighted_mean(self._rows, self._categories, query)


def distance(a: Any, b: Any, model: KnnModel) -> float:
    """
    Weighted mean of per-feature dissimilarities between two instances, using
    the model's normalizer ranges and weights.
    """
    rows = model._scaled([a])
    cats = [
        np.array([str(feature_value(a, f))])
        for f in model.params.categorical_features
    ]
    return float(model._weighted_mean(rows, cats, b)[0])


def fit_knn(
    train: Sequence[LabeledInstance], params: KnnParams = KnnParams()
) -> KnnModel:
    """Store the training instances and fit the normalizer on them."""
    if not train:
        raise EmptyTrainingSet()
    if len(train) < params.k:
        raise InsufficientData(len(train), params.k)
    normalizer = fit_normalizer(list(train), params.numeric_features)
    model = KnnModel(tuple(train), normalizer, params)
    logger.info("Fitted k-NN: %d stored instances (%s)", len(train), params.describe())
    return model


def select_neighbors(distances: np.ndarray, k: int) -> List[Neighbor]:
    """The k smallest distances; ties at equal distance go to the lower index."""
    order = np.lexsort((np.arange(distances.size), distances))
    return [(int(i), float(distances[i])) for i in order[:k]]


def vote(neighbors: Sequence[Neighbor], labels: np.ndarray) -> PriceClass:
    """
    Majority label among neighbors. A tie goes to the tied class with the
    smallest summed distance, then to the lower class.
    """
    votes = [0] * len(PriceClass)
    sums = [0.0] * len(PriceClass)
    for idx, dist in neighbors:
        c = int(labels[idx])
        votes[c] += 1
        sums[c] += dist
    top = max(votes)
    tied = [c for c in range(len(PriceClass)) if votes[c] == top]
    return PriceClass(min(tied, key=lambda c: (sums[c], c)))


def predict_knn(model: KnnModel, instance: Any) -> Tuple[PriceClass, List[Neighbor]]:
    """Classify `instance` and return the neighbors (stored index, distance) used."""
    neighbors = select_neighbors(model.distances(instance), model.params.k)
    return vote(neighbors, model.labels), neighbors


def predict_knn_batch(
    model: KnnModel, queries: Sequence[Any], n_jobs: int = 1
) -> List[Tuple[PriceClass, List[Neighbor]]]:
    """predict_knn over many queries; results are in query order for any n_jobs."""
    predict = partial(predict_knn, model)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(predict, queries))
    return [predict(q) for q in queries]


def neighbor_details(
    model: KnnModel, neighbors: Sequence[Neighbor]
) -> List[Dict[str, Any]]:
    out = []
    for idx, dist in neighbors:
        inst = model.instances[idx]
        row = {"index": idx, "distance": dist}
        row.update(inst.features())
        row["label"] = inst.label.label
        out.append(row)
    return out


def describe_knn(model: KnnModel) -> Dict[str, str]:
    """Model metadata used for the comparison report cells."""
    features = ", ".join(model.params.active_features)
    return {
        "model": "k-NN",
        "descriptor": f"knn({model.params.describe()}, distance=gower)",
        "measurement_indicator": (
            f"All enabled variables are used ({features}). Each listing is "
            "compared by its range-normalized distance on every variable."
        ),
        "analysis": (
            f"Exploration model: {len(model.instances)} stored listings; "
            f"each prediction is explained by its {model.params.k} nearest neighbors"
        ),
    }


def _instance_to_dict(inst: LabeledInstance) -> Dict[str, Any]:
    d = inst.features()
    d["label"] = inst.label.label
    return d


def _instance_from_dict(d: Dict[str, Any]) -> LabeledInstance:
    return LabeledInstance(
        location=str(d["location"]),
        building_size=float(d["building_size"]),
        land_size=float(d["land_size"]),
        bedroom=int(d["bedroom"]),
        bathroom=int(d["bathroom"]),
        label=PriceClass.from_label(d["label"]),
        building_bin=d.get("building_bin"),
        land_bin=d.get("land_bin"),
    )


def knn_to_dict(model: KnnModel) -> Dict[str, Any]:
    return {
        "format": KNN_FORMAT,
        "version": KNN_VERSION,
        "params": {
            "k": model.params.k,
            "weights": dict(model.params.weights),
            "use_location": model.params.use_location,
        },
        "normalizer": model.normalizer.to_mapping(),
        "instances": [_instance_to_dict(i) for i in model.instances],
    }


def knn_from_dict(d: Dict[str, Any], source: str = "<dict>") -> KnnModel:
    try:
        if d.get("format") != KNN_FORMAT:
            raise ValueError(f"not a {KNN_FORMAT} document")
        if d.get("version") != KNN_VERSION:
            raise ValueError(f"unsupported version {d.get('version')!r}")
        params = KnnParams(
            k=int(d["params"]["k"]),
            weights={k: float(v) for k, v in d["params"]["weights"].items()},
            use_location=bool(d["params"]["use_location"]),
        )
        normalizer = Normalizer.from_mapping(d["normalizer"])
        missing = set(params.numeric_features) - set(normalizer.ranges)
        if missing:
            raise ValueError(f"no normalizer range for {sorted(missing)}")
        return KnnModel(
            tuple(_instance_from_dict(i) for i in d["instances"]),
            normalizer,
            params,
        )
    except (
        KeyError,
        TypeError,
        ValueError,
        InvalidParameter,
        EmptyTrainingSet,
        InsufficientData,
    ) as e:
        raise ModelFormatError(source, str(e)) from None


def save_knn(model: KnnModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(knn_to_dict(model), indent=2, sort_keys=True) + "\n")
    return path


def load_knn(path: Union[str, Path]) -> KnnModel:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError(path, str(e)) from None
    return knn_from_dict(d, source=str(path))
