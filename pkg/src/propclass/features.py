"""
Price-class labeling, land and building size bins and feature access for
the classifiers.
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .errors import EmptyTrainingSet, InvalidParameter, MissingFeature
from .settings import BUILDING_BOUNDS, LAND_BOUNDS, PRICE_BOUNDS

if TYPE_CHECKING:
    from .ingest import Dataset

logger = logging.getLogger(__name__)

NUMERIC_FEATURES = ("building_size", "land_size", "bedroom", "bathroom")
BIN_FEATURES = ("building_bin", "land_bin")
CATEGORICAL_FEATURES = ("location",)
# Canonical feature order. Split tie-breaks and distance sums follow it.
ALL_FEATURES = NUMERIC_FEATURES + BIN_FEATURES + CATEGORICAL_FEATURES
DEFAULT_FEATURES = NUMERIC_FEATURES + CATEGORICAL_FEATURES


class PriceClass(IntEnum):
    """Three-way price label, ordered A < B < C."""

    PRICE_A = 0
    PRICE_B = 1
    PRICE_C = 2

    @property
    def label(self) -> str:
        return f"Price_{'ABC'[self.value]}"

    @classmethod
    def from_label(cls, text: str) -> "PriceClass":
        key = text.strip().upper()
        if key.startswith("PRICE_"):
            key = key[len("PRICE_") :]
        if key not in ("A", "B", "C"):
            raise ValueError(f"Unknown price class: {text!r}")
        return cls("ABC".index(key))

    def __str__(self) -> str:
        return self.label


class SizeBin(IntEnum):
    A = 0
    B = 1
    C = 2


def _three_way(value: float, bounds: Tuple[float, float]) -> int:
    # digitize: 0 below lower, 1 in [lower, upper), 2 at or above upper
    return int(np.digitize(value, bounds))


@dataclass(frozen=True)
class BinTable:
    """
    Table of the interval bounds used for labeling and size bins.

    Args:
        price_bounds: (lower, upper) in Rupiah.
        land_bounds: (lower, upper) in m2.
        building_bounds: (lower, upper) in m2.

    Every variable uses the same rule: A below the lower bound, B from the
    lower bound (inclusive) up to the upper bound (exclusive), C at or above
    the upper bound.
    """

    price_bounds: Tuple[int, int] = PRICE_BOUNDS
    land_bounds: Tuple[float, float] = LAND_BOUNDS
    building_bounds: Tuple[float, float] = BUILDING_BOUNDS

    def __post_init__(self):
        for name in ("price_bounds", "land_bounds", "building_bounds"):
            lower, upper = getattr(self, name)
            if not lower < upper:
                raise InvalidParameter(name, (lower, upper), "lower must be < upper")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "BinTable":
        """
        Build a table from flat config keys (price_lower, price_upper,
        land_lower, land_upper, building_lower, building_upper). Missing
        keys keep their defaults.
        """
        d = cls()
        return cls(
            price_bounds=(
                int(values.get("price_lower", d.price_bounds[0])),
                int(values.get("price_upper", d.price_bounds[1])),
            ),
            land_bounds=(
                float(values.get("land_lower", d.land_bounds[0])),
                float(values.get("land_upper", d.land_bounds[1])),
            ),
            building_bounds=(
                float(values.get("building_lower", d.building_bounds[0])),
                float(values.get("building_upper", d.building_bounds[1])),
            ),
        )

    def to_mapping(self) -> Dict[str, float]:
        return {
            "price_lower": self.price_bounds[0],
            "price_upper": self.price_bounds[1],
            "land_lower": self.land_bounds[0],
            "land_upper": self.land_bounds[1],
            "building_lower": self.building_bounds[0],
            "building_upper": self.building_bounds[1],
        }


def price_class(price: int, bins: BinTable = BinTable()) -> PriceClass:
    """Label a non-negative Rupiah price."""
    if price < 0:
        raise ValueError(f"price must be non-negative, got {price}")
    return PriceClass(_three_way(price, bins.price_bounds))


def size_bin(value: float, variable: str, bins: BinTable = BinTable()) -> SizeBin:
    """
    Bin a land or building size against the configured bounds.

    Args:
        value: Size in m2, positive.
        variable: "land" or "building".
    """
    if value <= 0:
        raise ValueError(f"size must be positive, got {value}")
    if variable == "land":
        bounds = bins.land_bounds
    elif variable == "building":
        bounds = bins.building_bounds
    else:
        raise ValueError(f"Unknown size variable: {variable!r}")
    return SizeBin(_three_way(value, bounds))


@dataclass(frozen=True)
class LabeledInstance:
    """
    A cleaned listing with its price class. The price itself is not a feature.
    """

    location: str
    building_size: float
    land_size: float
    bedroom: int
    bathroom: int
    label: PriceClass
    building_bin: Optional[int] = None
    land_bin: Optional[int] = None

    def features(self) -> Dict[str, Any]:
        values = {name: getattr(self, name) for name in ALL_FEATURES}
        return {k: v for k, v in values.items() if v is not None}


def feature_value(instance: Any, name: str) -> Any:
    """
    Read feature `name` from a LabeledInstance or a mapping of feature values.
    """
    if isinstance(instance, Mapping):
        value = instance.get(name)
    else:
        value = getattr(instance, name, None)
    if value is None:
        raise MissingFeature(name)
    return value


def is_categorical(name: str) -> bool:
    return name in CATEGORICAL_FEATURES


def canonical_order(names: Iterable[str]) -> Tuple[str, ...]:
    """Sort feature names into the canonical order, rejecting unknown names."""
    names = set(names)
    unknown = names.difference(ALL_FEATURES)
    if unknown:
        raise InvalidParameter("features", sorted(unknown), f"known: {ALL_FEATURES}")
    return tuple(f for f in ALL_FEATURES if f in names)


def class_counts(instances: Iterable[LabeledInstance]) -> Tuple[int, int, int]:
    """Instance count per class, in A, B, C order."""
    labels = np.fromiter((int(i.label) for i in instances), dtype=np.int64)
    counts = np.bincount(labels, minlength=len(PriceClass))
    return (int(counts[0]), int(counts[1]), int(counts[2]))


def label_dataset(
    data: "Dataset", bins: BinTable = BinTable(), with_size_bins: bool = False
) -> List[LabeledInstance]:
    """
    Turn each cleaned record into a LabeledInstance, in order.

    Args:
        data: A cleaned Dataset.
        bins: Bounds for the price label (and size bins).
        with_size_bins: Also attach building_bin / land_bin derived features.
    """
    out = []
    for r in data.records:
        b_bin = l_bin = None
        if with_size_bins:
            b_bin = int(size_bin(r.building_size, "building", bins))
            l_bin = int(size_bin(r.land_size, "land", bins))
        out.append(
            LabeledInstance(
                location=r.location,
                building_size=r.building_size,
                land_size=r.land_size,
                bedroom=r.bedroom,
                bathroom=r.bathroom,
                label=price_class(r.price, bins),
                building_bin=b_bin,
                land_bin=l_bin,
            )
        )
    counts = class_counts(out)
    logger.info(
        "Labeled %d instances: %s",
        len(out),
        ", ".join(f"{c.label}={n}" for c, n in zip(PriceClass, counts, strict=True)),
    )
    return out


def normalize(x: float, feature_range: Tuple[float, float]) -> float:
    """
    Min-max scale `x` into [0, 1]. A degenerate range maps to 0 and values
    outside the range are clamped.
    """
    lo, hi = feature_range
    if hi <= lo:
        return 0.0
    return float(np.clip((x - lo) / (hi - lo), 0.0, 1.0))


@dataclass(frozen=True)
class Normalizer:
    """Per-feature (min, max) observed on a training set."""

    ranges: Mapping[str, Tuple[float, float]]

    def __post_init__(self):
        for name, (lo, hi) in self.ranges.items():
            if lo > hi:
                raise InvalidParameter(name, (lo, hi), "min must be <= max")

    def scale(self, name: str, x: float) -> float:
        return normalize(x, self.ranges[name])

    def to_mapping(self) -> Dict[str, List[float]]:
        return {k: [float(lo), float(hi)] for k, (lo, hi) in self.ranges.items()}

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "Normalizer":
        return cls({k: (float(v[0]), float(v[1])) for k, v in values.items()})


def fit_normalizer(
    train: List[LabeledInstance], features: Iterable[str] = NUMERIC_FEATURES
) -> Normalizer:
    """Record min/max of each numeric feature over the training instances."""
    if not train:
        raise EmptyTrainingSet()
    ranges = {}
    for name in features:
        col = np.array([float(feature_value(i, name)) for i in train])
        ranges[name] = (float(col.min()), float(col.max()))
    return Normalizer(ranges)
