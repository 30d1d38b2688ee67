"""
Tests for propclass.

Shared fixtures: fourteen sample Bandung listings, instance builders and
seeded random dataset generators.
"""

from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from propclass.features import LabeledInstance, PriceClass
from propclass.tree import DecisionTree, Leaf, NumericTest, SplitNode, TreeParams

HEADER = ("location", "building_size", "land_size", "bedroom", "bathroom", "price")

SAMPLE_ROWS = (
    ("Bojongsoang, Bandung", "90", "60", "2", "1", "Rp. 250.000.000"),
    ("Katapang, Bandung", "45", "131", "2", "1", "Rp. 95.000.000"),
    ("Geger Kalong, Bandung", "258", "280", "4", "4", "Rp. 3.000.000.000"),
    ("Cimahi, Bandung", "45", "60", "2", "1", "Rp. 285.000.000"),
    ("Antapani, Bandung", "65", "72", "2", "1", "Rp. 389.000.000"),
    ("Ciwastra, Bandung", "66", "70", "2", "1", "Rp. 250.000.000"),
    ("Antapani, Bandung", "60", "115", "2", "1", "Rp. 750.000.000"),
    ("Cibiru, Bandung", "36", "72", "2", "1", "Rp. 300.000.000"),
    ("Arcamanik, Bandung", "70", "125", "2", "1", "Rp. 520.000.000"),
    ("Kopo, Bandung", "58", "112", "2", "1", "Rp. 475.000.000"),
    ("Setiabudi, Bandung", "160", "360", "3", "3", "Rp. 3.100.000.000"),
    ("Cikutra, Bandung", "100", "136", "3", "1", "Rp. 540.000.000"),
    ("Antapani, Bandung", "90", "120", "3", "2", "Rp. 620.000.000"),
    ("Ujungberung, Bandung", "115", "160", "3", "2", "Rp. 1.275.000.000"),
)
"""Listing rows as advertised, in column order."""

LOCATIONS = ("Antapani, Bandung", "Cibiru, Bandung", "Kopo, Bandung")


def write_csv(
    directory: Union[str, Path],
    name: str,
    rows: Iterable[Sequence[str]],
    header: Sequence[str] = HEADER,
) -> Path:
    path = Path(directory) / name
    frame = pd.DataFrame([tuple(r) for r in rows], columns=list(header))
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def instance(
    label: Union[str, PriceClass] = "A",
    location: str = "Kopo, Bandung",
    building_size: float = 90.0,
    land_size: float = 120.0,
    bedroom: int = 3,
    bathroom: int = 2,
    building_bin: Optional[int] = None,
    land_bin: Optional[int] = None,
) -> LabeledInstance:
    if isinstance(label, str):
        label = PriceClass.from_label(label)
    return LabeledInstance(
        location=location,
        building_size=float(building_size),
        land_size=float(land_size),
        bedroom=bedroom,
        bathroom=bathroom,
        label=label,
        building_bin=building_bin,
        land_bin=land_bin,
    )


def hand_built_tree() -> DecisionTree:
    """building_size < 89 goes left to an all-A leaf, the rest to an all-C leaf."""
    root = SplitNode(
        NumericTest("building_size", 89.0),
        Leaf((10, 0, 0)),
        Leaf((0, 0, 10)),
        (10, 0, 10),
        0.5,
    )
    return DecisionTree(root, TreeParams(features=("building_size",)))


def random_instances(
    rng: np.random.Generator,
    n: int,
    n_values: int = 6,
    n_locations: int = len(LOCATIONS),
    continuous: bool = False,
) -> List[LabeledInstance]:
    """
    Random labeled instances. Sizes come from a few repeated values unless
    `continuous` is set, so splits and distances see ties.
    """
    out = []
    for _ in range(n):
        if continuous:
            building = float(rng.uniform(30.0, 400.0))
            land = float(rng.uniform(40.0, 500.0))
        else:
            building = float(40 + 10 * rng.integers(n_values))
            land = float(60 + 15 * rng.integers(n_values))
        out.append(
            instance(
                label=PriceClass(int(rng.integers(3))),
                location=LOCATIONS[int(rng.integers(n_locations))],
                building_size=building,
                land_size=land,
                bedroom=int(rng.integers(1, 6)),
                bathroom=int(rng.integers(1, 4)),
            )
        )
    return out
