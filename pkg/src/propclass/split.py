import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ClassTooSmall, EmptyDataset, InvalidParameter
from .features import LabeledInstance, PriceClass
from .settings import DEF_TRAIN_RATIO, MAX_SEED

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitParams:
    """
    Stratified split settings.

    Args:
        seed: Shuffle seed, 0 <= seed < 2**64. Required; there is no default.
        train_ratio: Fraction of each class that goes to training.
    """

    seed: int
    train_ratio: float = DEF_TRAIN_RATIO

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise InvalidParameter("train_ratio", self.train_ratio, "must be in (0, 1)")
        if not 0 <= self.seed <= MAX_SEED:
            raise InvalidParameter(
                "seed", self.seed, "must be a 64-bit unsigned integer"
            )


@dataclass(frozen=True)
class SplitPair:
    train: Tuple[LabeledInstance, ...]
    test: Tuple[LabeledInstance, ...]

    def class_counts(self) -> Dict[str, Tuple[int, int]]:
        """(train, test) count per class label."""
        out = {}
        for c in PriceClass:
            out[c.label] = (
                sum(1 for i in self.train if i.label == c),
                sum(1 for i in self.test if i.label == c),
            )
        return out


def train_count(n: int, ratio: float) -> int:
    """Half-up rounding of ratio * n, computed in decimal."""
    exact = Decimal(repr(ratio)) * n
    return int(exact.to_integral_value(rounding=ROUND_HALF_UP))


def stratified_split(data: Sequence[LabeledInstance], params: SplitParams) -> SplitPair:
    """
    Partition instances so every class keeps round(train_ratio * n_c) members in
    train and the rest in test.

    Each class is shuffled by its own generator spawned from the seed, so the
    partition of one class does not depend on which other classes are present.
    Output order is train then test, each grouped in class order A, B, C.
    """
    if not data:
        raise EmptyDataset()
    children = np.random.SeedSequence(params.seed).spawn(len(PriceClass))
    train: List[LabeledInstance] = []
    test: List[LabeledInstance] = []
    for c in PriceClass:
        members = [i for i in data if i.label == c]
        n = len(members)
        if n == 0:
            continue
        if n < 2:
            raise ClassTooSmall(c.label, n)
        n_train = train_count(n, params.train_ratio)
        if n_train == 0 or n_train == n:
            raise ClassTooSmall(c.label, n, n_train)
        order = np.random.default_rng(children[int(c)]).permutation(n)
        train.extend(members[j] for j in order[:n_train])
        test.extend(members[j] for j in order[n_train:])
    pair = SplitPair(tuple(train), tuple(test))
    logger.info(
        "Split %d instances into train=%d test=%d (%s)",
        len(data),
        len(pair.train),
        len(pair.test),
        ", ".join(f"{k}={v[0]}/{v[1]}" for k, v in pair.class_counts().items()),
    )
    return pair
