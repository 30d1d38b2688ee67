"""
Binary decision tree induction with greedy impurity-decrease splits.

Numeric features split on `value < threshold` with thresholds at midpoints
between consecutive distinct values; the categorical location feature splits
one category against the rest. Leaves keep their full class counts, so a
prediction carries the leaf's class frequencies as probabilities.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .errors import AllZeroCounts, EmptyTrainingSet, InvalidParameter, ModelFormatError
from .features import (
    DEFAULT_FEATURES,
    LabeledInstance,
    PriceClass,
    canonical_order,
    feature_value,
    is_categorical,
)
from .settings import DEF_CRITERION, DEF_MAX_DEPTH, DEF_MIN_GAIN, DEF_MIN_LEAF

logger = logging.getLogger(__name__)

TREE_FORMAT = "propclass.tree"
TREE_VERSION = 1
CRITERIA = ("gini", "entropy")

Counts = Tuple[int, int, int]


@dataclass(frozen=True)
class TreeParams:
    """
    Decision tree induction parameters.

    Args:
        max_depth: Nodes at this depth become leaves.
        min_leaf: Minimum instances in each child of a split.
        min_gain: Smallest impurity decrease worth a split.
        criterion: "gini" or "entropy".
        features: Features the tree may test, kept in canonical order.
        n_jobs: Threads used to search features at each node. The search
                result does not depend on this value.
    """

    max_depth: int = DEF_MAX_DEPTH
    min_leaf: int = DEF_MIN_LEAF
    min_gain: float = DEF_MIN_GAIN
    criterion: str = DEF_CRITERION
    features: Tuple[str, ...] = DEFAULT_FEATURES
    n_jobs: int = 1

    def __post_init__(self):
        if self.max_depth < 1:
            raise InvalidParameter("max_depth", self.max_depth, "must be >= 1")
        if self.min_leaf < 1:
            raise InvalidParameter("min_leaf", self.min_leaf, "must be >= 1")
        if self.min_gain < 0:
            raise InvalidParameter("min_gain", self.min_gain, "must be >= 0")
        if self.criterion not in CRITERIA:
            raise InvalidParameter("criterion", self.criterion, f"one of {CRITERIA}")
        if self.n_jobs < 1:
            raise InvalidParameter("n_jobs", self.n_jobs, "must be >= 1")
        features = canonical_order(self.features)
        if not features:
            raise InvalidParameter("features", self.features, "at least one feature")
        object.__setattr__(self, "features", features)

    def describe(self) -> str:
        return (
            f"criterion={self.criterion}, max_depth={self.max_depth}, "
            f"min_leaf={self.min_leaf}, min_gain={self.min_gain:g}"
        )


@dataclass(frozen=True)
class NumericTest:
    feature: str
    threshold: float

    def passes(self, instance: Any) -> bool:
        return float(feature_value(instance, self.feature)) < self.threshold

    def describe(self) -> str:
        return f"{self.feature} < {self.threshold:g}"


@dataclass(frozen=True)
class CategoricalTest:
    feature: str
    categories: FrozenSet[str]

    def passes(self, instance: Any) -> bool:
        return str(feature_value(instance, self.feature)) in self.categories

    def describe(self) -> str:
        cats = ", ".join(sorted(self.categories))
        return f"{self.feature} in {{{cats}}}"


SplitTest = Union[NumericTest, CategoricalTest]


@dataclass(frozen=True)
class Leaf:
    counts: Counts

    @property
    def support(self) -> int:
        return sum(self.counts)

    @property
    def probabilities(self) -> Tuple[float, float, float]:
        total = self.support
        return (self.counts[0] / total, self.counts[1] / total, self.counts[2] / total)


@dataclass(frozen=True)
class SplitNode:
    """Internal node. Instances passing `test` go left."""

    test: SplitTest
    left: "Node"
    right: "Node"
    counts: Counts
    gain: float

    @property
    def support(self) -> int:
        return sum(self.counts)


Node = Union[Leaf, SplitNode]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    params: TreeParams

    def nodes(self) -> Iterator[Tuple[int, int, Node]]:
        """Yield (node number, depth, node) in preorder, numbering from 1."""
        stack = [(self.root, 0)]
        number = 0
        while stack:
            node, depth = stack.pop()
            number += 1
            yield number, depth, node
            if isinstance(node, SplitNode):
                stack.append((node.right, depth + 1))
                stack.append((node.left, depth + 1))

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def depth(self) -> int:
        return max(d for _, d, _ in self.nodes())


def _impurity_rows(counts: np.ndarray, criterion: str) -> np.ndarray:
    counts = counts.astype(np.float64)
    totals = counts.sum(axis=1)
    p = counts / totals[:, None]
    if criterion == "gini":
        return 1.0 - (p * p).sum(axis=1)
    logp = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logp).sum(axis=1)


def impurity(counts: Sequence[int], criterion: str = DEF_CRITERION) -> float:
    """
    Gini (1 - sum p^2) or entropy (-sum p log2 p) of a class count vector.
    """
    c = np.asarray(counts, dtype=np.int64)
    if (c < 0).any():
        raise ValueError(f"counts must be non-negative, got {list(counts)}")
    if c.sum() == 0:
        raise AllZeroCounts(counts)
    if criterion not in CRITERIA:
        raise InvalidParameter("criterion", criterion, f"one of {CRITERIA}")
    return float(_impurity_rows(c[None, :], criterion)[0])


def _gains(
    parent_imp: float, left: np.ndarray, parent: np.ndarray, criterion: str
) -> np.ndarray:
    right = parent[None, :] - left
    n = parent.sum()
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)
    return (
        parent_imp
        - (n_left / n) * _impurity_rows(left, criterion)
        - (n_right / n) * _impurity_rows(right, criterion)
    )


def _best_numeric(
    name: str,
    instances: Sequence[Any],
    y: np.ndarray,
    parent: np.ndarray,
    parent_imp: float,
    params: TreeParams,
) -> Optional[Tuple[SplitTest, float]]:
    n = len(instances)
    x = np.array([float(feature_value(i, name)) for i in instances])
    order = np.argsort(x, kind="stable")
    xs = x[order]
    onehot = np.eye(len(PriceClass), dtype=np.int64)[y[order]]
    left_counts = np.cumsum(onehot, axis=0)[:-1]
    n_left = np.arange(1, n)
    admissible = (
        (xs[1:] > xs[:-1])
        & (n_left >= params.min_leaf)
        & (n - n_left >= params.min_leaf)
    )
    idx = np.flatnonzero(admissible)
    if idx.size == 0:
        return None
    gains = _gains(parent_imp, left_counts[idx], parent, params.criterion)
    j = int(np.argmax(gains))
    lo, hi = xs[idx[j]], xs[idx[j] + 1]
    threshold = (lo + hi) / 2.0
    if threshold <= lo:
        threshold = hi
    return NumericTest(name, float(threshold)), float(gains[j])


def _best_categorical(
    name: str,
    instances: Sequence[Any],
    y: np.ndarray,
    parent: np.ndarray,
    parent_imp: float,
    params: TreeParams,
) -> Optional[Tuple[SplitTest, float]]:
    n = len(instances)
    values = np.array([str(feature_value(i, name)) for i in instances])
    cats = np.unique(values)
    if cats.size < 2:
        return None
    left_counts = np.stack(
        [np.bincount(y[values == c], minlength=len(PriceClass)) for c in cats]
    )
    n_left = left_counts.sum(axis=1)
    admissible = (n_left >= params.min_leaf) & (n - n_left >= params.min_leaf)
    idx = np.flatnonzero(admissible)
    if idx.size == 0:
        return None
    gains = _gains(parent_imp, left_counts[idx], parent, params.criterion)
    j = int(np.argmax(gains))
    return CategoricalTest(name, frozenset({str(cats[idx[j]])})), float(gains[j])


def _best_for_feature(name, instances, y, parent, parent_imp, params):
    search = _best_categorical if is_categorical(name) else _best_numeric
    return search(name, instances, y, parent, parent_imp, params)


def best_split(
    instances: Sequence[Any], params: TreeParams = TreeParams()
) -> Optional[Tuple[SplitTest, float]]:
    """
    Find the admissible split with the largest impurity decrease.

    A candidate is admissible when both children keep at least `min_leaf`
    instances. Ties go to the lower feature index, then the lower threshold or
    the lexicographically first category. Returns None when nothing admissible
    reaches `min_gain`.
    """
    n = len(instances)
    if n == 0 or n < 2 * params.min_leaf:
        return None
    y = np.array([int(i.label) for i in instances], dtype=np.int64)
    parent = np.bincount(y, minlength=len(PriceClass))
    parent_imp = impurity(parent, params.criterion)
    search = partial(
        _best_for_feature,
        instances=instances,
        y=y,
        parent=parent,
        parent_imp=parent_imp,
        params=params,
    )
    if params.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=params.n_jobs) as pool:
            results = list(pool.map(search, params.features))
    else:
        results = [search(name) for name in params.features]

    best = None
    for found in results:
        if found is not None and (best is None or found[1] > best[1]):
            best = found
    if best is None or best[1] < params.min_gain:
        return None
    return best


def _counts(instances: Sequence[Any]) -> Counts:
    c = np.bincount([int(i.label) for i in instances], minlength=len(PriceClass))
    return (int(c[0]), int(c[1]), int(c[2]))


def _grow(instances: List[Any], params: TreeParams, depth: int) -> Node:
    counts = _counts(instances)
    n = len(instances)
    if depth >= params.max_depth or n < 2 * params.min_leaf or max(counts) == n:
        return Leaf(counts)
    found = best_split(instances, params)
    if found is None:
        return Leaf(counts)
    test, gain = found
    left = [i for i in instances if test.passes(i)]
    right = [i for i in instances if not test.passes(i)]
    logger.debug(
        "depth %d: %s (gain %.4f, %d | %d)",
        depth,
        test.describe(),
        gain,
        len(left),
        len(right),
    )
    return SplitNode(
        test,
        _grow(left, params, depth + 1),
        _grow(right, params, depth + 1),
        counts,
        gain,
    )


def fit_tree(
    train: Sequence[LabeledInstance], params: TreeParams = TreeParams()
) -> DecisionTree:
    """Grow a tree by recursive greedy partitioning of the training instances."""
    if not train:
        raise EmptyTrainingSet()
    tree = DecisionTree(_grow(list(train), params, 0), params)
    logger.info(
        "Fitted decision tree: %d nodes, depth %d (%s)",
        tree.n_nodes,
        tree.depth,
        params.describe(),
    )
    return tree


def _route(tree: DecisionTree, instance: Any) -> Tuple[Leaf, List[int]]:
    node = tree.root
    number = 1
    path = [number]
    while isinstance(node, SplitNode):
        if node.test.passes(instance):
            node, number = node.left, number + 1
        else:
            number += 1 + _size(node.left)
            node = node.right
        path.append(number)
    return node, path


def _size(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + _size(node.left) + _size(node.right)


def predict_tree(
    tree: DecisionTree, instance: Any
) -> Tuple[PriceClass, Tuple[float, float, float]]:
    """
    Route an instance to its leaf. Returns the most frequent leaf class (ties to
    the lower class) and the leaf's class frequencies.
    """
    leaf, _ = _route(tree, instance)
    probs = leaf.probabilities
    return PriceClass(int(np.argmax(probs))), probs


def decision_path(tree: DecisionTree, instance: Any) -> List[int]:
    """Preorder node numbers visited by `instance`, root first."""
    return _route(tree, instance)[1]


def feature_importance(tree: DecisionTree) -> Dict[str, float]:
    """Support-weighted impurity decrease per feature, normalized to sum 1."""
    totals = dict.fromkeys(tree.params.features, 0.0)
    for _, _, node in tree.nodes():
        if isinstance(node, SplitNode):
            totals[node.test.feature] += node.support * node.gain
    grand = sum(totals.values())
    if grand <= 0:
        return totals
    return {k: v / grand for k, v in totals.items()}


def describe_tree(tree: DecisionTree) -> Dict[str, str]:
    """Model metadata used for the comparison report cells."""
    importance = feature_importance(tree)
    ranked = sorted(importance.items(), key=lambda kv: (-kv[1], kv[0]))
    strong = [f"{k} ({v:.2f})" for k, v in ranked if v >= 0.1]
    weak = [k for k, v in ranked if v < 0.1]
    indicator = "Target label price_class. "
    if strong:
        indicator += "Most influential variables: " + ", ".join(strong) + ". "
    if weak:
        indicator += "Not significant: " + ", ".join(weak) + "."
    return {
        "model": "Decision Tree",
        "descriptor": f"decision_tree({tree.params.describe()})",
        "measurement_indicator": indicator.strip(),
        "analysis": (
            f"Prediction model: binary tree with {tree.n_nodes} nodes, "
            f"depth {tree.depth}"
        ),
    }


def render_tree(tree: DecisionTree) -> str:
    """Indented text view of the tree with preorder node numbers."""
    lines = []
    for number, depth, node in tree.nodes():
        pad = "  " * depth
        if isinstance(node, SplitNode):
            lines.append(
                f"{pad}Node {number}: {node.test.describe()}"
                f"  (support {node.support}, gain {node.gain:.4f})"
            )
        else:
            probs = node.probabilities
            best = PriceClass(int(np.argmax(probs)))
            dist = " ".join(
                f"{c.label}={n}" for c, n in zip(PriceClass, node.counts, strict=True)
            )
            lines.append(
                f"{pad}Node {number}: leaf -> {best.label} {100 * probs[best]:.1f}%"
                f"  ({dist}, support {node.support})"
            )
    return "\n".join(lines)


def _node_to_dict(node: Node) -> Dict[str, Any]:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "counts": list(node.counts)}
    out: Dict[str, Any] = {
        "kind": "split",
        "feature": node.test.feature,
        "counts": list(node.counts),
        "gain": node.gain,
        "children": [_node_to_dict(node.left), _node_to_dict(node.right)],
    }
    if isinstance(node.test, NumericTest):
        out["threshold"] = node.test.threshold
    else:
        out["categories"] = sorted(node.test.categories)
    return out


def _node_from_dict(d: Dict[str, Any]) -> Node:
    counts = tuple(int(c) for c in d["counts"])
    if len(counts) != len(PriceClass):
        raise ValueError(f"expected {len(PriceClass)} counts, got {len(counts)}")
    if d["kind"] == "leaf":
        return Leaf(counts)  # type: ignore[arg-type]
    if d["kind"] != "split":
        raise ValueError(f"unknown node kind {d['kind']!r}")
    if "threshold" in d:
        test: SplitTest = NumericTest(d["feature"], float(d["threshold"]))
    else:
        test = CategoricalTest(d["feature"], frozenset(d["categories"]))
    left, right = d["children"]
    return SplitNode(
        test,
        _node_from_dict(left),
        _node_from_dict(right),
        counts,  # type: ignore[arg-type]
        float(d["gain"]),
    )


def tree_to_dict(tree: DecisionTree) -> Dict[str, Any]:
    params = asdict(tree.params)
    params["features"] = list(tree.params.features)
    # thread count does not change the tree
    del params["n_jobs"]
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "params": params,
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(d: Dict[str, Any], source: str = "<dict>") -> DecisionTree:
    try:
        if d.get("format") != TREE_FORMAT:
            raise ValueError(f"not a {TREE_FORMAT} document")
        if d.get("version") != TREE_VERSION:
            raise ValueError(f"unsupported version {d.get('version')!r}")
        params = dict(d["params"])
        params["features"] = tuple(params["features"])
        return DecisionTree(_node_from_dict(d["root"]), TreeParams(**params))
    except (KeyError, TypeError, ValueError, InvalidParameter) as e:
        raise ModelFormatError(source, str(e)) from None


def save_tree(tree: DecisionTree, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(tree_to_dict(tree), indent=2, sort_keys=True) + "\n")
    return path


def load_tree(path: Union[str, Path]) -> DecisionTree:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError(path, str(e)) from None
    return tree_from_dict(d, source=str(path))
