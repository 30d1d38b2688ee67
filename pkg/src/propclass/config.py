"""
Pipeline configuration.

A run is described by one flat YAML mapping. Command-line flags are merged
over the file values before validation, so every run is fully described by
the resolved mapping that `config_to_mapping` returns.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

import yaml

from .errors import ConfigError
from .features import ALL_FEATURES, BIN_FEATURES, DEFAULT_FEATURES, BinTable
from .ingest import SynthConfig
from .knn import KnnParams
from .settings import DEF_TRAIN_RATIO
from .split import SplitParams
from .tree import TreeParams

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("text", "structured")

SCALAR_KEYS = (
    "input",
    "synth_n",
    "synth_noise",
    "synth_seed",
    "seed",
    "train_ratio",
    "price_lower",
    "price_upper",
    "land_lower",
    "land_upper",
    "building_lower",
    "building_upper",
    "size_bins",
    "max_depth",
    "min_leaf",
    "min_gain",
    "criterion",
    "k",
    "use_location",
    "output_dir",
    "format",
    "strict",
    "n_jobs",
)
WEIGHT_KEYS = tuple(f"weight_{f}" for f in ALL_FEATURES)
CONFIG_KEYS = SCALAR_KEYS + WEIGHT_KEYS

DEF_OUTPUT_DIR = "out"


@dataclass(frozen=True)
class PipelineConfig:
    """
    Everything one pipeline run needs.

    Exactly one of `input` (a listing CSV) and `synth` (generator settings)
    is set. The split seed is always explicit.
    """

    split: SplitParams
    input: Optional[str] = None
    synth: Optional[SynthConfig] = None
    bins: BinTable = field(default_factory=BinTable)
    size_bins: bool = False
    tree: TreeParams = field(default_factory=TreeParams)
    knn: KnnParams = field(default_factory=KnnParams)
    output_dir: str = DEF_OUTPUT_DIR
    format: str = "text"
    strict: bool = False

    def __post_init__(self):
        if (self.input is None) == (self.synth is None):
            raise ConfigError(
                "exactly one of 'input' or 'synth_*' settings is required"
            )
        if self.format not in REPORT_FORMATS:
            raise ConfigError(
                f"format must be one of {REPORT_FORMATS}, got {self.format!r}"
            )

    @property
    def seed(self) -> int:
        return self.split.seed

    @property
    def data_source(self) -> str:
        """Input file name or generator description, free of directories."""
        if self.synth is not None:
            return self.synth.provenance
        return Path(str(self.input)).name


def _as_bool(key: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ("true", "yes", "1"):
        return True
    if isinstance(value, str) and value.strip().lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def _as_str(key: str, value: Any) -> str:
    if not isinstance(value, (str, int, float)) or isinstance(value, bool):
        raise ConfigError(f"{key} must be a string, got {value!r}")
    return str(value)


def _get(
    values: Mapping[str, Any], key: str, conv: Callable[[str, Any], Any], default: Any
) -> Any:
    if values.get(key) is None:
        return default
    return conv(key, values[key])


def check_keys(values: Mapping[str, Any]) -> None:
    """Reject unknown keys and nested values."""
    unknown = sorted(str(k) for k in values if k not in CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in values.items():
        if isinstance(value, (dict, list, tuple, set)):
            raise ConfigError(f"{key} must be a scalar value, got {value!r}")


def config_from_mapping(values: Mapping[str, Any]) -> PipelineConfig:
    """Validate a flat mapping of config keys and build a PipelineConfig."""
    check_keys(values)
    if values.get("seed") is None:
        raise ConfigError("'seed' is required; there is no default seed")

    synth = None
    if any(values.get(k) is not None for k in ("synth_n", "synth_noise", "synth_seed")):
        if values.get("synth_n") is None:
            raise ConfigError("'synth_n' is required when generating listings")
        if values.get("synth_seed") is None:
            raise ConfigError("'synth_seed' is required when generating listings")
        synth = SynthConfig(
            n=_as_int("synth_n", values["synth_n"]),
            noise_rate=_get(values, "synth_noise", _as_float, 0.0),
            seed=_as_int("synth_seed", values["synth_seed"]),
        )

    bounds = {
        k: _as_float(k, values[k])
        for k in BinTable().to_mapping()
        if values.get(k) is not None
    }
    bins = BinTable.from_mapping(bounds)
    size_bins = _get(values, "size_bins", _as_bool, False)
    features: Tuple[str, ...] = DEFAULT_FEATURES + (BIN_FEATURES if size_bins else ())
    n_jobs = _get(values, "n_jobs", _as_int, 1)
    if n_jobs < 1:
        raise ConfigError(f"n_jobs must be >= 1, got {n_jobs}")

    defaults = TreeParams()
    tree = TreeParams(
        max_depth=_get(values, "max_depth", _as_int, defaults.max_depth),
        min_leaf=_get(values, "min_leaf", _as_int, defaults.min_leaf),
        min_gain=_get(values, "min_gain", _as_float, defaults.min_gain),
        criterion=_get(values, "criterion", _as_str, defaults.criterion),
        features=features,
        n_jobs=n_jobs,
    )
    weights = {
        f: _get(values, f"weight_{f}", _as_float, 1.0 if f in features else 0.0)
        for f in ALL_FEATURES
    }
    for f in BIN_FEATURES:
        if weights[f] > 0 and not size_bins:
            raise ConfigError(f"weight_{f} needs size_bins: true")
    knn = KnnParams(
        k=_get(values, "k", _as_int, KnnParams().k),
        weights=weights,
        use_location=_get(values, "use_location", _as_bool, True),
    )
    split = SplitParams(
        seed=_as_int("seed", values["seed"]),
        train_ratio=_get(values, "train_ratio", _as_float, DEF_TRAIN_RATIO),
    )
    return PipelineConfig(
        split=split,
        input=_get(values, "input", _as_str, None),
        synth=synth,
        bins=bins,
        size_bins=size_bins,
        tree=tree,
        knn=knn,
        output_dir=_get(values, "output_dir", _as_str, DEF_OUTPUT_DIR),
        format=_get(values, "format", _as_str, "text"),
        strict=_get(values, "strict", _as_bool, False),
    )


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat YAML mapping. An empty file is an empty mapping."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}") from None
    try:
        values = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid YAML: {e}") from None
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ConfigError(f"config file {path} must hold a mapping of keys to values")
    check_keys(values)
    logger.info("Loaded %d config keys from %s", len(values), path)
    return values


def resolve_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> PipelineConfig:
    """
    File values first, then every override that is not None. Either source
    may be absent.
    """
    values: Dict[str, Any] = load_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return config_from_mapping(values)


def config_to_mapping(config: PipelineConfig) -> Dict[str, Any]:
    """
    The resolved configuration as flat keys, for report provenance. The
    output directory is left out and the input is reduced to its file name,
    so artifacts do not depend on where a run writes or reads.
    """
    out: Dict[str, Any] = {"seed": config.seed, "train_ratio": config.split.train_ratio}
    if config.synth is not None:
        out.update(
            synth_n=config.synth.n,
            synth_noise=config.synth.noise_rate,
            synth_seed=config.synth.seed,
        )
    else:
        out["input"] = config.data_source
    out.update(config.bins.to_mapping())
    out.update(
        size_bins=config.size_bins,
        max_depth=config.tree.max_depth,
        min_leaf=config.tree.min_leaf,
        min_gain=config.tree.min_gain,
        criterion=config.tree.criterion,
        k=config.knn.k,
        use_location=config.knn.use_location,
        format=config.format,
        strict=config.strict,
    )
    for f, w in config.knn.weights.items():
        out[f"weight_{f}"] = w
    return dict(sorted(out.items()))
