"""
Listing ingestion: Rupiah price parsing, CSV reading, cleaning and the
synthetic listing generator.
"""

import hashlib
import logging
import math
import re
from dataclasses import astuple, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    EmptyDataset,
    InputNotFound,
    InvalidParameter,
    MalformedField,
    MalformedHeader,
    MalformedPrice,
    MalformedRow,
)
from .features import BinTable, LabeledInstance, PriceClass, price_class, size_bin
from .settings import (
    BANDUNG_DISTRICTS,
    BATHROOMS_PER_BEDROOM,
    BEDROOM_BASE,
    M2_PER_BEDROOM,
    MAX_BEDROOMS,
    MAX_SEED,
    PRICE_STEP,
    SYNTH_BUILDING_RANGE,
    SYNTH_LAND_RANGE,
)

logger = logging.getLogger(__name__)

COLUMNS = ("location", "building_size", "land_size", "bedroom", "bathroom", "price")
QUERY_COLUMNS = COLUMNS[:-1]

_PRICE_RE = re.compile(r"^(?:rp\.?)?\s*(\d{1,3}(?:\.\d{3})+|\d+)$", re.IGNORECASE)
_AREA_SUFFIX_RE = re.compile(r"\s*(?:m2|m²)$", re.IGNORECASE)


@dataclass(frozen=True)
class ListingRecord:
    """
    One advertised property.

    Args:
        location: District text, e.g. "Bojongsoang, Bandung".
        building_size: Building area in m2.
        land_size: Land area in m2.
        bedroom: Number of bedrooms.
        bathroom: Number of bathrooms.
        price: Asking price in Rupiah.
    """

    location: str
    building_size: float
    land_size: float
    bedroom: int
    bathroom: int
    price: int

    def invalid_reason(self) -> Optional[str]:
        """Return why this record cannot be kept, or None if it is valid."""
        if not self.location.strip():
            return "empty location"
        for name in ("building_size", "land_size"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                return f"non-positive {name}"
        for name in ("bedroom", "bathroom"):
            if getattr(self, name) < 0:
                return f"negative {name}"
        if self.price <= 0:
            return "zero price" if self.price == 0 else "negative price"
        return None


@dataclass(frozen=True)
class CleanSummary:
    duplicates_removed: int = 0
    invalid_removed: int = 0
    malformed_removed: int = 0


@dataclass(frozen=True)
class Dataset:
    """
    Cleaned listings in input order.

    `summary` describes what cleaning removed; it does not take part in
    equality, so cleaning an already clean dataset compares equal.
    """

    records: Tuple[ListingRecord, ...]
    provenance: str = ""
    summary: CleanSummary = field(default=CleanSummary(), compare=False)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class RejectedRow:
    line: Optional[int]
    reason: str


@dataclass(frozen=True)
class RawListings:
    """Parsed rows of a listing CSV plus the rows lenient reading skipped."""

    records: Tuple[ListingRecord, ...]
    rejected: Tuple[RejectedRow, ...]
    source: str


@dataclass(frozen=True)
class SynthConfig:
    """
    Synthetic listing generator settings.

    Args:
        n: Number of records to emit.
        noise_rate: Fraction of records whose price is drawn from a uniformly
                    random class instead of the planted one.
        seed: Generator seed, 0 <= seed < 2**64.
        location_pool: Locations drawn uniformly for each record.
    """

    n: int
    noise_rate: float
    seed: int
    location_pool: Tuple[str, ...] = BANDUNG_DISTRICTS

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter("n", self.n, "must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InvalidParameter("noise_rate", self.noise_rate, "must be in [0, 1]")
        if not 0 <= self.seed <= MAX_SEED:
            raise InvalidParameter(
                "seed", self.seed, "must be a 64-bit unsigned integer"
            )
        if not self.location_pool or not all(p.strip() for p in self.location_pool):
            raise InvalidParameter(
                "location_pool", self.location_pool, "needs non-empty locations"
            )

    @property
    def provenance(self) -> str:
        return f"synth:n={self.n},noise={self.noise_rate},seed={self.seed}"


def parse_price(text: str) -> int:
    """
    Parse a Rupiah price such as "Rp. 250.000.000", "Rp 95.000.000" or a bare
    integer "250000000".
    """
    s = text.strip()
    if "-" in s:
        raise MalformedPrice(text, "negative amounts are not allowed")
    if not any(ch.isdigit() for ch in s):
        raise MalformedPrice(text, "no digits")
    m = _PRICE_RE.match(s)
    if m is None:
        raise MalformedPrice(text, "expected 'Rp. 1.234.567' or a bare integer")
    return int(m.group(1).replace(".", ""))


def format_price(value: int) -> str:
    """Render a price the way listings show it: "Rp. 1.275.000.000"."""
    if value < 0:
        raise ValueError(f"price must be non-negative, got {value}")
    return "Rp. " + f"{value:,}".replace(",", ".")


def _parse_size(name: str, text: str, line: Optional[int]) -> float:
    s = _AREA_SUFFIX_RE.sub("", text.strip())
    try:
        value = float(s)
    except ValueError:
        raise MalformedField(name, text, "not a number", line) from None
    if not math.isfinite(value) or value <= 0:
        raise MalformedField(name, text, "must be positive", line)
    return value


def _parse_count(name: str, text: str, line: Optional[int]) -> int:
    try:
        value = float(text.strip())
    except ValueError:
        raise MalformedField(name, text, "not a number", line) from None
    if not value.is_integer() or value < 0:
        raise MalformedField(name, text, "must be a non-negative integer", line)
    return int(value)


def parse_listing(fields: Sequence[str], line: Optional[int] = None) -> ListingRecord:
    """
    Parse the six text fields of one listing row, in column order
    location, building_size, land_size, bedroom, bathroom, price.
    """
    if len(fields) != len(COLUMNS):
        raise MalformedRow(len(COLUMNS), len(fields), line)
    location = fields[0].strip()
    if not location:
        raise MalformedField("location", fields[0], "empty", line)
    building_size = _parse_size("building_size", fields[1], line)
    land_size = _parse_size("land_size", fields[2], line)
    bedroom = _parse_count("bedroom", fields[3], line)
    bathroom = _parse_count("bathroom", fields[4], line)
    try:
        price = parse_price(fields[5])
    except MalformedPrice as e:
        raise MalformedPrice(e.value, e.reason, line) from None
    return ListingRecord(location, building_size, land_size, bedroom, bathroom, price)


def read_listings(path: Union[str, Path], strict: bool = False) -> RawListings:
    """
    Read a listing CSV (header location,building_size,land_size,bedroom,
    bathroom,price).

    Args:
        path: CSV file, UTF-8.
        strict: Raise on the first unparseable row instead of skipping it.
    """
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(path)

    rejected: List[RejectedRow] = []

    def on_bad_line(fields: List[str]) -> None:
        err = MalformedRow(len(COLUMNS), len(fields))
        if strict:
            raise err
        rejected.append(RejectedRow(None, str(err)))
        return None

    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8-sig",
            engine="python",
            on_bad_lines=on_bad_line,
        )
    except pd.errors.EmptyDataError:
        raise MalformedHeader(COLUMNS, ()) from None
    header = tuple(str(c).strip() for c in frame.columns)
    if header != COLUMNS:
        raise MalformedHeader(COLUMNS, header)

    records = []
    for offset, row in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        fields = [v for v in row if isinstance(v, str)]
        try:
            records.append(parse_listing(fields, line=line))
        except (MalformedRow, MalformedField) as e:
            if strict:
                raise
            logger.warning("Skipping line %d: %s", line, e)
            rejected.append(RejectedRow(line, str(e)))
    logger.info(
        "Read %d listings from %s (%d rejected)", len(records), path.name, len(rejected)
    )
    return RawListings(tuple(records), tuple(rejected), str(path.name))


@dataclass(frozen=True)
class QueryRows:
    """
    Unlabeled instances read for prediction. `observed` holds the true class
    of each row when the file carries a price or price_class column.
    """

    queries: Tuple[Dict[str, Any], ...]
    observed: Optional[Tuple[PriceClass, ...]]


def read_queries(path: Union[str, Path], bins: BinTable = BinTable()) -> QueryRows:
    """
    Read instances to classify: the listing columns without price, optionally
    followed by a `price` (Rupiah) or `price_class` (Price_A/B/C) column.
    Size bins are attached to every query. Any unparseable row is an error.
    """
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(path)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding="utf-8-sig"
        )
    except pd.errors.EmptyDataError:
        raise MalformedHeader(QUERY_COLUMNS, ()) from None
    except pd.errors.ParserError as e:
        raise MalformedRow(len(QUERY_COLUMNS), str(e).strip()) from None
    header = tuple(str(c).strip() for c in frame.columns)
    extra = header[len(QUERY_COLUMNS) :]
    if header[: len(QUERY_COLUMNS)] != QUERY_COLUMNS or extra not in (
        (),
        ("price",),
        ("price_class",),
    ):
        raise MalformedHeader(QUERY_COLUMNS + ("[price|price_class]",), header)

    queries = []
    observed = []
    for offset, row in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        if not all(isinstance(v, str) for v in row):
            raise MalformedRow(len(header), sum(isinstance(v, str) for v in row), line)
        location = row[0].strip()
        if not location:
            raise MalformedField("location", row[0], "empty", line)
        building = _parse_size("building_size", row[1], line)
        land = _parse_size("land_size", row[2], line)
        queries.append(
            {
                "location": location,
                "building_size": building,
                "land_size": land,
                "bedroom": _parse_count("bedroom", row[3], line),
                "bathroom": _parse_count("bathroom", row[4], line),
                "building_bin": int(size_bin(building, "building", bins)),
                "land_bin": int(size_bin(land, "land", bins)),
            }
        )
        if extra == ("price",):
            try:
                observed.append(price_class(parse_price(row[5]), bins))
            except MalformedPrice as e:
                raise MalformedPrice(e.value, e.reason, line) from None
        elif extra == ("price_class",):
            try:
                observed.append(PriceClass.from_label(row[5]))
            except ValueError as e:
                raise MalformedField("price_class", row[5], str(e), line) from None
    logger.info("Read %d queries from %s", len(queries), path.name)
    return QueryRows(tuple(queries), tuple(observed) if extra else None)


def write_instances(
    instances: Sequence[LabeledInstance], path: Union[str, Path]
) -> Path:
    """Write labeled instances in the `read_queries` layout plus price_class."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        [getattr(i, c) for c in QUERY_COLUMNS] + [i.label.label] for i in instances
    ]
    frame = pd.DataFrame(rows, columns=[*QUERY_COLUMNS, "price_class"])
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def clean(
    records: Sequence[ListingRecord], provenance: str = "", malformed: int = 0
) -> Dataset:
    """
    Drop invalid records (non-positive sizes, zero price, empty location), then
    collapse exact duplicates to their first occurrence. Order is preserved.

    Args:
        records: Parsed listings.
        provenance: Tag stored on the Dataset (source file or synth seed).
        malformed: Rows already rejected while parsing, carried into the summary.
    """
    valid = []
    invalid = 0
    for r in records:
        reason = r.invalid_reason()
        if reason is not None:
            logger.debug("Removing %s: %s", r, reason)
            invalid += 1
        else:
            valid.append(r)

    survivors: Tuple[ListingRecord, ...] = ()
    if valid:
        frame = pd.DataFrame([astuple(r) for r in valid], columns=list(COLUMNS))
        keep = ~frame.duplicated(keep="first").to_numpy()
        survivors = tuple(r for r, k in zip(valid, keep, strict=True) if k)

    summary = CleanSummary(
        duplicates_removed=len(valid) - len(survivors),
        invalid_removed=invalid,
        malformed_removed=malformed,
    )
    logger.info(
        "Cleaned %d -> %d records (duplicates=%d invalid=%d malformed=%d)",
        len(records),
        len(survivors),
        summary.duplicates_removed,
        summary.invalid_removed,
        summary.malformed_removed,
    )
    if not survivors:
        raise EmptyDataset(summary)
    return Dataset(survivors, provenance, summary)


def dataset_frame(dataset: Dataset) -> pd.DataFrame:
    return pd.DataFrame([astuple(r) for r in dataset.records], columns=list(COLUMNS))


def write_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write a cleaned dataset as CSV with bare-integer prices."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(dataset).to_csv(path, index=False, lineterminator="\n")
    return path


def dataset_fingerprint(dataset: Dataset) -> str:
    """SHA-256 of the dataset's canonical CSV form."""
    text = dataset_frame(dataset).to_csv(index=False, lineterminator="\n")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def planted_class(
    building_size: float, land_size: float, bins: BinTable = BinTable()
) -> PriceClass:
    """
    The generator's labeling rule: the mean of the building and land size bins,
    rounded down.
    """
    b = int(size_bin(building_size, "building", bins))
    land = int(size_bin(land_size, "land", bins))
    return PriceClass((b + land) // 2)


def _price_steps(bins: BinTable) -> List[Tuple[int, int]]:
    # inclusive ranges of PRICE_STEP multiples inside each class interval
    lower, upper = bins.price_bounds
    a_hi = -(-lower // PRICE_STEP) - 1
    b_hi = -(-upper // PRICE_STEP) - 1
    steps = [
        (max(1, a_hi // 6), a_hi),
        (a_hi + 1, b_hi),
        (b_hi + 1, (b_hi + 1) * 10 // 3),
    ]
    for lo, hi in steps:
        if lo > hi or lo < 1:
            raise InvalidParameter(
                "price_bounds", bins.price_bounds, "too narrow for generated prices"
            )
    return steps


def _unique_listing(
    base: ListingRecord,
    steps: Tuple[int, int],
    start: int,
    seen: Set[ListingRecord],
) -> ListingRecord:
    """
    Price `base` at the first step from `start` (wrapping inside the inclusive
    step range) that gives a listing not in `seen`.
    """
    lo, hi = steps
    width = hi - lo + 1
    for j in range(width):
        record = replace(base, price=(lo + (start + j) % width) * PRICE_STEP)
        if record not in seen:
            return record
    raise InvalidParameter(
        "n", len(seen) + 1, "more identical listings than prices in the class"
    )


def generate_synthetic(config: SynthConfig, bins: BinTable = BinTable()) -> Dataset:
    """
    Generate listings with a known labeling rule.

    Building and land sizes are drawn uniformly from `SYNTH_BUILDING_RANGE` and
    `SYNTH_LAND_RANGE` (0.1 m2 resolution). Bedrooms grow with building size
    and bathrooms with bedrooms, both with rounding noise. The planted class
    comes from `planted_class`; with probability `noise_rate` the price is
    instead drawn for a uniformly random class. Prices are multiples of
    Rp 5.000.000 inside the class interval.
    """
    n = config.n
    rng = np.random.default_rng(config.seed)
    building = np.round(rng.uniform(*SYNTH_BUILDING_RANGE, size=n), 1)
    land = np.round(rng.uniform(*SYNTH_LAND_RANGE, size=n), 1)
    bedroom = np.clip(
        np.rint(BEDROOM_BASE + building / M2_PER_BEDROOM + rng.normal(0, 0.5, n)),
        1,
        MAX_BEDROOMS,
    ).astype(np.int64)
    bathroom = np.clip(
        np.rint(BATHROOMS_PER_BEDROOM * bedroom + rng.normal(0, 0.4, n)), 1, bedroom
    ).astype(np.int64)
    loc_idx = rng.integers(len(config.location_pool), size=n)
    noisy = rng.random(n) < config.noise_rate
    random_cls = rng.integers(len(PriceClass), size=n)
    price_u = rng.random(n)

    steps = _price_steps(bins)
    seen: Set[ListingRecord] = set()
    records = []
    for i in range(n):
        base = ListingRecord(
            location=config.location_pool[loc_idx[i]],
            building_size=float(building[i]),
            land_size=float(land[i]),
            bedroom=int(bedroom[i]),
            bathroom=int(bathroom[i]),
            price=0,
        )
        if noisy[i]:
            cls = int(random_cls[i])
        else:
            cls = int(planted_class(base.building_size, base.land_size, bins))
        lo, hi = steps[cls]
        start = int(price_u[i] * (hi - lo + 1))
        record = _unique_listing(base, steps[cls], start, seen)
        seen.add(record)
        records.append(record)
    logger.info(
        "Generated %d listings (%d with a randomized class)", n, int(noisy.sum())
    )
    return Dataset(tuple(records), config.provenance)
