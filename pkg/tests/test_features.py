import unittest

import numpy as np

from propclass.errors import EmptyTrainingSet, InvalidParameter, MissingFeature
from propclass.features import (
    BinTable,
    PriceClass,
    SizeBin,
    canonical_order,
    class_counts,
    feature_value,
    fit_normalizer,
    label_dataset,
    normalize,
    price_class,
    size_bin,
)
from propclass.ingest import clean, parse_listing
from propclass.settings import PRICE_BOUNDS

from . import SAMPLE_ROWS, instance


class TestPriceClass(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(price_class(250_000_000), PriceClass.PRICE_A)
        self.assertEqual(price_class(750_000_000), PriceClass.PRICE_B)
        self.assertEqual(price_class(3_100_000_000), PriceClass.PRICE_C)
        self.assertEqual(price_class(0), PriceClass.PRICE_A)

    def test_bounds_to_the_rupiah(self):
        lower, upper = PRICE_BOUNDS
        self.assertEqual(price_class(lower - 1), PriceClass.PRICE_A)
        self.assertEqual(price_class(lower), PriceClass.PRICE_B)
        self.assertEqual(price_class(lower + 1), PriceClass.PRICE_B)
        self.assertEqual(price_class(upper - 1), PriceClass.PRICE_B)
        self.assertEqual(price_class(upper), PriceClass.PRICE_C)
        self.assertEqual(price_class(upper + 1), PriceClass.PRICE_C)

    def test_monotone(self):
        rng = np.random.default_rng(0)
        prices = sorted(int(p) for p in rng.integers(0, 5 * 10**9, size=500))
        labels = [price_class(p) for p in prices]
        self.assertEqual(labels, sorted(labels))

    def test_negative_rejected(self):
        with self.assertRaises(ValueError):
            price_class(-1)

    def test_custom_bounds(self):
        bins = BinTable(price_bounds=(100, 200))
        self.assertEqual(price_class(150, bins), PriceClass.PRICE_B)
        self.assertEqual(price_class(200, bins), PriceClass.PRICE_C)

    def test_labels(self):
        self.assertEqual(PriceClass.PRICE_B.label, "Price_B")
        self.assertEqual(str(PriceClass.PRICE_C), "Price_C")
        for text in ("Price_A", "price_a", " A ", "a"):
            self.assertEqual(PriceClass.from_label(text), PriceClass.PRICE_A)
        with self.assertRaises(ValueError):
            PriceClass.from_label("Price_D")


class TestSizeBin(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(size_bin(60, "land"), SizeBin.A)
        self.assertEqual(size_bin(89, "building"), SizeBin.B)
        self.assertEqual(size_bin(175.5, "land"), SizeBin.C)
        self.assertEqual(size_bin(107, "land"), SizeBin.B)
        self.assertEqual(size_bin(106.99, "land"), SizeBin.A)
        self.assertEqual(size_bin(170.99, "building"), SizeBin.B)
        self.assertEqual(size_bin(171, "building"), SizeBin.C)

    def test_rejects(self):
        with self.assertRaises(ValueError):
            size_bin(0, "land")
        with self.assertRaises(ValueError):
            size_bin(10, "garden")

    def test_bin_table_validation(self):
        with self.assertRaises(InvalidParameter):
            BinTable(land_bounds=(175.5, 107.0))
        with self.assertRaises(InvalidParameter):
            BinTable(price_bounds=(5, 5))
        bins = BinTable.from_mapping({"price_lower": 1, "price_upper": 10})
        self.assertEqual(bins.price_bounds, (1, 10))
        self.assertEqual(bins.land_bounds, BinTable().land_bounds)
        self.assertEqual(BinTable.from_mapping(BinTable().to_mapping()), BinTable())


class TestLabelDataset(unittest.TestCase):
    def setUp(self):
        self.dataset = clean([parse_listing(r) for r in SAMPLE_ROWS])

    def test_sample_class_counts(self):
        labeled = label_dataset(self.dataset)
        self.assertEqual(class_counts(labeled), (9, 3, 2))
        self.assertEqual(labeled[10].label, PriceClass.PRICE_C)
        self.assertEqual(labeled[6].label, PriceClass.PRICE_B)

    def test_order_preserved(self):
        labeled = label_dataset(self.dataset)
        self.assertEqual(
            [i.location for i in labeled], [r.location for r in self.dataset.records]
        )
        self.assertIsNone(labeled[0].building_bin)

    def test_size_bins_attached(self):
        labeled = label_dataset(self.dataset, with_size_bins=True)
        self.assertEqual((labeled[0].building_bin, labeled[0].land_bin), (1, 0))
        self.assertEqual((labeled[2].building_bin, labeled[2].land_bin), (2, 2))
        self.assertIn("building_bin", labeled[0].features())

    def test_single_record(self):
        d = clean([parse_listing(SAMPLE_ROWS[2])])
        self.assertEqual([i.label for i in label_dataset(d)], [PriceClass.PRICE_C])


class TestFeatureAccess(unittest.TestCase):
    def test_feature_value(self):
        inst = instance(building_size=70)
        self.assertEqual(feature_value(inst, "building_size"), 70.0)
        self.assertEqual(feature_value({"bedroom": 2}, "bedroom"), 2)
        with self.assertRaises(MissingFeature):
            feature_value({"bedroom": 2}, "land_size")
        with self.assertRaises(MissingFeature):
            feature_value(inst, "building_bin")

    def test_canonical_order(self):
        self.assertEqual(
            canonical_order(["location", "bathroom", "building_size"]),
            ("building_size", "bathroom", "location"),
        )
        with self.assertRaises(InvalidParameter):
            canonical_order(["price"])


class TestNormalize(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(normalize(36, (36, 258)), 0.0)
        self.assertEqual(normalize(258, (36, 258)), 1.0)
        self.assertEqual(normalize(147, (36, 258)), 0.5)

    def test_degenerate_and_clamped(self):
        self.assertEqual(normalize(90, (90, 90)), 0.0)
        self.assertEqual(normalize(10, (36, 258)), 0.0)
        self.assertEqual(normalize(400, (36, 258)), 1.0)

    def test_fit_normalizer(self):
        one = fit_normalizer([instance(building_size=80)], ["building_size"])
        self.assertEqual(one.ranges["building_size"], (80.0, 80.0))
        two = fit_normalizer(
            [instance(building_size=36), instance(building_size=258)], ["building_size"]
        )
        self.assertEqual(two.ranges["building_size"], (36.0, 258.0))
        self.assertEqual(two.scale("building_size", 147), 0.5)
        twice = fit_normalizer(
            [instance(building_size=80), instance(building_size=80)], ["building_size"]
        )
        self.assertEqual(twice, one)

    def test_empty_training_set(self):
        with self.assertRaises(EmptyTrainingSet):
            fit_normalizer([])
