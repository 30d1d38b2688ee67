import tempfile
import unittest
from pathlib import Path

import numpy as np

from propclass.errors import (
    EmptyTrainingSet,
    InsufficientData,
    InvalidParameter,
    MissingFeature,
    ModelFormatError,
)
from propclass.features import DEFAULT_FEATURES, Normalizer, PriceClass, normalize
from propclass.knn import (
    KnnModel,
    KnnParams,
    describe_knn,
    distance,
    fit_knn,
    knn_from_dict,
    knn_to_dict,
    load_knn,
    neighbor_details,
    predict_knn,
    predict_knn_batch,
    save_knn,
)

from . import instance, random_instances

BUILDING_ONLY = {"building_size": 1.0}


def line_model(points, k):
    """Model on building_size alone with the range fixed to [100, 200]."""
    stored = tuple(instance(label, building_size=x) for label, x in points)
    params = KnnParams(k=k, weights=BUILDING_ONLY)
    return KnnModel(stored, Normalizer({"building_size": (100.0, 200.0)}), params)


def oracle_distance(a, b, model):
    params = model.params
    total = 0.0
    for f in params.active_features:
        if f == "location":
            d = 0.0 if a.location == b.location else 1.0
        else:
            r = model.normalizer.ranges[f]
            d = abs(normalize(getattr(a, f), r) - normalize(getattr(b, f), r))
        total += params.weights[f] * d
    return total / sum(params.weights[f] for f in params.active_features)


def oracle_vote(labels, dists):
    votes = [0, 0, 0]
    sums = [0.0, 0.0, 0.0]
    for c, d in zip(labels, dists, strict=True):
        votes[c] += 1
        sums[c] += d
    tied = [c for c in range(3) if votes[c] == max(votes)]
    return PriceClass(min(tied, key=lambda c: (sums[c], c)))


class TestKnnParams(unittest.TestCase):
    def test_defaults(self):
        params = KnnParams()
        self.assertEqual(params.k, 5)
        self.assertEqual(params.active_features, DEFAULT_FEATURES)
        self.assertEqual(params.categorical_features, ("location",))

    def test_location_switch(self):
        params = KnnParams(use_location=False)
        self.assertNotIn("location", params.active_features)
        self.assertIn("use_location=False", params.describe())

    def test_rejects(self):
        for kwargs in (
            {"k": 0},
            {"weights": {"building_size": -1.0}},
            {"weights": {"building_size": 0.0}},
            {"weights": {"location": 1.0}, "use_location": False},
            {"weights": {"price": 1.0}},
        ):
            with self.subTest(**kwargs):
                with self.assertRaises(InvalidParameter):
                    KnnParams(**kwargs)


class TestDistance(unittest.TestCase):
    def test_identity(self):
        a = instance(building_size=70, land_size=120)
        model = fit_knn([a, instance(building_size=90, land_size=60)], KnnParams(k=1))
        self.assertEqual(distance(a, a, model), 0.0)

    def test_maximal(self):
        a = instance("A", "Kopo, Bandung", 36, 60, 2, 1)
        b = instance("C", "Setiabudi, Bandung", 258, 360, 4, 4)
        model = fit_knn([a, b], KnnParams(k=1))
        self.assertEqual(distance(a, b, model), 1.0)

    def test_weighted_mean(self):
        weights = {"building_size": 1.0, "location": 1.0}
        model = fit_knn(
            [instance(building_size=100), instance(building_size=200)],
            KnnParams(k=1, weights=weights),
        )
        a = instance(building_size=130)
        b = instance(building_size=150)
        self.assertAlmostEqual(distance(a, b, model), 0.1)

    def test_location_ignored_when_disabled(self):
        a = instance(location="Kopo, Bandung")
        b = instance(location="Cibiru, Bandung")
        on = fit_knn([a, b], KnnParams(k=1))
        off = fit_knn([a, b], KnnParams(k=1, use_location=False))
        self.assertGreater(distance(a, b, on), 0.0)
        self.assertEqual(distance(a, b, off), 0.0)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(21)
        data = random_instances(rng, 40, continuous=True)
        model = fit_knn(data[:30], KnnParams(k=3))
        for a in data:
            for b in data[::7]:
                d = distance(a, b, model)
                self.assertEqual(d, distance(b, a, model))
                self.assertGreaterEqual(d, 0.0)
                self.assertLessEqual(d, 1.0)

    def test_missing_feature(self):
        model = fit_knn([instance(), instance(building_size=60)], KnnParams(k=1))
        with self.assertRaises(MissingFeature):
            model.distances({"building_size": 80})


class TestFitKnn(unittest.TestCase):
    def test_stores_training_set(self):
        data = [instance(building_size=40 + i) for i in range(5)]
        model = fit_knn(data, KnnParams(k=5))
        self.assertEqual(model.instances, tuple(data))
        self.assertEqual(model.normalizer.ranges["building_size"], (40.0, 44.0))

    def test_insufficient_data(self):
        data = [instance(building_size=40 + i) for i in range(4)]
        with self.assertRaises(InsufficientData):
            fit_knn(data, KnnParams(k=5))
        with self.assertRaises(EmptyTrainingSet):
            fit_knn([], KnnParams(k=1))


class TestPredictKnn(unittest.TestCase):
    def test_majority_vote(self):
        model = line_model([("A", 110), ("A", 120), ("B", 130), ("B", 105)], k=3)
        label, neighbors = predict_knn(model, instance(building_size=100))
        self.assertEqual(label, PriceClass.PRICE_A)
        self.assertEqual([i for i, _ in neighbors], [3, 0, 1])
        for (_, got), want in zip(neighbors, (0.05, 0.1, 0.2), strict=True):
            self.assertAlmostEqual(got, want)

    def test_vote_tie_goes_to_closer_class(self):
        model = line_model([("A", 120), ("B", 110)], k=2)
        label, _ = predict_knn(model, instance(building_size=100))
        self.assertEqual(label, PriceClass.PRICE_B)

    def test_distance_tie_goes_to_lower_index(self):
        model = line_model([("B", 110), ("A", 110), ("A", 150)], k=1)
        label, neighbors = predict_knn(model, instance(building_size=100))
        self.assertEqual(label, PriceClass.PRICE_B)
        self.assertEqual(neighbors[0][0], 0)

    def test_self_query(self):
        rng = np.random.default_rng(22)
        data = random_instances(rng, 60, continuous=True)
        model = fit_knn(data, KnnParams(k=1))
        for j, inst in enumerate(data):
            label, neighbors = predict_knn(model, inst)
            self.assertEqual(label, inst.label)
            self.assertEqual(neighbors, [(j, 0.0)])

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(600):
            n = int(rng.integers(1, 51))
            data = random_instances(rng, n + 1, continuous=True)
            stored, query = data[:n], data[n]
            weights = {
                f: float(rng.choice([0.0, 0.5, 1.0, 2.0])) for f in DEFAULT_FEATURES
            }
            weights["building_size"] = float(rng.choice([0.5, 1.0, 3.0]))
            params = KnnParams(
                k=int(rng.integers(1, min(n, 7) + 1)),
                weights=weights,
                use_location=bool(rng.integers(2)),
            )
            model = fit_knn(stored, params)
            dists = [oracle_distance(s, query, model) for s in stored]
            order = sorted(range(n), key=lambda j: (dists[j], j))
            k = params.k
            if k < n and dists[order[k]] - dists[order[k - 1]] < 1e-9:
                continue
            checked += 1
            label, neighbors = predict_knn(model, query)
            self.assertEqual([j for j, _ in neighbors], order[:k])
            for j, d in neighbors:
                self.assertAlmostEqual(d, dists[j], places=12)
            expected = oracle_vote(
                [int(stored[j].label) for j in order[:k]], [dists[j] for j in order[:k]]
            )
            self.assertEqual(label, expected)
        self.assertGreaterEqual(checked, 500)

    def test_uniform_weight_scaling(self):
        rng = np.random.default_rng(24)
        data = random_instances(rng, 80)
        base = {"building_size": 1.0, "land_size": 0.5, "bedroom": 1.0, "location": 2.0}
        for factor in (2.0, 0.5, 4.0):
            scaled = {f: w * factor for f, w in base.items()}
            a = fit_knn(data[:60], KnnParams(k=5, weights=base))
            b = fit_knn(data[:60], KnnParams(k=5, weights=scaled))
            for q in data[60:]:
                self.assertEqual(predict_knn(a, q), predict_knn(b, q))

    def test_batch_matches_sequential(self):
        rng = np.random.default_rng(25)
        data = random_instances(rng, 90)
        model = fit_knn(data[:70], KnnParams(k=5))
        sequential = [predict_knn(model, q) for q in data[70:]]
        self.assertEqual(predict_knn_batch(model, data[70:]), sequential)
        self.assertEqual(predict_knn_batch(model, data[70:], n_jobs=4), sequential)

    def test_neighbor_details(self):
        model = line_model([("A", 110), ("C", 190)], k=1)
        _, neighbors = predict_knn(model, instance(building_size=180))
        (row,) = neighbor_details(model, neighbors)
        self.assertEqual(row["index"], 1)
        self.assertEqual(row["label"], "Price_C")
        self.assertEqual(row["building_size"], 190.0)


class TestKnnSerialization(unittest.TestCase):
    def test_save_and_load(self):
        rng = np.random.default_rng(26)
        data = random_instances(rng, 50)
        model = fit_knn(data[:40], KnnParams(k=3, use_location=False))
        with tempfile.TemporaryDirectory() as tmp:
            loaded = load_knn(save_knn(model, Path(tmp) / "knn.model"))
        self.assertEqual(loaded, model)
        self.assertEqual(knn_to_dict(loaded), knn_to_dict(model))
        for q in data[40:]:
            self.assertEqual(predict_knn(loaded, q), predict_knn(model, q))

    def test_rejects_bad_documents(self):
        model = fit_knn([instance(), instance(building_size=60)], KnnParams(k=1))
        d = knn_to_dict(model)
        d["params"]["k"] = 5
        with self.assertRaises(ModelFormatError):
            knn_from_dict(d)
        with self.assertRaises(ModelFormatError):
            knn_from_dict({"format": "propclass.tree"})

    def test_rejects_missing_normalizer_range(self):
        model = fit_knn([instance(), instance(building_size=60)], KnnParams(k=1))
        d = knn_to_dict(model)
        del d["normalizer"]["land_size"]
        with self.assertRaises(ModelFormatError):
            knn_from_dict(d)

    def test_description(self):
        model = fit_knn([instance(), instance(building_size=60)], KnnParams(k=1))
        meta = describe_knn(model)
        self.assertEqual(meta["model"], "k-NN")
        self.assertTrue(meta["descriptor"].startswith("knn(k=1"))
