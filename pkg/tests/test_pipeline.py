import tempfile
import unittest
from pathlib import Path

import pytest

from propclass.config import config_from_mapping
from propclass.errors import InputNotFound, ModelFormatError, StageError
from propclass.features import BIN_FEATURES
from propclass.ingest import read_listings
from propclass.knn import KnnModel
from propclass.pipeline import load_model, run_pipeline, train_models, write_models
from propclass.tree import DecisionTree

from . import SAMPLE_ROWS, write_csv


SIZES_ONLY = {"weight_bedroom": 0.0, "weight_bathroom": 0.0, "use_location": False}
"""k-NN weights that see only the two sizes the planted class depends on."""


def synth_config(output_dir, **values):
    base = {"seed": 1, "synth_n": 600, "synth_noise": 0.0, "synth_seed": 1}
    base.update(values)
    return config_from_mapping({**base, "output_dir": str(output_dir)})


class TestPlantedModel(unittest.TestCase):
    def test_noise_free_recovery(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_pipeline(synth_config(tmp, k=1, **SIZES_ONLY))
        # errors only where a test size falls between a bound and its
        # nearest training sizes
        self.assertGreaterEqual(result.tree_report.overall_accuracy, 0.95)
        self.assertGreaterEqual(result.knn_report.overall_accuracy, 0.9)

    @pytest.mark.slow
    def test_noisy_labels_stay_in_band(self):
        with tempfile.TemporaryDirectory() as tmp:
            for seed in range(10):
                config = synth_config(
                    Path(tmp) / str(seed),
                    seed=seed,
                    synth_seed=100 + seed,
                    synth_noise=0.2,
                    **SIZES_ONLY,
                )
                result = run_pipeline(config)
                for r in (result.tree_report, result.knn_report):
                    with self.subTest(seed=seed, model=r.name):
                        self.assertGreaterEqual(r.overall_accuracy, 0.70)
                        self.assertLessEqual(r.overall_accuracy, 0.95)


class TestRunPipeline(unittest.TestCase):
    def test_artifacts_do_not_depend_on_output_dir(self):
        with tempfile.TemporaryDirectory() as tmp:
            settings = {"synth_n": 200, "synth_noise": 0.1}
            a = run_pipeline(synth_config(Path(tmp) / "a", **settings))
            b = run_pipeline(synth_config(Path(tmp) / "b", **settings))
            names = sorted(p.name for p in a.artifacts)
            self.assertEqual(names, sorted(p.name for p in b.artifacts))
            self.assertIn("comparison.txt", names)
            self.assertIn("eval_knn.json", names)
            for name in names:
                with self.subTest(name=name):
                    self.assertEqual(
                        (a.output_dir / name).read_bytes(),
                        (b.output_dir / name).read_bytes(),
                    )

    def test_structured_format_writes_json_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_pipeline(synth_config(tmp, synth_n=150, format="structured"))
            names = {p.name for p in result.artifacts}
        self.assertIn("comparison.json", names)
        self.assertNotIn("comparison.txt", names)

    def test_both_models_share_the_test_set(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_pipeline(synth_config(tmp, synth_n=200))
        self.assertEqual(result.tree_report.fingerprint, result.knn_report.fingerprint)
        n_test = len(result.split.test)
        self.assertEqual(result.tree_report.matrix.total, n_test)
        self.assertEqual(result.knn_report.matrix.total, n_test)
        self.assertIn("seed=1", result.tree_report.descriptor)
        self.assertEqual(result.tree_report.provenance["records"], 200)

    def test_sample_listings(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_csv(tmp, "listings.csv", SAMPLE_ROWS)
            config = config_from_mapping(
                {"seed": 3, "input": str(path), "output_dir": str(Path(tmp) / "out")}
            )
            result = run_pipeline(config)
            cleaned = read_listings(result.output_dir / "cleaned.csv")
        self.assertEqual(len(cleaned.records), 14)
        self.assertEqual(result.split.class_counts()["Price_C"], (1, 1))
        self.assertEqual(
            result.comparison.rows["Data Source"], ("listings.csv", "listings.csv")
        )

    def test_size_bins(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_pipeline(synth_config(tmp, synth_n=200, size_bins=True))
        for f in BIN_FEATURES:
            self.assertIn(f, result.tree.params.features)
            self.assertIn(f, result.knn.params.active_features)
        self.assertIsNotNone(result.split.test[0].building_bin)

    def test_missing_input_names_stage(self):
        config = config_from_mapping({"seed": 1, "input": "/nonexistent/listings.csv"})
        with self.assertRaises(StageError) as cm:
            run_pipeline(config)
        self.assertEqual(cm.exception.stage, "ingest")
        self.assertIsInstance(cm.exception.cause, InputNotFound)


class TestModelFiles(unittest.TestCase):
    def test_write_and_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            trained = train_models(synth_config(tmp, synth_n=150))
            paths = write_models(trained, tmp)
            names = [p.name for p in paths]
            self.assertEqual(names, ["tree.model", "knn.model", "test.csv"])
            tree = load_model(paths[0])
            knn = load_model(paths[1])
            with self.assertRaises(ModelFormatError):
                load_model(paths[2])
            with self.assertRaises(InputNotFound):
                load_model(Path(tmp) / "missing.model")
        self.assertIsInstance(tree, DecisionTree)
        self.assertEqual(tree, trained.tree)
        self.assertIsInstance(knn, KnnModel)
        self.assertEqual(knn, trained.knn)


if __name__ == "__main__":
    unittest.main()
