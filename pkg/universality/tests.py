import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from classifier.models import LinearModel, TrainConfig
from dataset.models import LabeledDataset, LabeledSample
from features.models import DescriptorConfig
from forge.exceptions import InputError
from transform.models import FACTORS, Image, TransformSpace

from .analysis import analyse, factor_params, feature_invariance, prediction_invariance, sample_analysis_set
from .reports import write_invariance

DESCRIPTOR = DescriptorConfig(m=3, bins_per_channel=4)
IDENTITY_SPACE = TransformSpace(hue=(0, 0), saturation=(1, 1), lightness=(1, 1), contrast=(1, 1))


def colourful_images(n=12, seed=0):
    rng = np.random.default_rng(seed)
    return [Image(rng.random((12, 4, 3))) for _ in range(n)]


def grey_images(n=8, seed=1):
    rng = np.random.default_rng(seed)
    return [Image(np.repeat(rng.random((12, 4, 1)), 3, axis=2)) for _ in range(n)]


def zero_model():
    return LinearModel.zeros(DESCRIPTOR, 5, train_config=TrainConfig())


class SampleAnalysisSetTests(SimpleTestCase):

    def setUp(self):
        self.dataset = LabeledDataset(tuple(
            LabeledSample(Image.solid(2, 2, (0.1, 0.2, 0.3)), identity=i % 7, camera=0, source_path=str(i))
            for i in range(50)
        ))

    def test_large_n_returns_whole_dataset(self):
        self.assertIs(sample_analysis_set(self.dataset, 50, seed=1), self.dataset)
        self.assertIs(sample_analysis_set(self.dataset, 1000, seed=1), self.dataset)

    def test_distinct_and_deterministic(self):
        a = sample_analysis_set(self.dataset, 20, seed=4)
        b = sample_analysis_set(self.dataset, 20, seed=4)
        paths = [s.source_path for s in a]
        self.assertEqual(len(set(paths)), 20)
        self.assertEqual(paths, [s.source_path for s in b])
        self.assertNotEqual(paths, [s.source_path for s in sample_analysis_set(self.dataset, 20, seed=5)])


class FeatureInvarianceTests(SimpleTestCase):

    def test_single_factor_draws(self):
        space = TransformSpace()
        for factor in FACTORS:
            for t in factor_params(30, factor, space, seed=2):
                self.assertLessEqual(set(t.non_identity_factors), {factor})

    def test_identity_range_gives_zero(self):
        for factor in FACTORS:
            self.assertEqual(feature_invariance(colourful_images(), factor, IDENTITY_SPACE, 0, DESCRIPTOR), 0.0)

    def test_hue_cannot_move_grey_images(self):
        self.assertAlmostEqual(feature_invariance(grey_images(), 'hue', TransformSpace(), 3, DESCRIPTOR), 0.0, places=6)

    def test_colour_changes_move_descriptors(self):
        self.assertGreater(feature_invariance(colourful_images(), 'hue', TransformSpace(), 3, DESCRIPTOR), 0.0)

    def test_empty_image_set(self):
        with self.assertRaises(InputError):
            feature_invariance([], 'hue', TransformSpace(), 0, DESCRIPTOR)

    def test_unknown_factor(self):
        with self.assertRaises(InputError):
            feature_invariance(colourful_images(), 'gamma', TransformSpace(), 0, DESCRIPTOR)


class PredictionInvarianceTests(SimpleTestCase):

    def test_needs_trained_model(self):
        with self.assertRaises(InputError):
            prediction_invariance(None, colourful_images(), 'hue', TransformSpace(), 0)
        untrained = LinearModel.zeros(DESCRIPTOR, 5)
        with self.assertRaises(InputError):
            prediction_invariance(untrained, colourful_images(), 'hue', TransformSpace(), 0)

    def test_constant_predictor_gives_zero(self):
        for factor in FACTORS:
            self.assertEqual(prediction_invariance(zero_model(), colourful_images(), factor, TransformSpace(), 0), 0.0)

    def test_identity_range_gives_zero(self):
        model = zero_model()
        model.weights[:] = np.random.default_rng(3).standard_normal(model.weights.shape)
        self.assertEqual(prediction_invariance(model, colourful_images(), 'contrast', IDENTITY_SPACE, 0), 0.0)


class AnalyseTests(SimpleTestCase):

    def test_report_is_deterministic(self):
        images = colourful_images()
        a = analyse(images, TransformSpace(), 11, DESCRIPTOR, threads=1)
        b = analyse(images, TransformSpace(), 11, DESCRIPTOR, threads=4)
        self.assertEqual(a.rows(), b.rows())
        self.assertEqual(a.draws, b.draws)
        self.assertEqual(a.sample_count, 12)
        self.assertEqual(a.prediction, {})

    def test_prediction_level_with_model(self):
        report = analyse(colourful_images(), TransformSpace(), 0, model=zero_model())
        self.assertEqual(report.representation, 'embedding')
        self.assertEqual([(code, level) for code, level, _, _ in report.rows()], [
            ('H', 'F'), ('S', 'F'), ('L', 'F'), ('C', 'F'), ('H', 'P'), ('S', 'P'), ('L', 'P'), ('C', 'P'),
        ])
        self.assertTrue(all(mean == 0.0 for _, _, mean, _ in report.rows()))

    def test_report_files(self):
        report = analyse(colourful_images(4), TransformSpace(), 0, DESCRIPTOR)
        with tempfile.TemporaryDirectory() as tmp:
            write_invariance(report, Path(tmp) / 'universality.json', Path(tmp) / 'universality.csv')
            data = json.loads((Path(tmp) / 'universality.json').read_text())
            lines = (Path(tmp) / 'universality.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'factor,level,mean,std')
        self.assertEqual(len(lines), 5)
        self.assertEqual(sorted(data['feature']), ['C', 'H', 'L', 'S'])
        self.assertEqual(len(data['draws']['H']), 4)
        self.assertEqual(data['sample_count'], 4)
