import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from dataset.models import LabeledDataset, LabeledSample, PreprocessConfig
from features.extraction import extract, extract_many
from features.models import DescriptorConfig
from forge.exceptions import FormatError, InputError, NumericDomainError, ShapeError, TrainingError
from transform.models import Image, TransformSpace

from .checkpoint import load_checkpoint, save_checkpoint, write_loss_curve
from .loss import combined_ce_from_logits, combined_ce_loss, head_loss, smoothed_targets, softmax
from .models import LinearModel, PredictionSet, TrainConfig
from .training import accuracy, embed, predict, predict_many, sgd_step, train


def uniform_preds(m, k):
    return PredictionSet(np.full((m, k), 1.0 / k), np.full(k, 1.0 / k))


def two_colour_dataset(per_identity=6, width=4, height=12):
    rng = np.random.default_rng(0)
    samples = []
    for identity, colour in ((1, (0.9, 0.1, 0.1)), (2, (0.1, 0.1, 0.9))):
        for k in range(per_identity):
            pixels = np.clip(np.array(colour) + 0.05 * rng.standard_normal((height, width, 3)), 0, 1)
            samples.append(LabeledSample(Image(pixels), identity, camera=k % 2, source_path=f'{identity}-{k}'))
    return LabeledDataset(tuple(samples))


TOY = dict(lr=0.5, lr_step=20, epochs=30, batch_size=4, geometric=False, seed=3)


class LossTests(SimpleTestCase):

    def test_perfect_prediction(self):
        onehot = np.eye(5)[2]
        preds = PredictionSet(np.tile(onehot, (6, 1)), onehot)
        self.assertEqual(combined_ce_loss(preds, 2, smoothing=0.0), 0.0)

    def test_uniform_two_classes(self):
        self.assertAlmostEqual(combined_ce_loss(uniform_preds(6, 2), 0, 0.0), 7 * math.log(2), delta=1e-9)

    def test_uniform_with_smoothing(self):
        self.assertAlmostEqual(combined_ce_loss(uniform_preds(6, 4), 3, 0.1), 7 * math.log(4), delta=1e-9)

    def test_uniform_closed_form(self):
        for k in (2, 3, 10, 751):
            self.assertAlmostEqual(combined_ce_loss(uniform_preds(6, k), 1, 0.0), 7 * math.log(k), delta=1e-9)

    def test_zero_probability_under_target_mass(self):
        onehot = np.eye(3)[0]
        preds = PredictionSet(np.tile(onehot, (2, 1)), onehot)
        with self.assertRaises(NumericDomainError):
            combined_ce_loss(preds, 1, 0.0)
        with self.assertRaises(NumericDomainError):
            combined_ce_loss(preds, 0, 0.1)

    def test_label_out_of_range(self):
        with self.assertRaises(InputError):
            combined_ce_loss(uniform_preds(2, 3), 3)

    def test_zero_smoothing_is_one_hot(self):
        np.testing.assert_array_equal(smoothed_targets([1, 0], 4, 0.0), np.eye(4)[[1, 0]])

    def test_smoothed_targets_sum_to_one(self):
        q = smoothed_targets([2], 5, 0.1)[0]
        self.assertAlmostEqual(q.sum(), 1.0, places=12)
        self.assertAlmostEqual(q[2], 0.9, places=12)
        self.assertAlmostEqual(q[0], 0.025, places=12)

    def test_decomposes_over_heads(self):
        rng = np.random.default_rng(1)
        probs = softmax(rng.standard_normal((7, 5)))
        preds = PredictionSet(probs[:-1], probs[-1])
        total = combined_ce_loss(preds, 4, 0.1)
        self.assertAlmostEqual(total, sum(head_loss(p, 4, 0.1) for p in probs), places=12)

    def test_logit_path_matches_probability_path(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal((1, 7, 6))
        probs = softmax(z[0])
        loss, _ = combined_ce_from_logits(z, [3], 0.1)
        self.assertAlmostEqual(loss, combined_ce_loss(PredictionSet(probs[:-1], probs[-1]), 3, 0.1), places=10)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        h = 1e-6
        for _ in range(50):
            heads, k = rng.integers(2, 8), rng.integers(2, 7)
            z = rng.standard_normal((1, heads, k))
            label = [int(rng.integers(0, k))]
            eps = float(rng.choice([0.0, 0.1, 0.3]))
            _, grad = combined_ce_from_logits(z, label, eps)
            numeric = np.zeros_like(z)
            for index in np.ndindex(z.shape):
                up, down = z.copy(), z.copy()
                up[index] += h
                down[index] -= h
                numeric[index] = (
                    combined_ce_from_logits(up, label, eps)[0] - combined_ce_from_logits(down, label, eps)[0]
                ) / (2 * h)
            np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-8)


class PredictTests(SimpleTestCase):

    def setUp(self):
        self.cfg = DescriptorConfig(m=3, bins_per_channel=4)
        self.d = extract(Image(np.random.default_rng(0).random((12, 5, 3))), self.cfg)

    def test_zero_weights_are_uniform(self):
        preds = predict(LinearModel.zeros(self.cfg, 4), self.d)
        np.testing.assert_allclose(preds.heads, 0.25, atol=1e-15)

    def test_heads_sum_to_one(self):
        rng = np.random.default_rng(1)
        model = LinearModel(rng.standard_normal((4, 6, 12)), rng.standard_normal((4, 6)), self.cfg)
        preds = predict(model, self.d)
        np.testing.assert_allclose(preds.heads.sum(axis=1), 1.0, atol=1e-12)
        self.assertTrue(np.all(preds.heads > 0))

    def test_shift_invariance(self):
        rng = np.random.default_rng(2)
        model = LinearModel(rng.standard_normal((4, 6, 12)), rng.standard_normal((4, 6)), self.cfg)
        before = predict(model, self.d).heads
        model.biases[1] += 17.0
        np.testing.assert_allclose(predict(model, self.d).heads, before, atol=1e-12)

    def test_dimension_mismatch(self):
        other = extract(Image(np.random.default_rng(0).random((12, 5, 3))), DescriptorConfig(m=2, bins_per_channel=4))
        with self.assertRaises(ShapeError):
            predict(LinearModel.zeros(self.cfg, 3), other)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        model = LinearModel(rng.standard_normal((4, 3, 12)), rng.standard_normal((4, 3)), self.cfg)
        matrix = np.stack([self.d.vector, self.d.vector * 0.5])
        np.testing.assert_allclose(predict_many(model, matrix)[0], predict(model, self.d).heads, atol=1e-12)
        self.assertEqual(embed(model, matrix).shape, (2, 12))


class SgdTests(SimpleTestCase):

    def test_weight_decay_shrinks_geometrically(self):
        w = np.random.default_rng(0).standard_normal((3, 4))
        start = w.copy()
        velocity = np.zeros_like(w)
        lr, decay = 0.1, 0.0005
        for _ in range(10):
            sgd_step(w, np.zeros_like(w), velocity, lr, momentum=0.0, weight_decay=decay)
        np.testing.assert_allclose(w, start * (1 - lr * decay) ** 10, rtol=1e-12)

    def test_momentum_accumulates(self):
        w = np.zeros(1)
        velocity = np.zeros(1)
        for _ in range(2):
            sgd_step(w, np.ones(1), velocity, lr=1.0, momentum=0.9, weight_decay=0.0)
        np.testing.assert_allclose(w, [-(1.0 + 1.9)])

    def test_lr_schedule(self):
        cfg = TrainConfig()
        self.assertEqual(cfg.learning_rate(0), 0.001)
        self.assertEqual(cfg.learning_rate(39), 0.001)
        self.assertAlmostEqual(cfg.learning_rate(40), 0.0001, places=15)


class TrainConfigTests(SimpleTestCase):

    def test_recipe_defaults(self):
        cfg = TrainConfig.from_settings()
        self.assertEqual((cfg.momentum, cfg.weight_decay, cfg.batch_size, cfg.epochs), (0.9, 0.0005, 32, 60))
        self.assertEqual(cfg.smoothing, 0.1)

    def test_validation(self):
        with self.assertRaises(InputError):
            TrainConfig(smoothing=1.0)
        with self.assertRaises(InputError):
            TrainConfig(lr=0)
        with self.assertRaises(InputError):
            TrainConfig(epochs=0)


class TrainTests(SimpleTestCase):

    def setUp(self):
        self.dataset = two_colour_dataset()
        self.descriptor = DescriptorConfig(m=3, bins_per_channel=4)
        self.prep = PreprocessConfig(width=4, height=12, padding=2)

    def fit(self, threads=1, use_uit=False, **overrides):
        cfg = TrainConfig(**{**TOY, **overrides})
        return train(self.dataset, TransformSpace(), cfg, use_uit, self.descriptor, self.prep, threads)

    def test_separable_toy_reaches_full_accuracy(self):
        model = self.fit()
        matrix = extract_many(self.dataset.images, self.descriptor)
        self.assertEqual(accuracy(model, matrix, self.dataset.labels), 1.0)

    def test_loss_decreases(self):
        model = self.fit()
        self.assertEqual(len(model.loss_history), TOY['epochs'])
        self.assertLess(model.loss_history[-1], model.loss_history[0])

    def test_bit_identical_reruns(self):
        a, b = self.fit(use_uit=True, geometric=True), self.fit(use_uit=True, geometric=True)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.biases, b.biases)

    def test_threads_do_not_change_weights(self):
        a = self.fit(threads=1, use_uit=True, geometric=True)
        b = self.fit(threads=4, use_uit=True, geometric=True)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_identity_space_matches_baseline(self):
        identity = TransformSpace(hue=(0, 0), saturation=(1, 1), lightness=(1, 1), contrast=(1, 1))
        cfg = TrainConfig(**{**TOY, 'geometric': True})
        baseline = train(self.dataset, identity, cfg, False, self.descriptor, self.prep)
        uit = train(self.dataset, identity, cfg, True, self.descriptor, self.prep)
        np.testing.assert_array_equal(baseline.weights, uit.weights)

    def test_needs_two_identities(self):
        single = self.dataset.restrict_identities([1])
        with self.assertRaises(TrainingError):
            train(single, TransformSpace(), TrainConfig(**TOY), False, self.descriptor, self.prep)


class CheckpointTests(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        cfg = DescriptorConfig(m=2, bins_per_channel=3)
        model = LinearModel(
            rng.standard_normal((3, 4, 9)), rng.standard_normal((3, 4)), cfg,
            identities=(5, 6, 8, 13), train_config=TrainConfig(seed=11), use_uit=True,
        )
        save_checkpoint(model, self.root / 'model')
        loaded = load_checkpoint(self.root / 'model')
        np.testing.assert_array_equal(loaded.weights, model.weights.astype(np.float32))
        self.assertEqual(loaded.identities, (5, 6, 8, 13))
        self.assertEqual(loaded.train_config.seed, 11)
        self.assertTrue(loaded.use_uit)

    def test_truncated_weights(self):
        model = LinearModel.zeros(DescriptorConfig(m=1, bins_per_channel=2), 2, train_config=TrainConfig())
        bin_path, _ = save_checkpoint(model, self.root / 'model')
        bin_path.write_bytes(bin_path.read_bytes()[:-4])
        with self.assertRaises(FormatError):
            load_checkpoint(self.root / 'model')

    def tampered_sidecar(self, **train_config):
        model = LinearModel.zeros(DescriptorConfig(m=1, bins_per_channel=2), 2, train_config=TrainConfig())
        _, sidecar_path = save_checkpoint(model, self.root / 'model')
        data = json.loads(sidecar_path.read_text(encoding='utf-8'))
        data['train_config'].update(train_config)
        sidecar_path.write_text(json.dumps(data), encoding='utf-8')

    def test_unknown_recipe_key_is_a_format_error(self):
        self.tampered_sidecar(warmup=5)
        with self.assertRaises(FormatError):
            load_checkpoint(self.root / 'model')

    def test_invalid_recipe_value_is_a_format_error(self):
        self.tampered_sidecar(smoothing=1.5)
        with self.assertRaises(FormatError):
            load_checkpoint(self.root / 'model')

    def test_missing_recipe_key_is_a_format_error(self):
        model = LinearModel.zeros(DescriptorConfig(m=1, bins_per_channel=2), 2, train_config=TrainConfig())
        _, sidecar_path = save_checkpoint(model, self.root / 'model')
        data = json.loads(sidecar_path.read_text(encoding='utf-8'))
        del data['train_config']['epochs']
        sidecar_path.write_text(json.dumps(data), encoding='utf-8')
        with self.assertRaises(FormatError):
            load_checkpoint(self.root / 'model')

    def test_loss_curve_csv(self):
        model = LinearModel.zeros(DescriptorConfig(m=1, bins_per_channel=2), 2)
        model.loss_history = [1.5, 0.75]
        write_loss_curve(model, self.root / 'loss.csv')
        lines = (self.root / 'loss.csv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(lines, ['epoch,mean_loss', '1,1.5', '2,0.75'])
