import os
import time
from unittest import skipUnless

import numpy as np
from django.test import SimpleTestCase, tag

from forge.exceptions import InputError, ShapeError
from forge.seeding import substream

from .enhance import (
    adjust_contrast, adjust_lightness, adjust_saturation, grayscale, interpolate, luminance, shift_hue,
)
from .models import FACTORS, Image, TransformParams, TransformSpace
from .pipeline import (
    apply_transform, augment_batch, sample_batch_params, sample_params, single_factor_space,
)
from .serializers import TransformParamsSerializer, TransformSpaceSerializer


def random_image(seed=0, width=16, height=12):
    return Image(np.random.default_rng(seed).random((height, width, 3)))


def gray_image(seed=0, width=16, height=12):
    levels = np.random.default_rng(seed).random((height, width, 1))
    return Image(np.repeat(levels, 3, axis=2))


class ImageTests(SimpleTestCase):

    def test_rejects_empty_dimensions(self):
        with self.assertRaises(ShapeError):
            Image(np.zeros((0, 4, 3)))

    def test_rejects_wrong_channel_count(self):
        with self.assertRaises(ShapeError):
            Image(np.zeros((4, 4)))

    def test_uint8_rounds_half_away_from_zero(self):
        img = Image(np.array([[[0.5, 0.25, 1.2], [0.0, 1.0, -0.1]]]))
        np.testing.assert_array_equal(img.to_uint8(), [[[128, 64, 255], [0, 255, 0]]])


class HueTests(SimpleTestCase):

    def test_zero_shift_is_identity(self):
        img = random_image()
        self.assertTrue(shift_hue(img, 0).equals(img))

    def test_full_turn(self):
        img = random_image(1)
        np.testing.assert_allclose(shift_hue(img, 360).pixels, img.pixels, atol=1e-6, rtol=0)

    def test_red_to_green(self):
        red = Image.solid(4, 3, (1.0, 0.0, 0.0))
        np.testing.assert_allclose(shift_hue(red, 120).pixels, Image.solid(4, 3, (0.0, 1.0, 0.0)).pixels, atol=1e-6)

    def test_group_law(self):
        img = random_image(2)
        for a, b in [(10.0, -25.0), (17.5, 3.25), (-18.0, -18.0), (200.0, 300.0)]:
            np.testing.assert_allclose(
                shift_hue(shift_hue(img, a), b).pixels, shift_hue(img, a + b).pixels, atol=2e-6, rtol=0
            )

    def test_grayscale_fixpoint(self):
        img = gray_image(3)
        np.testing.assert_allclose(shift_hue(img, 17).pixels, img.pixels, atol=1e-6, rtol=0)


class InterpolateTests(SimpleTestCase):

    def test_endpoints_are_exact(self):
        degenerate, original = random_image(4), random_image(5)
        self.assertTrue(interpolate(degenerate, original, 0).equals(degenerate))
        self.assertTrue(interpolate(degenerate, original, 1).equals(original))

    def test_extrapolation_clamps(self):
        degenerate = Image.solid(2, 2, (0.5, 0.5, 0.5))
        original = Image.solid(2, 2, (0.9, 0.9, 0.9))
        np.testing.assert_array_equal(interpolate(degenerate, original, 1.4).pixels, np.ones((2, 2, 3)))

    def test_extrapolation_before_clamp(self):
        degenerate = Image.solid(2, 2, (0.5, 0.5, 0.5))
        original = Image.solid(2, 2, (0.6, 0.6, 0.6))
        np.testing.assert_allclose(interpolate(degenerate, original, 1.4).pixels, 0.64, atol=1e-6)

    def test_dimension_mismatch(self):
        with self.assertRaises(ShapeError):
            interpolate(random_image(width=4), random_image(width=5), 0.5)


class SaturationTests(SimpleTestCase):

    def test_unit_factor_is_identity(self):
        img = random_image(6)
        self.assertTrue(adjust_saturation(img, 1).equals(img))

    def test_zero_factor_is_grayscale(self):
        img = random_image(7)
        np.testing.assert_allclose(adjust_saturation(img, 0).pixels, grayscale(img).pixels, atol=1e-6)

    def test_rec601_extrapolation(self):
        img = Image.solid(3, 2, (0.8, 0.2, 0.2))
        lum = 0.8 * 0.299 + 0.2 * 0.587 + 0.2 * 0.114
        self.assertAlmostEqual(lum, 0.3794, places=12)
        out = adjust_saturation(img, 1.4).pixels[0, 0]
        np.testing.assert_allclose(out, [0.96824, 0.12824, 0.12824], atol=1e-6)

    def test_grayscale_fixpoint(self):
        img = gray_image(8)
        np.testing.assert_allclose(adjust_saturation(img, 1.4).pixels, img.pixels, atol=1e-6, rtol=0)


class LightnessTests(SimpleTestCase):

    def test_unit_factor_is_identity(self):
        img = random_image(9)
        self.assertTrue(adjust_lightness(img, 1).equals(img))

    def test_zero_factor_is_black(self):
        np.testing.assert_array_equal(adjust_lightness(random_image(10), 0).pixels, np.zeros((12, 16, 3)))

    def test_scales_gray(self):
        out = adjust_lightness(Image.solid(2, 2, (0.5, 0.5, 0.5)), 1.4)
        np.testing.assert_allclose(out.pixels, 0.7, atol=1e-6)


class ContrastTests(SimpleTestCase):

    def test_unit_factor_is_identity(self):
        img = random_image(11)
        self.assertTrue(adjust_contrast(img, 1).equals(img))

    def test_zero_factor_is_flat_mean(self):
        img = random_image(12)
        mean = luminance(img).mean()
        np.testing.assert_allclose(adjust_contrast(img, 0).pixels, mean, atol=1e-6)

    def test_two_gray_pixels(self):
        img = Image(np.array([[[0.2] * 3, [0.8] * 3]]))
        out = adjust_contrast(img, 1.4)
        np.testing.assert_allclose(out.pixels[0, :, 0], [0.08, 0.92], atol=1e-6)
        self.assertAlmostEqual(luminance(out).mean(), 0.5, delta=1e-6)

    def test_mean_luminance_preserved_when_unclamped(self):
        rng = np.random.default_rng(13)
        img = Image(0.35 + 0.3 * rng.random((12, 16, 3)))
        for factor in (0.6, 0.9, 1.2, 1.4):
            out = adjust_contrast(img, factor)
            self.assertAlmostEqual(luminance(out).mean(), luminance(img).mean(), delta=1e-6)


class ClampSafetyTests(SimpleTestCase):

    def test_outputs_in_gamut(self):
        img = random_image(14)
        for factor in np.linspace(0.0, 2.0, 9):
            for op in (adjust_saturation, adjust_lightness, adjust_contrast):
                out = op(img, factor).pixels
                self.assertGreaterEqual(out.min(), 0.0)
                self.assertLessEqual(out.max(), 1.0)


class TransformSpaceTests(SimpleTestCase):

    def test_rejects_inverted_range(self):
        with self.assertRaises(InputError):
            TransformSpace(saturation=(1.4, 0.6))

    def test_rejects_partial_order(self):
        with self.assertRaises(InputError):
            TransformSpace(order=('hue', 'saturation'))

    def test_defaults_follow_settings(self):
        space = TransformSpace.from_settings()
        self.assertEqual(space.hue, (-18.0, 18.0))
        self.assertEqual(space.contrast, (0.6, 1.4))
        self.assertEqual(space.enabled, frozenset(FACTORS))


class SamplingTests(SimpleTestCase):

    def test_disabled_space_samples_identity(self):
        space = TransformSpace().disabled()
        for seed in range(5):
            self.assertEqual(sample_params(space, substream(seed)), TransformParams.identity())

    def test_replay_is_deterministic(self):
        space = TransformSpace()
        first = [sample_params(space, substream(42, i)) for i in range(20)]
        second = [sample_params(space, substream(42, i)) for i in range(20)]
        self.assertEqual(first, second)

    def test_hue_draws_are_uniform(self):
        space = TransformSpace()
        rng = substream(7)
        hues = np.array([sample_params(space, rng).hue_shift for _ in range(10_000)])
        self.assertLess(abs(hues.mean()), 0.5)
        self.assertGreaterEqual(hues.min(), -18.0)
        self.assertLessEqual(hues.max(), 18.0)

    def test_draws_stay_in_range(self):
        space = TransformSpace()
        for t in sample_batch_params(500, space, 3):
            self.assertTrue(0.6 <= t.saturation <= 1.4)
            self.assertTrue(0.6 <= t.lightness <= 1.4)
            self.assertTrue(0.6 <= t.contrast <= 1.4)

    def test_toggling_one_factor_keeps_other_draws(self):
        full = sample_batch_params(10, TransformSpace(), 11)
        no_hue = sample_batch_params(10, TransformSpace().only('saturation', 'lightness', 'contrast'), 11)
        for a, b in zip(full, no_hue):
            self.assertEqual(b.hue_shift, 0.0)
            self.assertEqual((a.saturation, a.lightness, a.contrast), (b.saturation, b.lightness, b.contrast))

    def test_single_factor_space(self):
        space = single_factor_space(TransformSpace(), 'lightness')
        for t in sample_batch_params(50, space, 1):
            self.assertEqual(t.non_identity_factors, ('lightness',))
        with self.assertRaises(InputError):
            single_factor_space(TransformSpace(), 'gamma')


class ApplyTransformTests(SimpleTestCase):

    def test_identity_params_are_strict_fixpoint(self):
        img = random_image(15)
        self.assertTrue(apply_transform(img, TransformParams.identity()).equals(img))

    def test_hue_only_matches_primitive(self):
        img = random_image(16)
        out = apply_transform(img, TransformParams(hue_shift=12.5))
        self.assertTrue(out.equals(shift_hue(img, 12.5)))

    def test_saturation_then_lightness(self):
        img = Image.solid(2, 2, (0.8, 0.2, 0.2))
        out = apply_transform(img, TransformParams(saturation=1.4, lightness=1.4))
        # (0.96824, 0.12824, 0.12824) scaled by 1.4, red clamped
        np.testing.assert_allclose(out.pixels[0, 0], [1.0, 0.179536, 0.179536], atol=1e-6)

    def test_order_override(self):
        img = random_image(17)
        t = TransformParams(hue_shift=10, contrast=1.3)
        reordered = apply_transform(img, t, order=('contrast', 'hue', 'saturation', 'lightness'))
        expected = shift_hue(adjust_contrast(img, 1.3), 10)
        self.assertTrue(reordered.equals(expected))


class AugmentBatchTests(SimpleTestCase):

    def test_disabled_space_returns_input(self):
        img = random_image(18)
        (out,) = augment_batch([img], TransformSpace().disabled(), seed=1)
        self.assertTrue(out.equals(img))

    def test_same_seed_same_output(self):
        imgs = [random_image(i) for i in range(4)]
        first = augment_batch(imgs, TransformSpace(), seed=99)
        second = augment_batch(imgs, TransformSpace(), seed=99)
        for a, b in zip(first, second):
            self.assertTrue(a.equals(b))

    def test_matches_serial_oracle(self):
        imgs = [random_image(i + 20) for i in range(3)]
        space = TransformSpace()
        out = augment_batch(imgs, space, seed=5)
        for index, (img, got) in enumerate(zip(imgs, out)):
            expected = apply_transform(img, sample_params(space, substream(5, index)))
            self.assertTrue(got.equals(expected))

    def test_threads_do_not_change_output(self):
        imgs = [random_image(i + 30) for i in range(16)]
        serial = augment_batch(imgs, TransformSpace(), seed=8, threads=1)
        for threads in (2, 8):
            parallel = augment_batch(imgs, TransformSpace(), seed=8, threads=threads)
            for a, b in zip(serial, parallel):
                self.assertTrue(a.equals(b))

    def test_empty_batch(self):
        with self.assertRaises(InputError):
            augment_batch([], TransformSpace(), seed=0)

    def test_logs_batch_at_debug(self):
        imgs = [random_image(i) for i in range(2)]
        with self.assertLogs('transform.pipeline', level='DEBUG') as logs:
            augment_batch(imgs, TransformSpace(), seed=3, threads=2)
        self.assertIn('Augmenting 2 images with seed 3 on 2 threads', logs.output[0])


@tag('slow')
@skipUnless((os.cpu_count() or 1) >= 8, 'needs 8 cores')
class ThroughputTests(SimpleTestCase):

    def test_full_space_at_reid_resolution(self):
        rng = np.random.default_rng(0)
        distinct = [Image(rng.random((384, 128, 3), dtype=np.float32)) for _ in range(16)]
        imgs = distinct * 16
        space = TransformSpace()
        augment_batch(imgs[:16], space, seed=0, threads=8)
        best = float('inf')
        for _ in range(3):
            start = time.perf_counter()
            out = augment_batch(imgs, space, seed=1, threads=8)
            best = min(best, time.perf_counter() - start)
        rate = len(imgs) / best
        self.assertGreaterEqual(rate, 2000, f'{rate:.0f} images/s')
        serial = augment_batch(imgs[:8], space, seed=1, threads=1)
        for a, b in zip(serial, out):
            self.assertTrue(a.equals(b))


class SerializerTests(SimpleTestCase):

    def test_params_from_log_line(self):
        serializer = TransformParamsSerializer(data={
            'hue_shift': -3.5, 'saturation': 1.1, 'lightness': 0.9, 'contrast': 1.0,
        })
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save(), TransformParams(-3.5, 1.1, 0.9, 1.0))

    def test_space_rejects_inverted_range(self):
        serializer = TransformSpaceSerializer(data={'hue': [10, -10]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('hue', serializer.errors)

    def test_space_overrides(self):
        serializer = TransformSpaceSerializer(data={'enabled': ['hue'], 'hue': [-5, 5]})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        space = serializer.save()
        self.assertEqual(space.enabled, frozenset({'hue'}))
        self.assertEqual(space.hue, (-5.0, 5.0))
        self.assertEqual(space.saturation, (0.6, 1.4))
