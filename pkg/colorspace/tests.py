import numpy as np
from django.test import SimpleTestCase

from .conversions import hsv_to_rgb, hsv_to_rgb_array, rgb_to_hsv, rgb_to_hsv_array, rotate_hue_array
from .models import HsvPixel, RgbPixel


class RgbToHsvTests(SimpleTestCase):

    def test_pure_red(self):
        self.assertEqual(rgb_to_hsv(RgbPixel(1.0, 0.0, 0.0)), HsvPixel(0.0, 1.0, 1.0))

    def test_gray_is_achromatic(self):
        self.assertEqual(rgb_to_hsv(RgbPixel(0.5, 0.5, 0.5)), HsvPixel(0.0, 0.0, 0.5))

    def test_hexcone_sector_formula(self):
        h, s, v = rgb_to_hsv(RgbPixel(0.2, 0.4, 0.6))
        self.assertAlmostEqual(h, 210.0, places=9)
        self.assertAlmostEqual(s, 2 / 3, places=9)
        self.assertAlmostEqual(v, 0.6, places=12)

    def test_black_has_zero_saturation(self):
        self.assertEqual(rgb_to_hsv(RgbPixel(0.0, 0.0, 0.0)), HsvPixel(0.0, 0.0, 0.0))

    def test_hue_stays_below_360(self):
        rng = np.random.default_rng(3)
        hsv = rgb_to_hsv_array(rng.random((10_000, 3)))
        self.assertTrue(np.all(hsv[:, 0] >= 0.0))
        self.assertTrue(np.all(hsv[:, 0] < 360.0))


class HsvToRgbTests(SimpleTestCase):

    def test_zero_saturation_is_gray(self):
        self.assertEqual(hsv_to_rgb(HsvPixel(0.0, 0.0, 0.7)), RgbPixel(0.7, 0.7, 0.7))

    def test_pure_green(self):
        self.assertEqual(hsv_to_rgb(HsvPixel(120.0, 1.0, 1.0)), RgbPixel(0.0, 1.0, 0.0))

    def test_inverse_of_sector_example(self):
        r, g, b = hsv_to_rgb(HsvPixel(210.0, 2 / 3, 0.6))
        self.assertAlmostEqual(r, 0.2, places=9)
        self.assertAlmostEqual(g, 0.4, places=9)
        self.assertAlmostEqual(b, 0.6, places=9)

    def test_hue_periodicity(self):
        rng = np.random.default_rng(5)
        hsv = rng.random((1000, 3)) * [360.0, 1.0, 1.0]
        shifted = hsv + [360.0, 0.0, 0.0]
        np.testing.assert_allclose(hsv_to_rgb_array(hsv), hsv_to_rgb_array(shifted), rtol=0, atol=1e-12)


class RoundTripTests(SimpleTestCase):

    def test_million_random_pixels(self):
        rng = np.random.default_rng(2024)
        rgb = rng.random((1_000_000, 3))
        back = hsv_to_rgb_array(rgb_to_hsv_array(rgb))
        self.assertLessEqual(np.abs(back - rgb).max(), 1e-6)

    def test_grays_survive_exactly(self):
        levels = np.linspace(0.0, 1.0, 257)
        gray = np.repeat(levels[:, None], 3, axis=1)
        hsv = rgb_to_hsv_array(gray)
        self.assertTrue(np.all(hsv[:, 1] == 0.0))
        self.assertTrue(np.all(hsv[:, 0] == 0.0))
        np.testing.assert_array_equal(hsv_to_rgb_array(hsv), gray)

    def test_channel_extremes(self):
        corners = np.array([[r, g, b] for r in (0.0, 1.0) for g in (0.0, 1.0) for b in (0.0, 1.0)])
        np.testing.assert_allclose(hsv_to_rgb_array(rgb_to_hsv_array(corners)), corners, atol=1e-12)


class RotateHueTests(SimpleTestCase):

    def test_matches_hsv_round_trip(self):
        rgb = np.random.default_rng(6).random((500, 3))
        for degrees in (-18.0, 7.5, 120.0, 359.0, 725.0):
            hsv = rgb_to_hsv_array(rgb)
            hsv[:, 0] = np.mod(hsv[:, 0] + degrees, 360.0)
            np.testing.assert_allclose(rotate_hue_array(rgb, degrees), hsv_to_rgb_array(hsv), rtol=0, atol=1e-12)

    def test_keeps_float32(self):
        rgb = np.random.default_rng(7).random((4, 5, 3)).astype(np.float32)
        out = rotate_hue_array(rgb, 30.0)
        self.assertEqual(out.dtype, np.float32)
        self.assertEqual(out.shape, (4, 5, 3))
        np.testing.assert_array_equal(out.max(axis=-1), rgb.max(axis=-1))
        np.testing.assert_allclose(out.min(axis=-1), rgb.min(axis=-1), rtol=0, atol=1e-6)
