import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from forge.exceptions import FormatError, InputError, ShapeError
from transform.models import Image

from .extraction import distance, extract, extract_many, stripe_bounds
from .io import load_embeddings, read_descriptors, read_meta, write_descriptors, write_meta
from .models import Descriptor, DescriptorConfig


def random_image(seed, width=10, height=24):
    return Image(np.random.default_rng(seed).random((height, width, 3)))


class DescriptorConfigTests(SimpleTestCase):

    def test_validation(self):
        with self.assertRaises(InputError):
            DescriptorConfig(m=0)
        with self.assertRaises(InputError):
            DescriptorConfig(bins_per_channel=1)

    def test_settings_defaults(self):
        cfg = DescriptorConfig.from_settings()
        self.assertEqual((cfg.m, cfg.bins_per_channel), (6, 8))
        self.assertEqual(cfg.dimension, 7 * 24)


class ExtractTests(SimpleTestCase):

    def test_solid_red_histograms(self):
        cfg = DescriptorConfig(m=2, bins_per_channel=4)
        d = extract(Image.solid(5, 6, (1.0, 0.0, 0.0)), cfg)
        expected = np.zeros(12)
        expected[[0, 4 + 3, 8 + 3]] = 1 / np.sqrt(3)
        for segment in d.segments:
            np.testing.assert_allclose(segment, expected, atol=1e-6)
            self.assertAlmostEqual(float(np.linalg.norm(segment)), 1.0, delta=1e-6)

    def test_dimension(self):
        for m, bins in [(1, 2), (3, 5), (6, 8)]:
            cfg = DescriptorConfig(m=m, bins_per_channel=bins)
            self.assertEqual(extract(random_image(m), cfg).dimension, (m + 1) * 3 * bins)

    def test_row_permutation_within_stripes(self):
        cfg = DescriptorConfig(m=3, bins_per_channel=6)
        img = random_image(1, height=12)
        rng = np.random.default_rng(0)
        pixels = img.pixels.copy()
        for top, bottom in stripe_bounds(12, 3):
            pixels[top:bottom] = pixels[top:bottom][rng.permutation(bottom - top)]
        np.testing.assert_array_equal(extract(img, cfg).vector, extract(Image(pixels), cfg).vector)

    def test_single_part_equals_global(self):
        d = extract(random_image(2), DescriptorConfig(m=1, bins_per_channel=8))
        np.testing.assert_array_equal(d.parts[0], d.global_part)

    def test_order_top_to_bottom(self):
        pixels = np.zeros((4, 3, 3))
        pixels[:2] = (1.0, 0.0, 0.0)
        pixels[2:] = (0.0, 0.0, 1.0)
        d = extract(Image(pixels), DescriptorConfig(m=2, bins_per_channel=4))
        self.assertGreater(d.parts[0][0], 0)
        self.assertEqual(d.parts[1][0], 0)

    def test_remainder_rows_go_to_last_stripe(self):
        self.assertEqual(stripe_bounds(14, 4), [(0, 3), (3, 6), (6, 9), (9, 14)])

    def test_row_duplication(self):
        cfg = DescriptorConfig(m=6, bins_per_channel=8)
        img = random_image(3, height=18)
        doubled = Image(np.repeat(img.pixels, 2, axis=0))
        np.testing.assert_allclose(extract(img, cfg).vector, extract(doubled, cfg).vector, atol=1e-6)

    def test_part_norms(self):
        d = extract(random_image(4), DescriptorConfig())
        for segment in d.segments:
            self.assertAlmostEqual(float(np.linalg.norm(segment.astype(np.float64))), 1.0, delta=1e-6)

    def test_too_short(self):
        with self.assertRaises(ShapeError):
            extract(random_image(5, height=4), DescriptorConfig(m=6))

    def test_extract_many_threads(self):
        images = [random_image(i) for i in range(12)]
        cfg = DescriptorConfig()
        np.testing.assert_array_equal(extract_many(images, cfg, threads=1), extract_many(images, cfg, threads=4))


class DistanceTests(SimpleTestCase):

    def test_self_distance(self):
        d = extract(random_image(6), DescriptorConfig())
        self.assertEqual(distance(d, d), 0.0)

    def test_symmetry_and_triangle(self):
        cfg = DescriptorConfig()
        a, b, c = (extract(random_image(i), cfg) for i in (7, 8, 9))
        self.assertEqual(distance(a, b), distance(b, a))
        self.assertLessEqual(distance(a, c), distance(a, b) + distance(b, c) + 1e-12)

    def test_orthogonal_units(self):
        cfg = DescriptorConfig(m=1, bins_per_channel=2)
        e0, e1 = np.zeros(cfg.dimension), np.zeros(cfg.dimension)
        e0[0], e1[1] = 1.0, 1.0
        self.assertAlmostEqual(distance(Descriptor(e0, cfg), Descriptor(e1, cfg)), np.sqrt(2), places=12)

    def test_dimension_mismatch(self):
        a = extract(random_image(1), DescriptorConfig(m=1, bins_per_channel=2))
        b = extract(random_image(1), DescriptorConfig(m=2, bins_per_channel=2))
        with self.assertRaises(ShapeError):
            distance(a, b)


class EmbeddingFileTests(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)
        self.matrix = extract_many([random_image(i) for i in range(5)], DescriptorConfig())

    def tearDown(self):
        self._tmp.cleanup()

    def test_binary_layout(self):
        path = self.root / 'q.bin'
        write_descriptors(path, self.matrix)
        raw = path.read_bytes()
        self.assertEqual(np.frombuffer(raw[:8], '<u4').tolist(), [self.matrix.shape[1], 5])
        np.testing.assert_array_equal(read_descriptors(path), self.matrix)

    def test_csv(self):
        path = self.root / 'q.csv'
        write_descriptors(path, self.matrix)
        np.testing.assert_array_equal(read_descriptors(path), self.matrix)

    def test_truncated_binary(self):
        path = self.root / 'q.bin'
        write_descriptors(path, self.matrix)
        path.write_bytes(path.read_bytes()[:-4])
        with self.assertRaises(FormatError):
            read_descriptors(path)

    def test_meta_mismatch(self):
        write_descriptors(self.root / 'q.bin', self.matrix)
        write_meta(self.root / 'q.jsonl', [1, 2, 3], [0, 0, 1])
        with self.assertRaises(FormatError):
            load_embeddings(self.root / 'q.bin', self.root / 'q.jsonl')

    def test_meta_round_trip(self):
        write_meta(self.root / 'm.jsonl', [4, 4, 9], [1, 2, 1])
        identities, cameras = read_meta(self.root / 'm.jsonl')
        self.assertEqual(identities.tolist(), [4, 4, 9])
        self.assertEqual(cameras.tolist(), [1, 2, 1])

    def test_bad_meta_line(self):
        (self.root / 'm.jsonl').write_text('{"identity": 1}\n', encoding='utf-8')
        with self.assertRaises(FormatError):
            read_meta(self.root / 'm.jsonl')
