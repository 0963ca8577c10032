import json
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from PIL import Image as PILImage

from forge.exceptions import FormatError, IngestError, InputError, ShapeError
from forge.seeding import substream
from transform.models import Image

from .ingest import ingest_directory, load_image, save_image
from .models import LabeledDataset, LabeledSample
from .preprocess import preprocess, resize_bilinear
from .serializers import DatasetSummarySerializer


def tiny_image(seed, width=6, height=8):
    return Image(np.random.default_rng(seed).random((height, width, 3)))


class DatasetDirectoryMixin:

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, seed=0):
        save_image(tiny_image(seed), self.root / name)


class IngestTests(DatasetDirectoryMixin, SimpleTestCase):

    def test_counts_samples_and_identities(self):
        for i, name in enumerate(['0001_c1_0.png', '0001_c2_0.png', '0002_c1_0.png']):
            self.write(name, i)
        dataset = ingest_directory(self.root)
        self.assertEqual(len(dataset), 3)
        self.assertEqual(dataset.n_identities, 2)
        self.assertEqual(list(dataset.labels), [0, 0, 1])
        self.assertEqual(list(dataset.cameras), [1, 2, 1])

    def test_empty_directory(self):
        with self.assertRaises(IngestError):
            ingest_directory(self.root)

    def test_missing_directory(self):
        with self.assertRaises(IngestError):
            ingest_directory(self.root / 'nope')

    def test_corrupt_file_is_skipped(self):
        for i in range(10):
            self.write(f'{i % 3 + 1:04d}_c{i % 2 + 1}_{i}.png', i)
        victim = self.root / '0001_c1_0.png'
        data = victim.read_bytes()
        victim.write_bytes(data[:len(data) // 2])
        with self.assertLogs('dataset.ingest', level='WARNING') as logs:
            dataset = ingest_directory(self.root)
        self.assertEqual(len(dataset), 9)
        self.assertEqual(dataset.skipped, (str(victim),))
        self.assertEqual(len(logs.records), 1)

    def test_oversized_file_is_skipped(self):
        self.write('0001_c1_0.png')
        save_image(tiny_image(1, width=30, height=30), self.root / '0002_c1_0.png')
        with mock.patch.object(PILImage, 'MAX_IMAGE_PIXELS', 100):
            with self.assertLogs('dataset.ingest', level='WARNING'):
                dataset = ingest_directory(self.root)
        self.assertEqual(len(dataset), 1)
        self.assertEqual(dataset.skipped, (str(self.root / '0002_c1_0.png'),))

    def test_malformed_name_without_manifest(self):
        self.write('0001_c1_0.png')
        self.write('person.png')
        with self.assertRaises(IngestError):
            ingest_directory(self.root)

    def test_distractors_are_skipped(self):
        self.write('-1_c1_0.png')
        self.write('0003_c1s1_000151_01.png', 1)
        dataset = ingest_directory(self.root)
        self.assertEqual(len(dataset), 1)
        self.assertEqual(dataset[0].identity, 3)
        self.assertEqual(dataset[0].camera, 1)

    def test_manifest(self):
        self.write('a.png', 0)
        self.write('b.png', 1)
        lines = [
            {'path': 'b.png', 'identity': 7, 'camera': 2},
            {'path': 'a.png', 'identity': 9, 'camera': 1},
        ]
        (self.root / 'manifest.jsonl').write_text('\n'.join(json.dumps(line) for line in lines), encoding='utf-8')
        dataset = ingest_directory(self.root)
        self.assertEqual([s.identity for s in dataset], [9, 7])
        self.assertEqual(list(dataset.labels), [1, 0])

    def test_bad_manifest_line(self):
        self.write('a.png')
        (self.root / 'manifest.jsonl').write_text('{"path": "a.png", "identity": 1}\n', encoding='utf-8')
        with self.assertRaises(FormatError):
            ingest_directory(self.root)

    def test_ingest_is_order_stable(self):
        for i, name in enumerate(['0002_c1_0.png', '0001_c2_5.png', '0001_c1_9.png', '0003_c3_1.png']):
            self.write(name, i)
        first = ingest_directory(self.root)
        second = ingest_directory(self.root, threads=4)
        self.assertEqual([s.source_path for s in first], [s.source_path for s in second])
        self.assertEqual([s.source_path for s in first], sorted(s.source_path for s in first))
        for a, b in zip(first, second):
            self.assertTrue(a.image.equals(b.image))

    def test_png_round_trip_is_lossless_for_8bit_values(self):
        pixels = np.random.default_rng(1).integers(0, 256, (5, 4, 3))
        img = Image.from_uint8(pixels)
        save_image(img, self.root / 'x.png')
        np.testing.assert_array_equal(load_image(self.root / 'x.png').to_uint8(), pixels)


class LabeledDatasetTests(SimpleTestCase):

    def make(self, identities):
        return LabeledDataset(tuple(
            LabeledSample(tiny_image(i), identity, camera=i % 2, source_path=f's{i}')
            for i, identity in enumerate(identities)
        ))

    def test_reindexing_is_a_bijection(self):
        dataset = self.make([40, 7, 40, 13, 7])
        recovered = [dataset.identities[label] for label in dataset.labels]
        self.assertEqual(recovered, [40, 7, 40, 13, 7])
        self.assertEqual(dataset.n_identities, 3)

    def test_restrict_identities(self):
        dataset = self.make([1, 2, 3, 2, 1])
        restricted = dataset.restrict_identities([2, 3])
        self.assertEqual(restricted.n_identities, 2)
        self.assertEqual(list(restricted.labels), [0, 1, 0])
        with self.assertRaises(InputError):
            dataset.restrict_identities([99])

    def test_negative_identity_rejected(self):
        with self.assertRaises(InputError):
            LabeledSample(tiny_image(0), identity=-1, camera=0)

    def test_summary_serializes(self):
        serializer = DatasetSummarySerializer(data=self.make([1, 1, 2]).summary())
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['per_identity'], {'1': 2, '2': 1})


class PreprocessTests(SimpleTestCase):

    def test_eval_mode_resizes(self):
        sample = LabeledSample(Image(np.full((50, 100, 3), 0.25)), identity=1, camera=1)
        out = preprocess(sample, 128, 384)
        self.assertEqual((out.width, out.height), (128, 384))
        np.testing.assert_allclose(out.pixels, 0.25, atol=1e-6)

    def test_eval_mode_is_pure(self):
        img = tiny_image(3, 20, 30)
        self.assertTrue(preprocess(img, 10, 24).equals(preprocess(img, 10, 24)))

    def test_forced_flip_mirrors_resize(self):
        img = tiny_image(4, 20, 30)
        plain = preprocess(img, 12, 36)
        flipped = preprocess(img, 12, 36, train_mode=True, rng=substream(1), flip_probability=1.0, padding=0)
        np.testing.assert_allclose(flipped.pixels, plain.pixels[:, ::-1], atol=1e-5)

    def test_train_mode_is_seeded(self):
        img = tiny_image(5, 20, 30)
        a = preprocess(img, 12, 36, train_mode=True, rng=substream(9))
        b = preprocess(img, 12, 36, train_mode=True, rng=substream(9))
        self.assertTrue(a.equals(b))

    def test_train_mode_needs_rng(self):
        with self.assertRaises(InputError):
            preprocess(tiny_image(0), 4, 4, train_mode=True)

    def test_crop_keeps_size(self):
        img = tiny_image(6, 20, 30)
        out = preprocess(img, 20, 30, train_mode=True, rng=substream(2), flip_probability=0.0, padding=10)
        self.assertEqual((out.width, out.height), (20, 30))

    def test_bad_target(self):
        with self.assertRaises(ShapeError):
            preprocess(tiny_image(0), 0, 10)
        with self.assertRaises(ShapeError):
            resize_bilinear(tiny_image(0), 5, -1)

    def test_degenerate_source(self):
        with self.assertRaises(ShapeError):
            preprocess(Image(np.zeros((0, 10, 3))), 4, 4)
