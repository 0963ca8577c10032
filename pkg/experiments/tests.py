import csv
import json
import re
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.apps import apps
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

from dataset.ingest import ingest_directory, load_image
from dataset.preprocess import preprocess
from forge.exceptions import InputError
from transform.models import FACTORS, TransformParams
from universality.analysis import analyse

from .config import load_run_config
from .fixture import FixtureSpec, camera_offset, generate_fixture, hue_reach
from .runner import evaluate_model, identity_subset, replay, train_model

SMALL = dict(identities=6, test_identities=4, cameras=2, per_camera=2, width=8, height=24)


def run(command, **options):
    stdout = StringIO()
    call_command(command, stdout=stdout, no_color=True, **options)
    return json.loads(stdout.getvalue())


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.reader(handle))


class FixtureMixin:
    """One small fixture per test class, plus per-test output directories."""
    fixture_options = SMALL

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = Path(tempfile.mkdtemp())
        cls.root = cls.tmp / 'fixture'
        run('fixture', out=str(cls.root), seed=1, **cls.fixture_options)
        cls.config = cls.root / 'fixture.toml'

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)
        super().tearDownClass()

    def out(self, name):
        return str(self.tmp / self._testMethodName / name)

    def config_with(self, text, name='custom.toml'):
        path = self.tmp / f'{self._testMethodName}-{name}'
        base = self.config.read_text(encoding='utf-8').replace('epochs = 25', 'epochs = 6')
        if '[transform]' in text:
            base = re.sub(r'\[transform\]\n(?:[^\n]+\n)*', '', base)
        path.write_text(base + '\n' + text, encoding='utf-8')
        return str(path)


class FixtureTests(FixtureMixin, SimpleTestCase):

    def test_domains_and_counts(self):
        summary = json.loads((self.root / 'fixture.json').read_text())
        self.assertEqual(sorted(summary['domains']), ['hue', 'hue_contrast', 'seed'])
        self.assertEqual(summary['domains']['seed'], {'train': 24, 'query': 8, 'gallery': 8})

    def test_train_and_test_identities_are_disjoint(self):
        train = ingest_directory(self.root / 'seed' / 'train')
        gallery = ingest_directory(self.root / 'seed' / 'gallery', split='gallery')
        self.assertEqual(train.identities, (1, 2, 3, 4, 5, 6))
        self.assertEqual(gallery.identities, (7, 8, 9, 10))

    def test_generated_config_loads(self):
        cfg = load_run_config(self.config)
        self.assertEqual((cfg.prep.width, cfg.prep.height), (8, 24))
        self.assertEqual(len(cfg.targets), 2)
        self.assertTrue(cfg.path('train').is_dir())

    def test_same_seed_same_pixels(self):
        other = self.tmp / 'again'
        generate_fixture(FixtureSpec(
            train_identities=6, test_identities=4, cameras=2, per_camera=2, width=8, height=24,
        ), seed=1, out=other)
        name = '0003_c2_0001.png'
        self.assertTrue(np.array_equal(
            load_image(self.root / 'hue' / 'train' / name).pixels,
            load_image(other / 'hue' / 'train' / name).pixels,
        ))

    def test_target_domain_differs_from_seed(self):
        name = '0003_c2_0001.png'
        self.assertFalse(np.array_equal(
            load_image(self.root / 'seed' / 'train' / name).pixels,
            load_image(self.root / 'hue' / 'train' / name).pixels,
        ))

    def test_fixture_needs_two_cameras(self):
        with self.assertRaises(InputError):
            FixtureSpec(cameras=1)

    def test_offset_spreads_across_cameras(self):
        offset = TransformParams(hue_shift=18.0, contrast=0.75)
        self.assertTrue(camera_offset(offset, 1, 3).is_identity)
        self.assertEqual(camera_offset(offset, 2, 3), offset)
        self.assertEqual(camera_offset(offset, 3, 3), TransformParams(hue_shift=36.0, contrast=0.5625))
        self.assertEqual(camera_offset(offset, 2, 2), TransformParams(hue_shift=36.0, contrast=0.5625))

    def test_config_hue_range_covers_target_cameras(self):
        self.assertEqual(hue_reach(FixtureSpec()), 36.0)
        self.assertEqual(hue_reach(FixtureSpec(targets={})), 0.0)
        self.assertEqual(load_run_config(self.config).space.hue, (-36.0, 36.0))


class ConfigTests(FixtureMixin, SimpleTestCase):

    def test_no_orm_apps_installed(self):
        self.assertFalse(apps.is_installed('django.contrib.auth'))
        self.assertFalse(apps.is_installed('django.contrib.contenttypes'))
        for config in apps.get_app_configs():
            if config.name != 'rest_framework':
                self.assertNotIn('default_auto_field', type(config).__dict__, config.name)

    def test_flags_override_file(self):
        cfg = load_run_config(self.config, seed=9, threads=3, train='/elsewhere')
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.train.seed, 9)
        self.assertEqual(cfg.threads, 3)
        self.assertEqual(str(cfg.path('train')), '/elsewhere')

    def test_invalid_section_is_an_input_error(self):
        with self.assertRaises(CommandError) as ctx:
            run('eval', config=self.config_with('[transform]\nhue = [5, -5]\n'), out=self.out('run'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as ctx:
            run('eval', config=str(self.tmp / 'nope.toml'), out=self.out('run'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unwritable_output(self):
        blocker = self.tmp / 'blocker'
        blocker.write_text('')
        with self.assertRaises(CommandError) as ctx:
            run('eval', config=str(self.config), out=str(blocker / 'run'))
        self.assertEqual(ctx.exception.returncode, 5)

    def test_effective_config_and_run_log(self):
        out = self.out('run')
        run('eval', config=str(self.config), out=out, seed=4)
        effective = json.loads((Path(out) / 'effective_config.json').read_text())
        self.assertEqual(effective['command'], 'eval')
        self.assertEqual(effective['seed'], 4)
        log = [json.loads(line) for line in (Path(out) / 'run.log').read_text().splitlines()]
        self.assertEqual(log[-1]['status'], 'ok')
        self.assertIn('time', log[-1])


class AugmentCommandTests(FixtureMixin, SimpleTestCase):

    def test_cardinality_and_replay(self):
        out = Path(self.out('run'))
        result = run('augment', config=str(self.config), out=str(out), count=2)
        self.assertEqual(result['images'], 48)
        lines = [json.loads(line) for line in (out / 'augment' / 'params.jsonl').read_text().splitlines()]
        self.assertEqual(len(lines), 48)
        self.assertEqual(len(list((out / 'augment').glob('*.png'))), 48)
        cfg = load_run_config(self.config)
        for line in lines[:5]:
            exported = load_image(out / 'augment' / line['file'])
            self.assertTrue(np.array_equal(replay(line, cfg.space).to_uint8(), exported.to_uint8()))

    def test_disabled_factors_reencode_inputs(self):
        out = Path(self.out('run'))
        run('augment', config=self.config_with('[transform]\nenabled = []\n'), out=str(out), count=1)
        for line in [json.loads(x) for x in (out / 'augment' / 'params.jsonl').read_text().splitlines()][:5]:
            self.assertTrue(np.array_equal(
                load_image(line['source']).to_uint8(), load_image(out / 'augment' / line['file']).to_uint8(),
            ))

    def test_same_stem_different_extension(self):
        train = self.tmp / self._testMethodName / 'train'
        train.mkdir(parents=True)
        source = self.root / 'seed' / 'train' / '0001_c1_0000.png'
        shutil.copy(source, train / '0001_c1_0000.png')
        shutil.copy(source, train / '0001_c1_0000.jpg')
        out = Path(self.out('run'))
        run('augment', config=str(self.config), out=str(out), train=str(train), count=1)
        lines = [json.loads(line) for line in (out / 'augment' / 'params.jsonl').read_text().splitlines()]
        self.assertEqual(len({line['file'] for line in lines}), 2)
        self.assertEqual(len(list((out / 'augment').glob('*.png'))), 2)
        cfg = load_run_config(self.config)
        for line in lines:
            exported = load_image(out / 'augment' / line['file'])
            self.assertTrue(np.array_equal(replay(line, cfg.space).to_uint8(), exported.to_uint8()))

    def test_same_seed_same_log(self):
        a, b = Path(self.out('a')), Path(self.out('b'))
        run('augment', config=str(self.config), out=str(a), count=1, seed=5)
        run('augment', config=str(self.config), out=str(b), count=1, seed=5, threads=4)
        self.assertEqual((a / 'augment' / 'params.jsonl').read_bytes(), (b / 'augment' / 'params.jsonl').read_bytes())


class EvalCommandTests(FixtureMixin, SimpleTestCase):

    def test_report_independent_of_threads(self):
        a, b = Path(self.out('a')), Path(self.out('b'))
        run('eval', config=str(self.config), out=str(a), threads=1)
        run('eval', config=str(self.config), out=str(b), threads=4)
        self.assertEqual((a / 'eval.json').read_bytes(), (b / 'eval.json').read_bytes())
        self.assertEqual((a / 'cmc.csv').read_bytes(), (b / 'cmc.csv').read_bytes())

    def test_report_contents(self):
        out = Path(self.out('run'))
        result = run('eval', config=str(self.config), out=str(out))
        report = json.loads((out / 'eval.json').read_text())
        self.assertEqual(set(result), {'R1', 'R5', 'R10', 'mAP'})
        self.assertEqual(report['variant'], 'all-shot single-query')
        self.assertEqual(report['num_valid_queries'], 8)
        self.assertEqual(len(report['cmc']), 8)
        self.assertEqual([row['query'] for row in report['per_query']], list(range(8)))
        self.assertAlmostEqual(sum(row['ap'] for row in report['per_query']) / 8, report['map'], places=12)

    def test_export_then_external_matches(self):
        out = Path(self.out('run'))
        internal = run('eval', config=str(self.config), out=str(out), export=True)
        external = run(
            'eval_external', out=self.out('external'),
            query_embeddings=str(out / 'query.bin'), query_meta=str(out / 'query.meta.jsonl'),
            gallery_embeddings=str(out / 'gallery.bin'), gallery_meta=str(out / 'gallery.meta.jsonl'),
        )
        self.assertEqual(internal, external)

    def test_permuted_query_rows_and_meta(self):
        out = Path(self.out('run'))
        internal = run('eval', config=str(self.config), out=str(out), export=True)
        raw = (out / 'query.bin').read_bytes()
        header, rows = raw[:8], np.frombuffer(raw[8:], dtype='<f4').reshape(8, -1)
        meta = (out / 'query.meta.jsonl').read_text().splitlines()
        order = np.random.default_rng(0).permutation(8)
        (out / 'perm.bin').write_bytes(header + rows[order].tobytes())
        (out / 'perm.meta.jsonl').write_text('\n'.join(meta[i] for i in order) + '\n')
        external = run(
            'eval_external', out=self.out('external'),
            query_embeddings=str(out / 'perm.bin'), query_meta=str(out / 'perm.meta.jsonl'),
            gallery_embeddings=str(out / 'gallery.bin'), gallery_meta=str(out / 'gallery.meta.jsonl'),
        )
        self.assertEqual(internal, external)

    def test_truncated_embeddings_are_a_format_error(self):
        out = Path(self.out('run'))
        run('eval', config=str(self.config), out=str(out), export=True)
        (out / 'short.bin').write_bytes((out / 'query.bin').read_bytes()[:-3])
        with self.assertRaises(CommandError) as ctx:
            run(
                'eval_external', out=self.out('external'),
                query_embeddings=str(out / 'short.bin'), query_meta=str(out / 'query.meta.jsonl'),
                gallery_embeddings=str(out / 'gallery.bin'), gallery_meta=str(out / 'gallery.meta.jsonl'),
            )
        self.assertEqual(ctx.exception.returncode, 3)


class TrainCommandTests(FixtureMixin, SimpleTestCase):

    def test_train_eval_universality(self):
        out = Path(self.out('run'))
        config = self.config_with('')
        trained = run('train', config=config, out=str(out))
        self.assertTrue((out / 'model.bin').is_file())
        self.assertTrue((out / 'model.json').is_file())
        self.assertEqual(len(read_csv(out / 'loss.csv')), 1 + 6)
        self.assertTrue(trained['use_uit'])
        self.assertEqual(trained['dataset']['split'], 'train')
        self.assertEqual((trained['dataset']['samples'], trained['dataset']['identities']), (24, 6))

        result = run('eval', config=config, out=str(out / 'eval'), model=str(out / 'model'))
        self.assertTrue(0.0 <= result['mAP'] <= 1.0)
        self.assertEqual(json.loads((out / 'eval' / 'eval.json').read_text())['representation'], 'embedding')

        run('universality', config=config, out=str(out / 'uni'), model=str(out / 'model'))
        rows = read_csv(out / 'uni' / 'universality.csv')
        self.assertEqual(rows[0], ['factor', 'level', 'mean', 'std'])
        self.assertEqual([(r[0], r[1]) for r in rows[1:]], [
            ('H', 'F'), ('S', 'F'), ('L', 'F'), ('C', 'F'), ('H', 'P'), ('S', 'P'), ('L', 'P'), ('C', 'P'),
        ])

    def test_training_is_reproducible(self):
        a, b = Path(self.out('a')), Path(self.out('b'))
        config = self.config_with('')
        run('train', config=config, out=str(a), threads=1)
        run('train', config=config, out=str(b), threads=4)
        self.assertEqual((a / 'model.bin').read_bytes(), (b / 'model.bin').read_bytes())
        self.assertEqual((a / 'loss.csv').read_bytes(), (b / 'loss.csv').read_bytes())

    def test_universality_without_model(self):
        out = Path(self.out('run'))
        result = run('universality', config=str(self.config), out=str(out))
        self.assertEqual(result['sample_count'], 8)
        self.assertEqual(len(read_csv(out / 'universality.csv')), 1 + 4)


class AblateCommandTests(FixtureMixin, SimpleTestCase):

    def test_identity_ranges_match_baseline(self):
        out = Path(self.out('run'))
        config = self.config_with(
            '[transform]\nhue = [0, 0]\nsaturation = [1, 1]\nlightness = [1, 1]\ncontrast = [1, 1]\n'
        )
        run('ablate', config=config, out=str(out))
        rows = read_csv(out / 'ablation.csv')
        self.assertEqual(rows[0], ['variant', 'R1', 'R5', 'R10', 'mAP'])
        self.assertEqual([r[0] for r in rows[1:]], ['baseline', '+H', '+S', '+L', '+C', '+All'])
        for row in rows[2:]:
            self.assertEqual(row[1:], rows[1][1:])
        self.assertEqual(len(json.loads((out / 'ablation.json').read_text())), 6)


class SweepCommandTests(FixtureMixin, SimpleTestCase):

    def test_too_many_identities(self):
        with self.assertRaises(CommandError) as ctx:
            run('sweep', config=self.config_with(''), out=self.out('run'), counts=[7])
        self.assertEqual(ctx.exception.returncode, 2)

    def test_duplicate_counts_give_duplicate_rows(self):
        out = Path(self.out('run'))
        run('sweep', config=self.config_with(''), out=str(out), counts=[3, 3])
        rows = read_csv(out / 'sweep.csv')
        self.assertEqual(rows[0], ['count', 'R1', 'mAP'])
        self.assertEqual(rows[1], rows[2])

    def test_full_count_matches_plain_training(self):
        out = Path(self.out('run'))
        config = self.config_with('')
        run('sweep', config=config, out=str(out), counts=[6])
        cfg = load_run_config(config)
        train_set = ingest_directory(cfg.path('train'))
        query = ingest_directory(cfg.path('query'), split='query')
        gallery = ingest_directory(cfg.path('gallery'), split='gallery')
        report = evaluate_model(cfg, train_model(cfg, train_set, use_uit=True), query, gallery)
        self.assertEqual(read_csv(out / 'sweep.csv')[1], ['6', repr(report.rank(1)), repr(report.map)])

    def test_identity_subset_depends_on_seed_and_count(self):
        train_set = ingest_directory(self.root / 'seed' / 'train')
        a = identity_subset(train_set, 3, seed=2)
        self.assertEqual(a.identities, identity_subset(train_set, 3, seed=2).identities)
        self.assertEqual(a.n_identities, 3)
        self.assertEqual(identity_subset(train_set, 6, seed=2).identities, train_set.identities)


class CrossDomainCommandTests(FixtureMixin, SimpleTestCase):

    def test_rows_per_target_and_variant(self):
        out = Path(self.out('run'))
        run('crossdomain', config=self.config_with(''), out=str(out))
        rows = read_csv(out / 'crossdomain.csv')
        self.assertEqual(rows[0], ['target', 'uit', 'R1', 'R5', 'R10', 'mAP'])
        self.assertEqual([(r[0], r[1]) for r in rows[1:]], [
            ('hue', 'False'), ('hue', 'True'), ('hue_contrast', 'False'), ('hue_contrast', 'True'),
        ])


@tag('slow')
class DirectionalTests(FixtureMixin, SimpleTestCase):
    """Desk-scale reproductions of the UIT-vs-baseline orderings."""
    fixture_options = dict(identities=24, test_identities=60, cameras=3, per_camera=4, width=16, height=48)

    def test_uit_model_is_more_invariant(self):
        cfg = load_run_config(self.config, out=self.out('run'))
        train_set = ingest_directory(cfg.path('train'))
        baseline = train_model(cfg, train_set, use_uit=False)
        uit = train_model(cfg, train_set, use_uit=True)
        pool = ingest_directory(cfg.path('gallery'), split='gallery')
        images = [preprocess(s, cfg.prep.width, cfg.prep.height) for s in pool]
        self.assertGreaterEqual(len(images), 500)
        base_report = analyse(images, cfg.space, cfg.seed, model=baseline)
        uit_report = analyse(images, cfg.space, cfg.seed, model=uit)
        for factor in FACTORS:
            self.assertLess(uit_report.feature[factor].mean, base_report.feature[factor].mean)
            self.assertLess(uit_report.prediction[factor].mean, base_report.prediction[factor].mean)

    def test_hue_shifted_target_favours_hue_augmentation(self):
        cfg = load_run_config(self.config, out=self.out('run'))
        train_set = ingest_directory(cfg.path('train'))
        target = self.root / 'hue'
        query = ingest_directory(target / 'query', split='query')
        gallery = ingest_directory(target / 'gallery', split='gallery')
        baseline = evaluate_model(cfg, train_model(cfg, train_set, use_uit=False), query, gallery)
        hue = evaluate_model(cfg, train_model(cfg, train_set, True, cfg.space.only('hue')), query, gallery)
        self.assertGreater(hue.rank(1), baseline.rank(1))

    def test_hue_contrast_target_favours_each_matching_factor(self):
        cfg = load_run_config(self.config, out=self.out('run'))
        train_set = ingest_directory(cfg.path('train'))
        target = self.root / 'hue_contrast'
        query = ingest_directory(target / 'query', split='query')
        gallery = ingest_directory(target / 'gallery', split='gallery')

        def rank1(use_uit, *factors):
            model = train_model(cfg, train_set, use_uit, cfg.space.only(*factors) if factors else None)
            return evaluate_model(cfg, model, query, gallery).rank(1)

        baseline = rank1(False)
        self.assertGreater(rank1(True, 'hue'), baseline)
        self.assertGreater(rank1(True, 'contrast'), baseline)
        self.assertGreaterEqual(rank1(True) - baseline, 0.05)

    def test_more_train_identities_never_hurt(self):
        query = ingest_directory(self.root / 'seed' / 'query', split='query')
        gallery = ingest_directory(self.root / 'seed' / 'gallery', split='gallery')
        train_set = ingest_directory(self.root / 'seed' / 'train')
        best = []
        for count in (2, 4, 8, 16):
            scores = []
            for seed in range(3):
                cfg = load_run_config(self.config, out=self.out(f'run-{count}-{seed}'), seed=seed)
                model = train_model(cfg, identity_subset(train_set, count, seed), use_uit=True)
                scores.append(evaluate_model(cfg, model, query, gallery).rank(1))
            best.append(max(scores))
        for smaller, larger in zip(best, best[1:]):
            self.assertLessEqual(smaller, larger, best)
