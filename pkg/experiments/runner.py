"""
The experiment commands behind ``manage.py``.

Every ``cmd_*`` takes a validated RunConfig, writes its reports under
``cfg.out`` and returns a small summary dict. Report bytes depend only on
the configuration and seed, never on ``threads``.
"""

import json
import logging
from pathlib import Path

import numpy as np

from classifier.checkpoint import load_checkpoint, save_checkpoint, write_loss_curve
from classifier.training import accuracy, embed, train
from dataset.ingest import ingest_directory, load_image, save_image
from dataset.preprocess import preprocess
from dataset.serializers import DatasetSummarySerializer
from evaluation.ranking import distance_matrix, evaluate
from evaluation.reports import report_data, write_cmc, write_json, write_rows
from features.extraction import extract_many
from features.io import load_embeddings, write_descriptors, write_meta
from features.models import DESCRIPTOR_DTYPE
from forge.exceptions import InputError, OutputError
from forge.seeding import derive_seed, substream
from transform.models import FACTORS
from transform.pipeline import apply_transform, sample_batch_params
from transform.serializers import TransformParamsSerializer
from universality.analysis import analyse, sample_analysis_set
from universality.reports import write_invariance

from .config import RunConfig
from .fixture import FixtureSpec, fixture_config, generate_fixture

logger = logging.getLogger(__name__)

ABLATION_ROWS = (
    ('baseline', ()),
    ('+H', ('hue',)),
    ('+S', ('saturation',)),
    ('+L', ('lightness',)),
    ('+C', ('contrast',)),
    ('+All', FACTORS),
)


def _mkdir(path):
    try:
        Path(path).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f'Cannot create {path}: {exc}') from exc
    return Path(path)


def _load(cfg: RunConfig, split):
    return ingest_directory(cfg.path(split), split=split, threads=cfg.threads)


def _model(path):
    return load_checkpoint(path) if path else None


def represent(cfg: RunConfig, dataset, model=None):
    """Retrieval rows for a dataset: descriptors, or the model embedding when a model is given."""
    images = [preprocess(s, cfg.prep.width, cfg.prep.height) for s in dataset]
    descriptor = model.descriptor if model is not None else cfg.descriptor
    matrix = extract_many(images, descriptor, cfg.threads)
    if model is not None:
        matrix = embed(model, matrix)
    return matrix.astype(DESCRIPTOR_DTYPE)


def score(cfg: RunConfig, query_rows, query_ids, query_cams, gallery_rows, gallery_ids, gallery_cams):
    dist = distance_matrix(query_rows, gallery_rows)
    return evaluate(dist, query_ids, query_cams, gallery_ids, gallery_cams, cfg.protocol, cfg.threads)


def evaluate_model(cfg: RunConfig, model, query, gallery):
    return score(
        cfg,
        represent(cfg, query, model), query.original_labels, query.cameras,
        represent(cfg, gallery, model), gallery.original_labels, gallery.cameras,
    )


def _summary_row(report):
    return {**report.ranks, 'mAP': report.map}


def cmd_fixture(cfg: RunConfig, spec: FixtureSpec = None):
    spec = spec or FixtureSpec()
    summary = generate_fixture(spec, cfg.seed, cfg.out)
    config_path = cfg.out / 'fixture.toml'
    try:
        config_path.write_text(fixture_config(spec, cfg.out), encoding='utf-8')
    except OSError as exc:
        raise OutputError(f'Cannot write {config_path}: {exc}') from exc
    write_json(cfg.out / 'fixture.json', {'seed': cfg.seed, 'spec': spec.as_dict(), 'domains': summary})
    return {'domains': summary, 'config': str(config_path)}


def cmd_augment(cfg: RunConfig, count=1):
    """Export ``count`` transformed copies of every train image plus the JSON-lines log of their draws."""
    if count < 1:
        raise InputError(f'Copies per image must be at least 1, got {count}')
    dataset = _load(cfg, 'train')
    out = _mkdir(cfg.out / 'augment')
    params = sample_batch_params(len(dataset) * count, cfg.space, derive_seed(cfg.seed, 5))
    lines = []
    for i, sample in enumerate(dataset):
        stem = Path(sample.source_path).stem
        for k in range(count):
            t = params[i * count + k]
            name = f'{stem}_{i:06d}_{k:02d}.png'
            img = apply_transform(sample.image, t, cfg.space.order, cfg.space.luma_weights)
            try:
                save_image(img, out / name)
            except OSError as exc:
                raise OutputError(f'Cannot write {out / name}: {exc}') from exc
            lines.append({'file': name, 'source': str(sample.source_path), **TransformParamsSerializer(t).data})
    try:
        with open(out / 'params.jsonl', 'w', encoding='utf-8') as handle:
            for line in lines:
                handle.write(json.dumps(line, sort_keys=True) + '\n')
    except OSError as exc:
        raise OutputError(f'Cannot write augmentation log: {exc}') from exc
    logger.info(f'Exported {len(lines)} augmented images to {out}')
    return {'images': len(lines), 'log': str(out / 'params.jsonl')}


def replay(line, space):
    """Re-apply one augmentation log line to its source image."""
    fields = ('hue_shift', 'saturation', 'lightness', 'contrast')
    serializer = TransformParamsSerializer(data={k: line[k] for k in fields})
    serializer.is_valid(raise_exception=True)
    return apply_transform(load_image(line['source']), serializer.save(), space.order, space.luma_weights)


def train_model(cfg: RunConfig, dataset, use_uit, space=None):
    return train(dataset, space or cfg.space, cfg.train, use_uit, cfg.descriptor, cfg.prep, cfg.threads)


def cmd_train(cfg: RunConfig, use_uit=True):
    dataset = _load(cfg, 'train')
    model = train_model(cfg, dataset, use_uit)
    weights, sidecar = save_checkpoint(model, cfg.out / 'model')
    write_loss_curve(model, cfg.out / 'loss.csv')
    rows = extract_many(
        [preprocess(s, cfg.prep.width, cfg.prep.height) for s in dataset], cfg.descriptor, cfg.threads,
    )
    summary = {
        'use_uit': use_uit,
        'final_loss': model.loss_history[-1],
        'train_accuracy': accuracy(model, rows, dataset.labels),
        'dataset': DatasetSummarySerializer(dataset.summary()).data,
    }
    write_json(cfg.out / 'train.json', summary)
    return {**summary, 'checkpoint': str(weights), 'sidecar': str(sidecar)}


def cmd_eval(cfg: RunConfig, model_path=None, export=False):
    model = _model(model_path)
    query, gallery = _load(cfg, 'query'), _load(cfg, 'gallery')
    query_rows, gallery_rows = represent(cfg, query, model), represent(cfg, gallery, model)
    report = score(
        cfg,
        query_rows, query.original_labels, query.cameras,
        gallery_rows, gallery.original_labels, gallery.cameras,
    )
    if export:
        write_descriptors(cfg.out / 'query.bin', query_rows)
        write_meta(cfg.out / 'query.meta.jsonl', query.original_labels, query.cameras)
        write_descriptors(cfg.out / 'gallery.bin', gallery_rows)
        write_meta(cfg.out / 'gallery.meta.jsonl', gallery.original_labels, gallery.cameras)
    representation = 'embedding' if model is not None else 'descriptor'
    write_json(cfg.out / 'eval.json', report_data(report, representation=representation))
    write_cmc(cfg.out / 'cmc.csv', report)
    return _summary_row(report)


def cmd_eval_external(cfg: RunConfig, query_embeddings, query_meta, gallery_embeddings, gallery_meta):
    query_rows, query_ids, query_cams = load_embeddings(query_embeddings, query_meta)
    gallery_rows, gallery_ids, gallery_cams = load_embeddings(gallery_embeddings, gallery_meta)
    report = score(cfg, query_rows, query_ids, query_cams, gallery_rows, gallery_ids, gallery_cams)
    write_json(cfg.out / 'eval.json', report_data(report, representation='external'))
    write_cmc(cfg.out / 'cmc.csv', report)
    return _summary_row(report)


def cmd_universality(cfg: RunConfig, model_path=None, split='gallery'):
    model = _model(model_path)
    dataset = sample_analysis_set(_load(cfg, split), cfg.analysis_size, cfg.seed)
    images = [preprocess(s, cfg.prep.width, cfg.prep.height) for s in dataset]
    report = analyse(images, cfg.space, cfg.seed, cfg.descriptor, model, cfg.threads)
    write_invariance(report, cfg.out / 'universality.json', cfg.out / 'universality.csv')
    return {f'{level}-{code}': mean for code, level, mean, _ in report.rows()} | {'sample_count': report.sample_count}


def _table(cfg: RunConfig, name, header, rows):
    write_rows(cfg.out / f'{name}.csv', header, [[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    write_json(cfg.out / f'{name}.json', [dict(zip(header, row)) for row in rows])


def cmd_ablate(cfg: RunConfig):
    """Baseline, each factor on its own, and all factors together."""
    train_set, query, gallery = _load(cfg, 'train'), _load(cfg, 'query'), _load(cfg, 'gallery')
    header = ['variant', *(f'R{r}' for r in cfg.protocol.ranks_reported), 'mAP']
    rows = []
    for name, factors in ABLATION_ROWS:
        model = train_model(cfg, train_set, use_uit=bool(factors), space=cfg.space.only(*factors))
        report = evaluate_model(cfg, model, query, gallery)
        rows.append([name, *report.ranks.values(), report.map])
        logger.info(f'{name}: R1 {report.rank(1):.4f} mAP {report.map:.4f}')
    _table(cfg, 'ablation', header, rows)
    return {row[0]: dict(zip(header[1:], row[1:])) for row in rows}


def identity_subset(dataset, count, seed):
    """The ``count`` identities kept for one sweep point; depends on (seed, count) only."""
    if count > dataset.n_identities:
        raise InputError(f'Cannot keep {count} identities; the train set has {dataset.n_identities}.')
    if count < 1:
        raise InputError(f'Identity count must be positive, got {count}')
    chosen = substream(seed, 6, count).choice(np.array(dataset.identities), size=count, replace=False)
    return dataset.restrict_identities(sorted(int(i) for i in chosen))


def cmd_sweep(cfg: RunConfig, counts, use_uit=True):
    if not counts:
        raise InputError('Pass at least one identity count.')
    train_set, query, gallery = _load(cfg, 'train'), _load(cfg, 'query'), _load(cfg, 'gallery')
    too_many = [c for c in counts if c > train_set.n_identities]
    if too_many:
        raise InputError(f'Counts {too_many} exceed the {train_set.n_identities} train identities.')
    rows = []
    for count in counts:
        model = train_model(cfg, identity_subset(train_set, count, cfg.seed), use_uit)
        report = evaluate_model(cfg, model, query, gallery)
        rows.append([count, report.rank(1), report.map])
        logger.info(f'{count} identities: R1 {report.rank(1):.4f} mAP {report.map:.4f}')
    _table(cfg, 'sweep', ['count', 'R1', 'mAP'], rows)
    return rows


def cmd_crossdomain(cfg: RunConfig):
    """Train once on the seed domain, with and without UIT, then evaluate on every target domain."""
    if not cfg.targets:
        raise InputError('No target domains configured; set [data] targets.')
    train_set = _load(cfg, 'train')
    models = {False: train_model(cfg, train_set, use_uit=False), True: train_model(cfg, train_set, use_uit=True)}
    header = ['target', 'uit', *(f'R{r}' for r in cfg.protocol.ranks_reported), 'mAP']
    rows = []
    for target in cfg.targets:
        root = Path(target)
        query = ingest_directory(root / 'query', split='query', threads=cfg.threads)
        gallery = ingest_directory(root / 'gallery', split='gallery', threads=cfg.threads)
        for use_uit, model in models.items():
            report = evaluate_model(cfg, model, query, gallery)
            rows.append([root.name, use_uit, *report.ranks.values(), report.map])
    _table(cfg, 'crossdomain', header, rows)
    return rows
