"""
Model checkpoints: ``<name>.bin`` holds the weights then the biases as
little-endian float32, ``<name>.json`` the shapes, descriptor and training
config, identities and seed.
"""

import csv
import json
import logging
from pathlib import Path

import numpy as np

from features.models import DescriptorConfig
from forge.exceptions import FormatError, InputError, OutputError, ShapeError

from .models import LinearModel, TrainConfig
from .serializers import CheckpointSidecarSerializer

logger = logging.getLogger(__name__)

VALUE = np.dtype('<f4')


def _paths(path):
    path = Path(path)
    return path.with_suffix('.bin'), path.with_suffix('.json')


def save_checkpoint(model: LinearModel, path):
    weights_path, sidecar_path = _paths(path)
    cfg = model.train_config or TrainConfig()
    sidecar = {
        'heads': model.heads,
        'classes': model.n_classes,
        'segment_dim': model.descriptor.segment_dim,
        'descriptor': model.descriptor.as_dict(),
        'identities': list(model.identities),
        'train_config': cfg.as_dict(),
        'use_uit': model.use_uit,
        'seed': cfg.seed,
    }
    try:
        with open(weights_path, 'wb') as handle:
            handle.write(model.weights.astype(VALUE).tobytes())
            handle.write(model.biases.astype(VALUE).tobytes())
        sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    except OSError as exc:
        raise OutputError(f'Cannot write checkpoint {weights_path}: {exc}') from exc
    logger.info(f'Saved checkpoint to {weights_path}')
    return weights_path, sidecar_path


def load_checkpoint(path) -> LinearModel:
    weights_path, sidecar_path = _paths(path)
    try:
        data = json.loads(sidecar_path.read_text(encoding='utf-8'))
        raw = weights_path.read_bytes()
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f'Cannot read checkpoint {weights_path}: {exc}') from exc

    serializer = CheckpointSidecarSerializer(data=data)
    if not serializer.is_valid():
        raise FormatError(f'{sidecar_path}: {dict(serializer.errors)}')
    meta = serializer.validated_data
    heads, classes, segment = meta['heads'], meta['classes'], meta['segment_dim']
    n_weights = heads * classes * segment
    expected = VALUE.itemsize * (n_weights + heads * classes)
    if len(raw) != expected:
        raise FormatError(f'{weights_path}: expected {expected} bytes for the declared shapes, found {len(raw)}')

    values = np.frombuffer(raw, dtype=VALUE).astype(np.float64)
    try:
        return LinearModel(
            weights=values[:n_weights].reshape(heads, classes, segment),
            biases=values[n_weights:].reshape(heads, classes),
            descriptor=DescriptorConfig(**meta['descriptor']),
            identities=tuple(meta['identities']),
            train_config=TrainConfig(**meta['train_config']),
            use_uit=meta['use_uit'],
        )
    except (InputError, ShapeError) as exc:
        raise FormatError(f'{sidecar_path}: {exc}') from exc


def write_loss_curve(model: LinearModel, path):
    try:
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle)
            writer.writerow(['epoch', 'mean_loss'])
            for epoch, loss in enumerate(model.loss_history, start=1):
                writer.writerow([epoch, repr(loss)])
    except OSError as exc:
        raise OutputError(f'Cannot write loss curve {path}: {exc}') from exc
