"""
Directory ingestion.

Files are named ``<identity>_c<camera>_<suffix>.<ext>`` (Market-1501 style,
``0001_c1s1_000151_01.jpg`` matches too) unless a JSON-lines manifest with
``path``, ``identity`` and ``camera`` per line is supplied. Negative
identities are Market-1501 distractors and are skipped.
"""

import json
import logging
import re
from pathlib import Path

import numpy as np
from django.conf import settings
from PIL import Image as PILImage

from forge.exceptions import FormatError, IngestError
from forge.parallel import ordered_map
from transform.models import Image

from .models import LabeledDataset, LabeledSample
from .serializers import ManifestEntrySerializer

logger = logging.getLogger(__name__)


def load_image(path) -> Image:
    with PILImage.open(path) as handle:
        handle.load()
        rgb = handle.convert('RGB')
    return Image.from_uint8(np.asarray(rgb))


def save_image(img: Image, path):
    PILImage.fromarray(img.to_uint8()).save(path, format='PNG')


def _read_manifest(directory, manifest):
    entries = []
    with open(manifest, encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f'{manifest}:{line_number}: not valid JSON ({exc.msg})') from exc
            serializer = ManifestEntrySerializer(data=data)
            if not serializer.is_valid():
                raise FormatError(f'{manifest}:{line_number}: {dict(serializer.errors)}')
            entry = serializer.validated_data
            entries.append((str(directory / entry['path']), entry['identity'], entry['camera']))
    return entries


def _scan_names(directory, naming_rule, extensions):
    pattern = re.compile(naming_rule)
    entries = []
    for path in directory.iterdir():
        if not path.is_file() or path.suffix.lower() not in extensions:
            continue
        match = pattern.match(path.name)
        if match is None:
            raise IngestError(
                f'{path.name} does not match the naming rule {naming_rule!r}; supply a manifest instead.'
            )
        entries.append((str(path), int(match.group('identity')), int(match.group('camera'))))
    return entries


def ingest_directory(path, naming_rule=None, manifest=None, split='train', threads=1) -> LabeledDataset:
    conf = settings.FORGE['DATASET']
    directory = Path(path)
    if not directory.is_dir():
        raise IngestError(f'Dataset directory {directory} does not exist.')

    if manifest is None and (directory / conf['MANIFEST_NAME']).is_file():
        manifest = directory / conf['MANIFEST_NAME']

    if manifest is not None:
        entries = _read_manifest(directory, manifest)
    else:
        entries = _scan_names(directory, naming_rule or conf['NAMING_RULE'], tuple(conf['EXTENSIONS']))
    entries.sort(key=lambda entry: entry[0])

    skipped = []
    wanted = []
    for source, identity, camera in entries:
        if identity < 0:
            logger.info(f'Skipping distractor {source} (identity {identity})')
            skipped.append(source)
        else:
            wanted.append((source, identity, camera))

    def decode(entry):
        source = entry[0]
        try:
            return load_image(source)
        except (OSError, SyntaxError, ValueError, PILImage.DecompressionBombError) as exc:
            logger.warning(f'Skipping unreadable image {source}: {exc}')
            return None

    images = ordered_map(decode, wanted, threads)

    samples = []
    for (source, identity, camera), image in zip(wanted, images):
        if image is None:
            skipped.append(source)
            continue
        samples.append(LabeledSample(image=image, identity=identity, camera=camera, source_path=source))

    if not samples:
        raise IngestError(f'No readable samples in {directory}.')

    dataset = LabeledDataset(tuple(samples), split=split, skipped=tuple(sorted(skipped)))
    logger.info(
        f'Ingested {len(dataset)} {split} samples, {dataset.n_identities} identities, '
        f'{len(skipped)} skipped from {directory}'
    )
    return dataset
