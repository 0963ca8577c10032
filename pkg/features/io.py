"""
Embedding files.

Binary layout: little-endian uint32 dimension, uint32 count, then
count * dimension little-endian float32 values, row-major. CSV layout: one
row per embedding, no header. Meta files are JSON-lines with ``identity``
and ``camera``, one line per row.

Any embedding with this layout can be scored, not only descriptors.
"""

import csv
import json
import logging
from pathlib import Path

import numpy as np

from forge.exceptions import FormatError, OutputError

from .serializers import EmbeddingMetaSerializer

logger = logging.getLogger(__name__)

HEADER = np.dtype('<u4')
VALUE = np.dtype('<f4')


def write_descriptors(path, matrix):
    path = Path(path)
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise FormatError(f'Embeddings must be a 2-D matrix, got shape {matrix.shape}')
    count, dimension = matrix.shape
    try:
        if path.suffix.lower() == '.csv':
            with open(path, 'w', newline='', encoding='utf-8') as handle:
                writer = csv.writer(handle)
                for row in matrix:
                    writer.writerow([format(float(x), '.9g') for x in row])
        else:
            with open(path, 'wb') as handle:
                handle.write(np.array([dimension, count], dtype=HEADER).tobytes())
                handle.write(matrix.astype(VALUE).tobytes())
    except OSError as exc:
        raise OutputError(f'Cannot write embeddings to {path}: {exc}') from exc


def read_descriptors(path):
    path = Path(path)
    try:
        if path.suffix.lower() == '.csv':
            return _read_csv(path)
        raw = path.read_bytes()
    except OSError as exc:
        raise FormatError(f'Cannot read embeddings from {path}: {exc}') from exc

    if len(raw) < 2 * HEADER.itemsize:
        raise FormatError(f'{path}: file too short for the (dimension, count) header')
    dimension, count = (int(x) for x in np.frombuffer(raw[:8], dtype=HEADER))
    expected = 8 + VALUE.itemsize * dimension * count
    if len(raw) != expected:
        raise FormatError(
            f'{path}: header declares {count} x {dimension} values ({expected} bytes), file has {len(raw)} bytes'
        )
    return np.frombuffer(raw[8:], dtype=VALUE).reshape(count, dimension).astype(np.float32)


def _read_csv(path):
    with open(path, newline='', encoding='utf-8') as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows:
        raise FormatError(f'{path}: no embeddings')
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise FormatError(f'{path}: rows have differing lengths {sorted(widths)}')
    try:
        return np.array(rows, dtype=np.float64).astype(np.float32)
    except ValueError as exc:
        raise FormatError(f'{path}: non-numeric value ({exc})') from exc


def write_meta(path, identities, cameras):
    try:
        with open(path, 'w', encoding='utf-8') as handle:
            for identity, camera in zip(identities, cameras):
                handle.write(json.dumps({'identity': int(identity), 'camera': int(camera)}) + '\n')
    except OSError as exc:
        raise OutputError(f'Cannot write meta file {path}: {exc}') from exc


def read_meta(path):
    identities, cameras = [], []
    try:
        handle = open(path, encoding='utf-8')
    except OSError as exc:
        raise FormatError(f'Cannot read meta file {path}: {exc}') from exc
    with handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f'{path}:{line_number}: not valid JSON ({exc.msg})') from exc
            serializer = EmbeddingMetaSerializer(data=data)
            if not serializer.is_valid():
                raise FormatError(f'{path}:{line_number}: {dict(serializer.errors)}')
            identities.append(serializer.validated_data['identity'])
            cameras.append(serializer.validated_data['camera'])
    return np.array(identities, dtype=np.int64), np.array(cameras, dtype=np.int64)


def load_embeddings(embedding_path, meta_path):
    matrix = read_descriptors(embedding_path)
    identities, cameras = read_meta(meta_path)
    if len(identities) != matrix.shape[0]:
        raise FormatError(
            f'{embedding_path} holds {matrix.shape[0]} rows but {meta_path} describes {len(identities)}'
        )
    logger.info(f'Loaded {matrix.shape[0]} embeddings of dimension {matrix.shape[1]} from {embedding_path}')
    return matrix, identities, cameras
