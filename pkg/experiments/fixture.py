"""
Synthetic person re-identification domains.

A "person" is a stack of coloured rectangles (head, torso, legs) on a noisy
background. Every identity has its own palette; every camera its own
illumination, applied as a fixed transformation. A domain is the generator
under an appearance offset, and the seed domain has no offset. The offset
grows across cameras: camera 1 sees none of it, the middle camera all of it
and the last camera twice as much, so a target domain also widens the gap
between its own cameras. Each
domain has its own identity pool, split identity-disjoint into train and
test, with Market-style file names ``{identity:04d}_c{camera}_{k:04d}.png``.
The first image of every (identity, camera) pair goes to ``query/``, the
others to ``gallery/``.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dataset.ingest import save_image
from forge.exceptions import InputError, OutputError
from forge.seeding import substream
from transform.models import Image, TransformParams
from transform.pipeline import apply_transform

logger = logging.getLogger(__name__)

DEFAULT_TARGETS = {
    'hue': TransformParams(hue_shift=18.0),
    'hue_contrast': TransformParams(hue_shift=18.0, contrast=0.75),
}


@dataclass(frozen=True)
class FixtureSpec:
    train_identities: int = 20
    test_identities: int = 10
    cameras: int = 3
    per_camera: int = 3
    width: int = 16
    height: int = 48
    targets: dict = field(default_factory=lambda: dict(DEFAULT_TARGETS))

    def __post_init__(self):
        if self.train_identities < 2 or self.test_identities < 1:
            raise InputError('A fixture needs at least two train identities and one test identity.')
        if self.cameras < 2:
            raise InputError('A fixture needs at least two cameras so queries have cross-camera matches.')
        if self.per_camera < 2:
            raise InputError('Each camera needs at least two images per identity (one query, one gallery).')
        if self.width < 4 or self.height < 12:
            raise InputError(f'Fixture images must be at least 4x12, got {self.width}x{self.height}')

    @property
    def domains(self):
        return ('seed', *self.targets)

    def as_dict(self):
        return {
            'train_identities': self.train_identities,
            'test_identities': self.test_identities,
            'cameras': self.cameras,
            'per_camera': self.per_camera,
            'width': self.width,
            'height': self.height,
            'targets': {name: t.as_dict() for name, t in self.targets.items()},
        }


def camera_params(seed, domain, camera):
    rng = substream(seed, 10, domain, camera)
    hue, saturation, lightness, contrast = rng.random(4)
    return TransformParams(
        hue_shift=-2.0 + 4.0 * hue,
        saturation=0.85 + 0.3 * saturation,
        lightness=0.8 + 0.4 * lightness,
        contrast=0.85 + 0.3 * contrast,
    )


def camera_offset(offset: TransformParams, camera, cameras) -> TransformParams:
    """``offset`` scaled for one camera: hue linearly, the factors as powers."""
    exponent = 2.0 * (camera - 1) / (cameras - 1)
    return TransformParams(
        hue_shift=offset.hue_shift * exponent,
        saturation=offset.saturation ** exponent,
        lightness=offset.lightness ** exponent,
        contrast=offset.contrast ** exponent,
    )


def hue_reach(spec: FixtureSpec):
    """Widest hue offset any target camera applies, in degrees."""
    return 2.0 * max((abs(t.hue_shift) for t in spec.targets.values()), default=0.0)


def palette(seed, domain, identity):
    """Head, torso and legs colours of one identity."""
    return substream(seed, 11, domain, identity).random((3, 3))


def render_person(colours, width, height, rng) -> Image:
    background = 0.45 + 0.1 * rng.random(3)
    pixels = np.clip(background + 0.05 * rng.standard_normal((height, width, 3)), 0.0, 1.0)
    left = int(rng.integers(0, max(1, width // 4)))
    right = width - int(rng.integers(0, max(1, width // 4)))
    head, torso, legs = colours
    bounds = ((0, height // 6, head), (height // 6, height // 2, torso), (height // 2, height, legs))
    for top, bottom, colour in bounds:
        jitter = 0.04 * rng.standard_normal((bottom - top, right - left, 3))
        pixels[top:bottom, left:right] = np.clip(colour + jitter, 0.0, 1.0)
    return Image(pixels)


def generate_domain(spec: FixtureSpec, seed, domain_index, offset: TransformParams, root):
    """Write train/, query/ and gallery/ for one domain; returns file counts per split."""
    root = Path(root)
    counts = {'train': 0, 'query': 0, 'gallery': 0}
    first_test = spec.train_identities + 1
    identities = range(1, spec.train_identities + spec.test_identities + 1)
    try:
        for split in counts:
            (root / split).mkdir(parents=True, exist_ok=True)
        for identity in identities:
            colours = palette(seed, domain_index, identity)
            for camera in range(1, spec.cameras + 1):
                light = camera_params(seed, domain_index, camera)
                shift = camera_offset(offset, camera, spec.cameras)
                for k in range(spec.per_camera):
                    rng = substream(seed, 12, domain_index, identity, camera, k)
                    img = apply_transform(render_person(colours, spec.width, spec.height, rng), light)
                    img = apply_transform(img, shift)
                    if identity < first_test:
                        split = 'train'
                    else:
                        split = 'query' if k == 0 else 'gallery'
                    save_image(img, root / split / f'{identity:04d}_c{camera}_{k:04d}.png')
                    counts[split] += 1
    except OSError as exc:
        raise OutputError(f'Cannot write fixture domain to {root}: {exc}') from exc
    return counts


def generate_fixture(spec: FixtureSpec, seed, out):
    """
    Generate the seed domain and every target domain under ``out``.

    Returns:
        {domain name: {split: file count}}
    """
    out = Path(out)
    summary = {}
    for index, name in enumerate(spec.domains):
        offset = TransformParams() if name == 'seed' else spec.targets[name]
        summary[name] = generate_domain(spec, seed, index, offset, out / name)
        logger.info(f'Fixture domain {name}: {summary[name]}')
    return summary


def fixture_config(spec: FixtureSpec, out):
    """TOML run configuration pointing at a generated fixture, with a recipe sized for it."""
    out = Path(out).resolve()
    targets = ', '.join(f'"{out / name}"' for name in spec.targets)
    reach = hue_reach(spec)
    # hue draws must cover the widest cross-camera offset
    transform = ['[transform]', f'hue = [{-reach:g}, {reach:g}]', ''] if reach else []
    return '\n'.join([
        f'out = "{out / "run"}"',
        '',
        '[data]',
        f'train = "{out / "seed" / "train"}"',
        f'query = "{out / "seed" / "query"}"',
        f'gallery = "{out / "seed" / "gallery"}"',
        f'targets = [{targets}]',
        '',
        '[preprocess]',
        f'width = {spec.width}',
        f'height = {spec.height}',
        'padding = 2',
        '',
        '[descriptor]',
        'm = 6',
        'bins_per_channel = 8',
        '',
        *transform,
        '[train]',
        'lr = 0.5',
        'lr_step = 20',
        'epochs = 25',
        'batch_size = 16',
        '',
    ])
