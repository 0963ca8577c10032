"""
Run configuration.

Layering: ``settings.FORGE`` defaults <- TOML config file <- command-line
flags. The merged result is validated section by section with the apps'
serializers and echoed to ``<out>/effective_config.json`` on every run.

    seed = 7
    threads = 4
    out = "runs/market"

    [data]
    train = "data/market/train"
    query = "data/market/query"
    gallery = "data/market/gallery"
    targets = ["data/duke"]          # domain roots holding query/ and gallery/

    [transform]
    hue = [-18, 18]
    enabled = ["hue", "saturation", "lightness", "contrast"]

    [descriptor]
    m = 6

    [train]
    epochs = 60

    [eval]
    ranks_reported = [1, 5, 10]

    [preprocess]
    width = 128
    height = 384
"""

import json
import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings
from django.utils import timezone
from rest_framework import serializers

from classifier.models import TrainConfig
from classifier.serializers import TrainConfigSerializer
from dataset.models import PreprocessConfig
from dataset.serializers import PreprocessConfigSerializer
from evaluation.models import EvalProtocol
from evaluation.serializers import EvalProtocolSerializer
from features.models import DescriptorConfig
from features.serializers import DescriptorConfigSerializer
from forge.exceptions import InputError, OutputError
from transform.models import TransformSpace
from transform.serializers import TransformSpaceSerializer

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1
DATA_KEYS = ('train', 'query', 'gallery')


@dataclass(frozen=True)
class RunConfig:
    space: TransformSpace
    descriptor: DescriptorConfig
    train: TrainConfig
    protocol: EvalProtocol
    prep: PreprocessConfig
    data: dict = field(default_factory=dict)
    targets: tuple = ()
    seed: int = 0
    threads: int = 1
    out: Path = Path('runs')
    analysis_size: int = 1000

    def path(self, key):
        if not self.data.get(key):
            raise InputError(f'No {key} directory configured; set [data] {key} or pass --{key}.')
        return Path(self.data[key])

    def as_dict(self):
        return {
            'seed': self.seed,
            'threads': self.threads,
            'out': str(self.out),
            'analysis_size': self.analysis_size,
            'data': {**{k: self.data.get(k) for k in DATA_KEYS}, 'targets': list(self.targets)},
            'transform': self.space.as_dict(),
            'descriptor': self.descriptor.as_dict(),
            'train': self.train.as_dict(),
            'eval': self.protocol.as_dict(),
            'preprocess': self.prep.as_dict(),
        }


class DataSerializer(serializers.Serializer):
    train = serializers.CharField(required=False, allow_null=True)
    query = serializers.CharField(required=False, allow_null=True)
    gallery = serializers.CharField(required=False, allow_null=True)
    targets = serializers.ListField(child=serializers.CharField(), required=False)


class RunConfigSerializer(serializers.Serializer):
    """The merged configuration of one command invocation"""
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, required=False)
    threads = serializers.IntegerField(min_value=1, required=False)
    out = serializers.CharField(required=False)
    analysis_size = serializers.IntegerField(min_value=1, required=False)
    data = DataSerializer(required=False)
    transform = TransformSpaceSerializer(required=False)
    descriptor = DescriptorConfigSerializer(required=False)
    train = TrainConfigSerializer(required=False)
    eval = EvalProtocolSerializer(required=False)
    preprocess = PreprocessConfigSerializer(required=False)

    def create(self, validated_data):
        conf = settings.FORGE
        seed = validated_data.get('seed', conf['SEED'])
        data = dict(validated_data.get('data', {}))
        targets = tuple(data.pop('targets', ()))
        return RunConfig(
            space=TransformSpaceSerializer().create(dict(validated_data.get('transform', {}))),
            descriptor=DescriptorConfigSerializer().create(dict(validated_data.get('descriptor', {}))),
            train=TrainConfigSerializer().create({**validated_data.get('train', {}), 'seed': seed}),
            protocol=EvalProtocolSerializer().create(dict(validated_data.get('eval', {}))),
            prep=PreprocessConfigSerializer().create(dict(validated_data.get('preprocess', {}))),
            data=data,
            targets=targets,
            seed=seed,
            threads=validated_data.get('threads', conf['THREADS']),
            out=Path(validated_data.get('out', conf['OUT_DIR'])),
            analysis_size=validated_data.get('analysis_size', conf['ANALYSIS_SIZE']),
        )


def read_config_file(path):
    try:
        with open(path, 'rb') as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise InputError(f'Cannot read config file {path}: {exc}') from exc
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f'Config file {path} is not valid TOML: {exc}') from exc


def load_run_config(config=None, seed=None, threads=None, out=None, **data) -> RunConfig:
    """
    Merge defaults, an optional TOML file and flag overrides.

    Args:
        config: Path to a TOML config file or None
        seed, threads, out: Flag overrides; None keeps the file/default value
        data: train/query/gallery directory overrides

    Returns:
        Validated RunConfig
    """
    raw = read_config_file(config) if config else {}
    for key, value in (('seed', seed), ('threads', threads), ('out', out)):
        if value is not None:
            raw[key] = value
    overrides = {k: v for k, v in data.items() if k in DATA_KEYS and v is not None}
    if overrides:
        raw['data'] = {**raw.get('data', {}), **{k: str(v) for k, v in overrides.items()}}

    serializer = RunConfigSerializer(data=raw)
    if not serializer.is_valid():
        raise InputError(f'Invalid configuration: {json.dumps(serializer.errors, sort_keys=True)}')
    return serializer.save()


def prepare_output(cfg: RunConfig, command):
    """Create the output directory and echo the effective configuration into it."""
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        path = cfg.out / 'effective_config.json'
        path.write_text(
            json.dumps({'command': command, **cfg.as_dict()}, indent=2, sort_keys=True) + '\n', encoding='utf-8'
        )
    except OSError as exc:
        raise OutputError(f'Cannot write to output directory {cfg.out}: {exc}') from exc
    return path


def append_run_log(out, command, status, detail=''):
    """Timestamps live here only, never in report files."""
    entry = {'time': timezone.now().isoformat(), 'command': command, 'status': status}
    if detail:
        entry['detail'] = detail
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / 'run.log', 'a', encoding='utf-8') as handle:
            handle.write(json.dumps(entry, sort_keys=True) + '\n')
    except OSError as exc:
        logger.warning(f'Cannot append to run log in {out}: {exc}')
