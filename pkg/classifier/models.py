"""Prediction sets, the training recipe and the linear multi-head model."""

from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from features.models import DescriptorConfig
from forge.exceptions import InputError, ShapeError


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Class posteriors of the m regional heads and the global head"""
    regional: np.ndarray
    global_probs: np.ndarray

    def __post_init__(self):
        regional = np.atleast_2d(np.asarray(self.regional, dtype=np.float64))
        global_probs = np.asarray(self.global_probs, dtype=np.float64).reshape(-1)
        if regional.shape[1] != global_probs.shape[0]:
            raise ShapeError(
                f'Regional heads predict {regional.shape[1]} classes, global head {global_probs.shape[0]}'
            )
        object.__setattr__(self, 'regional', regional)
        object.__setattr__(self, 'global_probs', global_probs)

    @property
    def n_classes(self):
        return self.global_probs.shape[0]

    @property
    def heads(self):
        """All m + 1 probability vectors, regional first"""
        return np.vstack([self.regional, self.global_probs[None, :]])

    def concatenated(self):
        return self.heads.reshape(-1)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    lr_step: int = 40
    lr_gamma: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0005
    batch_size: int = 32
    epochs: int = 60
    smoothing: float = 0.1
    geometric: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.smoothing < 1.0:
            raise InputError(f'Label smoothing must lie in [0, 1), got {self.smoothing}')
        if self.lr <= 0:
            raise InputError(f'Learning rate must be positive, got {self.lr}')
        if self.epochs < 1:
            raise InputError(f'Need at least one epoch, got {self.epochs}')
        if self.batch_size < 1:
            raise InputError(f'Batch size must be positive, got {self.batch_size}')

    @classmethod
    def from_settings(cls, **overrides):
        conf = settings.FORGE['TRAIN']
        values = {
            'lr': conf['LR'],
            'lr_step': conf['LR_STEP'],
            'lr_gamma': conf['LR_GAMMA'],
            'momentum': conf['MOMENTUM'],
            'weight_decay': conf['WEIGHT_DECAY'],
            'batch_size': conf['BATCH_SIZE'],
            'epochs': conf['EPOCHS'],
            'smoothing': conf['SMOOTHING'],
            'geometric': conf['GEOMETRIC'],
            'seed': settings.FORGE['SEED'],
        }
        values.update(overrides)
        return cls(**values)

    def learning_rate(self, epoch):
        """Step schedule: lr for the first lr_step epochs, then lr * lr_gamma"""
        return self.lr * (self.lr_gamma if epoch >= self.lr_step else 1.0)

    def as_dict(self):
        return {
            'lr': self.lr,
            'lr_step': self.lr_step,
            'lr_gamma': self.lr_gamma,
            'momentum': self.momentum,
            'weight_decay': self.weight_decay,
            'batch_size': self.batch_size,
            'epochs': self.epochs,
            'smoothing': self.smoothing,
            'geometric': self.geometric,
            'seed': self.seed,
        }


@dataclass(eq=False)
class LinearModel:
    """
    One linear softmax head per descriptor segment: m regional heads on the
    stripe histograms and one global head on the whole-image histogram.

    weights has shape (m + 1, n_classes, segment_dim), biases (m + 1, n_classes).
    """
    weights: np.ndarray
    biases: np.ndarray
    descriptor: DescriptorConfig
    identities: tuple = ()
    train_config: TrainConfig = None
    use_uit: bool = False
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        heads, classes, segment = self.weights.shape
        if heads != self.descriptor.heads or segment != self.descriptor.segment_dim:
            raise ShapeError(
                f'Weights of shape {self.weights.shape} do not fit a descriptor with '
                f'{self.descriptor.heads} segments of {self.descriptor.segment_dim} values'
            )
        if self.biases.shape != (heads, classes):
            raise ShapeError(f'Biases of shape {self.biases.shape} do not match weights {self.weights.shape}')
        self.identities = tuple(int(i) for i in self.identities) or tuple(range(classes))

    @classmethod
    def zeros(cls, descriptor: DescriptorConfig, n_classes, **kwargs):
        return cls(
            weights=np.zeros((descriptor.heads, n_classes, descriptor.segment_dim)),
            biases=np.zeros((descriptor.heads, n_classes)),
            descriptor=descriptor,
            **kwargs,
        )

    @property
    def n_classes(self):
        return self.weights.shape[1]

    @property
    def heads(self):
        return self.weights.shape[0]

    @property
    def trained(self):
        return self.train_config is not None
