"""Invariance report records."""

from dataclasses import dataclass, field

from forge.exceptions import InputError
from transform.models import FACTOR_CODES, FACTORS

LEVEL_FEATURE = 'F'
LEVEL_PREDICTION = 'P'
CODE_OF = {factor: code for code, factor in FACTOR_CODES.items()}


@dataclass(frozen=True)
class FactorInvariance:
    """Distance statistics of one factor at one level"""
    mean: float
    std: float

    def __post_init__(self):
        if self.mean < 0 or self.std < 0:
            raise InputError(f'Invariance distances cannot be negative, got mean {self.mean}, std {self.std}')


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    """
    Per-factor mean Euclidean distance between the representation of a
    transformed image and that of its original, for the feature level and,
    when a trained model was given, the prediction level.

    ``draws`` holds the parameter value sampled for every analysis image.
    """
    sample_count: int
    feature: dict
    prediction: dict = field(default_factory=dict)
    draws: dict = field(default_factory=dict)
    representation: str = 'descriptor'
    distance: str = 'euclidean (raw, unnormalised)'

    def __post_init__(self):
        if self.sample_count <= 0:
            raise InputError('An invariance report needs at least one analysed image.')

    def rows(self):
        """(factor code, level, mean, std) in factor order, features first"""
        out = []
        for level, stats in ((LEVEL_FEATURE, self.feature), (LEVEL_PREDICTION, self.prediction)):
            for factor in FACTORS:
                if factor in stats:
                    out.append((CODE_OF[factor], level, stats[factor].mean, stats[factor].std))
        return out
