"""Evaluation protocol and report records."""

from dataclasses import dataclass

import numpy as np
from django.conf import settings

from forge.exceptions import InputError

PROTOCOL_VARIANT = 'all-shot single-query'


@dataclass(frozen=True)
class EvalProtocol:
    exclude_same_camera_same_id: bool = True
    ranks_reported: tuple = (1, 5, 10)

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks_reported)
        if not ranks or any(r < 1 for r in ranks) or list(ranks) != sorted(ranks):
            raise InputError(f'Reported ranks must be ascending and >= 1, got {list(self.ranks_reported)}')
        object.__setattr__(self, 'ranks_reported', ranks)

    @classmethod
    def from_settings(cls, **overrides):
        conf = settings.FORGE['EVAL']
        values = {
            'exclude_same_camera_same_id': conf['EXCLUDE_SAME_CAMERA_SAME_ID'],
            'ranks_reported': tuple(conf['RANKS']),
        }
        values.update(overrides)
        return cls(**values)

    def as_dict(self):
        return {
            'exclude_same_camera_same_id': self.exclude_same_camera_same_id,
            'ranks_reported': list(self.ranks_reported),
        }


@dataclass(frozen=True)
class QueryResult:
    query: int
    identity: int
    camera: int
    ap: float
    first_hit: int


@dataclass(frozen=True, eq=False)
class EvalReport:
    """
    cmc[r - 1] is the fraction of valid queries whose first true match sits at
    rank <= r; the curve runs to the gallery size.
    """
    cmc: np.ndarray
    map: float
    protocol: EvalProtocol
    per_query: tuple = ()
    excluded_queries: tuple = ()
    variant: str = PROTOCOL_VARIANT

    @property
    def num_valid_queries(self):
        return len(self.per_query)

    def rank(self, r):
        """CMC at rank r; ranks past the gallery size saturate at the last value."""
        return float(self.cmc[min(r, len(self.cmc)) - 1])

    @property
    def ranks(self):
        return {f'R{r}': self.rank(r) for r in self.protocol.ranks_reported}
