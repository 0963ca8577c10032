"""
Euclidean ranking and CMC / mAP.

For each query the gallery is sorted by ascending distance (ties keep
gallery order). With junk removal on, gallery entries sharing both identity
and camera with the query are dropped before scoring. AP is the mean of the
precision values at every true-match position; queries without any valid
match are left out of both CMC and mAP and listed in the report.
"""

import logging
import math

import numpy as np

from forge.exceptions import InputError, NumericDomainError, ShapeError
from forge.parallel import ordered_map

from .models import EvalProtocol, EvalReport, QueryResult

logger = logging.getLogger(__name__)

CHUNK = 256


def distance_matrix(queries, gallery):
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    gallery = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    if queries.shape[1] != gallery.shape[1]:
        raise ShapeError(f'Query dimension {queries.shape[1]} does not match gallery dimension {gallery.shape[1]}')
    rows = []
    for start in range(0, queries.shape[0], CHUNK):
        diff = queries[start:start + CHUNK, None, :] - gallery[None, :, :]
        rows.append(np.sqrt((diff * diff).sum(axis=-1)))
    if not rows:
        return np.zeros((0, gallery.shape[0]))
    return np.vstack(rows)


def tie_break(row):
    row = np.asarray(row, dtype=np.float64)
    if np.isnan(row).any():
        raise NumericDomainError('Cannot rank a distance row containing NaN.')
    return np.argsort(row, kind='stable')


def evaluate_query(row, q_id, q_cam, g_ids, g_cams, exclude_same_camera_same_id=True):
    """(AP, first-hit rank), or None when the query has no valid match."""
    order = tie_break(row)
    ids, cams = g_ids[order], g_cams[order]
    if exclude_same_camera_same_id:
        keep = ~((ids == q_id) & (cams == q_cam))
        ids = ids[keep]
    matches = ids == q_id
    if not matches.any():
        return None
    positions = np.flatnonzero(matches) + 1
    precisions = np.arange(1, len(positions) + 1) / positions
    return math.fsum(precisions) / len(positions), int(positions[0])


def evaluate(dist, query_ids, query_cams, gallery_ids, gallery_cams, protocol=None, threads=1) -> EvalReport:
    protocol = protocol or EvalProtocol()
    dist = np.asarray(dist, dtype=np.float64)
    q_ids, q_cams = np.asarray(query_ids), np.asarray(query_cams)
    g_ids, g_cams = np.asarray(gallery_ids), np.asarray(gallery_cams)
    if dist.ndim != 2 or dist.shape != (len(q_ids), len(g_ids)):
        raise ShapeError(
            f'Distance matrix of shape {dist.shape} does not match {len(q_ids)} queries x {len(g_ids)} gallery items'
        )
    if len(q_cams) != len(q_ids) or len(g_cams) != len(g_ids):
        raise ShapeError('Identity and camera lists must have the same length.')

    outcomes = ordered_map(
        lambda i: evaluate_query(dist[i], q_ids[i], q_cams[i], g_ids, g_cams, protocol.exclude_same_camera_same_id),
        range(len(q_ids)),
        threads,
    )

    per_query, excluded = [], []
    for i, outcome in enumerate(outcomes):
        if outcome is None:
            excluded.append(i)
        else:
            per_query.append(QueryResult(
                query=i, identity=int(q_ids[i]), camera=int(q_cams[i]), ap=outcome[0], first_hit=outcome[1],
            ))
    if excluded:
        logger.warning(f'{len(excluded)} of {len(q_ids)} queries have no valid gallery match and are excluded')
    if not per_query:
        raise InputError('No query has a valid gallery match; nothing to evaluate.')

    max_rank = len(g_ids)
    hits = np.bincount([r.first_hit for r in per_query], minlength=max_rank + 1)[1:max_rank + 1]
    cmc = np.cumsum(hits) / len(per_query)
    mean_ap = math.fsum(r.ap for r in per_query) / len(per_query)
    return EvalReport(
        cmc=cmc,
        map=mean_ap,
        protocol=protocol,
        per_query=tuple(per_query),
        excluded_queries=tuple(excluded),
    )
