"""
Feature- and prediction-level invariance under individual transformations.

Each factor is analysed on its own: every image gets one draw from a space
where only that factor is enabled, and the distance between the
representation of the transformed image and of the original is averaged.
Feature and prediction levels of the same factor share the same draws.

Without a model the feature representation is the raw descriptor; with one
it is the model's retrieval embedding (concatenated head logits).
"""

import logging
import math

import numpy as np

from classifier.training import embed, predict_many
from features.extraction import extract_many
from features.models import DescriptorConfig
from forge.exceptions import InputError
from forge.seeding import derive_seed, substream
from transform.models import FACTORS
from transform.pipeline import sample_batch_params, single_factor_space, transform_batch

from .models import FactorInvariance, InvarianceReport

logger = logging.getLogger(__name__)


def sample_analysis_set(dataset, n, seed):
    """Seeded uniform subset of min(n, size) samples, without replacement, in dataset order."""
    if n >= len(dataset):
        return dataset
    indices = np.sort(substream(seed, 3).choice(len(dataset), size=int(n), replace=False))
    return dataset.subset(indices)


def factor_params(n, factor, space, seed):
    """The single-factor draws shared by both levels of the analysis."""
    return sample_batch_params(n, single_factor_space(space, factor), derive_seed(seed, 4, FACTORS.index(factor)))


def _pairwise(original, transformed):
    n = original.shape[0]
    diff = transformed.reshape(n, -1).astype(np.float64) - original.reshape(n, -1).astype(np.float64)
    return np.sqrt((diff * diff).sum(axis=1))


def _stats(distances):
    n = len(distances)
    mean = math.fsum(distances) / n
    std = math.sqrt(math.fsum((d - mean) ** 2 for d in distances) / n)
    return FactorInvariance(mean=mean, std=std)


def _check_model(model):
    if model is None or not model.trained:
        raise InputError('Prediction-level invariance needs a trained model.')


def factor_distances(images, factor, space, seed, descriptor=None, model=None, predictions=False, threads=1):
    """
    Per-image distances for one factor.

    Returns:
        (feature distances, prediction distances or None, sampled params)
    """
    images = list(images)
    if not images:
        raise InputError('Invariance analysis needs at least one image.')
    if predictions:
        _check_model(model)
    descriptor = model.descriptor if model is not None else (descriptor or DescriptorConfig.from_settings())

    params = factor_params(len(images), factor, space, seed)
    moved = transform_batch(images, params, space, threads)
    original = extract_many(images, descriptor, threads)
    transformed = extract_many(moved, descriptor, threads)

    if model is None:
        feature = _pairwise(original, transformed)
    else:
        feature = _pairwise(embed(model, original), embed(model, transformed))
    prediction = None
    if predictions:
        prediction = _pairwise(predict_many(model, original), predict_many(model, transformed))
    return feature, prediction, params


def feature_invariance(images, factor, space, seed, descriptor=None, model=None, threads=1):
    feature, _, _ = factor_distances(images, factor, space, seed, descriptor, model, threads=threads)
    return _stats(feature).mean


def prediction_invariance(model, images, factor, space, seed, threads=1):
    _check_model(model)
    _, prediction, _ = factor_distances(images, factor, space, seed, model=model, predictions=True, threads=threads)
    return _stats(prediction).mean


def analyse(images, space, seed, descriptor=None, model=None, threads=1) -> InvarianceReport:
    """Both levels for every factor; the prediction level only when a trained model is given."""
    images = list(images)
    with_predictions = model is not None and model.trained
    feature, prediction, draws = {}, {}, {}
    for factor in FACTORS:
        f_dist, p_dist, params = factor_distances(
            images, factor, space, seed, descriptor, model, with_predictions, threads,
        )
        feature[factor] = _stats(f_dist)
        if with_predictions:
            prediction[factor] = _stats(p_dist)
        draws[factor] = [t.value(factor) for t in params]
        logger.info(
            f'{factor}: feature distance {feature[factor].mean:.6f}'
            + (f', prediction distance {prediction[factor].mean:.6f}' if with_predictions else '')
        )
    return InvarianceReport(
        sample_count=len(images),
        feature=feature,
        prediction=prediction,
        draws=draws,
        representation='embedding' if model is not None else 'descriptor',
    )
