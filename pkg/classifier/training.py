"""
Mini-batch SGD on the multi-head linear model.

Per epoch the sample order comes from substream (seed, 0, epoch); each
sample's flip/crop from (seed, 1, epoch, sample index); each batch's
transformation draws from (seed, 2, epoch, batch index). Descriptor
extraction and augmentation may run on several threads, the optimizer never
does, so the final weights do not depend on the thread count.
"""

import logging
import math

import numpy as np

from dataset.models import PreprocessConfig
from dataset.preprocess import preprocess
from features.extraction import extract_many
from features.models import Descriptor, DescriptorConfig
from forge.exceptions import ShapeError, TrainingError
from forge.seeding import derive_seed, substream
from transform.pipeline import augment_batch

from .loss import combined_ce_from_logits, log_softmax, softmax
from .models import LinearModel, PredictionSet, TrainConfig

logger = logging.getLogger(__name__)


def _segments(model: LinearModel, matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.shape[1] != model.descriptor.dimension:
        raise ShapeError(
            f'Model expects descriptors of dimension {model.descriptor.dimension}, got {matrix.shape[1]}'
        )
    return matrix.reshape(matrix.shape[0], model.heads, model.descriptor.segment_dim)


def logits(model: LinearModel, matrix):
    """Head logits of shape (n, m + 1, n_classes)."""
    return np.einsum('nhs,hks->nhk', _segments(model, matrix), model.weights) + model.biases[None]


def predict(model: LinearModel, d: Descriptor) -> PredictionSet:
    vector = d.vector if isinstance(d, Descriptor) else d
    probs = softmax(logits(model, vector))[0]
    return PredictionSet(regional=probs[:-1], global_probs=probs[-1])


def predict_many(model: LinearModel, matrix):
    """Probabilities of shape (n, m + 1, n_classes)."""
    return softmax(logits(model, matrix))


def embed(model: LinearModel, matrix):
    """Retrieval representation: concatenated head logits, shape (n, (m + 1) * n_classes)."""
    out = logits(model, matrix)
    return out.reshape(out.shape[0], -1)


def classify(model: LinearModel, matrix):
    """Internal class index maximising the summed head log-probabilities."""
    return log_softmax(logits(model, matrix)).sum(axis=1).argmax(axis=1)


def accuracy(model: LinearModel, matrix, labels):
    return float(np.mean(classify(model, matrix) == np.asarray(labels)))


def sgd_step(param, grad, velocity, lr, momentum, weight_decay):
    """In-place SGD update with momentum and L2 weight decay (PyTorch semantics)."""
    grad = grad + weight_decay * param
    velocity *= momentum
    velocity += grad
    param -= lr * velocity


def batch_descriptors(train_set, indices, space, cfg: TrainConfig, use_uit, descriptor: DescriptorConfig,
                      prep: PreprocessConfig, epoch, batch, threads=1):
    images = []
    for i in indices:
        sample = train_set[int(i)]
        if cfg.geometric:
            images.append(preprocess(
                sample, prep.width, prep.height, train_mode=True,
                rng=substream(cfg.seed, 1, epoch, int(i)),
                flip_probability=prep.flip_probability, padding=prep.padding,
            ))
        else:
            images.append(preprocess(sample, prep.width, prep.height))
    if use_uit:
        images = augment_batch(images, space, derive_seed(cfg.seed, 2, epoch, batch), threads)
    return extract_many(images, descriptor, threads)


def train(train_set, space, cfg: TrainConfig, use_uit, descriptor=None, prep=None, threads=1) -> LinearModel:
    descriptor = descriptor or DescriptorConfig.from_settings()
    prep = prep or PreprocessConfig.from_settings()
    if len(train_set) == 0:
        raise TrainingError('Training set is empty.')
    if train_set.n_identities < 2:
        raise TrainingError(f'Training needs at least two identities, got {train_set.n_identities}.')

    model = LinearModel.zeros(
        descriptor, train_set.n_identities, identities=train_set.identities, train_config=cfg, use_uit=use_uit,
    )
    labels = train_set.labels
    velocity_w = np.zeros_like(model.weights)
    velocity_b = np.zeros_like(model.biases)
    n = len(train_set)

    logger.info(
        f'Training {model.heads} heads over {train_set.n_identities} identities, {n} samples, '
        f'{cfg.epochs} epochs, UIT {"on" if use_uit else "off"}'
    )
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate(epoch)
        order = substream(cfg.seed, 0, epoch).permutation(n)
        batch_losses = []
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            indices = order[start:start + cfg.batch_size]
            segments = _segments(model, batch_descriptors(
                train_set, indices, space, cfg, use_uit, descriptor, prep, epoch, batch, threads,
            ))
            out = np.einsum('nhs,hks->nhk', segments, model.weights) + model.biases[None]
            loss, grad = combined_ce_from_logits(out, labels[indices], cfg.smoothing)
            grad_w = np.einsum('nhk,nhs->hks', grad, segments)
            grad_b = grad.sum(axis=0)
            sgd_step(model.weights, grad_w, velocity_w, lr, cfg.momentum, cfg.weight_decay)
            sgd_step(model.biases, grad_b, velocity_b, lr, cfg.momentum, cfg.weight_decay)
            batch_losses.append(loss * len(indices))
        epoch_loss = math.fsum(batch_losses) / n
        model.loss_history.append(epoch_loss)
        logger.debug(f'epoch {epoch + 1}/{cfg.epochs} lr {lr:g} loss {epoch_loss:.6f}')

    logger.info(f'Training finished, final loss {model.loss_history[-1]:.6f}')
    return model
