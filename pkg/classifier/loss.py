"""
Combined local + global smoothed cross-entropy.

    L = sum_j sum_k q_k * -log p_j(k)  +  sum_k q_k * -log p(k)

over the m regional heads j and the global head, with the smoothed target
q_y = 1 - eps and q_k = eps / (N_id - 1) for k != y. eps = 0 gives the
one-hot target. The global term carries the same target as the regional ones.
"""

import numpy as np

from forge.exceptions import InputError, NumericDomainError

from .models import PredictionSet


def smoothed_targets(labels, n_classes, smoothing):
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if n_classes < 2:
        off = 0.0
    else:
        off = smoothing / (n_classes - 1)
    targets = np.full((labels.shape[0], n_classes), off)
    targets[np.arange(labels.shape[0]), labels] = 1.0 - smoothing if n_classes > 1 else 1.0
    return targets


def softmax(logits, axis=-1):
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def log_softmax(logits, axis=-1):
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def head_loss(probs, label, smoothing):
    """Smoothed cross-entropy of a single probability vector."""
    probs = np.asarray(probs, dtype=np.float64)
    q = smoothed_targets([label], probs.shape[0], smoothing)[0]
    weighted = q > 0
    # 0 * log 0 counts as 0; a zero probability under positive target mass does not
    if np.any(probs[weighted] <= 0) or not np.all(np.isfinite(probs)):
        raise NumericDomainError('Cross-entropy needs strictly positive, finite probabilities.')
    return float(-(q[weighted] * np.log(probs[weighted])).sum())


def combined_ce_loss(preds: PredictionSet, label, smoothing=0.0):
    if not 0 <= label < preds.n_classes:
        raise InputError(f'Label {label} outside [0, {preds.n_classes})')
    return float(sum(head_loss(probs, label, smoothing) for probs in preds.heads))


def combined_ce_from_logits(logits, labels, smoothing):
    """
    Mean combined loss over a batch and its gradient with respect to the logits.

    Args:
        logits: (n, heads, n_classes)
        labels: (n,) internal class indices
        smoothing: label-smoothing mass

    Returns:
        (mean loss, gradient of shape (n, heads, n_classes))
    """
    n, _, n_classes = logits.shape
    q = smoothed_targets(labels, n_classes, smoothing)[:, None, :]
    log_p = log_softmax(logits)
    loss = float(-(q * log_p).sum() / n)
    grad = (np.exp(log_p) - q) / n
    return loss, grad
