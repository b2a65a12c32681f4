"""NumPy implementation of the hot network kernels.

This is the fallback backend and the reference the compiled extension is
checked against.  Functions are dtype-generic: the float32 training path and
the float64 gradient-check path both go through the same code.

Conventions shared with the compiled backend:
  * ``x`` is a (batch, input_dim) design matrix, ``y`` an int64 label vector;
  * ``mask`` is either ``None`` or a pre-scaled inverted-dropout keep mask
    (entries 0 or 1/keep_prob) drawn by the caller so that both backends
    consume identical random numbers;
  * parameter and Adam-moment arrays are updated in place.
"""

from __future__ import annotations

import numpy as np

LOG_CLAMP = 1e-12  # floor for log arguments on saturated softmax rows


def softmax(logits):
    """Row-wise softmax, numerically shifted, in the dtype of ``logits``."""
    z = logits - logits.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def forward_probs(W1, b1, W2, b2, x, mask=None):
    """Class probabilities softmax(relu(x@W1+b1)*mask @ W2 + b2)."""
    h = x @ W1
    h += b1
    np.maximum(h, 0.0, out=h)
    if mask is not None:
        h *= mask
    logits = h @ W2
    logits += b2
    return softmax(logits)


def mean_cross_entropy(probs, y):
    """Mean of -log p[i, y_i] with the log argument clamped at LOG_CLAMP."""
    picked = probs[np.arange(len(y)), y]
    return float(-np.log(np.maximum(picked, LOG_CLAMP)).mean())


def loss_and_grads(W1, b1, W2, b2, x, y, mask=None):
    """Minibatch loss and analytic gradients of the mean cross-entropy.

    Returns ``(loss, (gW1, gb1, gW2, gb2))`` without touching the inputs.
    """
    h = x @ W1
    h += b1
    np.maximum(h, 0.0, out=h)
    if mask is not None:
        h *= mask
    logits = h @ W2
    logits += b2
    probs = softmax(logits)
    loss = mean_cross_entropy(probs, y)

    n = x.shape[0]
    dlogits = probs  # consumed in place
    dlogits[np.arange(n), y] -= 1.0
    dlogits *= 1.0 / n

    gW2 = h.T @ dlogits
    gb2 = dlogits.sum(axis=0)
    dh = dlogits @ W2.T
    if mask is not None:
        dh *= mask
    dh *= h > 0  # relu gate; units zeroed by the mask already have dh == 0
    gW1 = x.T @ dh
    gb1 = dh.sum(axis=0)
    return loss, (gW1, gb1, gW2, gb2)


def adam_update(params, m_moments, v_moments, grads, step, lr, beta1, beta2, eps):
    """One Adam update (bias-corrected first/second moments), in place.

    ``step`` is the 1-based update count used for bias correction.
    """
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for w, m, v, g in zip(params, m_moments, v_moments, grads):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        w -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def train_minibatch(
    W1, b1, W2, b2,
    mW1, vW1, mb1, vb1, mW2, vW2, mb2, vb2,
    x, y, mask, step, lr, beta1, beta2, eps,
):
    """Fused forward/backward/Adam step on one minibatch; returns the loss."""
    loss, grads = loss_and_grads(W1, b1, W2, b2, x, y, mask)
    adam_update(
        (W1, b1, W2, b2),
        (mW1, mb1, mW2, mb2),
        (vW1, vb1, vW2, vb2),
        grads,
        step, lr, beta1, beta2, eps,
    )
    return loss
