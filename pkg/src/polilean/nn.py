"""Single-hidden-layer neural network classifier.

tanh hidden layer, 2-way softmax output, cross-entropy loss, mini-batch
SGD with momentum. Inputs are standardized per column; the transform is
stored with the model. Deterministic for a fixed seed.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class NnModel:
    w1: np.ndarray  # n_features x hidden
    b1: np.ndarray
    w2: np.ndarray  # hidden x 2
    b2: np.ndarray
    mean: np.ndarray
    sd: np.ndarray

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(x, dtype=np.float64)) - self.mean) / self.sd

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Probability of the positive (second) class."""
        probs = _forward(self.standardize(x), self.w1, self.b1, self.w2, self.b2)[1]
        return probs[:, 1]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(x, w1, b1, w2, b2):
    hidden = np.tanh(x @ w1 + b1)
    probs = _softmax(hidden @ w2 + b2)
    return hidden, probs


def loss_and_grads(x, onehot, w1, b1, w2, b2):
    """Mean cross-entropy over the batch and gradients for every
    parameter (used directly by training and by gradient checks)."""
    n = x.shape[0]
    hidden, probs = _forward(x, w1, b1, w2, b2)
    loss = float(-np.log(np.clip((probs * onehot).sum(axis=1), 1e-300, None)).mean())
    dz2 = (probs - onehot) / n
    gw2 = hidden.T @ dz2
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ w2.T
    dz1 = dh * (1.0 - hidden * hidden)
    gw1 = x.T @ dz1
    gb1 = dz1.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2


def train_nn(
    x: np.ndarray,
    y: np.ndarray,
    hidden: int = 64,
    epochs: int = 200,
    lr: float = 0.05,
    batch_size: int = 32,
    momentum: float = 0.9,
    seed: int = 0,
) -> NnModel:
    """y is -1/+1 (or 0/1); the positive class maps to output unit 1."""
    x = np.asarray(x, dtype=np.float64)
    labels = (np.asarray(y) > 0).astype(int)
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd < 1e-9, 1.0, sd)
    xs = (x - mean) / sd
    n, d = xs.shape
    onehot = np.zeros((n, 2))
    onehot[np.arange(n), labels] = 1.0

    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, hidden))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, 2))
    b2 = np.zeros(2)
    velocity = [np.zeros_like(p) for p in (w1, b1, w2, b2)]

    for epoch in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss, *grads = loss_and_grads(xs[batch], onehot[batch], w1, b1, w2, b2)
            epoch_loss += loss * len(batch)
            params = [w1, b1, w2, b2]
            for p, v, grad in zip(params, velocity, grads):
                v *= momentum
                v -= lr * grad
                p += v
        if not np.isfinite(epoch_loss):
            raise ValueError("training diverged (loss is not finite); lower lr")
        logger.debug("epoch %d mean loss %.6f", epoch, epoch_loss / n)

    return NnModel(w1, b1, w2, b2, mean, sd)
