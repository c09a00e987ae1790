"""Mini-batch SGD with gradient clipping, and finite-difference checks."""

from __future__ import annotations

import numpy as np

from .networks import NETWORKS, CnnNet, cross_entropy

__all__ = [
    "TrainingDiverged",
    "clip_gradients",
    "sgd_train",
    "grad_check",
    "tiny_network",
]


class TrainingDiverged(RuntimeError):
    pass


def clip_gradients(grads, max_norm):
    """Scale all gradients together so their global L2 norm is <= max_norm."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm is not None and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def sgd_train(net, X, y_idx, epochs=20, batch_size=32, learning_rate=0.5,
              dropout_rate=0.0, clip_norm=5.0, rng=None):
    """Train ``net`` in place; returns the mean training loss of each epoch.

    The step size for epoch ``e`` (1-based) is ``learning_rate / sqrt(e)``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    X = np.asarray(X)
    y_idx = np.asarray(y_idx)
    n = len(y_idx)
    history = []
    for epoch in range(1, epochs + 1):
        lr = learning_rate / np.sqrt(epoch)
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch = perm[start : start + batch_size]
            probs, cache = net.forward(X[batch], train=True, rng=rng, dropout_rate=dropout_rate)
            loss = cross_entropy(probs, y_idx[batch])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite training loss in epoch {epoch}")
            total += loss * len(batch)
            grads = net.backward(cache, y_idx[batch])
            clip_gradients(grads, clip_norm)
            for name, g in grads.items():
                net.params[name] -= lr * g
            net.params["embedding"][0] = 0.0
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(f"non-finite training loss in epoch {epoch}")
        history.append(epoch_loss)
    return history


def tiny_network(kind, seed=0, vocab_rows=6, n_classes=3, embed_dim=3, hidden_size=3,
                 head_size=3, n_filters=2, kernel_sizes=(1, 2)):
    """Small randomly initialised network for gradient checking.

    Biases are randomised too so no unit sits exactly at a kink. The 0.5
    scale keeps the softmax unsaturated and the +1 head bias keeps the ReLU
    units live; otherwise many recurrent gradients fall below ~1e-6, where
    central-difference round-off (~1e-11) dominates the relative error.
    """
    rng = np.random.default_rng(seed)
    if kind == "cnn":
        net = CnnNet.init(rng, vocab_rows, n_classes, embed_dim, n_filters, kernel_sizes)
    else:
        net = NETWORKS[kind].init(rng, vocab_rows, n_classes, embed_dim, hidden_size, head_size)
    for name, p in net.params.items():
        p[...] = rng.normal(0.0, 0.5, size=p.shape)
    net.params["embedding"][0] = 0.0
    if "hidden.bias" in net.params:
        net.params["hidden.bias"] += 1.0
    return net


def grad_check(kind, seed=0, seq_len=5, true_length=4, step=1e-5, **config):
    """Max relative error between analytic and central-difference gradients.

    One example of ``seq_len`` positions (``true_length`` real tokens, the
    rest PAD). For the CNN a fixed dropout mask is used so the dropout
    backward path is covered.
    """
    net = tiny_network(kind, seed, **config)
    rng = np.random.default_rng(seed + 1)
    rows = net.embedding.shape[0]
    X = np.zeros((1, seq_len), dtype=np.int64)
    X[0, :true_length] = rng.integers(1, rows, size=true_length)
    y = np.array([int(rng.integers(net.n_classes))])
    kw = {}
    if kind == "cnn":
        n_feats = net.params["out.weight"].shape[1]
        keep = rng.random((1, n_feats)) >= 0.3
        kw["dropout_mask"] = keep / 0.7

    probs, cache = net.forward(X, train=True, **kw)
    analytic = net.backward(cache, y)

    worst = 0.0
    for name, param in net.params.items():
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            if name == "embedding" and idx[0] == 0:
                continue  # frozen PAD row
            old = param[idx]
            param[idx] = old + step
            up = net.loss(X, y, train=True, **kw)
            param[idx] = old - step
            down = net.loss(X, y, train=True, **kw)
            param[idx] = old
            numeric = (up - down) / (2 * step)
            a = analytic[name][idx]
            denom = max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, abs(a - numeric) / denom)
    return worst
