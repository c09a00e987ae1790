"""CNN, LSTM and GRU sentence classifiers over a trainable look-up table."""

from __future__ import annotations

import numpy as np

from . import functional as F

__all__ = ["CnnNet", "LstmNet", "GruNet", "NETWORKS", "cross_entropy"]


def glorot(rng, shape, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def cross_entropy(probs, y_idx):
    return float(-np.log(probs[np.arange(len(y_idx)), y_idx]).mean())


def _softmax_grad(probs, y_idx):
    d = probs.copy()
    d[np.arange(len(y_idx)), y_idx] -= 1.0
    return d / len(y_idx)


class _Network:
    """Parameter dict plus batched forward/backward.

    ``forward`` takes ``(B, L)`` index arrays and returns class
    probabilities and a cache; ``backward`` returns gradients of the mean
    cross-entropy for every parameter.
    """

    kind = None

    def __init__(self, params):
        self.params = params

    @property
    def embedding(self):
        return self.params["embedding"]

    @property
    def n_classes(self):
        return self.params["out.bias"].shape[0]

    def predict_proba(self, X):
        probs, _ = self.forward(np.asarray(X), train=False)
        return probs

    def loss(self, X, y_idx, **kw):
        probs, _ = self.forward(X, **kw)
        return cross_entropy(probs, y_idx)

    def copy(self):
        return type(self)({k: v.copy() for k, v in self.params.items()})


class CnnNet(_Network):
    """embedding -> conv+ReLU per kernel size -> max-over-time -> dropout -> linear -> softmax."""

    kind = "cnn"

    @classmethod
    def init(cls, rng, n_rows, n_classes, embed_dim=100, n_filters=64,
             kernel_sizes=(2, 3, 4)):
        params = {"embedding": glorot(rng, (n_rows, embed_dim), n_rows, embed_dim)}
        params["embedding"][0] = 0.0
        for k in kernel_sizes:
            params[f"conv{k}.weight"] = glorot(
                rng, (n_filters, k, embed_dim), k * embed_dim, n_filters
            )
            params[f"conv{k}.bias"] = np.zeros(n_filters)
        total = n_filters * len(kernel_sizes)
        params["out.weight"] = glorot(rng, (n_classes, total), total, n_classes)
        params["out.bias"] = np.zeros(n_classes)
        return cls(params)

    @property
    def kernel_sizes(self):
        return sorted(int(k[4:-7]) for k in self.params if k.endswith(".weight") and k.startswith("conv"))

    def forward(self, X, train=False, rng=None, dropout_rate=0.0, dropout_mask=None):
        x = F.embed(self.embedding, X)
        pooled, caches = [], []
        for k in self.kernel_sizes:
            p, cache = F.conv1d_relu_maxpool(
                x, self.params[f"conv{k}.weight"], self.params[f"conv{k}.bias"]
            )
            pooled.append(p)
            caches.append(cache)
        feats = np.concatenate(pooled, axis=1)
        if dropout_mask is not None:
            dropped, mask = feats * dropout_mask, dropout_mask
        else:
            dropped, mask = F.dropout(feats, dropout_rate, rng, train)
        logits = dropped @ self.params["out.weight"].T + self.params["out.bias"]
        probs = F.softmax(logits)
        return probs, (X, caches, dropped, mask, probs)

    def backward(self, cache, y_idx):
        X, caches, dropped, mask, probs = cache
        d_logits = _softmax_grad(probs, y_idx)
        grads = {
            "out.weight": d_logits.T @ dropped,
            "out.bias": d_logits.sum(axis=0),
        }
        d_feats = d_logits @ self.params["out.weight"]
        if mask is not None:
            d_feats = d_feats * mask
        d_x = 0.0
        offset = 0
        for k, conv_cache in zip(self.kernel_sizes, caches):
            n_filters = self.params[f"conv{k}.bias"].shape[0]
            gx, gw, gb = F.conv1d_relu_maxpool_backward(
                d_feats[:, offset : offset + n_filters], self.params[f"conv{k}.weight"], conv_cache
            )
            offset += n_filters
            grads[f"conv{k}.weight"] = gw
            grads[f"conv{k}.bias"] = gb
            d_x = d_x + gx
        grads["embedding"] = F.embed_backward(d_x, X, self.embedding.shape[0])
        return grads


class _RecurrentNet(_Network):
    """Shared head: last real hidden state -> linear+ReLU -> linear -> softmax."""

    def _head(self, h):
        a = h @ self.params["hidden.weight"].T + self.params["hidden.bias"]
        r = np.maximum(a, 0.0)
        logits = r @ self.params["out.weight"].T + self.params["out.bias"]
        return F.softmax(logits), (h, a, r)

    def _head_backward(self, head_cache, probs, y_idx, grads):
        h, a, r = head_cache
        d_logits = _softmax_grad(probs, y_idx)
        grads["out.weight"] = d_logits.T @ r
        grads["out.bias"] = d_logits.sum(axis=0)
        d_a = (d_logits @ self.params["out.weight"]) * (a > 0)
        grads["hidden.weight"] = d_a.T @ h
        grads["hidden.bias"] = d_a.sum(axis=0)
        return d_a @ self.params["hidden.weight"]

    @staticmethod
    def _init_head(rng, params, hidden_size, head_size, n_classes):
        params["hidden.weight"] = glorot(rng, (head_size, hidden_size), hidden_size, head_size)
        params["hidden.bias"] = np.zeros(head_size)
        params["out.weight"] = glorot(rng, (n_classes, head_size), head_size, n_classes)
        params["out.bias"] = np.zeros(n_classes)

    def _embed_grad(self, g_x_steps, X):
        B, L = X.shape
        g_x = np.zeros((B, L, self.embedding.shape[1]))
        g_x[:, : g_x_steps.shape[1]] = g_x_steps
        return F.embed_backward(g_x, X, self.embedding.shape[0])


class LstmNet(_RecurrentNet):
    kind = "lstm"

    @classmethod
    def init(cls, rng, n_rows, n_classes, embed_dim=100, hidden_size=32, head_size=16,
             forget_bias=1.0):
        params = {"embedding": glorot(rng, (n_rows, embed_dim), n_rows, embed_dim)}
        params["embedding"][0] = 0.0
        E, H = embed_dim, hidden_size
        params["lstm.weight"] = glorot(rng, (4 * H, E + H), E + H, 4 * H)
        params["lstm.bias"] = np.zeros(4 * H)
        params["lstm.bias"][H : 2 * H] = forget_bias
        cls._init_head(rng, params, H, head_size, n_classes)
        return cls(params)

    def forward(self, X, train=False, rng=None, **_):
        X = np.asarray(X)
        x = F.embed(self.embedding, X)
        h, steps = F.lstm_scan(x, (X != 0).astype(np.float64), self.params["lstm.weight"],
                               self.params["lstm.bias"])
        probs, head_cache = self._head(h)
        return probs, (X, steps, head_cache, probs)

    def backward(self, cache, y_idx):
        X, steps, head_cache, probs = cache
        grads = {}
        d_h = self._head_backward(head_cache, probs, y_idx, grads)
        g_x, g_W, g_b = F.lstm_scan_backward(
            d_h, steps, self.params["lstm.weight"], self.embedding.shape[1]
        )
        grads["lstm.weight"], grads["lstm.bias"] = g_W, g_b
        grads["embedding"] = self._embed_grad(g_x, X)
        return grads


class GruNet(_RecurrentNet):
    kind = "gru"

    @classmethod
    def init(cls, rng, n_rows, n_classes, embed_dim=100, hidden_size=32, head_size=16):
        params = {"embedding": glorot(rng, (n_rows, embed_dim), n_rows, embed_dim)}
        params["embedding"][0] = 0.0
        E, H = embed_dim, hidden_size
        params["gru.weight_zr"] = glorot(rng, (2 * H, E + H), E + H, 2 * H)
        params["gru.bias_zr"] = np.zeros(2 * H)
        params["gru.weight_h"] = glorot(rng, (H, E + H), E + H, H)
        params["gru.bias_h"] = np.zeros(H)
        cls._init_head(rng, params, H, head_size, n_classes)
        return cls(params)

    def forward(self, X, train=False, rng=None, **_):
        X = np.asarray(X)
        x = F.embed(self.embedding, X)
        p = self.params
        h, steps = F.gru_scan(x, (X != 0).astype(np.float64), p["gru.weight_zr"],
                              p["gru.bias_zr"], p["gru.weight_h"], p["gru.bias_h"])
        probs, head_cache = self._head(h)
        return probs, (X, steps, head_cache, probs)

    def backward(self, cache, y_idx):
        X, steps, head_cache, probs = cache
        grads = {}
        d_h = self._head_backward(head_cache, probs, y_idx, grads)
        g_x, g_Wzr, g_bzr, g_Wh, g_bh = F.gru_scan_backward(
            d_h, steps, self.params["gru.weight_zr"], self.params["gru.weight_h"],
            self.embedding.shape[1],
        )
        grads.update({"gru.weight_zr": g_Wzr, "gru.bias_zr": g_bzr,
                      "gru.weight_h": g_Wh, "gru.bias_h": g_bh})
        grads["embedding"] = self._embed_grad(g_x, X)
        return grads


NETWORKS = {"cnn": CnnNet, "lstm": LstmNet, "gru": GruNet}
