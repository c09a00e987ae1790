"""Forward/backward kernels on float64 numpy arrays.

Sequences are ``(batch, length)`` integer arrays whose padding (index 0)
sits only at the tail; ``mask`` marks the real positions.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "sigmoid",
    "softmax",
    "embed",
    "embed_backward",
    "conv1d_relu_maxpool",
    "conv1d_relu_maxpool_backward",
    "dropout",
    "lstm_scan",
    "lstm_scan_backward",
    "gru_scan",
    "gru_scan_backward",
]


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def embed(table, indices):
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise IndexError(
            f"token index out of range for an embedding table with {table.shape[0]} rows"
        )
    return table[indices]


def embed_backward(grad_out, indices, n_rows):
    """Row gradients; repeated indices accumulate, the PAD row stays zero."""
    grad = np.zeros((n_rows, grad_out.shape[-1]))
    np.add.at(grad, np.asarray(indices).reshape(-1), grad_out.reshape(-1, grad_out.shape[-1]))
    grad[0] = 0.0
    return grad


def _windows(x, k):
    # (B, L, E) -> (B, L-k+1, k*E), window j = rows j..j+k-1 concatenated
    B, L, E = x.shape
    T = L - k + 1
    return np.concatenate([x[:, j : j + T, :] for j in range(k)], axis=2)


def conv1d_relu_maxpool(x, weight, bias):
    """Max-over-time of ReLU(window . filter + bias).

    ``x`` is ``(B, L, E)`` (or ``(L, E)``), ``weight`` is ``(F, k, E)``.
    Returns pooled ``(B, F)`` and a cache for the backward pass.
    """
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    n_filters, k, E = weight.shape
    if x.shape[1] < k:
        raise ValueError(f"sequence length {x.shape[1]} is shorter than kernel size {k}")
    win = _windows(x, k)
    act = win @ weight.reshape(n_filters, k * E).T + bias  # (B, T, F)
    relu = np.maximum(act, 0.0)
    arg = relu.argmax(axis=1)  # (B, F)
    pooled = np.take_along_axis(relu, arg[:, None, :], axis=1)[:, 0, :]
    cache = (win, act, arg, weight.shape, x.shape)
    return (pooled[0] if squeeze else pooled), cache


def conv1d_relu_maxpool_backward(grad_pooled, weight, cache):
    win, act, arg, wshape, xshape = cache
    n_filters, k, E = wshape
    B, L, _ = xshape
    T = act.shape[1]
    g_act = np.zeros_like(act)
    np.put_along_axis(g_act, arg[:, None, :], grad_pooled[:, None, :], axis=1)
    g_act *= act > 0
    flat = g_act.reshape(-1, n_filters)
    g_weight = (flat.T @ win.reshape(-1, k * E)).reshape(wshape)
    g_bias = flat.sum(axis=0)
    g_win = g_act @ weight.reshape(n_filters, k * E)  # (B, T, k*E)
    g_x = np.zeros(xshape)
    for j in range(k):
        g_x[:, j : j + T, :] += g_win[:, :, j * E : (j + 1) * E]
    return g_x, g_weight, g_bias


def dropout(x, rate, rng=None, train=False):
    """Inverted dropout. Returns ``(output, scale_mask)``."""
    if not train or rate == 0.0:
        return x, None
    keep = rng.random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def lstm_scan(x, mask, W, b):
    """Masked LSTM over ``x`` of shape ``(B, L, E)``.

    ``W`` stacks the input, forget, output and candidate rows as
    ``(4H, E+H)``. Once ``mask`` turns 0 the state is carried unchanged,
    so the returned ``h`` is the state at each row's last real position.
    """
    B, L, E = x.shape
    H = W.shape[0] // 4
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    steps = []
    for t in range(L):
        m = mask[:, t][:, None]
        if not m.any():
            break
        xh = np.concatenate([x[:, t], h], axis=1)
        z = xh @ W.T + b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H : 2 * H])
        o = sigmoid(z[:, 2 * H : 3 * H])
        g = np.tanh(z[:, 3 * H :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append((xh, c, i, f, o, g, tanh_c, m))
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
    return h, steps


def lstm_scan_backward(grad_h, steps, W, E):
    g_W = np.zeros_like(W)
    g_b = np.zeros(W.shape[0])
    B = grad_h.shape[0]
    g_x = np.zeros((B, len(steps), E))
    dh = grad_h
    dc = np.zeros_like(grad_h)
    for t in range(len(steps) - 1, -1, -1):
        xh, c_prev, i, f, o, g, tanh_c, m = steps[t]
        dh_new = m * dh
        dc_new = m * dc + dh_new * o * (1.0 - tanh_c**2)
        dz = np.concatenate(
            [
                dc_new * g * i * (1.0 - i),
                dc_new * c_prev * f * (1.0 - f),
                dh_new * tanh_c * o * (1.0 - o),
                dc_new * i * (1.0 - g**2),
            ],
            axis=1,
        )
        g_W += dz.T @ xh
        g_b += dz.sum(axis=0)
        dxh = dz @ W
        g_x[:, t] = dxh[:, :E]
        dh = (1.0 - m) * dh + dxh[:, E:]
        dc = (1.0 - m) * dc + dc_new * f
    return g_x, g_W, g_b


def gru_scan(x, mask, W_zr, b_zr, W_h, b_h):
    """Masked GRU: ``h = (1 - z) * h_prev + z * tanh(W_h [x; r * h_prev])``.

    ``W_zr`` stacks update then reset rows as ``(2H, E+H)``.
    """
    B, L, E = x.shape
    H = W_h.shape[0]
    h = np.zeros((B, H))
    steps = []
    for t in range(L):
        m = mask[:, t][:, None]
        if not m.any():
            break
        xh = np.concatenate([x[:, t], h], axis=1)
        zr = sigmoid(xh @ W_zr.T + b_zr)
        z, r = zr[:, :H], zr[:, H:]
        xrh = np.concatenate([x[:, t], r * h], axis=1)
        cand = np.tanh(xrh @ W_h.T + b_h)
        h_new = (1.0 - z) * h + z * cand
        steps.append((xh, xrh, h, z, r, cand, m))
        h = m * h_new + (1.0 - m) * h
    return h, steps


def gru_scan_backward(grad_h, steps, W_zr, W_h, E):
    g_Wzr = np.zeros_like(W_zr)
    g_bzr = np.zeros(W_zr.shape[0])
    g_Wh = np.zeros_like(W_h)
    g_bh = np.zeros(W_h.shape[0])
    B = grad_h.shape[0]
    g_x = np.zeros((B, len(steps), E))
    dh = grad_h
    for t in range(len(steps) - 1, -1, -1):
        xh, xrh, h_prev, z, r, cand, m = steps[t]
        dh_new = m * dh
        d_prev = (1.0 - m) * dh + dh_new * (1.0 - z)
        dz = dh_new * (cand - h_prev)
        da_h = dh_new * z * (1.0 - cand**2)
        g_Wh += da_h.T @ xrh
        g_bh += da_h.sum(axis=0)
        dxrh = da_h @ W_h
        dx = dxrh[:, :E].copy()
        drh = dxrh[:, E:]
        dr = drh * h_prev
        d_prev += drh * r
        da_zr = np.concatenate([dz * z * (1.0 - z), dr * r * (1.0 - r)], axis=1)
        g_Wzr += da_zr.T @ xh
        g_bzr += da_zr.sum(axis=0)
        dxh = da_zr @ W_zr
        dx += dxh[:, :E]
        d_prev += dxh[:, E:]
        g_x[:, t] = dx
        dh = d_prev
    return g_x, g_Wzr, g_bzr, g_Wh, g_bh
