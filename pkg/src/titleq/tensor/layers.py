"""Differentiable layers with hand-written backward passes.

Matrices follow the column convention used throughout the models: a phrase
of N tokens with n-dimensional embeddings is an ``(n, N)`` array, and a
feature map from F filters is ``(F, width)``. Every ``*_forward`` returns
``(out, cache)``; the matching ``*_backward`` consumes the upstream gradient
and the cache.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _softmax_backward(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    return p * (dp - np.dot(p, dp))


# --------------------------------------------------------------------- conv


def conv1d_forward(X: np.ndarray, W: np.ndarray, b: np.ndarray):
    """tanh(W * X + b) with stride 1 and no padding.

    X is (n, N), W is (F, n, h), b is (F,). Output is (F, N - h + 1).
    """
    n, N = X.shape
    F, n_w, h = W.shape
    if n_w != n:
        raise ValueError(f"filter height {n_w} != input height {n}")
    if N < h:
        raise ValueError(f"input width {N} shorter than filter width {h}")
    L = N - h + 1
    patches = sliding_window_view(X, h, axis=1).transpose(1, 0, 2).reshape(L, n * h)
    Wf = W.reshape(F, n * h)
    out = np.tanh(Wf @ patches.T + b[:, None])
    return out, (patches, Wf, out, X.shape, W.shape)


def conv1d_backward(dout: np.ndarray, cache):
    patches, Wf, out, xshape, wshape = cache
    n, N = xshape
    F, _, h = wshape
    L = N - h + 1
    dpre = dout * (1.0 - out * out)
    dW = (dpre @ patches).reshape(wshape)
    db = dpre.sum(axis=1)
    dP = (dpre.T @ Wf).reshape(L, n, h)
    dX = np.zeros(xshape)
    for k in range(h):
        dX[:, k:k + L] += dP[:, :, k].T
    return dX, dW, db


# ------------------------------------------------------------------ pooling

POOL_KINDS = ("average_cols", "max_cols", "max_over_time_rows", "max_pool_width2")


def pool_forward(X: np.ndarray, kind: str):
    """Parameter-free pooling.

    ``average_cols`` / ``max_cols`` reduce across columns giving one value per
    row; ``max_over_time_rows`` is the same reduction as ``max_cols`` under its
    text-CNN name; ``max_pool_width2`` takes non-overlapping width-2 maxima
    along each row, dropping an odd trailing column.
    """
    if X.size == 0:
        raise ValueError("cannot pool an empty matrix")
    if kind == "average_cols":
        return X.mean(axis=1), (kind, X.shape)
    if kind in ("max_cols", "max_over_time_rows"):
        idx = np.argmax(X, axis=1)
        return X[np.arange(X.shape[0]), idx], (kind, X.shape, idx)
    if kind == "max_pool_width2":
        rows, cols = X.shape
        w = cols // 2
        if w == 0:
            raise ValueError("max_pool_width2 needs at least 2 columns")
        blocks = X[:, :2 * w].reshape(rows, w, 2)
        idx = np.argmax(blocks, axis=2)
        out = np.take_along_axis(blocks, idx[:, :, None], axis=2)[:, :, 0]
        return out, (kind, X.shape, idx)
    raise ValueError(f"unknown pool kind {kind!r}")


def pool_backward(dout: np.ndarray, cache) -> np.ndarray:
    kind, shape = cache[0], cache[1]
    rows, cols = shape
    if kind == "average_cols":
        return np.repeat(dout[:, None] / cols, cols, axis=1)
    dX = np.zeros(shape)
    if kind in ("max_cols", "max_over_time_rows"):
        dX[np.arange(rows), cache[2]] = dout
        return dX
    idx = cache[2]
    w = idx.shape[1]
    r = np.repeat(np.arange(rows), w)
    c = (2 * np.arange(w))[None, :].repeat(rows, axis=0).ravel() + idx.ravel()
    dX[r, c] = dout.ravel()
    return dX


# -------------------------------------------------------- attentive pooling


def attentive_pool_forward(T: np.ndarray, C: np.ndarray, U: np.ndarray):
    """Two-way attentive pooling of a (title, category) matrix pair.

    G = tanh(T' U C) scores every title column against every category
    column; row-wise and column-wise maxima of G, softmaxed, weight the
    columns of T and C respectively.
    """
    if T.shape[0] != U.shape[0] or C.shape[0] != U.shape[1]:
        raise ValueError(f"shape mismatch: T {T.shape}, U {U.shape}, C {C.shape}")
    if T.shape[1] == 0 or C.shape[1] == 0:
        raise ValueError("attentive pooling needs at least one column on each side")
    UC = U @ C
    G = np.tanh(T.T @ UC)
    it = np.argmax(G, axis=1)
    ic = np.argmax(G, axis=0)
    aT = softmax(G[np.arange(G.shape[0]), it])
    aC = softmax(G[ic, np.arange(G.shape[1])])
    rT = T @ aT
    rC = C @ aC
    return (rT, rC), (T, C, U, UC, G, it, ic, aT, aC)


def attentive_pool_backward(drT: np.ndarray, drC: np.ndarray, cache):
    T, C, U, UC, G, it, ic, aT, aC = cache
    dT = np.outer(drT, aT)
    dC = np.outer(drC, aC)
    dgT = _softmax_backward(aT, T.T @ drT)
    dgC = _softmax_backward(aC, C.T @ drC)
    dG = np.zeros_like(G)
    np.add.at(dG, (np.arange(G.shape[0]), it), dgT)
    np.add.at(dG, (ic, np.arange(G.shape[1])), dgC)
    dA = dG * (1.0 - G * G)
    dT += UC @ dA.T
    dC += U.T @ T @ dA
    dU = T @ dA @ C.T
    return dT, dC, dU


# --------------------------------------------------------------------- LSTM


def lstm_forward(xs: np.ndarray, Wx: np.ndarray, Wh: np.ndarray, b: np.ndarray, masks=None):
    """Run an LSTM over the rows of ``xs`` (steps, d) from a zero state.

    Gate rows in the weight matrices are stacked as input, forget, output,
    candidate. ``masks`` (steps, H), when given, multiplies the previous
    hidden state before it enters each step (recurrent dropout). Returns the
    last hidden state.
    """
    steps, d = xs.shape
    H = Wh.shape[1]
    if Wx.shape != (4 * H, d) or Wh.shape != (4 * H, H) or b.shape != (4 * H,):
        raise ValueError("LSTM parameter shapes do not match input/hidden sizes")
    if steps < 1:
        raise ValueError("LSTM needs at least one timestep")
    xz = xs @ Wx.T + b
    h = np.zeros(H)
    c = np.zeros(H)
    hs_in = np.zeros((steps, H))
    gates = np.zeros((steps, 4 * H))
    cs = np.zeros((steps + 1, H))
    for t in range(steps):
        h_in = h if masks is None else h * masks[t]
        hs_in[t] = h_in
        z = xz[t] + Wh @ h_in
        g = np.empty(4 * H)
        g[:3 * H] = 1.0 / (1.0 + np.exp(-z[:3 * H]))
        g[3 * H:] = np.tanh(z[3 * H:])
        gates[t] = g
        c = g[H:2 * H] * c + g[:H] * g[3 * H:]
        cs[t + 1] = c
        h = g[2 * H:3 * H] * np.tanh(c)
    return h, (xs, Wx, Wh, hs_in, gates, cs, masks)


def lstm_backward(dh_last: np.ndarray, cache):
    xs, Wx, Wh, hs_in, gates, cs, masks = cache
    steps = xs.shape[0]
    H = Wh.shape[1]
    dz_all = np.zeros((steps, 4 * H))
    dh = dh_last.copy()
    dc = np.zeros(H)
    for t in range(steps - 1, -1, -1):
        g = gates[t]
        i, f, o, cand = g[:H], g[H:2 * H], g[2 * H:3 * H], g[3 * H:]
        tc = np.tanh(cs[t + 1])
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = dz_all[t]
        dz[:H] = dc * cand * i * (1.0 - i)
        dz[H:2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[2 * H:3 * H] = dh * tc * o * (1.0 - o)
        dz[3 * H:] = dc * i * (1.0 - cand * cand)
        dh_in = Wh.T @ dz
        dh = dh_in if masks is None else dh_in * masks[t]
        dc = dc * f
    dWx = dz_all.T @ xs
    dWh = dz_all.T @ hs_in
    db = dz_all.sum(axis=0)
    dxs = dz_all @ Wx
    return dxs, dWx, dWh, db


# -------------------------------------------------------------------- dense

ACTIVATIONS = ("relu", "tanh", "linear")
HEADS = ("softmax2", "sigmoid1")


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def _act_grad(z, a, kind):
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def dense_stack_forward(x: np.ndarray, layers, head: str):
    """Fully connected stack ending in a probability head.

    ``layers`` is a list of ``(W, b, activation)``; the last entry is the
    output projection (2 units for ``softmax2``, 1 for ``sigmoid1``) and its
    activation is ignored. Returns ``(probs, logits, cache)`` where probs has
    2 entries for softmax2 and 1 for sigmoid1.
    """
    if head not in HEADS:
        raise ValueError(f"unknown head {head!r}")
    acts = [x]
    pres = []
    a = x
    for k, (W, b, kind) in enumerate(layers):
        if W.shape[1] != a.shape[0] or b.shape[0] != W.shape[0]:
            raise ValueError(f"layer {k}: weight {W.shape} does not accept input of length {a.shape[0]}")
        z = W @ a + b
        pres.append(z)
        a = z if k == len(layers) - 1 else _act(z, kind)
        acts.append(a)
    logits = a
    if head == "softmax2":
        if logits.shape != (2,):
            raise ValueError("softmax2 head needs a 2-unit output layer")
        probs = softmax(logits)
    else:
        if logits.shape != (1,):
            raise ValueError("sigmoid1 head needs a 1-unit output layer")
        probs = sigmoid(logits)
    return probs, logits, (layers, acts, pres)


def dense_stack_backward(dlogits: np.ndarray, cache):
    layers, acts, pres = cache
    grads = [None] * len(layers)
    d = dlogits
    for k in range(len(layers) - 1, -1, -1):
        W, b, kind = layers[k]
        if k != len(layers) - 1:
            d = d * _act_grad(pres[k], acts[k + 1], kind)
        grads[k] = (np.outer(d, acts[k]), d.copy())
        d = W.T @ d
    return d, grads


def cross_entropy(logits: np.ndarray, y: int, head: str):
    """Loss and d(loss)/d(logits) for either head; y is 0 or 1."""
    if head == "softmax2":
        z = logits - logits.max()
        logsum = np.log(np.exp(z).sum())
        loss = logsum - z[y]
        p = np.exp(z - logsum)
        d = p.copy()
        d[y] -= 1.0
        return float(loss), d
    z = float(logits[0])
    # log(1 + e^z) - y z, evaluated stably
    loss = max(z, 0.0) + np.log1p(np.exp(-abs(z))) - y * z
    return float(loss), np.array([float(sigmoid(np.array(z))) - y])


# ------------------------------------------------------------------ dropout


class Dropout:
    """Inverted dropout: kept units are scaled by 1/(1 - rate) in train mode."""

    def __init__(self, rate: float, seed: int = 0, mode: str = "train"):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        if mode not in ("train", "eval"):
            raise ValueError("mode must be 'train' or 'eval'")
        self.rate = rate
        self.mode = mode
        self.rng = np.random.default_rng(seed)

    def mask(self, shape) -> np.ndarray | None:
        if self.mode == "eval" or self.rate == 0.0:
            return None
        keep = self.rng.random(shape) >= self.rate
        return keep / (1.0 - self.rate)

    def __call__(self, x: np.ndarray):
        m = self.mask(x.shape)
        return (x if m is None else x * m), m
