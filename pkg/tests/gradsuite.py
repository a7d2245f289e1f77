"""Central-difference checks for every layer and both full models.

Each ``check_*`` builds a random instance for one shape, wraps the layer in a
scalar loss ``sum(R * out)`` with a fixed random projection ``R``, and returns
the worst relative error reported by ``grad_check``.
"""
from __future__ import annotations

import numpy as np

from titleq.deepnet import DeepHyperParams, DeepModel, build_vocab
from titleq.embed import EmbeddingStore
from titleq.tensor import grad_check
from titleq.tensor.layers import (attentive_pool_backward, attentive_pool_forward, conv1d_backward, conv1d_forward,
                                  cross_entropy, dense_stack_backward, dense_stack_forward, lstm_backward,
                                  lstm_forward, pool_backward, pool_forward)

EPS = 1e-4

# (n, N, F, h) style small shapes; each check reads the fields it needs
SHAPES = [
    dict(n=3, M=5, N=4, F=2, h=2, H=3, d=4, steps=3, widths=(4, 3)),
    dict(n=4, M=6, N=3, F=3, h=3, H=4, d=2, steps=5, widths=(6, 5, 4)),
    dict(n=5, M=4, N=7, F=4, h=1, H=2, d=5, steps=2, widths=(3,)),
]

MODEL_SHAPES = [
    dict(n=4, M=5, N_cat=3, F=3, H=4, mlp=(2, 5), sh=2),
    dict(n=3, M=6, N_cat=4, F=2, H=3, mlp=(1, 4), sh=3),
    dict(n=5, M=4, N_cat=2, F=4, H=2, mlp=(3, 3), sh=1),
]


def _proj_loss(out, R):
    return float(np.sum(out * R))


def check_conv1d(shape, seed=0):
    rng = np.random.default_rng(seed)
    p = {"X": rng.normal(size=(shape["n"], shape["M"])),
         "W": rng.normal(scale=0.5, size=(shape["F"], shape["n"], shape["h"])),
         "b": rng.normal(size=shape["F"])}
    R = rng.normal(size=(shape["F"], shape["M"] - shape["h"] + 1))

    def fn(q):
        out, cache = conv1d_forward(q["X"], q["W"], q["b"])
        dX, dW, db = conv1d_backward(R, cache)
        return _proj_loss(out, R), {"X": dX, "W": dW, "b": db}

    return grad_check(fn, p, EPS, max_coords=None)


def check_pool(shape, kind, seed=0):
    rng = np.random.default_rng(seed)
    p = {"X": rng.normal(size=(shape["F"], shape["M"]))}
    out0, _ = pool_forward(p["X"], kind)
    R = rng.normal(size=out0.shape)

    def fn(q):
        out, cache = pool_forward(q["X"], kind)
        return _proj_loss(out, R), {"X": pool_backward(R, cache)}

    return grad_check(fn, p, EPS, max_coords=None)


def check_attentive_pool(shape, seed=0):
    rng = np.random.default_rng(seed)
    n = shape["n"]
    p = {"T": rng.normal(size=(n, shape["M"])), "C": rng.normal(size=(n, shape["N"])),
         "U": rng.normal(scale=0.3, size=(n, n))}
    RT, RC = rng.normal(size=n), rng.normal(size=n)

    def fn(q):
        (rT, rC), cache = attentive_pool_forward(q["T"], q["C"], q["U"])
        dT, dC, dU = attentive_pool_backward(RT, RC, cache)
        return _proj_loss(rT, RT) + _proj_loss(rC, RC), {"T": dT, "C": dC, "U": dU}

    return grad_check(fn, p, EPS, max_coords=None)


def check_lstm(shape, seed=0, with_masks=False):
    rng = np.random.default_rng(seed)
    H, d, steps = shape["H"], shape["d"], shape["steps"]
    p = {"xs": rng.normal(size=(steps, d)), "Wx": rng.normal(scale=0.5, size=(4 * H, d)),
         "Wh": rng.normal(scale=0.5, size=(4 * H, H)), "b": rng.normal(scale=0.5, size=4 * H)}
    masks = (rng.random((steps, H)) > 0.3) / 0.7 if with_masks else None
    R = rng.normal(size=H)

    def fn(q):
        h, cache = lstm_forward(q["xs"], q["Wx"], q["Wh"], q["b"], masks)
        dxs, dWx, dWh, db = lstm_backward(R, cache)
        return _proj_loss(h, R), {"xs": dxs, "Wx": dWx, "Wh": dWh, "b": db}

    return grad_check(fn, p, EPS, max_coords=None)


def check_dense_stack(shape, head, act="relu", seed=0):
    rng = np.random.default_rng(seed)
    widths = list(shape["widths"]) + [2 if head == "softmax2" else 1]
    p = {"x": rng.normal(size=shape["d"])}
    w_in = shape["d"]
    for k, w in enumerate(widths):
        p[f"W{k}"] = rng.normal(size=(w, w_in))
        p[f"b{k}"] = rng.normal(size=w)  # nonzero so no relu input sits on its kink
        w_in = w

    def fn(q):
        layers = [(q[f"W{k}"], q[f"b{k}"], act) for k in range(len(widths))]
        _, logits, cache = dense_stack_forward(q["x"], layers, head)
        loss, dlogits = cross_entropy(logits, 1, head)
        dx, grads = dense_stack_backward(dlogits, cache)
        g = {"x": dx}
        for k, (dW, db) in enumerate(grads):
            g[f"W{k}"], g[f"b{k}"] = dW, db
        return loss, g

    return grad_check(fn, p, EPS, max_coords=None)


def check_loss_head(head, y, seed=0):
    rng = np.random.default_rng(seed)
    p = {"z": rng.normal(size=2 if head == "softmax2" else 1) * 2}

    def fn(q):
        loss, d = cross_entropy(q["z"], y, head)
        return loss, {"z": d}

    return grad_check(fn, p, EPS, max_coords=None)


def small_model(task, shape, seed=0, n_samples=3):
    """A tiny model with jittered biases plus samples and labels."""
    rng = np.random.default_rng([seed, 7])
    words = [f"w{i}" for i in range(12)]
    store = EmbeddingStore.from_dict({w: rng.normal(size=shape["n"]) for w in words})
    layers, width = shape["mlp"]
    hp = DeepHyperParams.defaults(task, n=shape["n"], max_title_len=shape["M"], max_cat_len=shape["N_cat"],
                                  n_filters=shape["F"], lstm_hidden=shape["H"], mlp_layers=layers,
                                  mlp_width=width, dropout_cnn=0.0, dropout_lstm=0.0, dropout_embedding=0.0,
                                  seed=seed)
    titles = [list(rng.choice(words, size=int(rng.integers(1, shape["M"] + 2)))) for _ in range(n_samples)]
    cats = [[list(rng.choice(words, 2)), [str(rng.choice(words))], ["oov"]] for _ in range(n_samples)]
    vocab, E = build_vocab(titles, store)
    model = DeepModel.initialize(hp, sh=shape["sh"], embedding=E, vocab=vocab)
    for name, v in model.params.items():
        if "_b" in name:
            v += rng.normal(scale=0.1, size=v.shape)
    samples = model.make_samples(titles, cats, rng.normal(size=(n_samples, shape["sh"])), store)
    labels = [int(v) for v in rng.integers(0, 2, size=n_samples)]
    return model, samples, labels


def check_model(task, shape, seed=0):
    model, samples, labels = small_model(task, shape, seed)
    return grad_check(lambda q: model.loss_and_grads(samples, labels), model.params, EPS, max_coords=None)


def run_all() -> dict[str, float]:
    """Worst error per component over every shape."""
    worst: dict[str, float] = {}

    def keep(name, err):
        worst[name] = max(worst.get(name, 0.0), err)

    for i, s in enumerate(SHAPES):
        keep("conv1d", check_conv1d(s, i))
        for kind in ("average_cols", "max_cols", "max_over_time_rows", "max_pool_width2"):
            keep(f"pool:{kind}", check_pool(s, kind, i))
        keep("attentive_pool", check_attentive_pool(s, i))
        keep("lstm", check_lstm(s, i))
        keep("lstm+recurrent_mask", check_lstm(s, i, with_masks=True))
        for head in ("softmax2", "sigmoid1"):
            keep(f"dense_stack:{head}", check_dense_stack(s, head, "relu", i))
            keep(f"dense_stack_tanh:{head}", check_dense_stack(s, head, "tanh", i))
            for y in (0, 1):
                keep(f"loss:{head}", check_loss_head(head, y, i))
    for i, s in enumerate(MODEL_SHAPES):
        for task in ("clarity", "conciseness"):
            keep(f"model:{task}", check_model(task, s, i))
    return worst
