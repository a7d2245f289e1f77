"""Hot loops of the booster: histograms, split search, tree traversal.

Each kernel has an ``_numba`` and a ``_numpy`` implementation with the same
signature; the public name is bound by :func:`titleq._jit.pick`. Histograms
are ``(n_features, max_bins, 3)`` arrays of (sum_grad, sum_hess, count).
"""
from __future__ import annotations

import numpy as np

from .._jit import njit, pick

# ---------------------------------------------------------------- histogram


@njit
def _histogram_numba(bins, rows, grad, hess, max_bins):
    nf = bins.shape[1]
    hist = np.zeros((nf, max_bins, 3))
    for i in range(rows.shape[0]):
        r = rows[i]
        g = grad[r]
        h = hess[r]
        for f in range(nf):
            b = bins[r, f]
            hist[f, b, 0] += g
            hist[f, b, 1] += h
            hist[f, b, 2] += 1.0
    return hist


def _histogram_numpy(bins, rows, grad, hess, max_bins):
    nf = bins.shape[1]
    hist = np.zeros((nf, max_bins, 3))
    sub = bins[rows]
    g = grad[rows]
    h = hess[rows]
    for f in range(nf):
        col = sub[:, f]
        hist[f, :, 0] = np.bincount(col, weights=g, minlength=max_bins)
        hist[f, :, 1] = np.bincount(col, weights=h, minlength=max_bins)
        hist[f, :, 2] = np.bincount(col, minlength=max_bins)
    return hist


# ------------------------------------------------------------- split search


@njit
def _categorical_order_numba(hist_f, nb):
    cnt = 0
    for b in range(nb):
        if hist_f[b, 2] > 0:
            cnt += 1
    idx = np.empty(cnt, dtype=np.int64)
    ratio = np.empty(cnt)
    k = 0
    for b in range(nb):
        if hist_f[b, 2] > 0:
            idx[k] = b
            ratio[k] = hist_f[b, 0] / hist_f[b, 1] if hist_f[b, 1] > 0 else 0.0
            k += 1
    return idx[np.argsort(ratio, kind="mergesort")]


def _categorical_order_numpy(hist_f, nb):
    h = hist_f[:nb]
    idx = np.flatnonzero(h[:, 2] > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(h[idx, 1] > 0, h[idx, 0] / h[idx, 1], 0.0)
    return idx[np.argsort(ratio, kind="mergesort")]


@njit
def _best_split_numba(hist, n_bins, is_cat, feat_mask, min_child, G, H, C):
    best_gain = 0.0
    best_f = -1
    best_pos = -1
    best_gl = 0.0
    best_hl = 0.0
    best_cl = 0.0
    parent = G * G / H
    nf = hist.shape[0]
    for f in range(nf):
        if not feat_mask[f]:
            continue
        nb = n_bins[f]
        if nb < 2:
            continue
        if is_cat[f]:
            order = _categorical_order_numba(hist[f], nb)
        else:
            order = np.arange(nb)
        gl = 0.0
        hl = 0.0
        cl = 0.0
        for pos in range(order.shape[0] - 1):
            b = order[pos]
            gl += hist[f, b, 0]
            hl += hist[f, b, 1]
            cl += hist[f, b, 2]
            if cl < min_child:
                continue
            cr = C - cl
            if cr < min_child:
                break
            hr = H - hl
            if hl <= 0.0 or hr <= 0.0:
                continue
            gr = G - gl
            gain = 0.5 * (gl * gl / hl + gr * gr / hr - parent)
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_pos = pos
                best_gl = gl
                best_hl = hl
                best_cl = cl
    return best_gain, best_f, best_pos, best_gl, best_hl, best_cl


def _best_split_numpy(hist, n_bins, is_cat, feat_mask, min_child, G, H, C):
    best = (0.0, -1, -1, 0.0, 0.0, 0.0)
    parent = G * G / H
    for f in np.flatnonzero(feat_mask):
        nb = int(n_bins[f])
        if nb < 2:
            continue
        order = _categorical_order_numpy(hist[f], nb) if is_cat[f] else np.arange(nb)
        if order.size < 2:
            continue
        cum = np.cumsum(hist[f, order[:-1]], axis=0)
        gl, hl, cl = cum[:, 0], cum[:, 1], cum[:, 2]
        gr, hr, cr = G - gl, H - hl, C - cl
        ok = (cl >= min_child) & (cr >= min_child) & (hl > 0) & (hr > 0)
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(ok, 0.5 * (gl * gl / hl + gr * gr / hr - parent), -np.inf)
        pos = int(np.argmax(gain))
        if gain[pos] > best[0]:
            best = (float(gain[pos]), int(f), pos, float(gl[pos]), float(hl[pos]), float(cl[pos]))
    return best


# ---------------------------------------------------------------- traversal


@njit
def _predict_numba(X, roots, feature, threshold, is_cat, cat_start, cat_len, cat_codes, left, right, value):
    n = X.shape[0]
    out = np.zeros(n)
    for t in range(roots.shape[0]):
        root = roots[t]
        for i in range(n):
            node = root
            while left[node] >= 0:
                x = X[i, feature[node]]
                if is_cat[node]:
                    go_left = False
                    code = int(x)
                    for k in range(cat_start[node], cat_start[node] + cat_len[node]):
                        if cat_codes[k] == code:
                            go_left = True
                            break
                else:
                    go_left = x <= threshold[node]
                node = left[node] if go_left else right[node]
            out[i] += value[node]
    return out


def _predict_numpy(X, roots, feature, threshold, is_cat, cat_start, cat_len, cat_codes, left, right, value):
    n = X.shape[0]
    out = np.zeros(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = left[node] >= 0
        while active.any():
            a = np.flatnonzero(active)
            nd = node[a]
            x = X[a, feature[nd]]
            go_left = x <= threshold[nd]
            cat_nodes = is_cat[nd]
            if cat_nodes.any():
                for j in np.flatnonzero(cat_nodes):
                    s = cat_start[nd[j]]
                    go_left[j] = int(x[j]) in cat_codes[s:s + cat_len[nd[j]]]
            node[a] = np.where(go_left, left[nd], right[nd])
            active = left[node] >= 0
        out += value[node]
    return out


build_histogram = pick(_histogram_numba, _histogram_numpy)
best_split = pick(_best_split_numba, _best_split_numpy)
categorical_order = pick(_categorical_order_numba, _categorical_order_numpy)
predict_trees = pick(_predict_numba, _predict_numpy)

IMPLEMENTATIONS = {
    "numba": {
        "build_histogram": _histogram_numba,
        "best_split": _best_split_numba,
        "categorical_order": _categorical_order_numba,
        "predict_trees": _predict_numba,
    },
    "numpy": {
        "build_histogram": _histogram_numpy,
        "best_split": _best_split_numpy,
        "categorical_order": _categorical_order_numpy,
        "predict_trees": _predict_numpy,
    },
}
