"""Jaro-Winkler similarity (prefix boost up to 4 chars, scaling 0.1).

Strings are passed to the kernels as int32 code-point arrays so the numba
path never touches Python ``str`` objects.
"""
from __future__ import annotations

import numpy as np

from ._jit import njit, pick

PREFIX_SCALE = 0.1
MAX_PREFIX = 4


def encode(tokens) -> tuple[np.ndarray, np.ndarray]:
    """Flatten tokens into (codes, offsets); token i is codes[offsets[i]:offsets[i+1]]."""
    offsets = np.zeros(len(tokens) + 1, dtype=np.int64)
    for i, t in enumerate(tokens):
        offsets[i + 1] = offsets[i] + len(t)
    codes = np.fromiter((ord(c) for t in tokens for c in t), dtype=np.int32, count=int(offsets[-1]))
    return codes, offsets


@njit
def _jw_codes(s, t):
    ls = s.shape[0]
    lt = t.shape[0]
    if ls == 0 and lt == 0:
        return 1.0
    if ls == 0 or lt == 0:
        return 0.0
    window = max(ls, lt) // 2 - 1
    if window < 0:
        window = 0
    s_hit = np.zeros(ls, dtype=np.bool_)
    t_hit = np.zeros(lt, dtype=np.bool_)
    m = 0
    for i in range(ls):
        lo = max(0, i - window)
        hi = min(i + window + 1, lt)
        for j in range(lo, hi):
            if not t_hit[j] and s[i] == t[j]:
                s_hit[i] = True
                t_hit[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    half_trans = 0
    k = 0
    for i in range(ls):
        if s_hit[i]:
            while not t_hit[k]:
                k += 1
            if s[i] != t[k]:
                half_trans += 1
            k += 1
    fm = float(m)
    jaro = (fm / ls + fm / lt + (fm - half_trans / 2.0) / fm) / 3.0
    prefix = 0
    for i in range(min(MAX_PREFIX, ls, lt)):
        if s[i] != t[i]:
            break
        prefix += 1
    return jaro + prefix * PREFIX_SCALE * (1.0 - jaro)


@njit
def _pairwise_numba(codes, offsets):
    n = offsets.shape[0] - 1
    out = np.eye(n)
    for i in range(n):
        a = codes[offsets[i]:offsets[i + 1]]
        for j in range(i + 1, n):
            v = _jw_codes(a, codes[offsets[j]:offsets[j + 1]])
            out[i, j] = v
            out[j, i] = v
    return out


def _jw_py(s, t) -> float:
    # Same algorithm as _jw_codes, interpreted; used when numba is disabled.
    ls, lt = len(s), len(t)
    if ls == 0 and lt == 0:
        return 1.0
    if ls == 0 or lt == 0:
        return 0.0
    window = max(max(ls, lt) // 2 - 1, 0)
    s_hit = [False] * ls
    t_hit = [False] * lt
    m = 0
    for i in range(ls):
        for j in range(max(0, i - window), min(i + window + 1, lt)):
            if not t_hit[j] and s[i] == t[j]:
                s_hit[i] = t_hit[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    half_trans = 0
    k = 0
    for i in range(ls):
        if s_hit[i]:
            while not t_hit[k]:
                k += 1
            if s[i] != t[k]:
                half_trans += 1
            k += 1
    fm = float(m)
    jaro = (fm / ls + fm / lt + (fm - half_trans / 2.0) / fm) / 3.0
    prefix = 0
    for i in range(min(MAX_PREFIX, ls, lt)):
        if s[i] != t[i]:
            break
        prefix += 1
    return jaro + prefix * PREFIX_SCALE * (1.0 - jaro)


def _pairwise_numpy(codes, offsets):
    n = offsets.shape[0] - 1
    toks = [codes[offsets[i]:offsets[i + 1]].tolist() for i in range(n)]
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = _jw_py(toks[i], toks[j])
    return out


_pairwise_kernel = pick(_pairwise_numba, _pairwise_numpy)
_scalar_kernel = pick(_jw_codes, _jw_py)


def jaro_winkler(a: str, b: str) -> float:
    if _scalar_kernel is _jw_py:
        return _jw_py(a, b)
    return float(_jw_codes(np.array([ord(c) for c in a], dtype=np.int32),
                           np.array([ord(c) for c in b], dtype=np.int32)))


def pairwise_jaro_winkler(tokens) -> np.ndarray:
    """Symmetric (n, n) matrix of Jaro-Winkler similarities, ones on the diagonal."""
    codes, offsets = encode(tokens)
    return _pairwise_kernel(codes, offsets)
