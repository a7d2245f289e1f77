"""Central-difference gradient checking."""
from __future__ import annotations

import numpy as np


def grad_check(fn, params: dict, epsilon: float = 1e-4, max_coords: int | None = 40, seed: int = 0) -> float:
    """Compare the analytic gradient of ``fn`` against central differences.

    ``fn(params)`` must return ``(loss, grads)`` with ``grads`` keyed like
    ``params``. Arrays in ``params`` are perturbed in place and restored.
    At most ``max_coords`` coordinates are sampled per parameter (all of them
    when None). Returns the largest ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    rng = np.random.default_rng(seed)
    loss, grads = fn(params)
    if not np.isfinite(loss):
        raise FloatingPointError("loss is not finite")
    worst = 0.0
    for name, p in params.items():
        if name not in grads:
            continue
        g = grads[name]
        flat = p.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for c in coords:
            old = flat[c]
            flat[c] = old + epsilon
            lp, _ = fn(params)
            flat[c] = old - epsilon
            lm, _ = fn(params)
            flat[c] = old
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise FloatingPointError(f"loss not finite while perturbing {name}[{c}]")
            num = (lp - lm) / (2.0 * epsilon)
            ana = g.reshape(-1)[c]
            err = abs(ana - num) / max(abs(ana), abs(num), 1e-8)
            worst = max(worst, err)
    return worst
