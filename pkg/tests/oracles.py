"""Independent oracles shared by the test suite.

These stay deliberately dumb: central finite differences, brute-force
recomputation, exhaustive search. They never call the code paths they check.
"""

import numpy as np


def finite_difference_param_grads(value_fn, params, h=1e-5):
    """Central-difference gradient of ``value_fn()`` w.r.t. each array in params.

    ``params`` must be the live arrays the function reads; entries are
    perturbed in place and restored.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = value_fn()
            flat[i] = orig - h
            down = value_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, abs_floor=1e-8):
    """Worst relative disagreement across a list of gradient arrays.

    Components where both sides are below ``abs_floor`` in absolute
    difference count as exact; otherwise error is |a-n| / max(|n|, floor).
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        diff = np.abs(a - n)
        denom = np.maximum(np.abs(n), abs_floor)
        rel = np.where(diff < abs_floor, 0.0, diff / denom)
        if rel.size:
            worst = max(worst, float(rel.max()))
    return worst


def adam_reference(param, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Hand-stepped scalar Adam: apply the textbook update for each gradient."""
    m = 0.0
    v = 0.0
    p = float(param)
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return p


def rmse_sum_bruteforce(pred, truth, missing, mode):
    """Literal per-feature RMSE summed over features, recomputed with loops."""
    n, k = truth.shape
    total = 0.0
    for j in range(k):
        sq = 0.0
        count = 0
        for i in range(n):
            if mode == "missing_only" and not missing[i, j]:
                continue
            sq += (pred[i, j] - truth[i, j]) ** 2
            count += 1
        denom = n if mode == "all" else count
        if mode == "missing_only" and count == 0:
            continue
        total += np.sqrt(sq / denom)
    return total


def nearest_neighbor_exhaustive(train, train_missing, query, query_missing, j):
    """Closest training row observing feature j, shared-feature-mean distance.

    Returns (row index, value) or None when no candidate observes j or shares
    any feature with the query. Ties break toward the lowest row index.
    """
    best = None
    for i in range(train.shape[0]):
        if train_missing[i, j]:
            continue
        shared = (~train_missing[i]) & (~query_missing)
        if not shared.any():
            continue
        diff = train[i, shared] - query[shared]
        dist = np.sqrt(np.mean(diff**2))
        if best is None or dist < best[0] - 1e-15:
            best = (dist, i, train[i, j])
    if best is None:
        return None
    return best[1], best[2]
