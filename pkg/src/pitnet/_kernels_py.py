"""Pure numpy fallback for the exhaustive-search kernels in ``_kernels.pyx``.

Same bit convention: variable ``i`` of ``n`` lives at bit ``n - 1 - i``.
"""

import numpy as np

CHUNK = 1 << 18


def _chunks(n):
    total = 1 << n
    for start in range(0, total, CHUNK):
        yield np.arange(start, min(start + CHUNK, total), dtype=np.uint64)


def _feasible(masks, parent_masks, n):
    ok = np.ones(masks.shape, dtype=bool)
    for i in range(n):
        bit = np.uint64(1 << (n - 1 - i))
        pm = np.uint64(parent_masks[i])
        ok &= ((masks & bit) == 0) | ((masks & pm) == pm)
    return ok


def best_feasible(weights, parent_masks):
    weights = np.asarray(weights, dtype=np.float64)
    n = len(weights)
    if n > 62:
        raise ValueError("too many variables for exhaustive search")
    best_m, best_p, best_pop = 0, 0.0, 0
    for masks in _chunks(n):
        ok = _feasible(masks, parent_masks, n)
        masks = masks[ok]
        profit = np.zeros(len(masks))
        pop = np.zeros(len(masks), dtype=np.int64)
        for i in range(n):
            on = ((masks >> np.uint64(n - 1 - i)) & np.uint64(1)).astype(bool)
            profit = profit + np.where(on, weights[i], 0.0)
            pop += on
        # lexsort: last key is primary
        order = np.lexsort((masks, pop, -profit))
        if not len(order):
            continue
        k = order[0]
        p, c, m = float(profit[k]), int(pop[k]), int(masks[k])
        if p > best_p or (p == best_p and (c < best_pop or (c == best_pop and m < best_m))):
            best_m, best_p, best_pop = m, p, c
    return best_m, best_p


def count_feasible(parent_masks):
    n = len(parent_masks)
    if n > 62:
        raise ValueError("too many variables for exhaustive search")
    return int(sum(int(np.count_nonzero(_feasible(m, parent_masks, n))) for m in _chunks(n)))
