# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled exhaustive-search kernels for the mining oracle.

Variable ``i`` of ``n`` is stored at bit ``n - 1 - i`` so that integer order
of masks equals lexicographic order of assignment vectors.
"""

ctypedef unsigned long long u64


def best_feasible(double[::1] weights, u64[::1] parent_masks):
    """Return ``(mask, profit)`` of the best precedence-closed subset.

    Best means highest profit, then fewest set bits, then smallest mask.
    """
    cdef Py_ssize_t n = weights.shape[0]
    cdef Py_ssize_t i
    cdef u64 m, total, pm, bit
    cdef u64 best_m = 0
    cdef double best_p = 0.0, p
    cdef int pop, best_pop = 0
    cdef bint ok
    if n > 62:
        raise ValueError("too many variables for exhaustive search")
    total = (<u64>1) << n
    for m in range(total):
        ok = True
        p = 0.0
        pop = 0
        for i in range(n):
            bit = (<u64>1) << (n - 1 - i)
            if m & bit:
                pm = parent_masks[i]
                if (m & pm) != pm:
                    ok = False
                    break
                p += weights[i]
                pop += 1
        if not ok:
            continue
        if p > best_p or (p == best_p and pop < best_pop):
            best_p = p
            best_pop = pop
            best_m = m
    return int(best_m), float(best_p)


def count_feasible(u64[::1] parent_masks):
    cdef Py_ssize_t n = parent_masks.shape[0]
    cdef Py_ssize_t i
    cdef u64 m, total, pm, bit
    cdef long long count = 0
    cdef bint ok
    if n > 62:
        raise ValueError("too many variables for exhaustive search")
    total = (<u64>1) << n
    for m in range(total):
        ok = True
        for i in range(n):
            bit = (<u64>1) << (n - 1 - i)
            if m & bit:
                pm = parent_masks[i]
                if (m & pm) != pm:
                    ok = False
                    break
        if ok:
            count += 1
    return int(count)
