"""NumPy fallback for the digit-walk kernel.

Same contract, same arithmetic, and bit-identical output as the compiled
core in ``_digitcore.pyx``: each query walks the base-b digits of a
fixed-point rational and accumulates cylinder masses in IEEE double
precision, one multiply and one add per digit, in digit order.
"""

import numpy as np

FRAC_BITS = 52
ONE = np.uint64(1) << np.uint64(FRAC_BITS)
MASK = ONE - np.uint64(1)
_SHIFT = np.uint64(FRAC_BITS)


def cdf_walk(q, base, rows_w, rows_cum, s0, max_depth):
    """Mass of [0, x) for x = q / 2**52 under a digit chain, plus tail bound.

    Parameters
    ----------
    q : uint64 array
        Fixed-point numerators; values >= 2**52 are treated as x = 1.
    base : int
        Digit base b (2 <= b <= 2048 so that q * b fits in 64 bits).
    rows_w, rows_cum : float64 arrays, shape ((b+1)*b,)
        Row-flattened digit weights and their exclusive cumulative sums.
        Rows 0..b-1 are the next-digit laws keyed by the previous digit;
        row b is the unconditioned first-digit law.
    s0 : uint64 array
        Per-query starting row (b for the unconditioned law).
    max_depth : int
        Number of digits resolved before the walk is cut.

    Returns
    -------
    F : float64 array
        Exact mass of [0, x_d) where x_d is x truncated to max_depth digits.
    tail : float64 array
        Mass of the unresolved depth-max_depth cylinder containing x
        (zero when the expansion terminated), so F <= mass([0, x)) <= F + tail.
    """
    q = np.ascontiguousarray(q, dtype=np.uint64)
    b = np.uint64(base)
    full = q >= ONE
    n = np.where(full, np.uint64(0), q)
    F = np.zeros(q.shape, dtype=np.float64)
    prod = np.ones(q.shape, dtype=np.float64)
    state = np.ascontiguousarray(s0, dtype=np.uint64)
    if state.shape != q.shape:
        state = np.broadcast_to(state, q.shape).copy()

    for _ in range(max_depth):
        m = n * b
        d = m >> _SHIFT
        n = m & MASK
        idx = state * b + d
        F += prod * rows_cum[idx]
        prod = prod * rows_w[idx]
        state = d

    tail = np.where(n > np.uint64(0), prod, 0.0)
    F[full] = 1.0
    tail[full] = 0.0
    return F, tail
