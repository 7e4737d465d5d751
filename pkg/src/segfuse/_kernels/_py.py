"""Pure-Python (numpy) fallback implementations of the hot kernels.

Both kernels must behave identically to the compiled versions in
``_core.pyx``: same labels, same label order, same split choices under ties.
The equivalence is enforced by tests/test_kernels.py.
"""

import numpy as np

# 8-connectivity, causal half (neighbours already visited in scanline order).
_CAUSAL_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1))


def label_components(mask):
    """Label 8-connected equal-value components of a 2-D uint8 array.

    Returns an int32 array of the same shape. Component ids start at 0 and
    are ordered by the scanline position of each component's first pixel.
    """
    mask = np.ascontiguousarray(mask)
    h, w = mask.shape
    n = h * w
    parent = np.arange(n, dtype=np.int64)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for dr, dc in _CAUSAL_OFFSETS:
        r0, r1 = max(dr, 0), h + min(dr, 0)
        c0, c1 = max(dc, 0), w + min(dc, 0)
        if r0 >= r1 or c0 >= c1:
            continue
        same = mask[r0:r1, c0:c1] == mask[r0 - dr:r1 - dr, c0 - dc:c1 - dc]
        rows, cols = np.nonzero(same)
        here = (rows + r0) * w + (cols + c0)
        there = (rows + r0 - dr) * w + (cols + c0 - dc)
        for a, b in zip(here.tolist(), there.tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                # lower flat index wins so roots stay scanline-minimal
                if ra < rb:
                    parent[rb] = ra
                else:
                    parent[ra] = rb

    labels = np.empty(n, dtype=np.int32)
    order = {}
    for i in range(n):
        root = find(i)
        if root not in order:
            order[root] = len(order)
        labels[i] = order[root]
    return labels.reshape(h, w)


def best_split_scan(values, targets):
    """Best variance-reduction split of samples sorted by feature value.

    ``values`` must be ascending; ``targets`` are the regression targets in
    the same order. Returns ``(gain, pos)`` where ``pos`` samples go left,
    or ``(-inf, 0)`` when all values are equal. Ties keep the smallest pos.
    """
    n = values.shape[0]
    if n < 2:
        return -np.inf, 0
    csum = np.cumsum(targets)
    total = csum[-1]
    left = csum[:-1]
    k = np.arange(1, n, dtype=np.float64)
    gain = left * left / k + (total - left) * (total - left) / (n - k) - total * total / n
    gain[values[1:] <= values[:-1]] = -np.inf
    pos = int(np.argmax(gain))
    if gain[pos] == -np.inf:
        return -np.inf, 0
    return float(gain[pos]), pos + 1
