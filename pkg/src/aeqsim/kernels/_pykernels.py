"""Numpy fallback for the event-scatter kernel.

Semantically identical to the compiled version: contributions are summed, so
the result is independent of event order and matches the compiled core bit
for bit.
"""

import numpy as np


def conv_scatter(ex, ey, w_kk, mem, kernel, out_w, out_h, grid_w, pad):
    """Accumulate one kernel's weights into the interlaced membrane memories.

    ``ex``/``ey`` are input-map coordinates of the events (int32), ``w_kk``
    the (K, K) int64 kernel for the output channel being computed, ``mem``
    the (K*K, grid_w*grid_h) int64 memory array. Each event adds the weight
    w[dy, dx] to every valid output position (ex+pad-dx, ey+pad-dy); the
    interlacing maps those K*K positions onto K*K distinct memories.
    """
    if len(ex) == 0:
        return
    d = np.arange(kernel)
    y = ey[:, None, None] + pad - d[None, :, None]   # (n, K, 1)
    x = ex[:, None, None] + pad - d[None, None, :]   # (n, 1, K)
    y, x = np.broadcast_arrays(y, x)
    valid = (y >= 0) & (y < out_h) & (x >= 0) & (x < out_w)
    w = np.broadcast_to(w_kk[None, :, :], y.shape)
    yv = y[valid]
    xv = x[valid]
    m = (yv % kernel) * kernel + (xv % kernel)
    addr = (yv // kernel) * grid_w + (xv // kernel)
    np.add.at(mem, (m, addr), w[valid])
