"""Compiled event-scatter kernel (hot loop of the event-driven engine)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv_scatter(cnp.int32_t[::1] ex, cnp.int32_t[::1] ey,
                 cnp.int64_t[:, ::1] w_kk, cnp.int64_t[:, ::1] mem,
                 int kernel, int out_w, int out_h, int grid_w, int pad):
    """Accumulate one kernel's weights into the interlaced membrane memories.

    Mirrors the numpy fallback exactly; see _pykernels.conv_scatter.
    """
    cdef Py_ssize_t i, n = ex.shape[0]
    cdef int dx, dy, x, y, m, addr
    for i in range(n):
        for dy in range(kernel):
            y = ey[i] + pad - dy
            if y < 0 or y >= out_h:
                continue
            for dx in range(kernel):
                x = ex[i] + pad - dx
                if x < 0 or x >= out_w:
                    continue
                m = (y % kernel) * kernel + (x % kernel)
                addr = (y // kernel) * grid_w + (x // kernel)
                mem[m, addr] += w_kk[dy, dx]
