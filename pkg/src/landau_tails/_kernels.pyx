# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lattice-sum kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, floor, ceil

cnp.import_array()

cdef enum:
    GAUSSIAN = 0
    CORE_TAIL = 1
    TABULATED = 2


cdef inline double _profile(double r, int kind, double amp, double width, double r0,
                            const double[::1] table, double table_step) nogil:
    cdef double s, frac
    cdef Py_ssize_t i
    if kind == GAUSSIAN:
        return amp * exp(-(r * r) / (width * width))
    if kind == CORE_TAIL:
        if r <= r0:
            return amp
        if width <= 0.0:
            return 0.0
        s = r - r0
        return amp * exp(-(s * s) / (width * width))
    # tabulated, linear interpolation, zero past the last node
    s = r / table_step
    i = <Py_ssize_t> s
    if i >= table.shape[0] - 1:
        if i == table.shape[0] - 1 and s == i:
            return table[i]
        return 0.0
    frac = s - i
    return (1.0 - frac) * table[i] + frac * table[i + 1]


def lattice_potential(
    const double[::1] px,
    const double[::1] py,
    const double[:, ::1] omega,
    long gx0,
    long gy0,
    int kind,
    double amp,
    double width,
    double r0,
    double x0,
    double y0,
    double cutoff,
    const double[::1] table,
    double table_step,
):
    """sum_g omega[g] u(p - g - x0) over lattice sites g within ``cutoff`` of each point."""
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t nx = omega.shape[0]
    cdef Py_ssize_t ny = omega.shape[1]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, ix, iy
    cdef long gx, gy, gx_lo, gx_hi, gy_lo, gy_hi
    cdef double cx, cy, dx, dy, d2, c2 = cutoff * cutoff, acc, w
    with nogil:
        for i in range(n):
            cx = px[i] - x0
            cy = py[i] - y0
            gx_lo = <long> ceil(cx - cutoff)
            gx_hi = <long> floor(cx + cutoff)
            gy_lo = <long> ceil(cy - cutoff)
            gy_hi = <long> floor(cy + cutoff)
            if gx_lo < gx0:
                gx_lo = gx0
            if gx_hi > gx0 + nx - 1:
                gx_hi = gx0 + nx - 1
            if gy_lo < gy0:
                gy_lo = gy0
            if gy_hi > gy0 + ny - 1:
                gy_hi = gy0 + ny - 1
            acc = 0.0
            for gx in range(gx_lo, gx_hi + 1):
                ix = gx - gx0
                dx = cx - gx
                for gy in range(gy_lo, gy_hi + 1):
                    iy = gy - gy0
                    w = omega[ix, iy]
                    if w == 0.0:
                        continue
                    dy = cy - gy
                    d2 = dx * dx + dy * dy
                    if d2 > c2:
                        continue
                    acc += w * _profile(sqrt(d2), kind, amp, width, r0, table, table_step)
            out[i] = acc
    return out_arr
