"""Pure NumPy versions of the compiled kernels (same signatures)."""

from __future__ import annotations

import numpy as np

GAUSSIAN, CORE_TAIL, TABULATED = 0, 1, 2


def profile(r, kind, amp, width, r0, table, table_step):
    r = np.asarray(r, dtype=float)
    if kind == GAUSSIAN:
        return amp * np.exp(-(r * r) / (width * width))
    if kind == CORE_TAIL:
        if width <= 0:
            return np.where(r <= r0, amp, 0.0)
        s = np.maximum(r - r0, 0.0)
        return np.where(r <= r0, amp, amp * np.exp(-(s * s) / (width * width)))
    nodes = np.arange(len(table)) * table_step
    return np.interp(r, nodes, table, right=0.0)


def lattice_potential(px, py, omega, gx0, gy0, kind, amp, width, r0, x0, y0, cutoff, table, table_step):
    px = np.asarray(px, dtype=float) - x0
    py = np.asarray(py, dtype=float) - y0
    out = np.zeros(px.shape)
    c2 = cutoff * cutoff
    nx, ny = omega.shape
    for ix, iy in zip(*np.nonzero(omega)):
        dx = px - (gx0 + ix)
        dy = py - (gy0 + iy)
        d2 = dx * dx + dy * dy
        near = d2 <= c2
        if not near.any():
            continue
        out[near] += omega[ix, iy] * profile(np.sqrt(d2[near]), kind, amp, width, r0, table, table_step)
    return out
