"""Composite Gauss-Legendre rules on intervals, rectangles and polar grids."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np


@lru_cache(maxsize=64)
def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def composite_gauss_legendre(breaks: Sequence[float], order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of ``order``-point Gauss-Legendre on each ``[breaks[i], breaks[i+1]]``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _gl(order)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def panel_breaks(a: float, b: float, panel: float, fixed: Sequence[float] = ()) -> np.ndarray:
    """Breakpoints covering ``[a, b]`` with panels no wider than ``panel``.

    Every point of ``fixed`` inside ``(a, b)`` becomes a breakpoint, so
    discontinuities placed there are integrated exactly panel-wise.
    """
    anchors = sorted({a, b, *[f for f in fixed if a < f < b]})
    out = [anchors[0]]
    for lo, hi in zip(anchors[:-1], anchors[1:]):
        n = max(1, int(np.ceil((hi - lo) / panel - 1e-12)))
        out.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(out)


@dataclass(frozen=True)
class PlaneRule:
    """A 2D quadrature rule: points ``(x1, x2)`` with positive weights ``w``."""

    x1: np.ndarray
    x2: np.ndarray
    w: np.ndarray

    def integrate(self, values: np.ndarray) -> complex | float:
        return np.dot(values, self.w)

    def __len__(self) -> int:
        return self.w.size


def polar_rule(
    r_cut: float,
    n_theta: int,
    *,
    center: tuple[float, float] = (0.0, 0.0),
    radial_breaks: Sequence[float] = (),
    panel: float = 0.5,
    order: int = 16,
) -> PlaneRule:
    """Gauss-Legendre in radius times the trapezoid rule in angle.

    The trapezoid rule integrates ``exp(i m theta)`` exactly for
    ``|m| < n_theta``, which is what makes angular-momentum orthogonality
    checks sharp.
    """
    r, wr = composite_gauss_legendre(panel_breaks(0.0, r_cut, panel, radial_breaks), order)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    w = np.outer(wr * r, np.full(n_theta, 2.0 * np.pi / n_theta))
    return PlaneRule(
        (center[0] + rr * np.cos(tt)).ravel(),
        (center[1] + rr * np.sin(tt)).ravel(),
        w.ravel(),
    )


def tensor_rule(
    x_breaks: Sequence[float], y_breaks: Sequence[float], order: int = 8
) -> PlaneRule:
    """Tensor-product composite Gauss-Legendre on a rectangle."""
    x, wx = composite_gauss_legendre(x_breaks, order)
    y, wy = composite_gauss_legendre(y_breaks, order)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return PlaneRule(xx.ravel(), yy.ravel(), np.outer(wx, wy).ravel())
