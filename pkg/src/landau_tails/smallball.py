"""Small-ball probabilities ``P(omega_1 + ... + omega_n <= t)`` for i.i.d. couplings.

The couplings follow the edge law ``P(omega <= x) = (x / omega_plus)**kappa``
on ``[0, omega_plus]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .alloy_operator import CouplingLaw
from .certificate import NumericalFailure

SMALLBALL_RTOL = 1e-3
MAX_CELLS = 1 << 21


@dataclass(frozen=True)
class GridDistribution:
    grid_step: float
    masses: np.ndarray
    total: float

    def __post_init__(self):
        if not self.grid_step > 0:
            raise ValueError("grid_step must be positive")


def _edge_law(law: CouplingLaw) -> CouplingLaw:
    if law.omega_minus != 0:
        return CouplingLaw(law.kappa, 0.0, law.width, law.sampler_seed)
    return law


def discretize(law: CouplingLaw, t: float, cells: int) -> GridDistribution:
    """Cell masses of the law restricted to ``[0, t]`` on ``cells`` equal cells.

    Mass beyond ``t`` is dropped; it cannot contribute to ``{sum <= t}`` since
    every coupling is nonnegative.
    """
    edges = np.linspace(0.0, t, cells + 1)
    masses = np.diff(law.cdf(edges))
    return GridDistribution(t / cells, masses, float(masses.sum()))


def _fold(dist: np.ndarray, step: np.ndarray, keep: int) -> np.ndarray:
    out = signal.fftconvolve(dist, step)[:keep]
    return np.clip(out, 0.0, None)


def _bracket(grid: GridDistribution, n: int) -> tuple[float, float]:
    m = grid.masses
    cells = m.size
    # left endpoints: each coupling rounded down, sum stochastically smaller
    lo_pos = m.copy()
    acc_lo = lo_pos
    for _ in range(n - 1):
        acc_lo = _fold(acc_lo, lo_pos, cells + 1)
    upper = float(acc_lo[: cells + 1].sum())
    # right endpoints: shift by one cell, sum stochastically larger
    hi_pos = np.concatenate([[0.0], m])
    acc_hi = hi_pos
    for _ in range(n - 1):
        acc_hi = _fold(acc_hi, hi_pos, cells + 1)
    lower = float(acc_hi[: cells + 1].sum())
    return lower, upper


@dataclass(frozen=True)
class SmallBall:
    value: float
    lower: float
    upper: float
    grid_step: float


def small_ball_exact(law: CouplingLaw, n_sites: int, t: float, rtol: float = SMALLBALL_RTOL) -> SmallBall:
    """``P(sum of n_sites couplings <= t)`` by bracketed grid convolution.

    Rounding each coupling down (up) to the grid gives an upper (lower)
    bound; the grid is refined until the bracket closes to ``rtol``.
    """
    if n_sites < 1 or n_sites > 64:
        raise ValueError(f"n_sites must lie in 1..64 for the convolution oracle, got {n_sites}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    law = _edge_law(law)
    cells = 1024
    while True:
        grid = discretize(law, t, cells)
        lower, upper = _bracket(grid, n_sites)
        lower, upper = min(lower, 1.0), min(upper, 1.0)
        if upper > 0 and (upper - lower) <= rtol * upper:
            return SmallBall(0.5 * (lower + upper), lower, upper, grid.grid_step)
        if cells >= MAX_CELLS:
            raise NumericalFailure(
                f"small-ball bracket [{lower:.6e}, {upper:.6e}] did not close to {rtol} at {cells} cells"
            )
        cells *= 2


def log_small_ball_asymptotic(law: CouplingLaw, n_sites: int, t: float) -> float:
    """``ln[ (omega_plus**-kappa Gamma(kappa+1))**n t**(n kappa) / Gamma(n kappa + 1) ]``.

    This is the exact answer for ``t <= omega_plus`` and an upper bound
    beyond it (it treats the power-law edge as if it extended forever).
    """
    k = law.kappa
    return (
        n_sites * (-k * math.log(law.width) + math.lgamma(k + 1.0))
        + n_sites * k * math.log(t)
        - math.lgamma(n_sites * k + 1.0)
    )


def small_ball_asymptotic(law: CouplingLaw, n_sites: int, t: float) -> float:
    return math.exp(log_small_ball_asymptotic(law, n_sites, t))


def lattice_disk_count(radius: float) -> int:
    """``#{beta in Z^2 : |beta| <= radius}`` (Euclidean norm)."""
    r = int(math.floor(radius))
    g = np.arange(-r, r + 1)
    gx, gy = np.meshgrid(g, g)
    return int(np.count_nonzero(gx * gx + gy * gy <= radius * radius + 1e-9))


LD_COLUMNS = ["E", "log_E", "radius", "n_sites", "t", "p_exact", "p_asym", "ratio_loglog"]


def ld_exponent_check(
    law: CouplingLaw,
    eta: float,
    E_grid: Sequence[float],
    C_eta: float = 10.0,
    exact_max_sites: int = 16,
) -> list[dict]:
    """Measured small-ball exponents along ``E -> 0``.

    For each ``E`` the number of sites is the lattice count of the disk of
    radius ``|log E|**((1-eta)/2)`` and the threshold is
    ``t = 2 exp(-|log E|**(1-eta) / C_eta)``. ``ratio_loglog`` is
    ``ln|ln p| / ln|ln E|``. Rows beyond ``exact_max_sites`` carry no exact
    value.
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    rows = []
    for E in E_grid:
        if not 0 < E < math.exp(-3):
            raise ValueError(f"E must lie in (0, e^-3), got {E}")
        L = abs(math.log(E))
        radius = L ** ((1 - eta) / 2)
        n = lattice_disk_count(radius)
        t = 2.0 * math.exp(-(L ** (1 - eta)) / C_eta)
        log_p = min(log_small_ball_asymptotic(law, n, t), 0.0)
        p_exact = None
        if n <= exact_max_sites and t <= n * law.width:
            p_exact = small_ball_exact(law, n, t).value
        ratio = math.log(abs(log_p)) / math.log(L) if log_p < 0 else math.nan
        rows.append(
            {
                "E": E,
                "log_E": math.log(E),
                "radius": radius,
                "n_sites": n,
                "t": t,
                "p_exact": p_exact,
                "p_asym": math.exp(log_p),
                "ratio_loglog": ratio,
            }
        )
    return rows


def rows_to_csv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: ("" if row.get(c) is None else repr(row[c]) if isinstance(row[c], float) else row[c]) for c in columns})
    return buf.getvalue()
