"""Landau-level eigenfunctions and magnetic translations.

The functions ``phi_{q,k}`` diagonalize ``Pi_q V Pi_q`` for every radial
potential ``V``; ``q`` labels the Landau level ``2bq`` and ``k`` the angular
index (``phi_{q,k}`` carries angular momentum ``k - q``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import PlaneRule, polar_rule
from .specfun import laguerre_reduced, log_factorial


@dataclass(frozen=True)
class FieldConfig:
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"magnetic field strength must be positive, got b={self.b}")

    def level_energy(self, q: int) -> float:
        return 2.0 * self.b * q

    def rho(self, radius: float) -> float:
        """Dimensionless disk parameter ``b R**2 / 2``."""
        return self.b * radius * radius / 2.0


@dataclass(frozen=True)
class LandauIndex:
    q: int
    k: int

    def __post_init__(self):
        if self.q < 0 or self.k < 0:
            raise ValueError(f"Landau indices must be nonnegative, got (q={self.q}, k={self.k})")


@dataclass(frozen=True)
class PlanePoint:
    x1: float
    x2: float

    def __add__(self, other: "PlanePoint") -> "PlanePoint":
        return PlanePoint(self.x1 + other.x1, self.x2 + other.x2)

    def __neg__(self) -> "PlanePoint":
        return PlanePoint(-self.x1, -self.x2)


def log_prefactor(b: float, q: int, k: int) -> float:
    """``ln( sqrt(q!/(pi k!)) * (b/2)**((k-q+1)/2) )``."""
    return 0.5 * (log_factorial(q) - math.log(math.pi) - log_factorial(k)) + 0.5 * (k - q + 1) * math.log(b / 2.0)


def eigenfunction_values(b: float, q: int, k: int, x1, x2) -> np.ndarray:
    """Vectorized ``phi_{q,k}(x1, x2)``.

    Modulus and phase are assembled separately: the modulus in the log domain
    (``|x|**(k-q)`` overflows long before the Gaussian wins at large ``k``),
    the phase as ``exp(i (k-q) theta)``. For ``k < q`` the negative power of
    ``x1 + i x2`` is cancelled against the ``xi**(q-k)`` that factors out of
    the Laguerre sum, leaving ``(b/2)**(q-k) conj(z)**(q-k)``.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r2 = x1 * x1 + x2 * x2
    xi = 0.5 * b * r2
    poly = laguerre_reduced(q, k, xi)
    m = k - q
    log_mod = np.full(r2.shape, log_prefactor(b, q, k)) - 0.5 * xi
    if m != 0:
        with np.errstate(divide="ignore"):
            log_r = 0.5 * np.log(r2)
        log_mod = log_mod + abs(m) * log_r
        if m < 0:
            log_mod = log_mod + (-m) * math.log(b / 2.0)
    phase = np.exp(1j * m * np.arctan2(x2, x1)) if m != 0 else 1.0
    return np.exp(log_mod) * poly * phase


def eval_eigenfunction(cfg: FieldConfig, idx: LandauIndex, x: PlanePoint) -> complex:
    """``phi_{q,k}(x)`` at a single point."""
    return complex(eigenfunction_values(cfg.b, idx.q, idx.k, x.x1, x.x2))


def magnetic_phase(b: float, alpha: tuple[float, float], x1, x2) -> np.ndarray:
    return np.exp(0.5j * b * (np.asarray(x1) * alpha[1] - np.asarray(x2) * alpha[0]))


def magnetic_translate(
    cfg: FieldConfig, alpha: PlanePoint, f_at: Callable[[PlanePoint], complex], x: PlanePoint
) -> complex:
    """``(U_alpha f)(x) = exp(i b/2 (x1 alpha2 - x2 alpha1)) f(x + alpha)``."""
    phase = complex(magnetic_phase(cfg.b, (alpha.x1, alpha.x2), x.x1, x.x2))
    return phase * f_at(x + alpha)


def translated_eigenfunction_values(
    b: float, q: int, k: int, alpha: tuple[float, float], x1, x2
) -> np.ndarray:
    """``U_alpha phi_{q,k}`` on arrays of points."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return magnetic_phase(b, alpha, x1, x2) * eigenfunction_values(b, q, k, x1 + alpha[0], x2 + alpha[1])


def normalization_rule(b: float, q: int, k: int) -> PlaneRule:
    """Polar rule sized to the support of ``|phi_{q,k}|**2``."""
    r_cut = math.sqrt(2.0 * (k + q + 40) / b)
    return polar_rule(r_cut, 4 * (k + q) + 64)


def eigenfunction_norm(cfg: FieldConfig, idx: LandauIndex, rule: PlaneRule | None = None) -> float:
    """``int |phi_{q,k}|**2`` by polar quadrature."""
    rule = rule or normalization_rule(cfg.b, idx.q, idx.k)
    phi = eigenfunction_values(cfg.b, idx.q, idx.k, rule.x1, rule.x2)
    return float(rule.integrate(np.abs(phi) ** 2))


def basis_matrix(b: float, q: int, ks, x1, x2, center: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Rows ``U_c phi_{q,k}`` (the basis carried to ``center``) sampled at the points.

    ``U_{-c}`` moves a function centered at the origin to one centered at
    ``c``: ``(U_{-c} f)(x)`` involves ``f(x - c)``.
    """
    alpha = (-center[0], -center[1])
    return np.stack([translated_eigenfunction_values(b, q, k, alpha, x1, x2) for k in ks])


def matrix_elements(phi: np.ndarray, weights: np.ndarray, potential: np.ndarray) -> np.ndarray:
    """``M[k, j] = <V phi_k, phi_j> = sum_n w_n V_n phi_k(x_n) conj(phi_j(x_n))``."""
    return (phi * (weights * potential)) @ phi.conj().T
