"""Scalar special functions evaluated in the log domain.

Everything downstream deals with quantities such as ``exp(-rho) rho**k / k!``
for ``k`` in the thousands, so magnitudes are carried as logarithms and only
exponentiated at the very end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

EPS = np.finfo(float).eps

# Relative accuracy demanded from the explicit Laguerre sum before switching
# to exact rational evaluation.
_LAGUERRE_FLOAT_TOL = 1e-12


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(log_abs)``."""

    log_abs: float
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(-math.inf, 0)

    @classmethod
    def from_float(cls, value: float) -> "LogValue":
        if value == 0.0:
            return cls.zero()
        return cls(math.log(abs(value)), 1 if value > 0 else -1)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_abs + other.log_abs, self.sign * other.sign)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_abs - other.log_abs, self.sign * other.sign)

    def __neg__(self) -> "LogValue":
        return LogValue(self.log_abs, -self.sign)

    def __add__(self, other: "LogValue") -> "LogValue":
        return log_sum([self, other])[0]

    def __sub__(self, other: "LogValue") -> "LogValue":
        return self + (-other)

    def as_dict(self) -> dict:
        return {"sign": self.sign, "log_abs": None if self.sign == 0 else self.log_abs}


def log_sum(terms: Iterable[LogValue]) -> tuple[LogValue, float]:
    """Signed log-sum-exp.

    Returns the sum and the cancellation ratio ``sum(|t|) / |sum(t)|``
    (``inf`` when the terms cancel exactly).
    """
    terms = [t for t in terms if t.sign != 0]
    if not terms:
        return LogValue.zero(), 1.0
    top = max(t.log_abs for t in terms)
    scaled = [t.sign * math.exp(t.log_abs - top) for t in terms]
    total = math.fsum(scaled)
    magnitude = math.fsum(abs(s) for s in scaled)
    if total == 0.0:
        return LogValue.zero(), math.inf
    return LogValue(top + math.log(abs(total)), 1 if total > 0 else -1), magnitude / abs(total)


def log_factorial(n: int) -> float:
    """``ln(n!)``."""
    if n < 0:
        raise ValueError(f"log_factorial needs n >= 0, got {n}")
    return math.lgamma(n + 1)


def log_binomial(k: int, j: int) -> float:
    """``ln binom(k, j)``; ``-inf`` when ``j > k`` (the binomial vanishes)."""
    if k < 0 or j < 0:
        raise ValueError(f"log_binomial needs k, j >= 0, got ({k}, {j})")
    if j > k:
        return -math.inf
    return log_factorial(k) - log_factorial(j) - log_factorial(k - j)


def _laguerre_coefficients(q: int, k: int) -> list[tuple[int, int]]:
    # (l, binom(k, q-l)) for the nonvanishing terms of the explicit sum
    return [(l, math.comb(k, q - l)) for l in range(max(0, q - k), q + 1)]


def laguerre(q: int, alpha: int, xi: float) -> float:
    """Generalized Laguerre polynomial ``L_q^{(alpha)}(xi)`` from its explicit sum.

    With ``k = alpha + q`` the sum is over ``l = max(0, q-k) .. q`` of
    ``binom(k, q-l) (-xi)**l / l!``. Terms are added with ``math.fsum``; when
    the alternating terms cancel so badly that double precision cannot
    deliver ~1e-12 relative accuracy the same sum is redone in exact rational
    arithmetic on the binary value of ``xi``.
    """
    if q < 0:
        raise ValueError(f"Laguerre degree must be >= 0, got {q}")
    if alpha < -q:
        raise ValueError(f"alpha={alpha} < -q={-q}: binomial in the explicit sum is undefined")
    if xi < 0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    k = alpha + q
    coeffs = _laguerre_coefficients(q, k)
    terms = [c * (-xi) ** l / math.factorial(l) for l, c in coeffs]
    value = math.fsum(terms)
    scale = math.fsum(abs(t) for t in terms)
    if scale == 0.0 or abs(value) >= scale * (len(terms) * 4 * EPS / _LAGUERRE_FLOAT_TOL):
        return value
    exact_xi = Fraction(xi)
    exact = sum((Fraction(c) * (-exact_xi) ** l / math.factorial(l) for l, c in coeffs), Fraction(0))
    return float(exact)


def laguerre_reduced(q: int, k: int, xi: np.ndarray | float) -> np.ndarray:
    """Polynomial part ``P`` with ``xi**(k-q) * L_q^{(k-q)}(xi)**2 == xi**|k-q| * P(xi)**2``.

    For ``k >= q`` this is the Laguerre polynomial itself. For ``k < q`` the
    explicit sum starts at ``l = q - k`` so ``xi**(q-k)`` factors out, leaving
    a polynomial that is regular at the origin.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    shift = max(0, q - k)
    for l, c in _laguerre_coefficients(q, k):
        m = l - shift
        out += (c * (-1.0) ** l / math.factorial(l)) * xi**m
    return out


def _lower_gamma_series(a: float, x: float) -> float:
    # ln of sum_{n>=0} x^n / ((a+1)...(a+n))
    term = 1.0
    total = 1.0
    n = 0
    max_iter = 100_000 + int(50 * math.sqrt(a + 1))
    while n < max_iter:
        n += 1
        term *= x / (a + n)
        total += term
        if term < total * EPS * 0.5:
            return math.log(total)
    raise ArithmeticError(f"lower incomplete gamma series did not converge (a={a}, x={x})")


def _upper_gamma_cf(a: float, x: float) -> float:
    # ln of the continued fraction for Gamma(a, x) * exp(x) * x^-a (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.log(h)
    raise ArithmeticError(f"upper incomplete gamma continued fraction did not converge (a={a}, x={x})")


def log_reg_lower_gamma(a: float, x: float) -> float:
    """``ln P(a, x)`` for the regularized lower incomplete gamma function.

    Series for ``x < a + 1``, continued fraction for the complement otherwise.
    Stays accurate (in relative terms) when ``P`` underflows double precision.
    """
    if a <= 0:
        raise ValueError(f"a must be > 0, got {a}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return a * math.log(x) - x - math.lgamma(a + 1.0) + _lower_gamma_series(a, x)
    log_q = a * math.log(x) - x - math.lgamma(a) + _upper_gamma_cf(a, x)
    return math.log1p(-math.exp(log_q))


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)`` in ``[0, 1]``."""
    return math.exp(log_reg_lower_gamma(a, x))


def log_lower_gamma_integral(s: float, x: float) -> float:
    """``ln int_0^x t**s exp(-t) dt`` for ``s > -1``."""
    return math.lgamma(s + 1.0) + log_reg_lower_gamma(s + 1.0, x)


def binomial_power_deviation(q: int, k: int) -> float:
    """``max_s |k**(s-q) binom(k, q-s) (q-s)! - 1|`` over ``s = 0..q``."""
    # k**-j binom(k, j) j! = prod_{i<j} (1 - i/k); the product is monotone in j
    worst = 0.0
    prod = 1.0
    for i in range(q):
        prod *= max(1.0 - i / k, 0.0)
        worst = max(worst, abs(prod - 1.0))
    return worst


def fit_binomial_constant(q: int, k_values: Sequence[int] | None = None) -> float:
    """Smallest ``C_q`` with ``binomial_power_deviation(q, k) <= C_q / k`` on ``k_values``.

    The default range is every ``k`` up to 2000 plus a geometric tail to 1e7;
    the large-``k`` limit ``q(q-1)/2`` is folded in so the constant is a
    supremum rather than a sample maximum.
    """
    if k_values is None:
        k_values = list(range(1, 2001)) + [int(v) for v in np.geomspace(2001, 1e7, 40)]
    fitted = max(k * binomial_power_deviation(q, k) for k in k_values)
    return max(fitted, q * (q - 1) / 2)
