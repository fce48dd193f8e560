"""Eigenvalues of Landau-projected radial potentials.

For a radial potential the eigenvalue attached to ``phi_{q,k}`` reduces,
after ``xi = b r**2 / 2``, to

    mu_{q,k}(V) = (q!/k!) int_0^inf V(sqrt(2 xi / b)) xi**(k-q) L_q^{(k-q)}(xi)**2 exp(-xi) dxi

and for the disk indicator ``1_{D(0,R)}`` the upper limit becomes
``rho = b R**2 / 2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .certificate import Certificate, NumericalFailure
from .landau_basis import FieldConfig, LandauIndex
from .specfun import (
    EPS,
    LogValue,
    fit_binomial_constant,
    laguerre_reduced,
    log_factorial,
    log_lower_gamma_integral,
    log_reg_lower_gamma,
    log_sum,
)

# relative accuracy the monomial expansion must certify before it is trusted
CANCELLATION_TOL = 1e-9
QUAD_RTOL = 1e-11
# largest fitted exponent p in max|nu/nu0 - 1| ~ k**p accepted as decay
DECAY_EXPONENT_MAX = -0.1


@dataclass(frozen=True)
class DiskSpec:
    R: float
    rho: float

    @classmethod
    def of(cls, cfg: FieldConfig, R: float) -> "DiskSpec":
        if not R > 0:
            raise ValueError(f"disk radius must be positive, got {R}")
        return cls(R, cfg.rho(R))

    @classmethod
    def from_rho(cls, cfg: FieldConfig, rho: float) -> "DiskSpec":
        return cls(math.sqrt(2.0 * rho / cfg.b), rho)

    def check(self, cfg: FieldConfig) -> bool:
        return math.isclose(self.rho, cfg.rho(self.R), rel_tol=1e-12)


@dataclass(frozen=True)
class DiskEigenvalue:
    nu_exact: float
    nu_asym: float | None
    main_term: float
    remainder: float
    i_factor: float | None
    remainder_bound: float
    remainder_ok: bool
    binomial_constant: float


@dataclass(frozen=True)
class AsymWindow:
    """Window ``rho <= k - f(k)`` on which the asymptotic formula is tested."""

    beta: float
    f: Callable[[float], float]
    descriptor: str

    def __post_init__(self):
        if not 0 < self.beta < 2:
            raise ValueError(f"beta must lie in (0, 2), got {self.beta}")

    @classmethod
    def power(cls, exponent: float, beta: float = 1.0) -> "AsymWindow":
        return cls(beta, lambda k: float(k) ** exponent, f"k^{exponent:g}")

    def condition(self, q: int, k: float) -> float:
        """``k**(2q-1) f**(-2q) + k f**(-beta)``; must tend to zero."""
        fk = self.f(k)
        return k ** (2 * q - 1) * fk ** (-2 * q) + k * fk ** (-self.beta)

    def bound_shape(self, q: int, k: float) -> float:
        """Right-hand side of the ratio bound without its constant."""
        fk = self.f(k)
        return k ** (2 * q - 1) / fk ** (2 * q) + k / fk ** (self.beta + 1)


def _radial_log_weight(q: int, k: int) -> Callable[[float], float]:
    m = abs(k - q)
    c = log_factorial(q) - log_factorial(k)

    def log_w(xi):
        if m == 0:
            return c - xi
        with np.errstate(divide="ignore"):
            return c + m * np.log(xi) - xi

    return log_w


def _scaled_quad(
    integrand: Callable[[float], float], lo: float, hi: float, points: Sequence[float] = (), epsabs: float = 0.0
) -> tuple[float, float]:
    pts = sorted({p for p in points if lo < p < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                integrand, lo, hi, points=pts or None, limit=500, epsabs=epsabs, epsrel=QUAD_RTOL
            )
        except integrate.IntegrationWarning as exc:
            raise NumericalFailure(f"adaptive quadrature on [{lo}, {hi}] did not converge: {exc}") from exc
    return value, err


def _log_disk_integral_quad(q: int, k: int, rho: float) -> float:
    """``ln nu_{q,k}`` by adaptive quadrature of the (positive) radial integrand."""
    m = abs(k - q)
    log_w = _radial_log_weight(q, k)
    top = float(log_w(min(m, rho))) if m > 0 else float(log_w(0.0))

    def f(xi):
        return math.exp(float(log_w(xi)) - top) * float(laguerre_reduced(q, k, xi)) ** 2

    value, err = _scaled_quad(f, 0.0, rho, points=[m, rho * 0.5])
    if not value > 0 or err > 1e-9 * value:
        raise NumericalFailure(
            f"disk integral quadrature for (q={q}, k={k}, rho={rho}) reached only {err / max(value, 1e-300):.2e}"
        )
    return top + math.log(value)


def log_nu_exact(cfg: FieldConfig, idx: LandauIndex, disk: DiskSpec) -> float:
    """``ln nu_{q,k}(R)``.

    ``q = 0`` is a single regularized incomplete gamma function. For ``q >= 1``
    the squared Laguerre sum is expanded into monomials, each integrated as an
    incomplete gamma function and combined with a signed log-sum-exp; if the
    alternating terms cancel beyond what double precision can certify to
    ``CANCELLATION_TOL`` the integral is redone by adaptive quadrature.
    """
    q, k, rho = idx.q, idx.k, disk.rho
    if rho <= 0:
        return -math.inf
    if q == 0:
        return log_reg_lower_gamma(k + 1.0, rho)
    terms = []
    components = 0.0
    base = log_factorial(q) - log_factorial(k)
    coeffs = [
        (l, math.lgamma(k + 1) - math.lgamma(q - l + 1) - math.lgamma(k - q + l + 1) - math.lgamma(l + 1))
        for l in range(max(0, q - k), q + 1)
    ]
    for l, cl in coeffs:
        for m, cm in coeffs:
            s = k - q + l + m
            log_int = log_lower_gamma_integral(s, rho)
            terms.append(LogValue(base + cl + cm + log_int, -1 if (l + m) % 2 else 1))
            components = max(components, abs(base) + abs(cl) + abs(cm) + abs(math.lgamma(s + 1)))
    total, ratio = log_sum(terms)
    term_rel_err = 8.0 * EPS * (10.0 + components)
    if total.sign > 0 and ratio * term_rel_err <= CANCELLATION_TOL:
        return total.log_abs
    try:
        return _log_disk_integral_quad(q, k, rho)
    except NumericalFailure as exc:
        raise NumericalFailure(
            f"nu_exact(q={q}, k={k}, rho={rho}): monomial expansion lost {ratio:.1e}x to cancellation "
            f"and quadrature failed ({exc})"
        ) from exc


def nu_exact(cfg: FieldConfig, idx: LandauIndex, disk: DiskSpec) -> float:
    """Eigenvalue ``nu_{q,k}(R)`` of ``Pi_q 1_{D(0,R)} Pi_q``."""
    return math.exp(log_nu_exact(cfg, idx, disk))


def log_nu_asymptotic(cfg: FieldConfig, idx: LandauIndex, disk: DiskSpec) -> float:
    q, k, rho = idx.q, idx.k, disk.rho
    if not k > rho:
        raise ValueError(f"asymptotic disk eigenvalue needs k > rho, got k={k}, rho={rho}")
    if rho <= 0:
        return -math.inf
    return (
        -rho
        + (k - q + 1) * math.log(rho)
        + (2 * q - 1) * math.log(k - rho)
        - log_factorial(q)
        - log_factorial(k)
    )


def nu_asymptotic(cfg: FieldConfig, idx: LandauIndex, disk: DiskSpec) -> float:
    """``exp(-rho) rho**(k-q+1) (k-rho)**(2q-1) / (q! k!)``."""
    return math.exp(log_nu_asymptotic(cfg, idx, disk))


def mu_radial(
    cfg: FieldConfig,
    idx: LandauIndex,
    V: Callable[[float], float],
    *,
    radial_breaks: Sequence[float] = (),
) -> float:
    """``<V phi_{q,k}, phi_{q,k}>`` for a bounded radial ``V`` given as a function of ``|x|``.

    ``radial_breaks`` lists radii where ``V`` jumps; they become quadrature
    breakpoints.
    """
    q, k = idx.q, idx.k
    m = abs(k - q)
    log_w = _radial_log_weight(q, k)
    top = float(log_w(max(m, 1e-300))) if m > 0 else float(log_w(0.0))
    hi = m + 2 * q + 80.0 + 16.0 * math.sqrt(m + 1.0)
    breaks = [cfg.rho(r) for r in radial_breaks]

    def f(xi):
        return (
            V(math.sqrt(2.0 * xi / cfg.b))
            * math.exp(float(log_w(xi)) - top)
            * float(laguerre_reduced(q, k, xi)) ** 2
        )

    # the integrand is scaled by exp(-top), so V = 1 integrates to exp(-top)
    unit = math.exp(-top)
    value, err = _scaled_quad(f, 0.0, hi, points=[m, *breaks], epsabs=1e-13 * unit)
    if err > 1e-10 * max(abs(value), unit):
        raise NumericalFailure(f"mu_radial quadrature reached only abs error {err / unit:.2e}")
    return value / unit


def _log_positive_integral(log_integrand: Callable[[float], float], lo: float, hi: float, peak: float) -> float:
    top = float(log_integrand(min(max(peak, lo), hi)))
    value, err = _scaled_quad(lambda t: math.exp(float(log_integrand(t)) - top), lo, hi, points=[peak])
    if not value > 0:
        return -math.inf
    return top + math.log(value)


def _binomial_main_log_integrand(q: int, k: int, sign: float) -> Callable[[float], float]:
    # ln( e^{-xi} xi^{k-q} (k + sign*xi)^{2q} / (k! q!) )
    c = -log_factorial(k) - log_factorial(q)

    def g(xi):
        if xi <= 0:
            return -math.inf if k > q else c + 2 * q * math.log(k)
        return c - xi + (k - q) * math.log(xi) + 2 * q * math.log(abs(k + sign * xi))

    return g


def log_i_factor(q: int, k: int, rho: float) -> float:
    """``ln I(k, rho)``, ``I = int_0^1 e^{rho t} (1-t)^{k-q} (1 + rho t/(k-rho))^{2q} dt``."""
    if not k > rho:
        raise ValueError(f"I(k, rho) needs k > rho, got k={k}, rho={rho}")

    def g(t):
        if t >= 1.0:
            return -math.inf if k > q else rho + 2 * q * math.log1p(rho / (k - rho))
        return rho * t + (k - q) * math.log1p(-t) + 2 * q * math.log1p(rho * t / (k - rho))

    return _log_positive_integral(g, 0.0, 1.0, 0.0)


def decompose(cfg: FieldConfig, idx: LandauIndex, disk: DiskSpec) -> DiskEigenvalue:
    """Split ``nu_{q,k}`` into its main term ``V(k,q)`` and remainder ``R(k,q)``.

    ``V(k,q) = (1/(k! q!)) int_0^rho e^{-xi} xi^{k-q} (k - xi)^{2q} dxi`` is the
    integral with the squared Laguerre polynomial replaced by its large-``k``
    shape ``((k - xi)^q / q!)^2``. The remainder is integrated directly from
    the difference of the two integrands, so ``nu = V + R`` is a genuine
    consistency check between independent quadratures.
    """
    q, k, rho = idx.q, idx.k, disk.rho
    if q == 0:
        raise ValueError("decompose applies to q >= 1 (q = 0 has no remainder)")
    if k < q:
        raise ValueError(f"decompose needs k >= q, got k={k}, q={q}")
    log_nu = log_nu_exact(cfg, idx, disk)
    log_main = _log_positive_integral(_binomial_main_log_integrand(q, k, -1.0), 0.0, rho, float(k - q))
    log_plus = _log_positive_integral(_binomial_main_log_integrand(q, k, +1.0), 0.0, rho, float(k - q))

    lq, lk = log_factorial(q), log_factorial(k)

    def diff(xi):
        # (1/k!) xi^{k-q} e^{-xi} [q! L^2 - (k-xi)^{2q}/q!], scaled by exp(-log_main)
        if xi <= 0 and k > q:
            return 0.0
        lw = (k - q) * math.log(xi) - xi - lk - log_main if xi > 0 else -lk - log_main
        lag = float(laguerre_reduced(q, k, xi))
        shape = (k - xi) ** q / math.factorial(q)
        return math.exp(lw + lq) * (lag * lag - shape * shape)

    rem_scaled, _ = _scaled_quad(diff, 0.0, rho, points=[float(k - q)])
    main = math.exp(log_main)
    remainder = rem_scaled * main
    c_q = fit_binomial_constant(q)
    bound = c_q / k * math.exp(log_plus)
    i_val = math.exp(log_i_factor(q, k, rho)) if k > rho else None
    asym = nu_asymptotic(cfg, idx, disk) if k > rho else None
    return DiskEigenvalue(
        nu_exact=math.exp(log_nu),
        nu_asym=asym,
        main_term=main,
        remainder=remainder,
        i_factor=i_val,
        remainder_bound=bound,
        remainder_ok=abs(remainder) <= bound * (1 + 1e-9),
        binomial_constant=c_q,
    )


def default_rho_grid(k: int, fk: float, n: int = 16) -> np.ndarray:
    """Geometric grid of ``n`` values of ``rho`` from 1 to ``k - f(k)``."""
    hi = k - fk
    if hi < 1:
        return np.array([])
    return np.geomspace(1.0, hi, n)


def verify_f1(
    cfg: FieldConfig,
    q: int,
    window: AsymWindow,
    k_range: Sequence[int],
    rho_rule: Callable[[int, float], Sequence[float]] | None = None,
) -> Certificate:
    """Check ``|nu/nu0 - 1| <= C (k^{2q-1}/f^{2q} + k/f^{beta+1})`` on ``rho <= k - f(k)``.

    The constant ``C`` is fitted as the largest observed ratio. The
    certificate passes when the worst deviation per ``k`` strictly decreases
    along ``k_range``, decays like a power of ``k`` no larger than
    ``DECAY_EXPONENT_MAX``, and the per-``k`` constant does not grow along
    it (one constant serves the whole range).
    """
    rho_rule = rho_rule or default_rho_grid
    k_range = sorted(int(k) for k in k_range)
    rows = []
    per_k = []
    for k in k_range:
        fk = window.f(k)
        shape = window.bound_shape(q, k)
        worst_dev, worst_c = 0.0, 0.0
        for rho in rho_rule(k, fk):
            rho = float(rho)
            if rho > k - fk + 1e-9 * k:
                raise ValueError(f"rho_rule produced rho={rho} > k - f(k) = {k - fk}")
            disk = DiskSpec.from_rho(cfg, rho)
            idx = LandauIndex(q, k)
            diff = log_nu_exact(cfg, idx, disk) - log_nu_asymptotic(cfg, idx, disk)
            dev = abs(math.expm1(diff))
            rows.append({"k": k, "rho": rho, "ratio_dev": dev, "bound": shape})
            worst_dev = max(worst_dev, dev)
            worst_c = max(worst_c, dev / shape)
        per_k.append({"k": k, "max_ratio_dev": worst_dev, "C_k": worst_c, "condition": window.condition(q, k)})
    devs = [p["max_ratio_dev"] for p in per_k]
    cs = [p["C_k"] for p in per_k]
    decreasing = all(b < a for a, b in zip(devs, devs[1:]))
    constant_stable = len(cs) < 2 or cs[-1] <= 1.5 * max(cs[:-1])
    finite = all(math.isfinite(r["ratio_dev"]) for r in rows)
    # "tends to zero" on a finite range: the fitted power of k must be clearly negative
    if len(devs) >= 2 and finite and min(devs) > 0:
        decay = float(np.polyfit(np.log(k_range), np.log(devs), 1)[0])
    else:
        decay = math.nan
    vanishing = decay <= DECAY_EXPONENT_MAX
    return Certificate(
        lemma_id="f1",
        params={"q": q, "b": cfg.b, "beta": window.beta, "f": window.descriptor, "k_range": k_range},
        rows=rows,
        constants={"fitted_C": max(cs) if cs else 0.0},
        passed=bool(rows) and finite and decreasing and vanishing and constant_stable,
        precision_note=(
            "ratios from ln(nu) - ln(nu0) in double precision; nu via incomplete-gamma expansion "
            f"certified to {CANCELLATION_TOL:g} relative or adaptive quadrature at rtol {QUAD_RTOL:g}"
        ),
        extra={
            "per_k": per_k,
            "deviation_decreasing": decreasing,
            "constant_stable": constant_stable,
            "decay_exponent": decay,
            "exponent_convention": "nu0 = exp(-rho) rho^(k-q+1) (k-rho)^(2q-1) / (q! k!)",
        },
    )
